// ust/taxonomy.cc

// Copyright 2026  The ust Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ust/taxonomy.h"

#include <fstream>
#include <sstream>

namespace ust {

std::vector<int> Taxonomy::coarse_from_fine(const std::vector<int>& fine) const {
  if (fine.size() != n_fine())
    throw DataError("Taxonomy: fine label width mismatch");
  std::vector<int> coarse(n_coarse(), 0);
  for (std::size_t f = 0; f < fine.size(); ++f)
    if (fine[f]) coarse[fine_parent[f]] = 1;
  return coarse;
}

void Taxonomy::validate() const {
  if (n_fine() == 0) throw DataError("Taxonomy: no fine classes");
  if (hierarchical()) {
    if (fine_parent.size() != n_fine())
      throw DataError("Taxonomy: parent map size mismatch");
    for (std::size_t p : fine_parent)
      if (p >= n_coarse()) throw DataError("Taxonomy: parent out of range");
  } else if (!fine_parent.empty()) {
    throw DataError("Taxonomy: flat taxonomy with parent map");
  }
}

void Taxonomy::save(const std::string& path) const {
  validate();
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("Taxonomy: cannot write " + path);
  for (std::size_t c = 0; c < n_coarse(); ++c)
    f << "coarse\t" << c << "\t" << coarse_names[c] << "\n";
  for (std::size_t i = 0; i < n_fine(); ++i) {
    f << "fine\t" << i << "\t" << fine_names[i];
    if (hierarchical()) f << "\t" << fine_parent[i];
    f << "\n";
  }
}

Taxonomy Taxonomy::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("Taxonomy: cannot open " + path);
  Taxonomy t;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind, idx_s, name, parent_s;
    if (!std::getline(ls, kind, '\t') || !std::getline(ls, idx_s, '\t') ||
        !std::getline(ls, name, '\t'))
      throw DataError("Taxonomy: malformed line: " + line);
    if (kind == "coarse") {
      const auto idx = static_cast<std::size_t>(std::stoul(idx_s));
      if (idx != t.coarse_names.size())
        throw DataError("Taxonomy: coarse ids must be contiguous");
      t.coarse_names.push_back(name);
    } else if (kind == "fine") {
      const auto idx = static_cast<std::size_t>(std::stoul(idx_s));
      if (idx != t.fine_names.size())
        throw DataError("Taxonomy: fine ids must be contiguous");
      t.fine_names.push_back(name);
      if (std::getline(ls, parent_s, '\t'))
        t.fine_parent.push_back(static_cast<std::size_t>(std::stoul(parent_s)));
    } else {
      throw DataError("Taxonomy: unknown row kind: " + kind);
    }
  }
  t.validate();
  return t;
}

Taxonomy Taxonomy::synthetic_hierarchical(std::size_t n_fine) {
  Taxonomy t;
  const std::size_t n_coarse = (n_fine + 1) / 2;
  for (std::size_t c = 0; c < n_coarse; ++c)
    t.coarse_names.push_back("coarse_" + std::to_string(c));
  for (std::size_t i = 0; i < n_fine; ++i) {
    t.fine_names.push_back("fine_" + std::to_string(i));
    t.fine_parent.push_back(i / 2);
  }
  return t;
}

Taxonomy Taxonomy::synthetic_flat(std::size_t n_fine) {
  Taxonomy t;
  for (std::size_t i = 0; i < n_fine; ++i)
    t.fine_names.push_back("class_" + std::to_string(i));
  return t;
}

}  // namespace ust
