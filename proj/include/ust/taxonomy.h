// ust/taxonomy.h

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

#ifndef UST_TAXONOMY_H_
#define UST_TAXONOMY_H_

#include <string>
#include <vector>

#include "ust/common.h"

namespace ust {

// Two-level label space: fine classes nested under coarse categories.
// A flat dataset (US8K/ESC-50 style) has zero coarse classes.
struct Taxonomy {
  std::vector<std::string> coarse_names;
  std::vector<std::string> fine_names;
  std::vector<std::size_t> fine_parent;  // fine index -> coarse index

  std::size_t n_coarse() const { return coarse_names.size(); }
  std::size_t n_fine() const { return fine_names.size(); }
  bool hierarchical() const { return !coarse_names.empty(); }

  // Coarse multi-hot as the OR over each coarse class's fine children.
  std::vector<int> coarse_from_fine(const std::vector<int>& fine) const;

  void validate() const;
  void save(const std::string& path) const;
  static Taxonomy load(const std::string& path);

  // n_fine classes, pairs of fine classes sharing a coarse parent.
  static Taxonomy synthetic_hierarchical(std::size_t n_fine);
  static Taxonomy synthetic_flat(std::size_t n_fine);
};

}  // namespace ust

#endif  // UST_TAXONOMY_H_
