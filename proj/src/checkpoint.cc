// ust/checkpoint.cc

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

#include "ust/checkpoint.h"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace ust {

namespace {

std::string blob_path_for(const std::string& manifest_path) {
  return manifest_path + ".bin";
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<CheckpointEntry>& entries) {
  nlohmann::json manifest;
  manifest["format"] = "ust-checkpoint";
  manifest["version"] = 1;
  manifest["blob"] = std::filesystem::path(blob_path_for(path)).filename().string();
  nlohmann::json tensors = nlohmann::json::array();

  std::vector<unsigned char> blob;
  std::size_t offset = 0;
  for (const auto& e : entries) {
    if (shape_numel(e.shape) != e.values.size())
      throw std::invalid_argument("save_checkpoint: shape mismatch for " + e.name);
    nlohmann::json t;
    t["name"] = e.name;
    t["shape"] = e.shape;
    t["offset"] = offset;
    t["count"] = e.values.size();
    tensors.push_back(t);
    for (double v : e.values)
      append_le<std::uint64_t>(&blob, std::bit_cast<std::uint64_t>(v));
    offset += e.values.size() * sizeof(double);
  }
  manifest["tensors"] = tensors;

  const std::string tmp_manifest = path + ".tmp";
  const std::string tmp_blob = blob_path_for(path) + ".tmp";
  {
    std::ofstream f(tmp_manifest, std::ios::trunc);
    if (!f) throw DataError("save_checkpoint: cannot write " + path);
    f << manifest.dump(2) << "\n";
  }
  {
    std::ofstream f(tmp_blob, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("save_checkpoint: cannot write blob for " + path);
    f.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size()));
  }
  std::filesystem::rename(tmp_manifest, path);
  std::filesystem::rename(tmp_blob, blob_path_for(path));
}

std::vector<CheckpointEntry> load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_checkpoint: cannot open " + path);
  nlohmann::json manifest;
  try {
    f >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_checkpoint: bad manifest " + path + ": " + e.what());
  }
  if (manifest.value("format", "") != "ust-checkpoint")
    throw DataError("load_checkpoint: not a checkpoint manifest: " + path);

  const std::string blob_path =
      (std::filesystem::path(path).parent_path() /
       manifest.at("blob").get<std::string>())
          .string();
  std::ifstream bf(blob_path, std::ios::binary);
  if (!bf) throw DataError("load_checkpoint: cannot open blob " + blob_path);
  std::vector<unsigned char> blob((std::istreambuf_iterator<char>(bf)),
                                  std::istreambuf_iterator<char>());

  std::vector<CheckpointEntry> out;
  for (const auto& t : manifest.at("tensors")) {
    CheckpointEntry e;
    e.name = t.at("name").get<std::string>();
    e.shape = t.at("shape").get<Shape>();
    const auto offset = t.at("offset").get<std::size_t>();
    const auto count = t.at("count").get<std::size_t>();
    if (count != shape_numel(e.shape))
      throw DataError("load_checkpoint: count/shape mismatch for " + e.name);
    if (offset + count * sizeof(double) > blob.size())
      throw DataError("load_checkpoint: blob truncated at tensor " + e.name);
    e.values.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      e.values[i] = std::bit_cast<double>(
          read_le<std::uint64_t>(blob.data() + offset + i * sizeof(double)));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace ust
