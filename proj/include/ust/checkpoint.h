// ust/checkpoint.h

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

#ifndef UST_CHECKPOINT_H_
#define UST_CHECKPOINT_H_

#include <string>
#include <vector>

#include "ust/tensor.h"

namespace ust {

// On-disk model state: a JSON manifest at <path> describing tensor name,
// shape and byte offset, next to one binary blob (<path>.bin) of
// little-endian float64 values, row-major.
struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

void save_checkpoint(const std::string& path,
                     const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> load_checkpoint(const std::string& path);

}  // namespace ust

#endif  // UST_CHECKPOINT_H_
