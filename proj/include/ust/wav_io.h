// ust/wav_io.h

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

#ifndef UST_WAV_IO_H_
#define UST_WAV_IO_H_

#include <string>

#include "ust/dsp.h"

namespace ust {

// 16/24-bit little-endian PCM WAV, 1 or 2 channels.
Waveform read_wav(const std::string& path);
void write_wav16(const std::string& path, const Waveform& w);

}  // namespace ust

#endif  // UST_WAV_IO_H_
