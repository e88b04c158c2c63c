// melvc/checkpoint.h
//
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

#ifndef MELVC_CHECKPOINT_H_
#define MELVC_CHECKPOINT_H_

#include <filesystem>

#include "melvc/trainer.h"

namespace melvc {

// Versioned binary container: magic, config fingerprint, step counter,
// canonical config text, RNG state, every named parameter as raw float64
// (row-major), and the Adam moments. Values round-trip bit-exactly, so a
// reloaded trainer reproduces the subsequent metrics trace bitwise.
void save_checkpoint(const std::filesystem::path& path,
                     const Trainer& trainer);

// Throws std::runtime_error on a missing, truncated, or corrupt file (the
// magic, the fingerprint, and parameter names/shapes are all validated).
Trainer load_checkpoint(const std::filesystem::path& path);

}  // namespace melvc

#endif  // MELVC_CHECKPOINT_H_
