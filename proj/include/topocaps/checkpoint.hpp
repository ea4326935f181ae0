#pragma once

#include <string>

#include "topocaps/model.hpp"

namespace topocaps::io {

// Checkpoint directory layout:
//   manifest    key-value text: `meta <key> <value>` lines describing the
//               model configuration, then `param <name> <shape> <offset>`
//               lines (shape comma-separated, offset in bytes)
//   params.bin  little-endian 64-bit floats, concatenated in manifest order
void save_checkpoint(const std::string& dir, const model::TvaeModel& m);
model::TvaeModel load_checkpoint(const std::string& dir);

}  // namespace topocaps::io
