#pragma once

#include <string>
#include <vector>

#include "topocaps/tensor.hpp"

namespace topocaps::io {

// Tiles rows x cols images (each w x h, values clamped to [0,1]) into one
// grid and writes binary P5 (gray) or P6 (channels == 3) output.
void write_pnm_grid(const std::string& path, const std::vector<Vec>& images, int w, int h,
                    int channels, int cols);

}  // namespace topocaps::io
