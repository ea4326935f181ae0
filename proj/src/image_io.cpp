#include "topocaps/image_io.hpp"

#include <algorithm>
#include <fstream>

#include "topocaps/errors.hpp"

namespace topocaps::io {

void write_pnm_grid(const std::string& path, const std::vector<Vec>& images, int w, int h,
                    int channels, int cols) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("write_pnm_grid: cannot open " + path);
    if (images.empty()) return;  // zero-byte file for an empty grid
    if (channels != 1 && channels != 3)
        throw UsageError("write_pnm_grid: channels must be 1 or 3");
    for (const auto& img : images)
        if (static_cast<int>(img.size()) != w * h * channels)
            throw DimensionError("write_pnm_grid: image size mismatch");

    const int n = static_cast<int>(images.size());
    cols = std::min(cols, n);
    const int rows = (n + cols - 1) / cols;
    const int gw = cols * w, gh = rows * h;

    std::vector<std::uint8_t> buf(static_cast<std::size_t>(gw) * gh * channels, 0);
    for (int i = 0; i < n; ++i) {
        const int gx = (i % cols) * w, gy = (i / cols) * h;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < channels; ++c) {
                    const double v = images[i][(static_cast<std::size_t>(y) * w + x) * channels + c];
                    buf[((static_cast<std::size_t>(gy + y) * gw) + gx + x) * channels + c] =
                        static_cast<std::uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
                }
    }
    f << (channels == 3 ? "P6" : "P5") << '\n' << gw << ' ' << gh << '\n' << 255 << '\n';
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace topocaps::io
