#include "topocaps/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

#include "topocaps/errors.hpp"

namespace topocaps::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw FormatError("load_idx: zlib init failed");
    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<std::uint8_t*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw FormatError("load_idx: corrupt gzip payload");
        }
        out.insert(out.end(), buf, buf + sizeof(buf) - zs.avail_out);
    }
    inflateEnd(&zs);
    return out;
}

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

IdxData load_idx(const std::vector<std::uint8_t>& bytes) {
    const std::vector<std::uint8_t>* payload = &bytes;
    std::vector<std::uint8_t> inflated;
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
        inflated = gunzip(bytes);
        payload = &inflated;
    }
    const auto& b = *payload;
    if (b.size() < 4) throw FormatError("load_idx: truncated header");
    const std::uint32_t magic = read_be32(b.data());

    IdxData out;
    std::vector<std::size_t> shape;
    std::size_t header = 0;
    if (magic == 0x00000803u) {
        if (b.size() < 16) throw FormatError("load_idx: truncated image header");
        out.is_images = true;
        shape = {read_be32(&b[4]), read_be32(&b[8]), read_be32(&b[12])};
        header = 16;
    } else if (magic == 0x00000801u) {
        if (b.size() < 8) throw FormatError("load_idx: truncated label header");
        out.is_images = false;
        shape = {read_be32(&b[4])};
        header = 8;
    } else {
        throw FormatError("load_idx: bad magic");
    }

    std::size_t count = 1;
    for (auto s : shape) count *= s;
    if (b.size() != header + count)
        throw FormatError("load_idx: payload length mismatch");

    out.tensor = Tensor::zeros(shape);
    const double scale = out.is_images ? 1.0 / 255.0 : 1.0;
    for (std::size_t i = 0; i < count; ++i)
        out.tensor.data[i] = scale * static_cast<double>(b[header + i]);
    return out;
}

IdxData load_idx_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("load_idx_file: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return load_idx(bytes);
}

TransformKind transform_from_string(const std::string& s) {
    if (s == "rotation") return TransformKind::rotation;
    if (s == "hue") return TransformKind::hue;
    if (s == "scale") return TransformKind::scale;
    throw ConfigError("unknown transform kind: " + s);
}

std::string to_string(TransformKind k) {
    switch (k) {
        case TransformKind::rotation: return "rotation";
        case TransformKind::hue: return "hue";
        case TransformKind::scale: return "scale";
    }
    return "?";
}

namespace {

double sample_bilinear(const Vec& img, int w, int h, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto at = [&](int xi, int yi) -> double {
        if (xi < 0 || xi >= w || yi < 0 || yi >= h) return 0.0;
        return img[static_cast<std::size_t>(yi) * w + xi];
    };
    return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
           (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
}

// HSV (s = 1, v = intensity) to RGB; hue in degrees.
void hsv_to_rgb(double hue_deg, double v, double& r, double& g, double& b) {
    const double h = std::fmod(std::fmod(hue_deg, 360.0) + 360.0, 360.0) / 60.0;
    const int i = static_cast<int>(h) % 6;
    const double f = h - std::floor(h);
    const double p = 0.0, q = v * (1.0 - f), t = v * f;
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

}  // namespace

Vec rotate_gray(const Vec& img, int w, int h, double angle_rad) {
    if (static_cast<int>(img.size()) != w * h)
        throw DimensionError("rotate_gray: size mismatch");
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    Vec out(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // inverse rotation of the output grid point
            const double dx = x - cx, dy = y - cy;
            const double sx = cx + c * dx + s * dy;
            const double sy = cy - s * dx + c * dy;
            out[static_cast<std::size_t>(y) * w + x] = sample_bilinear(img, w, h, sx, sy);
        }
    return out;
}

Vec scale_gray(const Vec& img, int w, int h, double factor) {
    if (static_cast<int>(img.size()) != w * h)
        throw DimensionError("scale_gray: size mismatch");
    if (factor <= 0.0) throw DomainError("scale_gray: factor must be positive");
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    Vec out(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double sx = cx + (x - cx) / factor;
            const double sy = cy + (y - cy) / factor;
            out[static_cast<std::size_t>(y) * w + x] = sample_bilinear(img, w, h, sx, sy);
        }
    return out;
}

Vec transform_frame(const Vec& img, TransformKind kind, int step, int S) {
    constexpr int kSide = 28;
    if (static_cast<int>(img.size()) != kSide * kSide)
        throw DimensionError("transform_frame: expected 28x28 grayscale input");
    if (step < 0 || step >= S) throw UsageError("transform_frame: step out of range");

    Vec gray;
    double hue = 0.0;
    switch (kind) {
        case TransformKind::rotation:
            gray = rotate_gray(img, kSide, kSide, 20.0 * step * kPi / 180.0);
            break;
        case TransformKind::hue:
            gray = img;
            hue = 20.0 * step;
            break;
        case TransformKind::scale:
            gray = scale_gray(img, kSide, kSide, 0.60 + 0.0366 * step);
            break;
    }
    Vec out(img.size() * 3);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        double r, g, b;
        if (kind == TransformKind::hue)
            hsv_to_rgb(hue, gray[i], r, g, b);
        else
            r = g = b = gray[i];
        out[3 * i + 0] = r;
        out[3 * i + 1] = g;
        out[3 * i + 2] = b;
    }
    return out;
}

SequenceAndTrace make_cyclic_sequence(const Vec& img, TransformKind kind, int S,
                                      int random_start) {
    SequenceAndTrace seq;
    seq.frames.resize(S);
    seq.y.resize(S);
    for (int j = 0; j < S; ++j) {
        const int step = ((random_start + j) % S + S) % S;
        seq.frames[j] = transform_frame(img, kind, step, S);
        seq.y[j] = step;
    }
    return seq;
}

namespace {

// Signed "inside" test for a unit shape, point in shape-local coordinates.
bool sprite_inside(SpriteShape shape, double x, double y) {
    switch (shape) {
        case SpriteShape::square:
            return std::max(std::abs(x), std::abs(y)) <= 1.0;
        case SpriteShape::ellipse:
            return x * x + (y / 0.72) * (y / 0.72) <= 1.0;
        case SpriteShape::heart: {
            const double hx = x * 1.25, hy = -y * 1.25;
            const double a = hx * hx + hy * hy - 1.0;
            return a * a * a - hx * hx * hy * hy * hy <= 0.0;
        }
    }
    return false;
}

}  // namespace

Vec sprites_render(const SpriteSpec& spec, int resolution) {
    if (spec.scale_idx < 0 || spec.scale_idx >= 5 || spec.orientation_idx < 0 ||
        spec.orientation_idx >= 15 || spec.x_idx < 0 || spec.x_idx >= 15 ||
        spec.y_idx < 0 || spec.y_idx >= 15)
        throw ConfigError("sprites_render: factor index out of range");

    const double R = resolution;
    const double cx = R * (0.2 + 0.6 * spec.x_idx / 15.0);
    const double cy = R * (0.2 + 0.6 * spec.y_idx / 15.0);
    const double half = R * (0.08 + 0.024 * spec.scale_idx);
    const double angle = 2.0 * kPi * spec.orientation_idx / 15.0;
    const double c = std::cos(angle), s = std::sin(angle);

    constexpr int kSub = 4;  // 4x4 supersampling for anti-aliasing
    Vec out(static_cast<std::size_t>(resolution) * resolution, 0.0);
    for (int py = 0; py < resolution; ++py)
        for (int px = 0; px < resolution; ++px) {
            int inside = 0;
            for (int sy = 0; sy < kSub; ++sy)
                for (int sx = 0; sx < kSub; ++sx) {
                    const double gx = px + (sx + 0.5) / kSub - cx;
                    const double gy = py + (sy + 0.5) / kSub - cy;
                    const double lx = (c * gx + s * gy) / half;
                    const double ly = (-s * gx + c * gy) / half;
                    if (sprite_inside(spec.shape, lx, ly)) ++inside;
                }
            out[static_cast<std::size_t>(py) * resolution + px] =
                static_cast<double>(inside) / (kSub * kSub);
        }
    return out;
}

SequenceAndTrace sprites_sequence(const SpriteSpec& spec, SpriteFactor kind, int S,
                                  int random_start) {
    SequenceAndTrace seq;
    seq.frames.resize(S);
    seq.y.resize(S);
    for (int j = 0; j < S; ++j) {
        const int step = ((random_start + j) % S + S) % S;
        SpriteSpec f = spec;
        switch (kind) {
            case SpriteFactor::x: f.x_idx = step; break;
            case SpriteFactor::y: f.y_idx = step; break;
            case SpriteFactor::orientation: f.orientation_idx = step; break;
            case SpriteFactor::scale: f.scale_idx = step % 5; break;
        }
        seq.frames[j] = sprites_render(f);
        seq.y[j] = step;
    }
    return seq;
}

BatchIterator::BatchIterator(const DatasetSpec* spec, int batch_size, std::uint64_t seed)
    : spec_(spec), batch_size_(batch_size), rng_(seed) {
    if (!spec || spec->base_images.empty())
        throw UsageError("BatchIterator: empty dataset");
    if (batch_size <= 0) throw ConfigError("BatchIterator: batch size must be positive");
    order_.resize(spec->base_images.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    start_epoch();
}

std::size_t BatchIterator::batches_per_epoch() const {
    return order_.size() / static_cast<std::size_t>(batch_size_);
}

void BatchIterator::start_epoch() {
    for (std::size_t i = order_.size(); i > 1; --i)
        std::swap(order_[i - 1], order_[rng_.below(i)]);
    cursor_ = 0;
}

SequenceBatch BatchIterator::next() {
    if (cursor_ + batch_size_ > order_.size()) start_epoch();
    SequenceBatch batch;
    for (int b = 0; b < batch_size_; ++b) {
        const Vec& img = spec_->base_images[order_[cursor_++]];
        const int kind = static_cast<int>(rng_.below(spec_->n_kinds));
        const int start = static_cast<int>(rng_.below(spec_->S));
        std::vector<Vec> frames(spec_->S);
        std::vector<int> trace(spec_->S);
        for (int j = 0; j < spec_->S; ++j) {
            const int step = (start + j) % spec_->S;
            frames[j] = spec_->render(kind, img, step);
            trace[j] = step;
        }
        batch.frames.push_back(std::move(frames));
        batch.transform_kind.push_back(kind);
        batch.factor_trace.push_back(std::move(trace));
    }
    return batch;
}

std::vector<Vec> make_toy_base_images(int n, int resolution, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec> images(n);
    for (int i = 0; i < n; ++i) {
        SpriteSpec spec;
        spec.shape = static_cast<SpriteShape>(rng.below(3));
        spec.scale_idx = static_cast<int>(rng.below(5));
        spec.orientation_idx = static_cast<int>(rng.below(15));
        // keep shapes near the center so rotation stays in frame
        spec.x_idx = 5 + static_cast<int>(rng.below(5));
        spec.y_idx = 5 + static_cast<int>(rng.below(5));
        images[i] = sprites_render(spec, resolution);
    }
    return images;
}

DatasetSpec make_toy_spec(int n_base, int resolution, int S, std::uint64_t seed) {
    DatasetSpec spec;
    spec.base_images = make_toy_base_images(n_base, resolution, seed);
    spec.image_w = resolution;
    spec.image_h = resolution;
    spec.S = S;
    spec.n_kinds = 1;
    spec.render = [resolution, S](int /*kind*/, const Vec& img, int step) {
        return rotate_gray(img, resolution, resolution, 2.0 * kPi * step / S);
    };
    return spec;
}

}  // namespace topocaps::data
