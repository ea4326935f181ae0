#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "topocaps/rng.hpp"
#include "topocaps/tensor.hpp"

namespace topocaps::data {

// --- IDX ingestion ---------------------------------------------------------

struct IdxData {
    bool is_images = false;
    Tensor tensor;  // images: [n, rows, cols] scaled to [0,1]; labels: [n]
};

// Parses a big-endian IDX payload (magic 0x803 images / 0x801 labels).
// Gzip-compressed payloads are inflated transparently.
IdxData load_idx(const std::vector<std::uint8_t>& bytes);
IdxData load_idx_file(const std::string& path);

// --- transformation sequences ----------------------------------------------

enum class TransformKind { rotation, hue, scale };

TransformKind transform_from_string(const std::string& s);
std::string to_string(TransformKind k);

// 28x28 grayscale -> 28x28x3 color frame at transformation step `step` of a
// cycle of length S. Rotation/hue advance by 20 degrees per step; scale by
// 3.66% per step from a 60% baseline, wrapping back to 60%.
Vec transform_frame(const Vec& img, TransformKind kind, int step, int S);

// Generic single-channel resampling helpers (bilinear, zero fill).
Vec rotate_gray(const Vec& img, int w, int h, double angle_rad);
Vec scale_gray(const Vec& img, int w, int h, double factor);

struct SequenceAndTrace {
    std::vector<Vec> frames;
    std::vector<int> y;  // ground-truth transformation index per frame
};

// frame j = transform_frame(img, kind, (random_start + j) mod S)
SequenceAndTrace make_cyclic_sequence(const Vec& img, TransformKind kind, int S,
                                      int random_start);

// --- procedural sprites (desk-scale dSprites stand-in) ----------------------

enum class SpriteShape { square, ellipse, heart };

struct SpriteSpec {
    SpriteShape shape = SpriteShape::square;
    int scale_idx = 0;        // [0, 5)
    int orientation_idx = 0;  // [0, 15)
    int x_idx = 7;            // [0, 15)
    int y_idx = 7;            // [0, 15)
};

enum class SpriteFactor { x, y, orientation, scale };

// Anti-aliased filled shape on the factor grid; deterministic.
Vec sprites_render(const SpriteSpec& spec, int resolution = 64);

// Varies exactly one factor cyclically over S = 15 steps; scale sequences
// loop the 5 scales three times.
SequenceAndTrace sprites_sequence(const SpriteSpec& spec, SpriteFactor kind, int S = 15,
                                  int random_start = 0);

// --- batching ---------------------------------------------------------------

struct SequenceBatch {
    std::vector<std::vector<Vec>> frames;       // B sequences of S frames
    std::vector<int> transform_kind;            // per sequence
    std::vector<std::vector<int>> factor_trace;  // B x S
};

// Dataset recipe the iterator samples from: base images plus the available
// transform kinds (indices into a caller-defined kind list).
struct DatasetSpec {
    std::vector<Vec> base_images;
    int image_w = 0;
    int image_h = 0;
    int S = 0;
    int n_kinds = 1;
    // kind, base image, step -> frame
    std::function<Vec(int kind, const Vec& img, int step)> render;
};

// Streams shuffled SequenceBatch items; base image, random start and kind
// are drawn uniformly per sequence, reshuffled each epoch; deterministic
// per seed.
class BatchIterator {
public:
    BatchIterator(const DatasetSpec* spec, int batch_size, std::uint64_t seed);

    // Number of batches per epoch (one sequence per base image per epoch).
    std::size_t batches_per_epoch() const;
    SequenceBatch next();
    void start_epoch();

private:
    const DatasetSpec* spec_;
    int batch_size_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

// 16x16 grayscale toy corpus: procedural sprites rendered small, sequences
// rotate through S steps of 360/S degrees.
std::vector<Vec> make_toy_base_images(int n, int resolution, std::uint64_t seed);
DatasetSpec make_toy_spec(int n_base, int resolution, int S, std::uint64_t seed);

}  // namespace topocaps::data
