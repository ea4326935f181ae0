#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include "topocaps/checkpoint.hpp"
#include "topocaps/config.hpp"
#include "topocaps/data.hpp"
#include "topocaps/errors.hpp"
#include "topocaps/image_io.hpp"
#include "topocaps/metrics.hpp"
#include "topocaps/model.hpp"
#include "topocaps/training.hpp"

namespace fs = std::filesystem;
using namespace topocaps;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct DatasetBundle {
    data::DatasetSpec spec;
    int channels = 1;
    std::vector<std::string> kind_names;
};

std::string data_dir() {
    const char* env = std::getenv("TOPOCAPS_DATA_DIR");
    return env ? env : ".";
}

topo::Variant parse_variant(const std::string& s) {
    // model-level aliases for the three trainable variants
    if (s == "tvae") return topo::Variant::shifting;
    if (s == "bubble" || s == "bubblevae") return topo::Variant::stationary;
    if (s == "vae") return topo::Variant::none;
    return topo::variant_from_string(s);
}

topo::TopographyConfig topo_from_config(const io::Config& cfg) {
    topo::TopographyConfig t;
    t.variant = parse_variant(cfg.get("model.variant", "tvae"));
    t.layout.n_capsules = cfg.get_int("model.n_capsules", 1);
    t.layout.capsule_dim = cfg.get_int("model.capsule_dim", 1);
    t.L = cfg.get_int("topo.L", 0);
    t.K = cfg.get_int("topo.K", 1);
    t.boundary = topo::boundary_from_string(cfg.get("topo.boundary", "cyclic"));
    t.causal = cfg.get_bool("topo.causal", false);
    t.nu = cfg.get_int("topo.nu", 5);
    t.mu_init = cfg.get_double("topo.mu_init", t.variant == topo::Variant::torus2d ? 10.0 : 30.0);
    t.epsilon = cfg.get_double("topo.epsilon", 1e-6);
    t.torus_h = cfg.get_int("topo.torus_h", 16);
    t.torus_w = cfg.get_int("topo.torus_w", 16);
    t.validate();
    return t;
}

model::ArchPreset preset_from_config(const io::Config& cfg) {
    model::ArchPreset preset;
    preset.name = cfg.get("model.preset", "toy");
    if (preset.name == "toy") preset.toy_sizes = cfg.get_sizes("model.layers");
    return preset;
}

DatasetBundle dataset_from_config(const io::Config& cfg, std::uint64_t seed) {
    DatasetBundle b;
    const std::string kind = cfg.get("data.kind", "toy");
    if (kind == "toy") {
        b.spec = data::make_toy_spec(cfg.get_int("data.n_base", 500),
                                     cfg.get_int("data.resolution", 16),
                                     cfg.get_int("data.S", 8), seed);
        b.channels = 1;
        b.kind_names = {"rotation"};
    } else if (kind == "mnist") {
        const std::string path = cfg.has("data.images")
                                     ? cfg.get("data.images")
                                     : data_dir() + "/train-images-idx3-ubyte";
        const data::IdxData idx = data::load_idx_file(path);
        if (!idx.is_images) throw FormatError("data.images is not an image IDX file");
        const std::size_t rows = idx.tensor.shape[1], cols = idx.tensor.shape[2];
        if (rows != 28 || cols != 28) throw FormatError("mnist dataset: expected 28x28 images");
        const int n_base = cfg.get_int("data.n_base", static_cast<int>(idx.tensor.shape[0]));
        for (int i = 0; i < n_base; ++i)
            b.spec.base_images.emplace_back(idx.tensor.data.begin() + i * 784,
                                            idx.tensor.data.begin() + (i + 1) * 784);
        b.spec.image_w = 28;
        b.spec.image_h = 28;
        b.spec.S = cfg.get_int("data.S", 18);
        b.kind_names = {"rotation", "hue", "scale"};
        b.spec.n_kinds = static_cast<int>(b.kind_names.size());
        const int S = b.spec.S;
        b.spec.render = [S](int k, const Vec& img, int step) {
            return data::transform_frame(img, static_cast<data::TransformKind>(k), step, S);
        };
        b.channels = 3;
    } else if (kind == "sprites") {
        const int n_base = cfg.get_int("data.n_base", 500);
        Rng rng(seed);
        std::vector<data::SpriteSpec> specs(n_base);
        for (auto& s : specs) {
            s.shape = static_cast<data::SpriteShape>(rng.below(3));
            s.scale_idx = static_cast<int>(rng.below(5));
            s.orientation_idx = static_cast<int>(rng.below(15));
            s.x_idx = static_cast<int>(rng.below(15));
            s.y_idx = static_cast<int>(rng.below(15));
        }
        // base "image" slot stores the spec index; rendering recreates frames
        b.spec.base_images.resize(n_base, Vec(1));
        for (int i = 0; i < n_base; ++i) b.spec.base_images[i][0] = i;
        b.spec.image_w = 64;
        b.spec.image_h = 64;
        b.spec.S = 15;
        b.kind_names = {"x", "y", "orientation", "scale"};
        b.spec.n_kinds = 4;
        b.spec.render = [specs](int k, const Vec& img, int step) {
            data::SpriteSpec s = specs[static_cast<int>(img[0])];
            switch (static_cast<data::SpriteFactor>(k)) {
                case data::SpriteFactor::x: s.x_idx = step; break;
                case data::SpriteFactor::y: s.y_idx = step; break;
                case data::SpriteFactor::orientation: s.orientation_idx = step; break;
                case data::SpriteFactor::scale: s.scale_idx = step % 5; break;
            }
            return data::sprites_render(s);
        };
        b.channels = 1;
    } else {
        throw ConfigError("unknown data.kind: " + kind);
    }
    return b;
}

void check_sequence_window(const io::Config& cfg) {
    const int S = cfg.get_int("data.S", cfg.get("data.kind", "toy") == "sprites" ? 15
                              : cfg.get("data.kind", "toy") == "mnist" ? 18 : 8);
    const int L = cfg.get_int("topo.L", 0);
    if (2 * L > S) throw ConfigError("topo.L: window exceeds sequence (need 2L <= S)");
}

// Single-writer guard per run directory.
struct RunLock {
    fs::path path;
    explicit RunLock(const fs::path& dir) : path(dir / ".lock") {
        fs::create_directories(dir);
        if (fs::exists(path)) throw UsageError("run directory is locked: " + dir.string());
        std::ofstream(path) << "locked\n";
    }
    ~RunLock() { std::error_code ec; fs::remove(path, ec); }
};

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::int64_t seed_override, bool resume) {
    const io::Config cfg = io::Config::parse_file(config_path);
    check_sequence_window(cfg);

    const std::uint64_t seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                                  : cfg.get_int("train.seed", 0);
    const std::string out = out_dir.empty() ? cfg.get("run.out", "runs/default") : out_dir;
    RunLock lock(out);

    DatasetBundle ds = dataset_from_config(cfg, seed + 1000003);

    model::TvaeModel m;
    int first_epoch = 0;
    if (resume) {
        m = io::load_checkpoint(out);
        std::ifstream hist(fs::path(out) / "history.csv");
        std::string line;
        while (std::getline(hist, line))
            if (!line.empty() && line[0] != 'e') ++first_epoch;
    } else {
        m = model::build_model(preset_from_config(cfg), topo_from_config(cfg), seed,
                               model::likelihood_from_string(cfg.get("train.likelihood",
                                                                      "bernoulli")));
    }

    model::TrainConfig tc;
    tc.learning_rate = cfg.get_double("train.lr", 1e-4);
    tc.momentum = cfg.get_double("train.momentum", 0.9);
    tc.batch_size = cfg.get_int("train.batch_size", 8);
    tc.epochs = cfg.get_int("train.epochs", 100);
    tc.seed = seed + static_cast<std::uint64_t>(first_epoch);
    tc.likelihood = m.likelihood;

    const model::TrainHistory history = model::train(m, ds.spec, tc, nullptr, first_epoch);

    io::save_checkpoint(out, m);
    model::write_history_csv((fs::path(out) / "history.csv").string(), history, resume);
    std::cout << "checkpoint: " << out << "\n";
    std::cout << "history: " << (fs::path(out) / "history.csv").string() << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& out_path, std::int64_t seed_override, bool debug_perfect) {
    const io::Config cfg = io::Config::parse_file(config_path);
    const model::TvaeModel m = io::load_checkpoint(checkpoint);
    const std::uint64_t seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                                  : cfg.get_int("eval.seed", 1);
    const int n_sequences = cfg.get_int("eval.n_sequences", 100);
    const int n_is = cfg.get_int("eval.n_is_samples", 10);

    DatasetBundle ds = dataset_from_config(cfg, seed + 2000003);
    data::BatchIterator batches(&ds.spec, 1, seed);

    std::map<int, std::vector<std::vector<Vec>>> t_by_kind;
    std::map<int, std::vector<std::vector<int>>> y_by_kind;
    double eq_sum = 0.0, is_sum = 0.0, frames = 0.0;
    Rng is_rng(seed ^ 0xabcdef);
    Rng debug_rng(seed ^ 0x123457);
    for (int i = 0; i < n_sequences; ++i) {
        const data::SequenceBatch batch = batches.next();
        const auto& x_seq = batch.frames[0];
        std::vector<Vec> t = model::infer_t_sequence(m, x_seq, nullptr);
        if (debug_perfect) {
            // calibration path: replace latents with exactly rolled copies
            Vec base(m.latent_dim());
            for (auto& v : base) v = debug_rng.normal();
            for (std::size_t l = 0; l < t.size(); ++l) {
                const int shift = (batch.factor_trace[0][l] - batch.factor_trace[0][0] +
                                   ds.spec.S) % ds.spec.S;
                t[l] = topo::roll_capsules(base, m.topo.layout, shift);
            }
        }
        eq_sum += metrics::equivariance_error(t, m.topo.layout);
        is_sum += model::importance_log_px(m, x_seq, n_is, is_rng);
        frames += static_cast<double>(x_seq.size());
        t_by_kind[batch.transform_kind[0]].push_back(std::move(t));
        y_by_kind[batch.transform_kind[0]].push_back(batch.factor_trace[0]);
    }

    std::map<std::string, double> capcorrs;
    for (const auto& [kind, seqs] : t_by_kind) {
        double r;
        try {
            r = metrics::capcorr_sequences(seqs, y_by_kind[kind], m.topo.layout);
        } catch (const DomainError&) {
            r = std::numeric_limits<double>::quiet_NaN();  // constant rolls
        }
        capcorrs[ds.kind_names[kind]] = r;
    }

    const std::string out = out_path.empty() ? "metrics.csv" : out_path;
    std::ofstream f(out);
    f.precision(10);
    f << "variant,L,K,eq_error";
    for (const auto& [name, _] : capcorrs) f << ",capcorr_" << name;
    f << ",log_px_seq,log_px_frame,n_sequences,seed\n";
    f << topo::to_string(m.topo.variant) << ',' << m.topo.L << ',' << m.topo.K << ','
      << eq_sum / n_sequences;
    for (const auto& [_, v] : capcorrs) f << ',' << v;
    f << ',' << is_sum / n_sequences << ',' << is_sum / frames << ',' << n_sequences << ','
      << seed << '\n';
    std::cout << "metrics: " << out << "\n";
    return 0;
}

int cmd_traverse(const std::string& config_path, const std::string& checkpoint,
                 const std::string& out_dir, int n_examples, std::int64_t seed_override) {
    const io::Config cfg = io::Config::parse_file(config_path);
    const model::TvaeModel m = io::load_checkpoint(checkpoint);
    const std::uint64_t seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                                  : cfg.get_int("eval.seed", 1);
    DatasetBundle ds = dataset_from_config(cfg, seed + 2000003);
    data::BatchIterator batches(&ds.spec, 1, seed);
    fs::create_directories(out_dir);

    for (int i = 0; i < n_examples; ++i) {
        const data::SequenceBatch batch = batches.next();
        const auto& x_seq = batch.frames[0];
        const int S = static_cast<int>(x_seq.size());
        const std::vector<Vec> t = model::infer_t_sequence(m, x_seq, nullptr);
        std::vector<Vec> grid;
        for (const auto& x : x_seq) grid.push_back(x);                       // input row
        for (const auto& tl : t) grid.push_back(model::decode(m, tl));      // reconstruction
        const std::vector<Vec> trav = model::capsule_traversal(m, x_seq, S);  // rolled t_0
        for (const auto& fr : trav) grid.push_back(fr);
        const std::string path = (fs::path(out_dir) /
                                  ("traversal_" + std::to_string(i) +
                                   (ds.channels == 3 ? ".ppm" : ".pgm"))).string();
        io::write_pnm_grid(path, grid, ds.spec.image_w, ds.spec.image_h, ds.channels, S);
        std::cout << "grid: " << path << "\n";
    }
    return 0;
}

int cmd_sample(const std::string& config_path, const std::string& checkpoint,
               const std::string& out_path, int n, std::int64_t seed_override) {
    const io::Config cfg = io::Config::parse_file(config_path);
    const model::TvaeModel m = io::load_checkpoint(checkpoint);
    const std::uint64_t seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                                  : cfg.get_int("eval.seed", 1);
    DatasetBundle ds = dataset_from_config(cfg, seed + 2000003);

    Rng rng(seed);
    std::vector<Vec> images;
    for (int i = 0; i < n; ++i) {
        Vec z(m.latent_dim());
        for (auto& v : z) v = rng.normal();
        Vec t;
        if (m.has_u()) {
            std::vector<Vec> window(m.topo.window_len(), Vec(m.topo.u_dim()));
            for (auto& u : window)
                for (auto& v : u) v = rng.normal();
            t = topo::construct_t(z, window, m.mu, m.topo);
        } else {
            t = z;
        }
        images.push_back(model::decode(m, t));
    }
    io::write_pnm_grid(out_path, images, ds.spec.image_w, ds.spec.image_h, ds.channels, 8);
    std::cout << "samples: " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topographic VAE: training, evaluation, traversal and sampling"};
    app.require_subcommand(1);

    std::string config_path, out, checkpoint;
    std::int64_t seed = -1;
    bool deterministic = false;
    app.add_option("--config", config_path, "config file")->required();
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--out", out, "output directory / file");
    app.add_option("--checkpoint", checkpoint, "checkpoint directory");
    app.add_flag("--deterministic", deterministic, "use posterior means everywhere");

    auto* train_cmd = app.add_subcommand("train", "train a model from a config");
    train_cmd->fallthrough();
    bool resume = false;
    train_cmd->add_flag("--resume", resume, "continue from the checkpoint in --out");

    auto* eval_cmd = app.add_subcommand("eval", "metrics + importance-sampled likelihood");
    eval_cmd->fallthrough();
    bool debug_perfect = false;
    eval_cmd->add_flag("--debug-perfect-latents", debug_perfect,
                       "calibration path: inject exactly rolled latents");

    auto* traverse_cmd = app.add_subcommand("traverse", "write capsule traversal grids");
    traverse_cmd->fallthrough();
    int n_examples = 4;
    traverse_cmd->add_option("--n", n_examples, "number of examples");

    auto* sample_cmd = app.add_subcommand("sample", "decode prior samples");
    sample_cmd->fallthrough();
    int n_samples = 16;
    sample_cmd->add_option("--n", n_samples, "number of samples");

    try {
        app.parse(argc, argv);
        if (train_cmd->parsed()) return cmd_train(config_path, out, seed, resume);
        if (eval_cmd->parsed())
            return cmd_eval(config_path, checkpoint, out, seed, debug_perfect);
        if (traverse_cmd->parsed())
            return cmd_traverse(config_path, checkpoint, out.empty() ? "traversals" : out,
                                n_examples, seed);
        if (sample_cmd->parsed())
            return cmd_sample(config_path, checkpoint, out.empty() ? "samples.pgm" : out,
                              n_samples, seed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
