#include "topocaps/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "topocaps/errors.hpp"

namespace topocaps::io {

namespace fs = std::filesystem;
using model::TvaeModel;
using nn::DenseLayer;
using nn::MlpParams;

namespace {

struct ParamEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t count() const {
        std::size_t n = 1;
        for (auto s : shape) n *= s;
        return n;
    }
};

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(shape[i]);
    }
    return s;
}

std::vector<std::size_t> parse_shape(const std::string& s) {
    std::vector<std::size_t> shape;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) shape.push_back(std::stoul(tok));
    return shape;
}

void collect(const std::string& prefix, const MlpParams& p,
             std::vector<std::pair<std::string, const Vec*>>& out,
             std::vector<std::vector<std::size_t>>& shapes) {
    for (std::size_t k = 0; k < p.layers.size(); ++k) {
        const auto& l = p.layers[k];
        out.emplace_back(prefix + ".layer" + std::to_string(k) + ".weight", &l.weight);
        shapes.push_back({l.out, l.in});
        out.emplace_back(prefix + ".layer" + std::to_string(k) + ".bias", &l.bias);
        shapes.push_back({l.out});
    }
}

}  // namespace

void save_checkpoint(const std::string& dir, const TvaeModel& m) {
    fs::create_directories(dir);
    std::vector<std::pair<std::string, const Vec*>> params;
    std::vector<std::vector<std::size_t>> shapes;
    collect("encoder_z", m.encoder_z, params, shapes);
    if (m.has_u()) collect("encoder_u", m.encoder_u, params, shapes);
    collect("decoder", m.decoder, params, shapes);
    const Vec mu_vec{m.mu};
    if (m.has_u()) {
        params.emplace_back("mu", &mu_vec);
        shapes.push_back({1});
    }

    std::ofstream manifest(fs::path(dir) / "manifest");
    std::ofstream bin(fs::path(dir) / "params.bin", std::ios::binary);
    if (!manifest || !bin) throw FormatError("save_checkpoint: cannot write " + dir);

    const auto& t = m.topo;
    manifest << "meta format topocaps-checkpoint-1\n";
    manifest << "meta variant " << topo::to_string(t.variant) << '\n';
    manifest << "meta n_capsules " << t.layout.n_capsules << '\n';
    manifest << "meta capsule_dim " << t.layout.capsule_dim << '\n';
    manifest << "meta L " << t.L << '\n';
    manifest << "meta K " << t.K << '\n';
    manifest << "meta boundary " << topo::to_string(t.boundary) << '\n';
    manifest << "meta causal " << (t.causal ? 1 : 0) << '\n';
    manifest << "meta nu " << t.nu << '\n';
    manifest << "meta mu_init " << t.mu_init << '\n';
    manifest << "meta epsilon " << t.epsilon << '\n';
    manifest << "meta torus_h " << t.torus_h << '\n';
    manifest << "meta torus_w " << t.torus_w << '\n';
    manifest << "meta likelihood " << model::to_string(m.likelihood) << '\n';

    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        manifest << "param " << params[i].first << ' ' << shape_str(shapes[i]) << ' '
                 << offset << '\n';
        const Vec& v = *params[i].second;
        bin.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
        offset += v.size() * sizeof(double);
    }
}

TvaeModel load_checkpoint(const std::string& dir) {
    std::ifstream manifest(fs::path(dir) / "manifest");
    if (!manifest) throw FormatError("load_checkpoint: missing manifest in " + dir);

    std::map<std::string, std::string> meta;
    std::vector<ParamEntry> entries;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "meta") {
            std::string key, value;
            ss >> key >> value;
            meta[key] = value;
        } else if (tag == "param") {
            ParamEntry e;
            std::string shape;
            ss >> e.name >> shape >> e.offset;
            e.shape = parse_shape(shape);
            entries.push_back(std::move(e));
        } else {
            throw FormatError("load_checkpoint: unknown manifest line: " + line);
        }
    }
    if (meta["format"] != "topocaps-checkpoint-1")
        throw FormatError("load_checkpoint: unsupported format");

    TvaeModel m;
    auto& t = m.topo;
    t.variant = topo::variant_from_string(meta.at("variant"));
    t.layout.n_capsules = std::stoi(meta.at("n_capsules"));
    t.layout.capsule_dim = std::stoi(meta.at("capsule_dim"));
    t.L = std::stoi(meta.at("L"));
    t.K = std::stoi(meta.at("K"));
    t.boundary = topo::boundary_from_string(meta.at("boundary"));
    t.causal = meta.at("causal") == "1";
    t.nu = std::stoi(meta.at("nu"));
    t.mu_init = std::stod(meta.at("mu_init"));
    t.epsilon = std::stod(meta.at("epsilon"));
    t.torus_h = std::stoi(meta.at("torus_h"));
    t.torus_w = std::stoi(meta.at("torus_w"));
    m.likelihood = model::likelihood_from_string(meta.at("likelihood"));
    t.validate();

    std::ifstream bin(fs::path(dir) / "params.bin", std::ios::binary);
    if (!bin) throw FormatError("load_checkpoint: missing params.bin in " + dir);
    bin.seekg(0, std::ios::end);
    const std::size_t bin_size = static_cast<std::size_t>(bin.tellg());

    auto read_entry = [&](const ParamEntry& e) {
        Vec v(e.count());
        if (e.offset + v.size() * sizeof(double) > bin_size)
            throw FormatError("load_checkpoint: manifest/params.bin mismatch at " + e.name);
        bin.seekg(static_cast<std::streamoff>(e.offset));
        bin.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (!bin) throw FormatError("load_checkpoint: truncated params.bin");
        return v;
    };

    auto load_mlp = [&](const std::string& prefix) {
        MlpParams p;
        for (const auto& e : entries) {
            if (e.name.rfind(prefix + ".layer", 0) != 0) continue;
            if (e.name.size() > 7 && e.name.substr(e.name.size() - 7) == ".weight") {
                if (e.shape.size() != 2)
                    throw FormatError("load_checkpoint: weight needs 2-d shape");
                DenseLayer l;
                l.out = e.shape[0];
                l.in = e.shape[1];
                l.weight = read_entry(e);
                p.layers.push_back(std::move(l));
            } else {
                if (p.layers.empty())
                    throw FormatError("load_checkpoint: bias before weight for " + prefix);
                p.layers.back().bias = read_entry(e);
            }
        }
        return p;
    };

    m.encoder_z = load_mlp("encoder_z");
    if (m.has_u()) m.encoder_u = load_mlp("encoder_u");
    m.decoder = load_mlp("decoder");
    if (m.has_u()) {
        bool found = false;
        for (const auto& e : entries)
            if (e.name == "mu") {
                m.mu = read_entry(e)[0];
                found = true;
            }
        if (!found) throw FormatError("load_checkpoint: missing mu");
    }
    if (m.encoder_z.layers.empty() || m.decoder.layers.empty())
        throw FormatError("load_checkpoint: missing parameters");
    return m;
}

}  // namespace topocaps::io
