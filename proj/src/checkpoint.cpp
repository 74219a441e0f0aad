#include "phonosep/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

namespace phonosep {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'S', 'E', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    // host is little-endian on all supported targets
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_le<std::uint32_t>(out, (std::uint32_t)s.size());
    out.write(s.data(), (std::streamsize)s.size());
}

std::string read_string(std::istream& in) {
    std::uint32_t n = read_le<std::uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

void write_floats(std::ostream& out, const std::vector<float>& v) {
    write_le<std::uint64_t>(out, (std::uint64_t)v.size());
    out.write(reinterpret_cast<const char*>(v.data()), (std::streamsize)(v.size() * sizeof(float)));
}

std::vector<float> read_floats(std::istream& in) {
    std::uint64_t n = read_le<std::uint64_t>(in);
    std::vector<float> v((size_t)n);
    in.read(reinterpret_cast<char*>(v.data()), (std::streamsize)(n * sizeof(float)));
    return v;
}

json config_to_json(const UNet<float>& model) {
    const UNetConfig& u = model.config();
    const ConditioningConfig& c = model.conditioning();
    return json{{"depth", u.depth},
                {"base_channels", u.base_channels},
                {"input_frames", u.input_frames},
                {"input_bins", u.input_bins},
                {"kernel", u.kernel},
                {"leaky_slope", u.leaky_slope},
                {"decoder_dropout_blocks", u.decoder_dropout_blocks},
                {"dropout_rate", u.dropout_rate},
                {"conditioning", to_string(c.mode)},
                {"strong_variant", to_string(c.strong_variant)},
                {"insertion", to_string(c.insertion)}};
}

std::pair<UNetConfig, ConditioningConfig> config_from_json(const json& j) {
    UNetConfig u;
    u.depth = j.at("depth").get<int>();
    u.base_channels = j.at("base_channels").get<int>();
    u.input_frames = j.at("input_frames").get<int>();
    u.input_bins = j.at("input_bins").get<int>();
    u.kernel = j.at("kernel").get<int>();
    u.leaky_slope = j.at("leaky_slope").get<double>();
    u.decoder_dropout_blocks = j.at("decoder_dropout_blocks").get<int>();
    u.dropout_rate = j.at("dropout_rate").get<double>();
    ConditioningConfig c;
    c.mode = conditioning_mode_from_string(j.at("conditioning").get<std::string>());
    c.strong_variant = strong_variant_from_string(j.at("strong_variant").get<std::string>());
    c.insertion = insertion_from_string(j.at("insertion").get<std::string>());
    return {u, c};
}

}  // namespace

void save_model(const std::string& path, UNet<float>& model, AdamOptimizer<float>* optimizer,
                const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_le<std::uint32_t>(out, kVersion);

    write_le<std::int32_t>(out, meta.epoch);
    write_le<double>(out, meta.best_val_loss);
    write_le<double>(out, meta.lr);
    write_le<std::int64_t>(out, (std::int64_t)meta.opt_step);
    write_le<std::uint64_t>(out, PhonemeVocabulary::fingerprint());

    write_string(out, config_to_json(model).dump());

    auto params = model.parameters();
    write_le<std::uint32_t>(out, (std::uint32_t)params.size());
    for (auto& np : params) {
        write_string(out, np.name);
        write_le<std::uint8_t>(out, 0);  // dtype f32
        const Shape& s = np.tensor.shape();
        write_le<std::uint32_t>(out, (std::uint32_t)s.size());
        for (int e : s) write_le<std::uint32_t>(out, (std::uint32_t)e);
        write_floats(out, np.tensor.data());
    }

    auto bufs = model.buffers();
    write_le<std::uint32_t>(out, (std::uint32_t)bufs.size());
    for (auto& [name, vec] : bufs) {
        write_string(out, name);
        write_floats(out, *vec);
    }

    write_le<std::uint8_t>(out, optimizer ? 1 : 0);
    if (optimizer) {
        auto& slots = optimizer->slots();
        if (slots.size() != params.size())
            throw std::runtime_error("checkpoint: optimizer slots do not match parameters");
        write_le<std::int64_t>(out, (std::int64_t)optimizer->step_count());
        write_le<double>(out, optimizer->lr());
        for (auto& s : slots) {
            write_floats(out, s.m);
            write_floats(out, s.v);
        }
    }
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    std::uint32_t version = read_le<std::uint32_t>(in);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    LoadedModel lm;
    lm.meta.epoch = read_le<std::int32_t>(in);
    lm.meta.best_val_loss = read_le<double>(in);
    lm.meta.lr = read_le<double>(in);
    lm.meta.opt_step = (long)read_le<std::int64_t>(in);
    lm.meta.vocab_fingerprint = read_le<std::uint64_t>(in);
    if (lm.meta.vocab_fingerprint != PhonemeVocabulary::fingerprint())
        throw std::runtime_error("checkpoint was written with a different phoneme vocabulary");

    auto [ucfg, ccfg] = config_from_json(json::parse(read_string(in)));
    lm.model = UNet<float>(ucfg, ccfg, 0);

    auto params = lm.model.parameters();
    std::uint32_t n_params = read_le<std::uint32_t>(in);
    if (n_params != params.size())
        throw std::runtime_error("checkpoint parameter count mismatch");
    for (auto& np : params) {
        std::string name = read_string(in);
        if (name != np.name)
            throw std::runtime_error("checkpoint parameter order mismatch at " + name);
        std::uint8_t dtype = read_le<std::uint8_t>(in);
        if (dtype != 0) throw std::runtime_error("unsupported dtype in checkpoint");
        std::uint32_t ndim = read_le<std::uint32_t>(in);
        Shape s((size_t)ndim);
        for (auto& e : s) e = (int)read_le<std::uint32_t>(in);
        if (s != np.tensor.shape())
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        np.tensor.data() = read_floats(in);
    }

    auto bufs = lm.model.buffers();
    std::uint32_t n_bufs = read_le<std::uint32_t>(in);
    if (n_bufs != bufs.size()) throw std::runtime_error("checkpoint buffer count mismatch");
    for (auto& [name, vec] : bufs) {
        std::string got = read_string(in);
        if (got != name) throw std::runtime_error("checkpoint buffer order mismatch at " + got);
        *vec = read_floats(in);
    }

    std::uint8_t has_opt = read_le<std::uint8_t>(in);
    if (has_opt) {
        std::vector<Tensor<float>> ptensors;
        for (auto& np : params) ptensors.push_back(np.tensor);
        long step = (long)read_le<std::int64_t>(in);
        double lr = read_le<double>(in);
        lm.optimizer = std::make_unique<AdamOptimizer<float>>(ptensors, lr);
        lm.optimizer->set_step_count(step);
        for (auto& s : lm.optimizer->slots()) {
            s.m = read_floats(in);
            s.v = read_floats(in);
        }
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return lm;
}

void write_sidecar(const std::string& checkpoint_path, const UNet<float>& model,
                   const CheckpointMeta& meta, const std::vector<std::string>& metric_history) {
    json j;
    j["config"] = config_to_json(model);
    j["epoch"] = meta.epoch;
    j["best_val_loss"] = meta.best_val_loss;
    j["lr"] = meta.lr;
    j["vocab_fingerprint"] = PhonemeVocabulary::fingerprint();
    j["metric_history"] = metric_history;
    std::ofstream out(checkpoint_path + ".json");
    out << j.dump(2) << "\n";
}

}  // namespace phonosep
