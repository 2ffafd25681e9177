#include "duprg/atomic_file.hpp"
#include "duprg/cae.hpp"
#include "duprg/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

// DUPC checkpoint, little-endian:
//   "DUPC", u32 version, u32 d, u32 hidden, u32 latent,
//   float64 blocks W1 b1 W2 b2 W3 b3 W4 b4 (row-major, weights out x in),
//   u32 JSON length, JSON config.

namespace duprg {

namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'D', 'U', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) {
        out.push_back(static_cast<char>((v >> s) & 0xffu));
    }
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) {
        out.push_back(static_cast<char>((bits >> s) & 0xffu));
    }
}

class Cursor {
public:
    explicit Cursor(const std::string& b) : b_(b) {}
    void need(std::size_t n, const char* what) const {
        if (b_.size() - pos_ < n) {
            throw FormatError(FormatErrc::truncated, std::string("checkpoint ") + what);
        }
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int s = 0; s < 32; s += 8) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_++])) << s;
        }
        return v;
    }
    double f64() {
        std::uint64_t v = 0;
        for (int s = 0; s < 64; s += 8) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_++])) << s;
        }
        return std::bit_cast<double>(v);
    }
    void f64_block(std::span<double> out, const char* what) {
        need(out.size() * 8, what);
        for (double& v : out) {
            v = f64();
        }
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return b_.size() - pos_; }

private:
    const std::string& b_;
    std::size_t pos_ = 0;
};

} // namespace

std::string config_to_json(const CaeConfig& cfg) {
    const json j = {{"lambda1", cfg.lambda1},     {"lambda2", cfg.lambda2},
                    {"lr", cfg.lr},               {"epochs", cfg.epochs},
                    {"seed", cfg.seed},           {"recon_loss", to_string(cfg.recon_loss)},
                    {"hidden", cfg.hidden},       {"latent", cfg.latent},
                    {"weight_decay", cfg.weight_decay}, {"beta1", cfg.beta1},
                    {"beta2", cfg.beta2},         {"epsilon", cfg.epsilon}};
    return j.dump();
}

CaeConfig config_from_json(const std::string& text, CaeConfig base) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ValidationError("config is not a JSON object");
    }
    auto number = [&](const char* key, double& field) {
        if (j.contains(key)) {
            if (!j.at(key).is_number()) {
                throw ValidationError(std::string("config: \"") + key + "\" must be a number");
            }
            field = j.at(key).get<double>();
        }
    };
    auto count = [&](const char* key, auto& field) {
        if (j.contains(key)) {
            if (!j.at(key).is_number_unsigned()) {
                throw ValidationError(std::string("config: \"") + key + "\" must be a non-negative integer");
            }
            field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
        }
    };
    number("lambda1", base.lambda1);
    number("lambda2", base.lambda2);
    number("lr", base.lr);
    count("epochs", base.epochs);
    count("seed", base.seed);
    count("hidden", base.hidden);
    count("latent", base.latent);
    number("weight_decay", base.weight_decay);
    number("beta1", base.beta1);
    number("beta2", base.beta2);
    number("epsilon", base.epsilon);
    if (j.contains("recon_loss")) {
        if (!j.at("recon_loss").is_string()) {
            throw ValidationError("config: \"recon_loss\" must be a string");
        }
        base.recon_loss = recon_loss_from_string(j.at("recon_loss").get<std::string>());
    }
    return base;
}

std::string encode_checkpoint(const CaeModel& model) {
    if (!all_finite(model.layers)) {
        throw NumericError("refusing to write a checkpoint with non-finite parameters");
    }
    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(model.dims));
    put_u32(out, static_cast<std::uint32_t>(model.hidden));
    put_u32(out, static_cast<std::uint32_t>(model.latent));
    for (const auto& layer : model.layers) {
        for (double v : layer.weight.data) put_f64(out, v);
        for (double v : layer.bias) put_f64(out, v);
    }
    const std::string cfg = config_to_json(model.config);
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;
    return out;
}

CaeModel decode_checkpoint(const std::string& bytes) {
    Cursor c(bytes);
    const std::string magic = c.str(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) {
        throw FormatError(FormatErrc::bad_magic, "expected \"DUPC\"");
    }
    const std::uint32_t version = c.u32("version");
    if (version != kVersion) {
        throw FormatError(FormatErrc::unsupported_version, "checkpoint version " + std::to_string(version));
    }
    CaeModel model;
    model.dims = c.u32("d");
    model.hidden = c.u32("hidden");
    model.latent = c.u32("latent");
    if (model.dims == 0 || model.hidden == 0 || model.latent == 0) {
        throw FormatError(FormatErrc::bad_dims, "checkpoint layer widths must be positive");
    }
    const std::array<std::size_t, kCaeLayers + 1> widths = {model.dims, model.hidden, model.latent, model.hidden,
                                                           model.dims};
    for (std::size_t l = 0; l < kCaeLayers; ++l) {
        model.layers[l].weight = Matrix(widths[l + 1], widths[l]);
        model.layers[l].bias.assign(widths[l + 1], 0.0);
        c.f64_block(model.layers[l].weight.data, "weights");
        c.f64_block(model.layers[l].bias, "biases");
    }
    if (!all_finite(model.layers)) {
        throw FormatError(FormatErrc::non_finite, "checkpoint parameters");
    }
    const std::uint32_t len = c.u32("config length");
    const std::string cfg = c.str(len, "config");
    if (c.remaining() != 0) {
        throw FormatError(FormatErrc::trailing_data, "bytes after checkpoint config");
    }
    try {
        model.config = config_from_json(cfg);
    } catch (const ValidationError& e) {
        throw FormatError(FormatErrc::bad_metadata, e.what());
    }
    return model;
}

void write_checkpoint(const CaeModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(model));
}

CaeModel read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

} // namespace duprg
