#include "duprg/cae.hpp"

#include "duprg/errors.hpp"
#include "duprg/kernels.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace duprg {

const char* to_string(ReconLoss kind) noexcept {
    return kind == ReconLoss::cosine ? "cosine" : "l2";
}

ReconLoss recon_loss_from_string(const std::string& s) {
    if (s == "cosine") {
        return ReconLoss::cosine;
    }
    if (s == "l2") {
        return ReconLoss::l2;
    }
    throw ValidationError("recon_loss must be 'cosine' or 'l2', got '" + s + "'");
}

void validate(const CaeConfig& cfg) {
    auto bad = [](const std::string& msg) { throw ValidationError("cae config: " + msg); };
    if (!(cfg.lambda1 >= 0.0) || !std::isfinite(cfg.lambda1)) bad("lambda1 must be finite and >= 0");
    if (!(cfg.lambda2 >= 0.0) || !std::isfinite(cfg.lambda2)) bad("lambda2 must be finite and >= 0");
    if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) bad("lr must be finite and > 0");
    if (cfg.epochs == 0) bad("epochs must be > 0");
    if (!(cfg.weight_decay >= 0.0) || !std::isfinite(cfg.weight_decay)) bad("weight_decay must be >= 0");
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) bad("beta1 must be in [0, 1)");
    if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) bad("beta2 must be in [0, 1)");
    if (!(cfg.epsilon > 0.0)) bad("epsilon must be > 0");
}

CaeModel init_model(std::size_t dims, const CaeConfig& cfg) {
    validate(cfg);
    if (dims < 1) {
        throw ValidationError("cae: input dimension must be >= 1");
    }
    CaeModel model;
    model.dims = dims;
    model.hidden = cfg.hidden_for(dims);
    model.latent = cfg.latent_for(dims);
    model.config = cfg;
    model.config.hidden = model.hidden;
    model.config.latent = model.latent;

    const std::array<std::size_t, kCaeLayers + 1> widths = {dims, model.hidden, model.latent, model.hidden, dims};
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t l = 0; l < kCaeLayers; ++l) {
        const std::size_t fan_in = widths[l];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Layer& layer = model.layers[l];
        layer.weight = Matrix(widths[l + 1], fan_in);
        for (double& w : layer.weight.data) {
            w = dist(rng);
        }
        layer.bias.assign(widths[l + 1], 0.0);
    }
    return model;
}

LayerStack zeros_like(const CaeModel& model) {
    LayerStack out;
    for (std::size_t l = 0; l < kCaeLayers; ++l) {
        out[l].weight = Matrix(model.layers[l].weight.rows, model.layers[l].weight.cols);
        out[l].bias.assign(model.layers[l].bias.size(), 0.0);
    }
    return out;
}

bool all_finite(const LayerStack& layers) {
    for (const auto& l : layers) {
        if (!all_finite(l.weight.data) || !all_finite(l.bias)) {
            return false;
        }
    }
    return true;
}

ForwardCache forward_cached(const CaeModel& model, const Matrix& rows) {
    if (rows.cols != model.dims) {
        throw DimensionError("cae forward: input has d=" + std::to_string(rows.cols) + ", model expects d=" +
                             std::to_string(model.dims));
    }
    ForwardCache cache;
    const Matrix* in = &rows;
    for (std::size_t l = 0; l < kCaeLayers; ++l) {
        kernels::linear_forward(*in, model.layers[l].weight, model.layers[l].bias, cache.pre[l]);
        if (l + 1 < kCaeLayers) {
            kernels::relu(cache.pre[l], cache.act[l]);
            in = &cache.act[l];
        }
    }
    return cache;
}

Matrix forward(const CaeModel& model, const Matrix& rows) {
    return std::move(forward_cached(model, rows).pre[kCaeLayers - 1]);
}

Matrix forward(const CaeModel& model, const PromptTensor& t) {
    if (t.dims != model.dims) {
        throw DimensionError("cae forward: prompt tensor has d=" + std::to_string(t.dims) + ", model expects d=" +
                             std::to_string(model.dims));
    }
    return forward(model, t.data);
}

void backward(const CaeModel& model, const Matrix& rows, const ForwardCache& cache, const Matrix& grad_output,
              LayerStack& grads) {
    grads = zeros_like(model);
    Matrix grad = grad_output;
    Matrix grad_in;
    for (std::size_t l = kCaeLayers; l-- > 0;) {
        const Matrix& input = l == 0 ? rows : cache.act[l - 1];
        kernels::linear_backward_params(grad, input, grads[l].weight, grads[l].bias);
        if (l == 0) {
            break;
        }
        kernels::linear_backward_input(grad, model.layers[l].weight, grad_in);
        kernels::relu_backward(cache.pre[l - 1], grad_in);
        std::swap(grad, grad_in);
    }
}

LossBreakdown loss_and_gradients(const CaeModel& model, const PromptTensor& t, const CaeConfig& cfg,
                                 LayerStack& grads) {
    const ForwardCache cache = forward_cached(model, t.data);
    Matrix grad_out;
    const LossBreakdown losses = loss_all_grad(t.data, cache.output(), t.domains(), t.classes(), cfg, grad_out);
    backward(model, t.data, cache, grad_out, grads);
    return losses;
}

namespace {

bool finite(const LossBreakdown& l) {
    return std::isfinite(l.all) && std::isfinite(l.rec) && std::isfinite(l.intra) && std::isfinite(l.inter);
}

std::vector<std::span<double>> parameter_spans(LayerStack& layers) {
    std::vector<std::span<double>> out;
    for (auto& l : layers) {
        out.emplace_back(l.weight.data);
        out.emplace_back(l.bias);
    }
    return out;
}

std::vector<std::span<const double>> gradient_spans(const LayerStack& layers) {
    std::vector<std::span<const double>> out;
    for (const auto& l : layers) {
        out.emplace_back(l.weight.data);
        out.emplace_back(l.bias);
    }
    return out;
}

} // namespace

TrainResult train(const PromptTensor& t, const CaeConfig& cfg,
                  const std::function<void(std::size_t, const LossBreakdown&)>& on_epoch) {
    validate(t);
    validate(cfg);
    if (cfg.lambda2 > 0.0 && t.classes() < 2) {
        throw ValidationError("inter-class loss needs at least two classes");
    }

    TrainResult result{init_model(t.dims, cfg), {}};
    CaeModel& model = result.model;
    TrainReport& report = result.report;
    report.seed = cfg.seed;
    report.rec.reserve(cfg.epochs);
    report.intra.reserve(cfg.epochs);
    report.inter.reserve(cfg.epochs);
    report.all.reserve(cfg.epochs);

    AdamW optimizer({cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.weight_decay});
    LayerStack grads;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        LossBreakdown losses;
        try {
            losses = loss_and_gradients(model, t, cfg, grads);
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!finite(losses)) {
            throw NumericError("epoch " + std::to_string(epoch) + ": loss became non-finite");
        }
        if (!all_finite(grads)) {
            throw NumericError("epoch " + std::to_string(epoch) + ": gradient became non-finite");
        }
        report.rec.push_back(losses.rec);
        report.intra.push_back(losses.intra);
        report.inter.push_back(losses.inter);
        report.all.push_back(losses.all);
        if (on_epoch) {
            on_epoch(epoch, losses);
        }

        const auto params = parameter_spans(model.layers);
        const auto gspans = gradient_spans(grads);
        optimizer.step(params, gspans);
        if (!all_finite(model.layers)) {
            throw NumericError("epoch " + std::to_string(epoch) + ": parameters became non-finite");
        }
    }
    report.epochs = cfg.epochs;
    report.final_losses = loss_all(t.data, forward(model, t.data), t.domains(), t.classes(), cfg);
    if (!finite(report.final_losses)) {
        throw NumericError("epoch " + std::to_string(cfg.epochs) + ": final loss is non-finite");
    }
    return result;
}

std::string TrainReport::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,L_rec,L_intra,L_inter,L_all\n";
    for (std::size_t e = 0; e < all.size(); ++e) {
        out << e << ',' << rec[e] << ',' << intra[e] << ',' << inter[e] << ',' << all[e] << '\n';
    }
    return out.str();
}

} // namespace duprg
