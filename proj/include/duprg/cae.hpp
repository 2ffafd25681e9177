#pragma once

// Cosine autoencoder: d -> hidden -> latent -> hidden -> d, ReLU after the
// first three linear layers, identity output. Trained full-batch with AdamW on
//   L_all = L_rec + lambda1 * L_intra + lambda2 * L_inter
// where all three terms are cosine-based and computed on the reconstructions.

#include "duprg/adamw.hpp"
#include "duprg/embedding_io.hpp"
#include "duprg/matrix.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace duprg {

enum class ReconLoss { cosine, l2 };

const char* to_string(ReconLoss kind) noexcept;
ReconLoss recon_loss_from_string(const std::string& s);

struct CaeConfig {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lr = 0.04;
    std::size_t epochs = 1000;
    std::uint64_t seed = 0;
    ReconLoss recon_loss = ReconLoss::cosine;
    std::size_t hidden = 0; ///< 0: same as the input dimension (512 for d = 512)
    std::size_t latent = 0; ///< 0: half the input dimension (256 for d = 512)
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    std::size_t hidden_for(std::size_t dims) const noexcept { return hidden ? hidden : dims; }
    std::size_t latent_for(std::size_t dims) const noexcept { return latent ? latent : std::max<std::size_t>(1, dims / 2); }

    friend bool operator==(const CaeConfig&, const CaeConfig&) = default;
};

void validate(const CaeConfig& cfg);

struct Layer {
    Matrix weight; ///< out x in
    std::vector<double> bias;

    friend bool operator==(const Layer&, const Layer&) = default;
};

inline constexpr std::size_t kCaeLayers = 4;
using LayerStack = std::array<Layer, kCaeLayers>;

struct CaeModel {
    std::size_t dims = 0;
    std::size_t hidden = 0;
    std::size_t latent = 0;
    LayerStack layers;
    CaeConfig config; ///< hidden/latent resolved

    friend bool operator==(const CaeModel&, const CaeModel&) = default;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, seeded by cfg.seed.
CaeModel init_model(std::size_t dims, const CaeConfig& cfg);

/// All-zero stack with the model's shapes; used for gradients.
LayerStack zeros_like(const CaeModel& model);

bool all_finite(const LayerStack& layers);

struct ForwardCache {
    std::array<Matrix, kCaeLayers> pre;     ///< pre-activations; pre[3] is the output
    std::array<Matrix, kCaeLayers - 1> act; ///< ReLU outputs of layers 0..2

    const Matrix& output() const noexcept { return pre[kCaeLayers - 1]; }
};

ForwardCache forward_cached(const CaeModel& model, const Matrix& rows);

/// Maps every row through encoder and decoder independently.
Matrix forward(const CaeModel& model, const Matrix& rows);
Matrix forward(const CaeModel& model, const PromptTensor& t);

/// Accumulates parameter gradients for dLoss/dOutput = `grad_output`. `grads` is overwritten.
void backward(const CaeModel& model, const Matrix& rows, const ForwardCache& cache, const Matrix& grad_output,
              LayerStack& grads);

// ---- losses over a domain-major (M*C) x d reconstruction matrix ---------------

struct LossBreakdown {
    double all = 0.0;
    double rec = 0.0;
    double intra = 0.0;
    double inter = 0.0;
};

/// Cosine: -(1/MC) sum cos(T, T_hat). L2: (1/MC) sum |T - T_hat|^2.
double loss_rec(const Matrix& target, const Matrix& recon, ReconLoss kind = ReconLoss::cosine);

/// Per-class mean over the M domain rows; C x d.
Matrix class_means(const Matrix& recon, std::size_t domains, std::size_t classes);

/// -(1/MC) sum_{i,j} cos(T_hat_i^j, mean_i)
double loss_intra(const Matrix& recon, const Matrix& means, std::size_t domains, std::size_t classes);

/// (1/(M C (C-1))) sum over domains and ordered class pairs j != k of cos(T_hat_j, T_hat_k).
double loss_inter(const Matrix& recon, std::size_t domains, std::size_t classes);

double combine_losses(double rec, double intra, double inter, double lambda1, double lambda2) noexcept;

LossBreakdown loss_all(const Matrix& target, const Matrix& recon, std::size_t domains, std::size_t classes,
                       const CaeConfig& cfg);

/// Same value as loss_all plus dL_all/d(recon) written to `grad` (resized).
/// The class means used by the intra-class term are differentiated through.
LossBreakdown loss_all_grad(const Matrix& target, const Matrix& recon, std::size_t domains, std::size_t classes,
                            const CaeConfig& cfg, Matrix& grad);

/// Loss and gradients with respect to every parameter of `model`.
LossBreakdown loss_and_gradients(const CaeModel& model, const PromptTensor& t, const CaeConfig& cfg,
                                 LayerStack& grads);

// ---- training ------------------------------------------------------------------

struct TrainReport {
    std::vector<double> rec;
    std::vector<double> intra;
    std::vector<double> inter;
    std::vector<double> all;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    LossBreakdown final_losses; ///< evaluated after the last update

    std::string to_csv() const;
};

struct TrainResult {
    CaeModel model;
    TrainReport report;
};

/// Full-batch AdamW training on the prompt tensor. Throws NumericError naming the
/// epoch if a loss or parameter becomes non-finite.
TrainResult train(const PromptTensor& t, const CaeConfig& cfg,
                  const std::function<void(std::size_t, const LossBreakdown&)>& on_epoch = {});

// ---- checkpoint ----------------------------------------------------------------

std::string encode_checkpoint(const CaeModel& model);
CaeModel decode_checkpoint(const std::string& bytes);
void write_checkpoint(const CaeModel& model, const std::filesystem::path& path);
CaeModel read_checkpoint(const std::filesystem::path& path);

std::string config_to_json(const CaeConfig& cfg);
/// Fields absent from `text` keep the values already in `base`.
CaeConfig config_from_json(const std::string& text, CaeConfig base = {});

} // namespace duprg
