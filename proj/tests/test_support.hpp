#pragma once

// Test-only oracles. Everything here is written with plain scalar loops and
// deliberately shares no code path with the library implementations it checks.

#include "duprg/cae.hpp"
#include "duprg/embedding_io.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace duprg::oracle {

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = g(rng);
    }
    return m;
}

inline void normalize_rows_inplace(Matrix& m) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.cols; ++k) s += m(r, k) * m(r, k);
        s = std::sqrt(s);
        for (std::size_t k = 0; k < m.cols; ++k) m(r, k) /= s;
    }
}

inline PromptTensor random_prompts(std::mt19937_64& rng, std::size_t M, std::size_t C, std::size_t d) {
    PromptTensor t;
    t.dims = d;
    for (std::size_t j = 0; j < M; ++j) t.domain_names.push_back("domain_" + std::to_string(j));
    for (std::size_t i = 0; i < C; ++i) t.class_names.push_back("class_" + std::to_string(i));
    t.prompt_template = "a {domain} photo of a {class}";
    t.data = random_matrix(rng, M * C, d);
    normalize_rows_inplace(t.data);
    return t;
}

inline double scalar_cos(const Matrix& a, std::size_t ra, const Matrix& b, std::size_t rb) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < a.cols; ++k) {
        ab += a(ra, k) * b(rb, k);
        aa += a(ra, k) * a(ra, k);
        bb += b(rb, k) * b(rb, k);
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline double ref_loss_rec(const Matrix& t, const Matrix& y) {
    double s = 0.0;
    for (std::size_t r = 0; r < t.rows; ++r) s += scalar_cos(t, r, y, r);
    return -s / static_cast<double>(t.rows);
}

inline double ref_loss_rec_l2(const Matrix& t, const Matrix& y) {
    double s = 0.0;
    for (std::size_t r = 0; r < t.rows; ++r)
        for (std::size_t k = 0; k < t.cols; ++k) s += (t(r, k) - y(r, k)) * (t(r, k) - y(r, k));
    return s / static_cast<double>(t.rows);
}

inline Matrix ref_class_means(const Matrix& y, std::size_t M, std::size_t C) {
    Matrix means(C, y.cols);
    for (std::size_t i = 0; i < C; ++i)
        for (std::size_t k = 0; k < y.cols; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < M; ++j) s += y(j * C + i, k);
            means(i, k) = s / static_cast<double>(M);
        }
    return means;
}

inline double ref_loss_intra(const Matrix& y, std::size_t M, std::size_t C) {
    const Matrix means = ref_class_means(y, M, C);
    double s = 0.0;
    for (std::size_t i = 0; i < C; ++i)
        for (std::size_t j = 0; j < M; ++j) s += scalar_cos(y, j * C + i, means, i);
    return -s / static_cast<double>(M * C);
}

// Ordered pairs, explicit double loop.
inline double ref_loss_inter(const Matrix& y, std::size_t M, std::size_t C) {
    double s = 0.0;
    for (std::size_t dom = 0; dom < M; ++dom)
        for (std::size_t j = 0; j < C; ++j)
            for (std::size_t k = 0; k < C; ++k)
                if (j != k) s += scalar_cos(y, dom * C + j, y, dom * C + k);
    return s / static_cast<double>(M * C * (C - 1));
}

inline double ref_loss_all(const Matrix& t, const Matrix& y, std::size_t M, std::size_t C, const CaeConfig& cfg) {
    const double rec = cfg.recon_loss == ReconLoss::cosine ? ref_loss_rec(t, y) : ref_loss_rec_l2(t, y);
    return rec + cfg.lambda1 * ref_loss_intra(y, M, C) + cfg.lambda2 * ref_loss_inter(y, M, C);
}

// Straight-line forward pass: four explicit layers, ReLU written inline.
inline Matrix ref_forward(const CaeModel& m, const Matrix& x) {
    auto layer = [](const Layer& l, const std::vector<double>& in, bool relu) {
        std::vector<double> out(l.weight.rows);
        for (std::size_t o = 0; o < l.weight.rows; ++o) {
            double s = l.bias[o];
            for (std::size_t c = 0; c < l.weight.cols; ++c) s += l.weight(o, c) * in[c];
            out[o] = relu ? (s > 0.0 ? s : 0.0) : s;
        }
        return out;
    };
    Matrix y(x.rows, m.dims);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::vector<double> v(x.row(r).begin(), x.row(r).end());
        v = layer(m.layers[0], v, true);
        v = layer(m.layers[1], v, true);
        v = layer(m.layers[2], v, true);
        v = layer(m.layers[3], v, false);
        for (std::size_t k = 0; k < m.dims; ++k) y(r, k) = v[k];
    }
    return y;
}

// Brute-force argmax of cosine with strict '>' so that the lowest index wins ties.
inline std::size_t ref_predict(const Matrix& reps, const std::vector<double>& image) {
    Matrix img(1, image.size());
    for (std::size_t k = 0; k < image.size(); ++k) img(0, k) = image[k];
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t c = 0; c < reps.rows; ++c) {
        const double v = scalar_cos(img, 0, reps, c);
        if (v > best_cos) {
            best_cos = v;
            best = c;
        }
    }
    return best;
}

inline double ref_accuracy(const Matrix& reps, const ImageSet& images) {
    std::size_t correct = 0;
    for (std::size_t n = 0; n < images.size(); ++n) {
        std::vector<double> img(images.data.row(n).begin(), images.data.row(n).end());
        if (ref_predict(reps, img) == images.labels[n]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(images.size());
}

} // namespace duprg::oracle
