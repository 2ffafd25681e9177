#include "duprg/kernels.hpp"

#include <cmath>

namespace duprg::kernels::reference {

void linear_forward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out) {
    const std::size_t n = in.rows;
    const std::size_t m = weight.rows;
    const std::size_t k = in.cols;
    out.rows = n;
    out.cols = m;
    out.data.assign(n * m, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t o = 0; o < m; ++o) {
            double s = bias[o];
            for (std::size_t c = 0; c < k; ++c) {
                s += in.data[r * k + c] * weight.data[o * k + c];
            }
            out.data[r * m + o] = s;
        }
    }
}

void linear_backward_params(const Matrix& grad_out, const Matrix& in, Matrix& grad_weight,
                            std::span<double> grad_bias) {
    const std::size_t n = grad_out.rows;
    const std::size_t m = grad_out.cols;
    const std::size_t k = in.cols;
    for (std::size_t o = 0; o < m; ++o) {
        double sb = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            sb += grad_out.data[r * m + o];
        }
        grad_bias[o] = sb;
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                s += grad_out.data[r * m + o] * in.data[r * k + c];
            }
            grad_weight.data[o * k + c] = s;
        }
    }
}

void linear_backward_input(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in) {
    const std::size_t n = grad_out.rows;
    const std::size_t m = grad_out.cols;
    const std::size_t k = weight.cols;
    grad_in.rows = n;
    grad_in.cols = k;
    grad_in.data.assign(n * k, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t o = 0; o < m; ++o) {
                s += grad_out.data[r * m + o] * weight.data[o * k + c];
            }
            grad_in.data[r * k + c] = s;
        }
    }
}

void relu(const Matrix& pre, Matrix& act) {
    act.rows = pre.rows;
    act.cols = pre.cols;
    act.data.resize(pre.data.size());
    for (std::size_t i = 0; i < pre.data.size(); ++i) {
        act.data[i] = pre.data[i] > 0.0 ? pre.data[i] : 0.0;
    }
}

void relu_backward(const Matrix& pre, Matrix& grad) {
    for (std::size_t i = 0; i < pre.data.size(); ++i) {
        if (!(pre.data[i] > 0.0)) {
            grad.data[i] = 0.0;
        }
    }
}

std::vector<std::size_t> argmax_cosine(const Matrix& queries, const Matrix& reps,
                                       std::span<const double> rep_norms) {
    std::vector<std::size_t> out(queries.rows, 0);
    for (std::size_t q = 0; q < queries.rows; ++q) {
        const auto x = queries.row(q);
        const double nx = norm(x);
        double best = -INFINITY;
        std::size_t best_idx = 0;
        for (std::size_t c = 0; c < reps.rows; ++c) {
            const double score = dot(x, reps.row(c)) / (nx * rep_norms[c]);
            if (score > best) {
                best = score;
                best_idx = c;
            }
        }
        out[q] = best_idx;
    }
    return out;
}

} // namespace duprg::kernels::reference
