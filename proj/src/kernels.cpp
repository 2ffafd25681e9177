#include "duprg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace duprg::kernels {

namespace {
using idx = std::ptrdiff_t;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// The loops below keep the reference summation order for every output element but
// put the innermost loop over independent outputs, so it vectorizes without
// reassociating any sum. Rows are processed in blocks so each weight row is reused
// from cache.

constexpr idx kBlock = 8;

void linear_forward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out) {
    const idx n = static_cast<idx>(in.rows);
    const idx m = static_cast<idx>(weight.rows);
    const idx k = static_cast<idx>(in.cols);
    out.rows = in.rows;
    out.cols = weight.rows;
    out.data.assign(in.rows * weight.rows, 0.0);

    std::vector<double> wt(static_cast<std::size_t>(m * k));
    for (idx o = 0; o < m; ++o)
        for (idx c = 0; c < k; ++c) wt[c * m + o] = weight.data[o * k + c];

    const double* x = in.data.data();
    const double* w = wt.data();
    const double* b = bias.data();
    double* y = out.data.data();
    const idx blocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static) if (n * m * k > 32768)
    for (idx blk = 0; blk < blocks; ++blk) {
        const idx r0 = blk * kBlock;
        const idx r1 = std::min(n, r0 + kBlock);
        for (idx r = r0; r < r1; ++r)
            for (idx o = 0; o < m; ++o) y[r * m + o] = b[o];
        for (idx c = 0; c < k; ++c) {
            const double* wc = w + c * m;
            for (idx r = r0; r < r1; ++r) {
                const double a = x[r * k + c];
                double* yr = y + r * m;
                for (idx o = 0; o < m; ++o) yr[o] += a * wc[o];
            }
        }
    }
}

void linear_backward_params(const Matrix& grad_out, const Matrix& in, Matrix& grad_weight,
                            std::span<double> grad_bias) {
    const idx n = static_cast<idx>(grad_out.rows);
    const idx m = static_cast<idx>(grad_out.cols);
    const idx k = static_cast<idx>(in.cols);
    const double* g = grad_out.data.data();
    const double* x = in.data.data();
    double* gw = grad_weight.data.data();
    double* gb = grad_bias.data();
    const idx blocks = (m + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static) if (n * m * k > 32768)
    for (idx blk = 0; blk < blocks; ++blk) {
        const idx o0 = blk * kBlock;
        const idx o1 = std::min(m, o0 + kBlock);
        for (idx o = o0; o < o1; ++o) {
            gb[o] = 0.0;
            for (idx c = 0; c < k; ++c) gw[o * k + c] = 0.0;
        }
        for (idx r = 0; r < n; ++r) {
            const double* xr = x + r * k;
            for (idx o = o0; o < o1; ++o) {
                const double a = g[r * m + o];
                gb[o] += a;
                double* gwo = gw + o * k;
                for (idx c = 0; c < k; ++c) gwo[c] += a * xr[c];
            }
        }
    }
}

void linear_backward_input(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in) {
    const idx n = static_cast<idx>(grad_out.rows);
    const idx m = static_cast<idx>(grad_out.cols);
    const idx k = static_cast<idx>(weight.cols);
    grad_in.rows = grad_out.rows;
    grad_in.cols = weight.cols;
    grad_in.data.assign(grad_out.rows * weight.cols, 0.0);
    const double* g = grad_out.data.data();
    const double* w = weight.data.data();
    double* gx = grad_in.data.data();
    const idx blocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static) if (n * m * k > 32768)
    for (idx blk = 0; blk < blocks; ++blk) {
        const idx r0 = blk * kBlock;
        const idx r1 = std::min(n, r0 + kBlock);
        for (idx o = 0; o < m; ++o) {
            const double* wo = w + o * k;
            for (idx r = r0; r < r1; ++r) {
                const double a = g[r * m + o];
                double* gxr = gx + r * k;
                for (idx c = 0; c < k; ++c) gxr[c] += a * wo[c];
            }
        }
    }
}

void relu(const Matrix& pre, Matrix& act) {
    act.rows = pre.rows;
    act.cols = pre.cols;
    act.data.resize(pre.data.size());
    const idx total = static_cast<idx>(pre.data.size());
#pragma omp parallel for schedule(static) if (total > 65536)
    for (idx i = 0; i < total; ++i) {
        act.data[i] = pre.data[i] > 0.0 ? pre.data[i] : 0.0;
    }
}

void relu_backward(const Matrix& pre, Matrix& grad) {
    const idx total = static_cast<idx>(pre.data.size());
#pragma omp parallel for schedule(static) if (total > 65536)
    for (idx i = 0; i < total; ++i) {
        if (!(pre.data[i] > 0.0)) {
            grad.data[i] = 0.0;
        }
    }
}

std::vector<std::size_t> argmax_cosine(const Matrix& queries, const Matrix& reps,
                                       std::span<const double> rep_norms) {
    std::vector<std::size_t> out(queries.rows, 0);
    const idx nq = static_cast<idx>(queries.rows);
    const idx nc = static_cast<idx>(reps.rows);
    const idx d = static_cast<idx>(reps.cols);
    const double* r = reps.data.data();
#pragma omp parallel for schedule(static) if (nq * nc * d > 32768)
    for (idx q = 0; q < nq; ++q) {
        const double* x = queries.data.data() + q * d;
        const double nx = norm(queries.row(static_cast<std::size_t>(q)));
        std::vector<double> scores(static_cast<std::size_t>(nc));
        // Four independent dot products at a time; each is still summed in index order.
        idx c = 0;
        for (; c + 4 <= nc; c += 4) {
            const double *r0 = r + c * d, *r1 = r0 + d, *r2 = r1 + d, *r3 = r2 + d;
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (idx k = 0; k < d; ++k) {
                s0 += x[k] * r0[k];
                s1 += x[k] * r1[k];
                s2 += x[k] * r2[k];
                s3 += x[k] * r3[k];
            }
            scores[c] = s0;
            scores[c + 1] = s1;
            scores[c + 2] = s2;
            scores[c + 3] = s3;
        }
        for (; c < nc; ++c) {
            const double* rc = r + c * d;
            double s = 0.0;
            for (idx k = 0; k < d; ++k) s += x[k] * rc[k];
            scores[c] = s;
        }
        double best = -INFINITY;
        std::size_t best_idx = 0;
        for (idx i = 0; i < nc; ++i) {
            const double score = scores[i] / (nx * rep_norms[i]);
            if (score > best) {
                best = score;
                best_idx = static_cast<std::size_t>(i);
            }
        }
        out[static_cast<std::size_t>(q)] = best_idx;
    }
    return out;
}

} // namespace duprg::kernels
