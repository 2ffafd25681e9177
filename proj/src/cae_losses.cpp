#include "duprg/cae.hpp"

#include "duprg/errors.hpp"

#include <cmath>

namespace duprg {

namespace {

void check_layout(const Matrix& recon, std::size_t domains, std::size_t classes, const char* who) {
    if (domains == 0 || classes == 0 || recon.rows != domains * classes) {
        throw DimensionError(std::string(who) + ": reconstruction has " + std::to_string(recon.rows) +
                             " rows, expected M*C = " + std::to_string(domains) + "*" + std::to_string(classes));
    }
}

std::string row_label(std::size_t r, std::size_t classes) {
    return "row " + std::to_string(r) + " (domain " + std::to_string(r / classes) + ", class " +
           std::to_string(r % classes) + ")";
}

// Euclidean norm of every row; throws if any row is zero.
std::vector<double> row_norms(const Matrix& m, std::size_t classes, const char* what) {
    std::vector<double> out(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        out[r] = norm(m.row(r));
        if (out[r] == 0.0) {
            throw NumericError(std::string(what) + ": zero-norm " + row_label(r, classes) +
                               ", cosine undefined");
        }
    }
    return out;
}

// grad += scale * d cos(u, v) / du  with  d cos / du = (v/|v| - cos * u/|u|) / |u|
void add_cos_grad(std::span<double> grad, std::span<const double> u, double nu, std::span<const double> v,
                  double nv, double cos, double scale) {
    const double a = scale / (nu * nv);
    const double b = scale * cos / (nu * nu);
    for (std::size_t k = 0; k < grad.size(); ++k) {
        grad[k] += a * v[k] - b * u[k];
    }
}

double rec_value(const Matrix& target, const Matrix& recon, ReconLoss kind) {
    if (target.rows != recon.rows || target.cols != recon.cols) {
        throw DimensionError("loss_rec: target and reconstruction shapes differ");
    }
    if (recon.rows == 0) {
        throw DimensionError("loss_rec: empty input");
    }
    const double n = static_cast<double>(recon.rows);
    double sum = 0.0;
    if (kind == ReconLoss::l2) {
        for (std::size_t i = 0; i < recon.data.size(); ++i) {
            const double diff = target.data[i] - recon.data[i];
            sum += diff * diff;
        }
        return sum / n;
    }
    for (std::size_t r = 0; r < recon.rows; ++r) {
        const double c = cosine(target.row(r), recon.row(r));
        if (std::isnan(c)) {
            throw NumericError("loss_rec: zero-norm reconstruction row " + std::to_string(r) + ", cosine undefined");
        }
        sum += c;
    }
    return -sum / n;
}

} // namespace

double loss_rec(const Matrix& target, const Matrix& recon, ReconLoss kind) {
    return rec_value(target, recon, kind);
}

Matrix class_means(const Matrix& recon, std::size_t domains, std::size_t classes) {
    check_layout(recon, domains, classes, "class_means");
    Matrix means(classes, recon.cols);
    for (std::size_t i = 0; i < classes; ++i) {
        auto mean = means.row(i);
        for (std::size_t j = 0; j < domains; ++j) {
            const auto row = recon.row(j * classes + i);
            for (std::size_t k = 0; k < mean.size(); ++k) {
                mean[k] += row[k];
            }
        }
        for (double& v : mean) {
            v /= static_cast<double>(domains);
        }
    }
    return means;
}

double loss_intra(const Matrix& recon, const Matrix& means, std::size_t domains, std::size_t classes) {
    check_layout(recon, domains, classes, "loss_intra");
    if (means.rows != classes || means.cols != recon.cols) {
        throw DimensionError("loss_intra: class means have the wrong shape");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
        if (norm(means.row(i)) == 0.0) {
            throw NumericError("loss_intra: class " + std::to_string(i) + " has a zero mean (degenerate class)");
        }
        for (std::size_t j = 0; j < domains; ++j) {
            const std::size_t r = j * classes + i;
            const double c = cosine(recon.row(r), means.row(i));
            if (std::isnan(c)) {
                throw NumericError("loss_intra: zero-norm reconstruction " + row_label(r, classes));
            }
            sum += c;
        }
    }
    return -sum / static_cast<double>(domains * classes);
}

double loss_inter(const Matrix& recon, std::size_t domains, std::size_t classes) {
    check_layout(recon, domains, classes, "loss_inter");
    if (classes < 2) {
        throw ValidationError("loss_inter: needs C >= 2");
    }
    const std::vector<double> norms = row_norms(recon, classes, "loss_inter");
    // For unit rows u_1..u_C with S = sum u_k:  sum_{j != k} <u_j, u_k> = sum_j <u_j, S - u_j>.
    std::vector<double> s(recon.cols);
    double sum = 0.0;
    for (std::size_t dom = 0; dom < domains; ++dom) {
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t i = 0; i < classes; ++i) {
            const std::size_t r = dom * classes + i;
            const auto row = recon.row(r);
            for (std::size_t k = 0; k < s.size(); ++k) {
                s[k] += row[k] / norms[r];
            }
        }
        for (std::size_t i = 0; i < classes; ++i) {
            const std::size_t r = dom * classes + i;
            const auto row = recon.row(r);
            double self = 0.0;
            double cross = 0.0;
            for (std::size_t k = 0; k < s.size(); ++k) {
                const double u = row[k] / norms[r];
                cross += u * s[k];
                self += u * u;
            }
            sum += cross - self;
        }
    }
    return sum / static_cast<double>(domains * classes * (classes - 1));
}

double combine_losses(double rec, double intra, double inter, double lambda1, double lambda2) noexcept {
    return rec + lambda1 * intra + lambda2 * inter;
}

LossBreakdown loss_all(const Matrix& target, const Matrix& recon, std::size_t domains, std::size_t classes,
                       const CaeConfig& cfg) {
    check_layout(recon, domains, classes, "loss_all");
    LossBreakdown out;
    out.rec = loss_rec(target, recon, cfg.recon_loss);
    out.intra = loss_intra(recon, class_means(recon, domains, classes), domains, classes);
    out.inter = classes >= 2 ? loss_inter(recon, domains, classes) : 0.0;
    out.all = combine_losses(out.rec, out.intra, out.inter, cfg.lambda1, cfg.lambda2);
    return out;
}

LossBreakdown loss_all_grad(const Matrix& target, const Matrix& recon, std::size_t domains, std::size_t classes,
                            const CaeConfig& cfg, Matrix& grad) {
    const LossBreakdown out = loss_all(target, recon, domains, classes, cfg);
    const std::size_t n = recon.rows;
    const std::size_t d = recon.cols;
    const double inv_n = 1.0 / static_cast<double>(n);
    grad = Matrix(n, d);

    if (cfg.recon_loss == ReconLoss::l2) {
        for (std::size_t i = 0; i < recon.data.size(); ++i) {
            grad.data[i] = 2.0 * inv_n * (recon.data[i] - target.data[i]);
        }
    } else {
        for (std::size_t r = 0; r < n; ++r) {
            const auto y = recon.row(r);
            const auto t = target.row(r);
            const double ny = norm(y);
            const double nt = norm(t);
            add_cos_grad(grad.row(r), y, ny, t, nt, dot(y, t) / (ny * nt), -inv_n);
        }
    }

    if (cfg.lambda1 != 0.0) {
        const Matrix means = class_means(recon, domains, classes);
        Matrix grad_means(classes, d);
        const double scale = -cfg.lambda1 * inv_n;
        for (std::size_t i = 0; i < classes; ++i) {
            const auto m = means.row(i);
            const double nm = norm(m);
            for (std::size_t j = 0; j < domains; ++j) {
                const std::size_t r = j * classes + i;
                const auto y = recon.row(r);
                const double ny = norm(y);
                const double c = dot(y, m) / (ny * nm);
                add_cos_grad(grad.row(r), y, ny, m, nm, c, scale);
                add_cos_grad(grad_means.row(i), m, nm, y, ny, c, scale);
            }
        }
        const double inv_m = 1.0 / static_cast<double>(domains);
        for (std::size_t j = 0; j < domains; ++j) {
            for (std::size_t i = 0; i < classes; ++i) {
                auto g = grad.row(j * classes + i);
                const auto gm = grad_means.row(i);
                for (std::size_t k = 0; k < d; ++k) {
                    g[k] += gm[k] * inv_m;
                }
            }
        }
    }

    if (cfg.lambda2 != 0.0 && classes >= 2) {
        // d/du_j of sum_{j != k} cos = 2 (S - <u_j, S> u_j) / |y_j| with u = y / |y|, S = sum_k u_k.
        const double scale =
            2.0 * cfg.lambda2 / static_cast<double>(domains * classes * (classes - 1));
        std::vector<double> s(d);
        std::vector<double> u(d);
        for (std::size_t dom = 0; dom < domains; ++dom) {
            std::fill(s.begin(), s.end(), 0.0);
            for (std::size_t i = 0; i < classes; ++i) {
                const auto y = recon.row(dom * classes + i);
                const double ny = norm(y);
                for (std::size_t k = 0; k < d; ++k) {
                    s[k] += y[k] / ny;
                }
            }
            for (std::size_t i = 0; i < classes; ++i) {
                const std::size_t r = dom * classes + i;
                const auto y = recon.row(r);
                const double ny = norm(y);
                for (std::size_t k = 0; k < d; ++k) {
                    u[k] = y[k] / ny;
                }
                const double us = dot(u, s);
                auto g = grad.row(r);
                for (std::size_t k = 0; k < d; ++k) {
                    g[k] += scale * (s[k] - us * u[k]) / ny;
                }
            }
        }
    }
    return out;
}

} // namespace duprg
