#include "duprg/synth.hpp"

#include "duprg/errors.hpp"

#include <cmath>
#include <random>

namespace duprg {

namespace {

void normalize(std::span<double> v) {
    const double n = norm(v);
    for (double& x : v) {
        x /= n;
    }
}

// Gaussian direction; redrawn in the (practically impossible) all-zero case.
std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dims) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(dims);
    do {
        for (double& x : v) {
            x = gauss(rng);
        }
    } while (norm(v) == 0.0);
    normalize(v);
    return v;
}

// Up to `count` orthonormal vectors via Gram-Schmidt on Gaussian draws.
Matrix orthonormal_rows(std::mt19937_64& rng, std::size_t count, std::size_t dims) {
    Matrix q(count, dims);
    for (std::size_t r = 0; r < count; ++r) {
        for (;;) {
            auto v = random_unit(rng, dims);
            for (std::size_t p = 0; p < r; ++p) {
                const double proj = dot(v, q.row(p));
                for (std::size_t k = 0; k < dims; ++k) {
                    v[k] -= proj * q(p, k);
                }
            }
            if (norm(v) > 1e-8) {
                normalize(v);
                std::copy(v.begin(), v.end(), q.row(r).begin());
                break;
            }
        }
    }
    return q;
}

} // namespace

void validate(const SynthSpec& spec) {
    if (spec.classes < 2) throw ValidationError("synth: classes must be >= 2");
    if (spec.domains < 1) throw ValidationError("synth: domains must be >= 1");
    if (spec.dims < spec.classes) throw ValidationError("synth: dims must be >= classes");
    if (spec.dims < 2) throw ValidationError("synth: dims must be >= 2");
    if (spec.n_per_class < 1) throw ValidationError("synth: n_per_class must be >= 1");
    if (spec.heldout_domains < 1) throw ValidationError("synth: heldout_domains must be >= 1");
    for (double v : {spec.class_sep, spec.domain_shift, spec.noise}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError("synth: class_sep, domain_shift and noise must be finite and >= 0");
        }
    }
}

SynthData generate(const SynthSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    const std::size_t d = spec.dims;
    const std::size_t C = spec.classes;

    // One extra direction shared by all anchors when class_sep < 1.
    const bool shared_fits = d > C;
    Matrix basis = orthonormal_rows(rng, shared_fits ? C + 1 : C, d);
    const std::vector<double> shared =
        shared_fits ? std::vector<double>(basis.row(C).begin(), basis.row(C).end()) : random_unit(rng, d);
    const double shared_weight = std::max(0.0, 1.0 - spec.class_sep);

    Matrix anchors(C, d);
    for (std::size_t i = 0; i < C; ++i) {
        auto a = anchors.row(i);
        for (std::size_t k = 0; k < d; ++k) {
            a[k] = spec.class_sep * basis(i, k) + shared_weight * shared[k];
        }
        if (norm(a) == 0.0) {
            std::copy(shared.begin(), shared.end(), a.begin());
        }
        normalize(a);
    }

    auto draw_offsets = [&](std::size_t count) {
        Matrix offsets(count, d);
        for (std::size_t j = 0; j < count; ++j) {
            const auto dir = random_unit(rng, d);
            for (std::size_t k = 0; k < d; ++k) {
                offsets(j, k) = spec.domain_shift * dir[k];
            }
        }
        return offsets;
    };
    const Matrix prompt_offsets = draw_offsets(spec.domains);
    const Matrix image_offsets = draw_offsets(spec.heldout_domains);

    SynthData out;
    std::vector<std::string> class_names;
    for (std::size_t i = 0; i < C; ++i) {
        class_names.push_back("class_" + std::to_string(i));
    }

    PromptTensor& t = out.prompts;
    t.dims = d;
    t.class_names = class_names;
    t.prompt_template = "synthetic";
    for (std::size_t j = 0; j < spec.domains; ++j) {
        t.domain_names.push_back("synthetic_" + std::to_string(j));
    }
    t.data = Matrix(spec.domains * C, d);
    for (std::size_t j = 0; j < spec.domains; ++j) {
        for (std::size_t i = 0; i < C; ++i) {
            auto row = t.data.row(t.row_index(j, i));
            for (std::size_t k = 0; k < d; ++k) {
                row[k] = anchors(i, k) + prompt_offsets(j, k);
            }
            if (norm(row) == 0.0) {
                throw ValidationError("synth: a domain offset cancels a class anchor; change the seed");
            }
            normalize(row);
        }
    }

    ImageSet& images = out.images;
    images.dims = d;
    images.class_names = class_names;
    images.domain_tag = "heldout";
    const std::size_t n = spec.heldout_domains * C * spec.n_per_class;
    images.data = Matrix(n, d);
    images.labels.reserve(n);
    std::normal_distribution<double> noise(0.0, spec.noise / std::sqrt(static_cast<double>(d)));
    std::size_t r = 0;
    for (std::size_t h = 0; h < spec.heldout_domains; ++h) {
        for (std::size_t i = 0; i < C; ++i) {
            for (std::size_t s = 0; s < spec.n_per_class; ++s, ++r) {
                auto row = images.data.row(r);
                do {
                    for (std::size_t k = 0; k < d; ++k) {
                        row[k] = anchors(i, k) + image_offsets(h, k) + (spec.noise > 0.0 ? noise(rng) : 0.0);
                    }
                } while (norm(row) == 0.0);
                normalize(row);
                images.labels.push_back(static_cast<std::uint32_t>(i));
            }
        }
    }

    out.oracle.dims = d;
    out.oracle.class_names = class_names;
    out.oracle.data = anchors;
    return out;
}

double intra_class_tightness(const Matrix& rows, std::size_t domains, std::size_t classes) {
    if (domains < 2) {
        throw ValidationError("intra_class_tightness: needs M >= 2");
    }
    if (classes == 0 || rows.rows != domains * classes) {
        throw DimensionError("intra_class_tightness: rows do not form an M x C grid");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < domains; ++j) {
            for (std::size_t k = j + 1; k < domains; ++k) {
                const double c = cosine(rows.row(j * classes + i), rows.row(k * classes + i));
                if (std::isnan(c)) {
                    throw NumericError("intra_class_tightness: zero-norm row in class " + std::to_string(i));
                }
                sum += c;
            }
        }
        total += sum / static_cast<double>(domains * (domains - 1) / 2);
    }
    return total / static_cast<double>(classes);
}

double intra_class_tightness(const PromptTensor& t) {
    return intra_class_tightness(t.data, t.domains(), t.classes());
}

} // namespace duprg
