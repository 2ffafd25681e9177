#include "duprg/classify.hpp"

#include "duprg/errors.hpp"
#include "duprg/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace duprg {

namespace {

std::vector<double> checked_rep_norms(const UnifiedReps& reps) {
    validate(reps);
    std::vector<double> norms(reps.data.rows);
    for (std::size_t c = 0; c < norms.size(); ++c) {
        norms[c] = norm(reps.data.row(c));
        if (norms[c] == 0.0) {
            throw ValidationError("unified rep for class '" + reps.class_names[c] + "' has zero norm");
        }
    }
    return norms;
}

void check_image(std::span<const double> image, std::size_t dims, std::size_t index) {
    if (image.size() != dims) {
        throw DimensionError("image " + std::to_string(index) + " has d=" + std::to_string(image.size()) +
                             ", reps have d=" + std::to_string(dims));
    }
    if (!all_finite(image) || norm(image) == 0.0) {
        throw ValidationError("image " + std::to_string(index) + " is zero-norm or non-finite");
    }
}

} // namespace

std::size_t predict(const UnifiedReps& reps, std::span<const double> image) {
    const auto norms = checked_rep_norms(reps);
    check_image(image, reps.dims, 0);
    Matrix one(1, image.size());
    std::copy(image.begin(), image.end(), one.data.begin());
    return kernels::reference::argmax_cosine(one, reps.data, norms).front();
}

std::vector<std::size_t> predict_all(const UnifiedReps& reps, const Matrix& images) {
    const auto norms = checked_rep_norms(reps);
    if (images.cols != reps.dims) {
        throw DimensionError("images have d=" + std::to_string(images.cols) + ", reps have d=" +
                             std::to_string(reps.dims));
    }
    for (std::size_t i = 0; i < images.rows; ++i) {
        check_image(images.row(i), reps.dims, i);
    }
    return kernels::argmax_cosine(images, reps.data, norms);
}

EvalResult evaluate(const UnifiedReps& reps, const ImageSet& images) {
    if (reps.class_names != images.class_names) {
        throw ValidationError("class lists of reps and images differ (names or order); refusing to reindex");
    }
    validate(images);
    const auto predictions = predict_all(reps, images.data);

    const std::size_t classes = reps.class_names.size();
    EvalResult out;
    out.domain_tag = images.domain_tag;
    out.confusion.assign(classes, std::vector<std::uint64_t>(classes, 0));
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out.confusion[images.labels[i]][predictions[i]]++;
    }
    out.total = predictions.size();
    out.per_class_accuracy.assign(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
        out.correct += out.confusion[c][c];
        const std::uint64_t count = std::accumulate(out.confusion[c].begin(), out.confusion[c].end(), std::uint64_t{0});
        if (count > 0) {
            out.per_class_accuracy[c] = static_cast<double>(out.confusion[c][c]) / static_cast<double>(count);
        }
    }
    out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.total);
    return out;
}

bool scale_check(const UnifiedReps& reps, std::span<const double> image, double s) {
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw ValidationError("scale_check: s must be a finite positive number");
    }
    std::vector<double> scaled(image.begin(), image.end());
    for (double& v : scaled) {
        v *= s;
    }
    return predict(reps, scaled) == predict(reps, image);
}

std::string EvalResult::to_json() const {
    nlohmann::json j = {{"total", total},
                        {"correct", correct},
                        {"accuracy", accuracy},
                        {"per_class_accuracy", per_class_accuracy},
                        {"confusion", confusion}};
    j["domain_tag"] = domain_tag ? nlohmann::json(*domain_tag) : nlohmann::json(nullptr);
    return j.dump();
}

std::string format_accuracy_table(const std::vector<std::string>& columns, const std::vector<double>& accuracies) {
    std::vector<std::string> header = columns;
    header.emplace_back("Avg");
    std::vector<double> values = accuracies;
    values.push_back(accuracies.empty() ? 0.0
                                        : std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
                                              static_cast<double>(accuracies.size()));
    std::string line1 = "|";
    std::string line2 = "|";
    std::string line3 = "|";
    for (std::size_t i = 0; i < header.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", 100.0 * values[i]);
        const std::size_t width = std::max(header[i].size(), std::string(buf).size());
        auto pad = [width](std::string s) {
            s.insert(0, width - s.size(), ' ');
            return " " + s + " |";
        };
        line1 += pad(header[i]);
        line2 += " " + std::string(width, '-') + " |";
        line3 += pad(buf);
    }
    return line1 + "\n" + line2 + "\n" + line3 + "\n";
}

} // namespace duprg
