#pragma once

#include "duprg/embedding_io.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace duprg {

struct EvalResult {
    std::uint64_t total = 0;
    std::uint64_t correct = 0;
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;             ///< 0 for classes without images
    std::vector<std::vector<std::uint64_t>> confusion;  ///< confusion[true][predicted]
    std::optional<std::string> domain_tag;

    std::string to_json() const;
};

/// argmax_i cos(image, reps_i); ties go to the lowest class index.
std::size_t predict(const UnifiedReps& reps, std::span<const double> image);

/// Predictions for every row of `images` (parallel over rows).
std::vector<std::size_t> predict_all(const UnifiedReps& reps, const Matrix& images);

/// Classifies every image and fills the confusion matrix. Class lists must match exactly.
EvalResult evaluate(const UnifiedReps& reps, const ImageSet& images);

/// True when scaling the image by s > 0 leaves the prediction unchanged.
bool scale_check(const UnifiedReps& reps, std::span<const double> image, double s);

/// Accuracy table in percent: one column per result, mean column last.
std::string format_accuracy_table(const std::vector<std::string>& columns, const std::vector<double>& accuracies);

} // namespace duprg
