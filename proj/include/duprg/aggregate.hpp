#pragma once

#include "duprg/cae.hpp"
#include "duprg/embedding_io.hpp"

namespace duprg {

/// Row i = (1/M) sum_j rows[j*C + i]. Not re-normalized.
UnifiedReps mean_pool(const Matrix& rows, std::size_t domains, const std::vector<std::string>& class_names);

/// Training-free aggregation: average of the M domain prompts of every class.
UnifiedReps mean_pool(const PromptTensor& t);

/// Average of the autoencoder outputs of every class; equals mean_pool(forward(model, t)).
UnifiedReps cae_unify(const PromptTensor& t, const CaeModel& model);

} // namespace duprg
