#pragma once

// Synthetic embeddings with a known class/domain decomposition.
//
//   anchor a_i      unit vector per class (mutually orthogonal when class_sep >= 1)
//   offset o_j      per-domain vector of length domain_shift
//   prompt (j, i)   normalize(a_i + o_j)
//   image           normalize(a_i + o_h + eps), o_h from domains never seen in the prompts,
//                   eps ~ N(0, noise^2 / d) per coordinate so that E|eps|^2 = noise^2
//   oracle rep i    a_i

#include "duprg/embedding_io.hpp"

#include <cstdint>

namespace duprg {

struct SynthSpec {
    std::size_t classes = 5;
    std::size_t domains = 8;
    std::size_t dims = 64;
    std::size_t n_per_class = 50;    ///< images per class per held-out domain
    std::size_t heldout_domains = 2; ///< image domains, disjoint from prompt domains
    double class_sep = 1.0;
    double domain_shift = 0.6;
    double noise = 0.3;
    std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

struct SynthData {
    PromptTensor prompts;
    ImageSet images;
    UnifiedReps oracle;
};

SynthData generate(const SynthSpec& spec);

/// Mean over classes of the mean pairwise cosine among the M rows of that class.
/// `rows` is domain-major (M*C) x d. Requires M >= 2.
double intra_class_tightness(const Matrix& rows, std::size_t domains, std::size_t classes);
double intra_class_tightness(const PromptTensor& t);

} // namespace duprg
