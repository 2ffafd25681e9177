#pragma once

// DUPR binary container, version 1, little-endian.
//
//   0   magic "DUPR"
//   4   u32 version (= 1)
//   8   u8  kind (0 prompt tensor, 1 image set, 2 unified reps)
//   9   u32 d
//   13  u32 rows_a (M, N or C depending on kind)
//   17  u32 rows_b (C for prompt tensors, 0 otherwise)
//   21  u32 metadata length L
//   25  L bytes of UTF-8 JSON metadata
//   ..  kind 1 only: rows_a u32 labels
//   ..  float32 payload, row-major (prompt rows ordered j*C + i)
//
// Values are held as float64 in memory. Prompt and image rows are
// L2-normalized on load; unified reps are returned as stored.

#include "duprg/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace duprg {

inline constexpr std::uint32_t kDuprVersion = 1;
inline constexpr std::size_t kDuprHeaderSize = 25;

enum class DuprKind : std::uint8_t { prompts = 0, images = 1, reps = 2 };

/// M x C grid of prompt embeddings, domain-major: row j*C + i is domain j, class i.
struct PromptTensor {
    std::size_t dims = 0;
    std::vector<std::string> domain_names;
    std::vector<std::string> class_names;
    std::string prompt_template;
    Matrix data;

    std::size_t domains() const noexcept { return domain_names.size(); }
    std::size_t classes() const noexcept { return class_names.size(); }
    std::size_t row_index(std::size_t domain, std::size_t cls) const noexcept {
        return domain * classes() + cls;
    }

    friend bool operator==(const PromptTensor&, const PromptTensor&) = default;
};

struct ImageSet {
    std::size_t dims = 0;
    std::vector<std::string> class_names;
    std::vector<std::uint32_t> labels;
    std::optional<std::string> domain_tag;
    Matrix data;

    std::size_t size() const noexcept { return labels.size(); }

    friend bool operator==(const ImageSet&, const ImageSet&) = default;
};

/// One domain-unified representation per class. Rows are means, not unit vectors.
struct UnifiedReps {
    std::size_t dims = 0;
    std::vector<std::string> class_names;
    Matrix data;

    friend bool operator==(const UnifiedReps&, const UnifiedReps&) = default;
};

// Validation throws ValidationError (or FormatError for payload problems).
void validate(const PromptTensor& t);
void validate(const ImageSet& s);
void validate(const UnifiedReps& r);

/// Scales every row to unit Euclidean norm. Throws FormatError(zero_norm) on a zero row.
void normalize_rows(Matrix& m, const char* what);

std::string encode_prompts(const PromptTensor& t);
std::string encode_images(const ImageSet& s);
std::string encode_reps(const UnifiedReps& r);

PromptTensor decode_prompts(const std::string& bytes);
ImageSet decode_images(const std::string& bytes);
UnifiedReps decode_reps(const std::string& bytes);

/// Reads only the header; useful for dispatching on kind.
DuprKind peek_kind(const std::string& bytes);

void write_prompts(const PromptTensor& t, const std::filesystem::path& path);
void write_images(const ImageSet& s, const std::filesystem::path& path);
void write_reps(const UnifiedReps& r, const std::filesystem::path& path);

PromptTensor read_prompts(const std::filesystem::path& path);
ImageSet read_images(const std::filesystem::path& path);
UnifiedReps read_reps(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

} // namespace duprg
