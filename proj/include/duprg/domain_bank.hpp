#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace duprg {

inline constexpr std::string_view kDefaultDomainTemplate = "a {domain} photo of a {class}";
inline constexpr std::string_view kStandardTemplate = "a photo of a {class}";

/// Named list of domain descriptors plus the two prompt templates. An empty
/// descriptor list means "standard prompt only".
struct DomainBank {
    std::string name;
    std::vector<std::string> domains;
    std::string template_domain{kDefaultDomainTemplate};
    std::string template_standard{kStandardTemplate};

    friend bool operator==(const DomainBank&, const DomainBank&) = default;
};

struct Prompt {
    std::size_t domain_index = 0;
    std::size_t class_index = 0;
    std::string text;

    friend bool operator==(const Prompt&, const Prompt&) = default;
};

/// Throws ValidationError on duplicate/empty/non-normalized descriptors or bad templates.
void validate(const DomainBank& bank);

/// Lowercase and trim surrounding whitespace.
std::string normalize_descriptor(std::string_view s);

/// Domain-major expansion: max(M, 1) * C prompts, prompt k = j * C + i.
std::vector<Prompt> expand(const DomainBank& bank, const std::vector<std::string>& classes);

/// Built-in banks: "empty", "task:<pacs|vlcs|officehome|terraincognita|domainnet>",
/// "combined", "expanded".
DomainBank preset(std::string_view name);

std::vector<std::string> preset_names();

DomainBank load_bank(const std::filesystem::path& path);
void save_bank(const DomainBank& bank, const std::filesystem::path& path);

DomainBank bank_from_json(const std::string& text);
std::string bank_to_json(const DomainBank& bank);

} // namespace duprg
