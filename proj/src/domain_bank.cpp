#include "duprg/domain_bank.hpp"

#include "duprg/atomic_file.hpp"
#include "duprg/embedding_io.hpp"
#include "duprg/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace duprg {

namespace {

using json = nlohmann::json;

constexpr std::string_view kDomainSlot = "{domain}";
constexpr std::string_view kClassSlot = "{class}";

struct DatasetDomains {
    std::string_view dataset;
    std::vector<std::string> domains;
};

const std::vector<DatasetDomains>& dataset_domains() {
    static const std::vector<DatasetDomains> table = {
        {"pacs", {"photo", "art painting", "cartoon", "sketch"}},
        {"vlcs", {"caltech101", "labelme", "sun09", "voc2007"}},
        {"officehome", {"art", "clipart", "product", "real world"}},
        {"terraincognita", {"location 38", "location 43", "location 46", "location 100"}},
        {"domainnet", {"clipart", "infograph", "painting", "quickdraw", "real", "sketch"}},
    };
    return table;
}

const std::vector<std::string> kCombined = {"photo", "art painting", "cartoon", "sketch", "clipart",
                                            "infograph", "painting", "quickdraw", "real", "product"};

const std::vector<std::string> kExpansion = {"watercolor", "pixelate", "geometric",
                                             "mosaic", "abstract", "science fiction"};

// Counts "{name}" slots; returns false if any other brace group is present.
bool count_slots(std::string_view tmpl, std::map<std::string, int>& counts) {
    std::size_t pos = 0;
    while ((pos = tmpl.find_first_of("{}", pos)) != std::string_view::npos) {
        if (tmpl[pos] == '}') {
            return false;
        }
        const std::size_t close = tmpl.find('}', pos);
        if (close == std::string_view::npos) {
            return false;
        }
        counts[std::string(tmpl.substr(pos, close - pos + 1))]++;
        pos = close + 1;
    }
    return true;
}

void check_template(std::string_view tmpl, bool wants_domain, const char* which) {
    std::map<std::string, int> counts;
    const bool well_formed = count_slots(tmpl, counts);
    const std::map<std::string, int> expected =
        wants_domain ? std::map<std::string, int>{{std::string(kDomainSlot), 1}, {std::string(kClassSlot), 1}}
                     : std::map<std::string, int>{{std::string(kClassSlot), 1}};
    if (!well_formed || counts != expected) {
        throw ValidationError(std::string(which) + " \"" + std::string(tmpl) + "\" must contain exactly " +
                              (wants_domain ? "one {domain} and one {class}" : "one {class}") +
                              " and no other placeholders");
    }
}

// Single pass so that substituted text is never rescanned for slots.
std::string fill_template(std::string_view tmpl, std::string_view domain, std::string_view cls) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        if (tmpl.substr(pos, kDomainSlot.size()) == kDomainSlot) {
            out += domain;
            pos += kDomainSlot.size();
        } else if (tmpl.substr(pos, kClassSlot.size()) == kClassSlot) {
            out += cls;
            pos += kClassSlot.size();
        } else {
            out += tmpl[pos++];
        }
    }
    return out;
}

std::string class_text(std::string_view cls) {
    std::string s(cls);
    std::replace(s.begin(), s.end(), '_', ' ');
    return s;
}

} // namespace

std::string normalize_descriptor(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void validate(const DomainBank& bank) {
    std::set<std::string> seen;
    for (const auto& d : bank.domains) {
        if (d.empty()) {
            throw ValidationError("bank '" + bank.name + "' has an empty descriptor");
        }
        if (normalize_descriptor(d) != d) {
            throw ValidationError("bank '" + bank.name + "' descriptor \"" + d + "\" is not lowercase-trimmed");
        }
        if (!seen.insert(d).second) {
            throw ValidationError("bank '" + bank.name + "' has duplicate descriptor \"" + d + "\"");
        }
    }
    check_template(bank.template_domain, true, "template_domain");
    check_template(bank.template_standard, false, "template_standard");
}

std::vector<Prompt> expand(const DomainBank& bank, const std::vector<std::string>& classes) {
    validate(bank);
    if (classes.empty()) {
        throw ValidationError("class list is empty");
    }
    std::set<std::string> seen;
    for (const auto& c : classes) {
        if (class_text(c).find_first_not_of(' ') == std::string::npos) {
            throw ValidationError("class name \"" + c + "\" cannot be substituted into a prompt");
        }
        if (!seen.insert(c).second) {
            throw ValidationError("duplicate class \"" + c + "\"");
        }
    }

    std::vector<Prompt> out;
    if (bank.domains.empty()) {
        out.reserve(classes.size());
        for (std::size_t i = 0; i < classes.size(); ++i) {
            out.push_back({0, i, fill_template(bank.template_standard, {}, class_text(classes[i]))});
        }
        return out;
    }
    out.reserve(bank.domains.size() * classes.size());
    for (std::size_t j = 0; j < bank.domains.size(); ++j) {
        for (std::size_t i = 0; i < classes.size(); ++i) {
            out.push_back({j, i, fill_template(bank.template_domain, bank.domains[j], class_text(classes[i]))});
        }
    }
    return out;
}

DomainBank preset(std::string_view name) {
    DomainBank bank;
    bank.name = std::string(name);
    if (name == "empty") {
        return bank;
    }
    if (name == "combined") {
        bank.domains = kCombined;
        return bank;
    }
    if (name == "expanded") {
        bank.domains = kCombined;
        bank.domains.insert(bank.domains.end(), kExpansion.begin(), kExpansion.end());
        return bank;
    }
    constexpr std::string_view task_prefix = "task:";
    if (name.starts_with(task_prefix)) {
        const std::string dataset = normalize_descriptor(name.substr(task_prefix.size()));
        for (const auto& entry : dataset_domains()) {
            if (entry.dataset == dataset) {
                bank.domains = entry.domains;
                return bank;
            }
        }
    }
    throw ValidationError("unknown bank preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names = {"empty"};
    for (const auto& entry : dataset_domains()) {
        names.push_back("task:" + std::string(entry.dataset));
    }
    names.emplace_back("combined");
    names.emplace_back("expanded");
    return names;
}

DomainBank bank_from_json(const std::string& text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ValidationError("bank file is not a JSON object");
    }
    auto require_string = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_string()) {
            throw ValidationError(std::string("bank schema: \"") + key + "\" must be a string");
        }
        return j.at(key).get<std::string>();
    };
    DomainBank bank;
    bank.name = require_string("name");
    if (!j.contains("domains") || !j.at("domains").is_array()) {
        throw ValidationError("bank schema: \"domains\" must be an array of strings");
    }
    for (const auto& d : j.at("domains")) {
        if (!d.is_string()) {
            throw ValidationError("bank schema: \"domains\" must be an array of strings");
        }
        bank.domains.push_back(d.get<std::string>());
    }
    bank.template_domain = require_string("template_domain");
    bank.template_standard = require_string("template_standard");
    validate(bank);
    return bank;
}

std::string bank_to_json(const DomainBank& bank) {
    validate(bank);
    const json j = {{"name", bank.name},
                    {"domains", bank.domains},
                    {"template_domain", bank.template_domain},
                    {"template_standard", bank.template_standard}};
    return j.dump(2) + "\n";
}

DomainBank load_bank(const std::filesystem::path& path) { return bank_from_json(read_file(path)); }

void save_bank(const DomainBank& bank, const std::filesystem::path& path) {
    write_file_atomic(path, bank_to_json(bank));
}

} // namespace duprg
