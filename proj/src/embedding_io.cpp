#include "duprg/embedding_io.hpp"

#include "duprg/atomic_file.hpp"
#include "duprg/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace duprg {

const char* to_string(FormatErrc code) noexcept {
    switch (code) {
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::unsupported_version: return "unsupported version";
    case FormatErrc::wrong_kind: return "wrong kind";
    case FormatErrc::truncated: return "truncated";
    case FormatErrc::trailing_data: return "trailing data";
    case FormatErrc::bad_metadata: return "bad metadata";
    case FormatErrc::zero_norm: return "zero-norm row";
    case FormatErrc::non_finite: return "non-finite value";
    case FormatErrc::bad_label: return "bad label";
    case FormatErrc::bad_dims: return "bad dimensions";
    }
    return "format error";
}

namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'D', 'U', 'P', 'R'};

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int s = 0; s < 32; s += 8) {
            buf_.push_back(static_cast<char>((v >> s) & 0xffu));
        }
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(FormatErrc::truncated,
                              std::string(what) + ": need " + std::to_string(n) + " bytes, " +
                                  std::to_string(bytes_.size() - pos_) + " left");
        }
    }
    std::uint8_t u8() {
        need(1, "header");
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32_unchecked() {
        std::uint32_t v = 0;
        for (int s = 0; s < 32; s += 8) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << s;
        }
        return v;
    }
    std::uint32_t u32() {
        need(4, "header");
        return u32_unchecked();
    }
    double f32_unchecked() { return static_cast<double>(std::bit_cast<float>(u32_unchecked())); }
    std::string str(std::size_t n) {
        need(n, "metadata");
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

struct Header {
    DuprKind kind{};
    std::uint32_t d = 0;
    std::uint32_t rows_a = 0;
    std::uint32_t rows_b = 0;
    json meta;
};

std::uint32_t to_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) {
        throw ValidationError(std::string(what) + " exceeds u32 range");
    }
    return static_cast<std::uint32_t>(v);
}

void write_header(ByteWriter& w, DuprKind kind, std::size_t d, std::size_t rows_a, std::size_t rows_b,
                  const json& meta) {
    const std::string m = meta.dump();
    w.raw(kMagic, 4);
    w.u32(kDuprVersion);
    w.u8(static_cast<std::uint8_t>(kind));
    w.u32(to_u32(d, "d"));
    w.u32(to_u32(rows_a, "rows_a"));
    w.u32(to_u32(rows_b, "rows_b"));
    w.u32(to_u32(m.size(), "metadata length"));
    w.raw(m.data(), m.size());
}

void write_payload(ByteWriter& w, const Matrix& m) {
    for (double v : m.data) {
        if (!std::isfinite(static_cast<float>(v))) {
            throw ValidationError("value " + std::to_string(v) + " does not fit in float32");
        }
        w.f32(v);
    }
}

const char* kind_name(DuprKind k) {
    switch (k) {
    case DuprKind::prompts: return "prompt tensor";
    case DuprKind::images: return "image set";
    case DuprKind::reps: return "unified reps";
    }
    return "unknown";
}

Header read_header(ByteReader& r, DuprKind expected) {
    r.need(kDuprHeaderSize, "header");
    char magic[4];
    for (char& c : magic) {
        c = static_cast<char>(r.u8());
    }
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError(FormatErrc::bad_magic, "expected \"DUPR\"");
    }
    const std::uint32_t version = r.u32();
    if (version != kDuprVersion) {
        throw FormatError(FormatErrc::unsupported_version, "version " + std::to_string(version));
    }
    const std::uint8_t kind = r.u8();
    if (kind > 2) {
        throw FormatError(FormatErrc::wrong_kind, "unknown kind " + std::to_string(kind));
    }
    Header h;
    h.kind = static_cast<DuprKind>(kind);
    if (h.kind != expected) {
        throw FormatError(FormatErrc::wrong_kind,
                          std::string("expected ") + kind_name(expected) + ", found " + kind_name(h.kind));
    }
    h.d = r.u32();
    h.rows_a = r.u32();
    h.rows_b = r.u32();
    const std::uint32_t meta_len = r.u32();
    const std::string meta = r.str(meta_len);
    h.meta = json::parse(meta, nullptr, false);
    if (h.meta.is_discarded() || !h.meta.is_object()) {
        throw FormatError(FormatErrc::bad_metadata, "metadata is not a JSON object");
    }
    return h;
}

std::vector<std::string> string_list(const json& meta, const char* key, bool required) {
    std::vector<std::string> out;
    if (!meta.contains(key)) {
        if (required) {
            throw FormatError(FormatErrc::bad_metadata, std::string("missing \"") + key + "\"");
        }
        return out;
    }
    const json& arr = meta.at(key);
    if (!arr.is_array()) {
        throw FormatError(FormatErrc::bad_metadata, std::string("\"") + key + "\" is not an array");
    }
    for (const auto& v : arr) {
        if (!v.is_string()) {
            throw FormatError(FormatErrc::bad_metadata, std::string("\"") + key + "\" has a non-string entry");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::optional<std::string> optional_string(const json& meta, const char* key) {
    if (!meta.contains(key) || meta.at(key).is_null()) {
        return std::nullopt;
    }
    if (!meta.at(key).is_string()) {
        throw FormatError(FormatErrc::bad_metadata, std::string("\"") + key + "\" is not a string");
    }
    return meta.at(key).get<std::string>();
}

Matrix read_payload(ByteReader& r, std::size_t rows, std::size_t d) {
    const std::uint64_t bytes = static_cast<std::uint64_t>(rows) * d * 4u;
    if (r.remaining() < bytes) {
        throw FormatError(FormatErrc::truncated, "payload needs " + std::to_string(bytes) + " bytes, " +
                                                     std::to_string(r.remaining()) + " present");
    }
    if (r.remaining() > bytes) {
        throw FormatError(FormatErrc::trailing_data,
                          std::to_string(r.remaining() - bytes) + " bytes after payload");
    }
    Matrix m(rows, d);
    for (double& v : m.data) {
        v = r.f32_unchecked();
    }
    return m;
}

void check_rows(const Matrix& m, const char* what, bool require_nonzero) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        const auto row = m.row(i);
        if (!all_finite(row)) {
            throw FormatError(FormatErrc::non_finite, std::string(what) + " row " + std::to_string(i));
        }
        if (require_nonzero && norm(row) == 0.0) {
            throw FormatError(FormatErrc::zero_norm, std::string(what) + " row " + std::to_string(i));
        }
    }
}

void check_shape(const Matrix& m, std::size_t rows, std::size_t d, const char* what) {
    if (m.rows != rows || m.cols != d || m.data.size() != rows * d) {
        throw DimensionError(std::string(what) + ": data is " + std::to_string(m.rows) + "x" +
                             std::to_string(m.cols) + ", expected " + std::to_string(rows) + "x" +
                             std::to_string(d));
    }
}

} // namespace

void normalize_rows(Matrix& m, const char* what) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto row = m.row(i);
        const double n = norm(row);
        if (n == 0.0) {
            throw FormatError(FormatErrc::zero_norm, std::string(what) + " row " + std::to_string(i));
        }
        for (double& v : row) {
            v /= n;
        }
    }
}

void validate(const PromptTensor& t) {
    if (t.domains() < 1 || t.classes() < 2 || t.dims < 2) {
        throw ValidationError("prompt tensor needs M >= 1, C >= 2, d >= 2 (got M=" + std::to_string(t.domains()) +
                              ", C=" + std::to_string(t.classes()) + ", d=" + std::to_string(t.dims) + ")");
    }
    check_shape(t.data, t.domains() * t.classes(), t.dims, "prompt tensor");
    check_rows(t.data, "prompt tensor", true);
}

void validate(const ImageSet& s) {
    if (s.size() < 1 || s.dims < 1 || s.class_names.empty()) {
        throw ValidationError("image set needs N >= 1, d >= 1 and at least one class");
    }
    check_shape(s.data, s.size(), s.dims, "image set");
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        if (s.labels[i] >= s.class_names.size()) {
            throw FormatError(FormatErrc::bad_label, "image " + std::to_string(i) + " has label " +
                                                         std::to_string(s.labels[i]) + " but C = " +
                                                         std::to_string(s.class_names.size()));
        }
    }
    check_rows(s.data, "image set", true);
}

void validate(const UnifiedReps& r) {
    if (r.class_names.empty() || r.dims < 1) {
        throw ValidationError("unified reps need C >= 1 and d >= 1");
    }
    check_shape(r.data, r.class_names.size(), r.dims, "unified reps");
    check_rows(r.data, "unified reps", false);
}

std::string encode_prompts(const PromptTensor& t) {
    validate(t);
    ByteWriter w;
    json meta = {{"domains", t.domain_names}, {"classes", t.class_names}, {"template", t.prompt_template}};
    write_header(w, DuprKind::prompts, t.dims, t.domains(), t.classes(), meta);
    write_payload(w, t.data);
    return w.take();
}

std::string encode_images(const ImageSet& s) {
    validate(s);
    ByteWriter w;
    json meta = {{"classes", s.class_names}};
    if (s.domain_tag) {
        meta["domain_tag"] = *s.domain_tag;
    }
    write_header(w, DuprKind::images, s.dims, s.size(), 0, meta);
    for (std::uint32_t label : s.labels) {
        w.u32(label);
    }
    write_payload(w, s.data);
    return w.take();
}

std::string encode_reps(const UnifiedReps& r) {
    validate(r);
    ByteWriter w;
    json meta = {{"classes", r.class_names}};
    write_header(w, DuprKind::reps, r.dims, r.class_names.size(), 0, meta);
    write_payload(w, r.data);
    return w.take();
}

DuprKind peek_kind(const std::string& bytes) {
    ByteReader r(bytes);
    r.need(kDuprHeaderSize, "header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(FormatErrc::bad_magic, "expected \"DUPR\"");
    }
    const auto kind = static_cast<std::uint8_t>(bytes[8]);
    if (kind > 2) {
        throw FormatError(FormatErrc::wrong_kind, "unknown kind " + std::to_string(kind));
    }
    return static_cast<DuprKind>(kind);
}

PromptTensor decode_prompts(const std::string& bytes) {
    ByteReader r(bytes);
    Header h = read_header(r, DuprKind::prompts);
    if (h.d < 2 || h.rows_a < 1 || h.rows_b < 2) {
        throw FormatError(FormatErrc::bad_dims, "prompt tensor needs M >= 1, C >= 2, d >= 2");
    }
    PromptTensor t;
    t.dims = h.d;
    t.domain_names = string_list(h.meta, "domains", true);
    t.class_names = string_list(h.meta, "classes", true);
    t.prompt_template = optional_string(h.meta, "template").value_or("");
    if (t.domain_names.size() != h.rows_a || t.class_names.size() != h.rows_b) {
        throw FormatError(FormatErrc::bad_metadata, "metadata lists " + std::to_string(t.domain_names.size()) +
                                                        " domains and " + std::to_string(t.class_names.size()) +
                                                        " classes, header says M=" + std::to_string(h.rows_a) +
                                                        " C=" + std::to_string(h.rows_b));
    }
    t.data = read_payload(r, static_cast<std::size_t>(h.rows_a) * h.rows_b, h.d);
    check_rows(t.data, "prompt tensor", true);
    normalize_rows(t.data, "prompt tensor");
    return t;
}

ImageSet decode_images(const std::string& bytes) {
    ByteReader r(bytes);
    Header h = read_header(r, DuprKind::images);
    if (h.d < 1 || h.rows_a < 1 || h.rows_b != 0) {
        throw FormatError(FormatErrc::bad_dims, "image set needs N >= 1, d >= 1, rows_b = 0");
    }
    ImageSet s;
    s.dims = h.d;
    s.class_names = string_list(h.meta, "classes", true);
    if (s.class_names.empty()) {
        throw FormatError(FormatErrc::bad_metadata, "empty class list");
    }
    s.domain_tag = optional_string(h.meta, "domain_tag");
    r.need(static_cast<std::size_t>(h.rows_a) * 4u, "labels");
    s.labels.resize(h.rows_a);
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        s.labels[i] = r.u32_unchecked();
        if (s.labels[i] >= s.class_names.size()) {
            throw FormatError(FormatErrc::bad_label, "image " + std::to_string(i) + " has label " +
                                                         std::to_string(s.labels[i]));
        }
    }
    s.data = read_payload(r, h.rows_a, h.d);
    check_rows(s.data, "image set", true);
    normalize_rows(s.data, "image set");
    return s;
}

UnifiedReps decode_reps(const std::string& bytes) {
    ByteReader r(bytes);
    Header h = read_header(r, DuprKind::reps);
    if (h.d < 1 || h.rows_a < 1 || h.rows_b != 0) {
        throw FormatError(FormatErrc::bad_dims, "unified reps need C >= 1, d >= 1, rows_b = 0");
    }
    UnifiedReps out;
    out.dims = h.d;
    out.class_names = string_list(h.meta, "classes", true);
    if (out.class_names.size() != h.rows_a) {
        throw FormatError(FormatErrc::bad_metadata, "class count disagrees with header");
    }
    out.data = read_payload(r, h.rows_a, h.d);
    check_rows(out.data, "unified reps", false);
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("read from '" + path.string() + "' failed");
    }
    return std::move(ss).str();
}

void write_prompts(const PromptTensor& t, const std::filesystem::path& path) {
    write_file_atomic(path, encode_prompts(t));
}
void write_images(const ImageSet& s, const std::filesystem::path& path) {
    write_file_atomic(path, encode_images(s));
}
void write_reps(const UnifiedReps& r, const std::filesystem::path& path) {
    write_file_atomic(path, encode_reps(r));
}

PromptTensor read_prompts(const std::filesystem::path& path) { return decode_prompts(read_file(path)); }
ImageSet read_images(const std::filesystem::path& path) { return decode_images(read_file(path)); }
UnifiedReps read_reps(const std::filesystem::path& path) { return decode_reps(read_file(path)); }

} // namespace duprg
