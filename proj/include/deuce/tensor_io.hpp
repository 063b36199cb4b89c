#ifndef DEUCE_TENSOR_IO_HPP
#define DEUCE_TENSOR_IO_HPP

#include "deuce/common.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file tensor_io.hpp
 *
 * @brief Embedding bundle container and selection records.
 *
 * A bundle file is a text manifest followed by the raw float32 matrices:
 *
 *     DEUCEBND<version byte>\n
 *     n_docs <N>\n
 *     n_classes <C>\n
 *     dim <D>\n
 *     gold <0|1>\n
 *     reference_dim <R>\n          (0 when no reference matrix is stored)
 *     class\t<name>\n              (C lines)
 *     doc\t<id>[\t<gold label>]\n  (N lines)
 *     payload <bytes>\n
 *     <textual N*D><predictive N*D><class C*D>[<reference N*R>]
 *
 * Matrices are row-major little-endian IEEE-754 binary32.
 */

namespace deuce {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kBundleMagic = "DEUCEBND";
inline constexpr std::uint8_t kBundleVersion = 1;
inline constexpr double kUnitNormTolerance = 1e-4;

struct EmbeddingBundle {
    MatrixF textual;
    MatrixF predictive;
    MatrixF class_embeds;
    std::vector<std::string> class_names;
    std::vector<std::string> doc_ids;
    std::optional<std::vector<Index>> gold_labels;
    /// Optional embedding matrix used only for the diversity metric.
    std::optional<MatrixF> reference;

    /// Set by the loader when at least one row had to be rescaled. Not persisted.
    bool renormalized = false;

    std::size_t n_docs() const noexcept { return textual.rows(); }
    std::size_t n_classes() const noexcept { return class_embeds.rows(); }
    std::size_t dim() const noexcept { return textual.cols(); }

    bool same_content(const EmbeddingBundle& o) const {
        return textual == o.textual && predictive == o.predictive && class_embeds == o.class_embeds &&
               class_names == o.class_names && doc_ids == o.doc_ids && gold_labels == o.gold_labels &&
               reference == o.reference;
    }
};

namespace detail {

inline void check_finite(const MatrixF& m, const char* name) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (!std::isfinite(m(r, c))) {
                throw Error(std::string("non-finite value in ") + name + " matrix at row " + std::to_string(r) +
                            ", column " + std::to_string(c));
            }
        }
    }
}

/// Returns true when any row was rescaled.
inline bool normalize_rows(MatrixF& m, const char* name, double tolerance) {
    bool changed = false;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        double norm = l2_norm(std::span<const float>(row));
        if (std::abs(norm - 1.0) <= tolerance) {
            continue;
        }
        if (norm == 0.0) {
            throw Error(std::string("zero-norm row in ") + name + " matrix at row " + std::to_string(r));
        }
        for (auto& v : row) {
            v = static_cast<float>(v / norm);
        }
        changed = true;
    }
    return changed;
}

inline bool valid_name(std::string_view s) {
    return !s.empty() && s.find_first_of("\t\n\r") == std::string_view::npos;
}

inline void write_floats(std::ostream& out, const MatrixF& m) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(m.data().data()),
                  static_cast<std::streamsize>(m.size() * sizeof(float)));
    } else {
        for (float v : m.data()) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            char b[4] = {char(bits & 0xff), char((bits >> 8) & 0xff), char((bits >> 16) & 0xff), char(bits >> 24)};
            out.write(b, 4);
        }
    }
}

inline void read_floats(std::string_view bytes, MatrixF& m) {
    std::memcpy(m.data().data(), bytes.data(), m.size() * sizeof(float));
    if constexpr (std::endian::native != std::endian::little) {
        for (auto& v : m.data()) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            bits = ((bits & 0xff) << 24) | ((bits & 0xff00) << 8) | ((bits >> 8) & 0xff00) | (bits >> 24);
            v = std::bit_cast<float>(bits);
        }
    }
}

inline std::size_t parse_count(std::string_view line, std::string_view key) {
    if (line.size() <= key.size() + 1 || line.substr(0, key.size()) != key || line[key.size()] != ' ') {
        throw Error("malformed header: expected '" + std::string(key) + " <count>', got '" + std::string(line) + "'");
    }
    auto digits = line.substr(key.size() + 1);
    if (digits.find_first_not_of("0123456789") != std::string_view::npos || digits.size() > 18) {
        throw Error("malformed header: bad count for '" + std::string(key) + "'");
    }
    return std::stoull(std::string(digits));
}

class LineReader {
public:
    explicit LineReader(std::string_view buf) : buf_(buf) {}

    std::string_view next() {
        auto nl = buf_.find('\n', pos_);
        if (nl == std::string_view::npos) {
            throw Error("malformed header: unexpected end of manifest");
        }
        auto line = buf_.substr(pos_, nl - pos_);
        pos_ = nl + 1;
        return line;
    }

    std::size_t position() const noexcept { return pos_; }

private:
    std::string_view buf_;
    std::size_t pos_ = 0;
};

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        parts.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) {
            break;
        }
        start = tab + 1;
    }
    return parts;
}

} // namespace detail

/// Checks shapes, names, labels and finiteness. Does not touch row norms.
inline void validate_bundle_shape(const EmbeddingBundle& b) {
    const std::size_t n = b.textual.rows();
    const std::size_t d = b.textual.cols();
    if (d == 0) {
        throw Error("dimension mismatch: embedding width is zero");
    }
    if (b.predictive.rows() != n || b.predictive.cols() != d) {
        throw Error("dimension mismatch: predictive matrix is " + std::to_string(b.predictive.rows()) + "x" +
                    std::to_string(b.predictive.cols()) + ", expected " + std::to_string(n) + "x" + std::to_string(d));
    }
    if (b.class_embeds.cols() != d) {
        throw Error("dimension mismatch: class matrix width " + std::to_string(b.class_embeds.cols()) +
                    ", expected " + std::to_string(d));
    }
    if (b.class_embeds.rows() == 0 || b.class_names.size() != b.class_embeds.rows()) {
        throw Error("dimension mismatch: " + std::to_string(b.class_names.size()) + " class names for " +
                    std::to_string(b.class_embeds.rows()) + " class rows");
    }
    if (b.doc_ids.size() != n) {
        throw Error("dimension mismatch: " + std::to_string(b.doc_ids.size()) + " doc ids for " + std::to_string(n) +
                    " rows");
    }
    for (const auto& s : b.class_names) {
        if (!detail::valid_name(s)) throw Error("invalid class name '" + s + "'");
    }
    for (const auto& s : b.doc_ids) {
        if (!detail::valid_name(s)) throw Error("invalid doc id '" + s + "'");
    }
    if (b.gold_labels) {
        if (b.gold_labels->size() != n) {
            throw Error("dimension mismatch: gold labels length " + std::to_string(b.gold_labels->size()));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if ((*b.gold_labels)[i] >= b.n_classes()) {
                throw Error("gold label out of range at row " + std::to_string(i));
            }
        }
    }
    if (b.reference && (b.reference->rows() != n || b.reference->cols() == 0)) {
        throw Error("dimension mismatch: reference matrix has " + std::to_string(b.reference->rows()) + " rows");
    }
    detail::check_finite(b.textual, "textual");
    detail::check_finite(b.predictive, "predictive");
    detail::check_finite(b.class_embeds, "class");
    if (b.reference) detail::check_finite(*b.reference, "reference");
}

/// Validates and rescales textual, predictive and class rows to unit norm.
inline void validate_and_normalize(EmbeddingBundle& b) {
    validate_bundle_shape(b);
    bool changed = detail::normalize_rows(b.textual, "textual", kUnitNormTolerance);
    changed = detail::normalize_rows(b.predictive, "predictive", kUnitNormTolerance) || changed;
    changed = detail::normalize_rows(b.class_embeds, "class", kUnitNormTolerance) || changed;
    b.renormalized = changed;
}

inline std::string encode_bundle(const EmbeddingBundle& b) {
    validate_bundle_shape(b);
    std::ostringstream out(std::ios::binary);
    out << kBundleMagic << static_cast<char>(kBundleVersion) << '\n';
    out << "n_docs " << b.n_docs() << '\n';
    out << "n_classes " << b.n_classes() << '\n';
    out << "dim " << b.dim() << '\n';
    out << "gold " << (b.gold_labels ? 1 : 0) << '\n';
    out << "reference_dim " << (b.reference ? b.reference->cols() : 0) << '\n';
    for (const auto& name : b.class_names) {
        out << "class\t" << name << '\n';
    }
    for (std::size_t i = 0; i < b.n_docs(); ++i) {
        out << "doc\t" << b.doc_ids[i];
        if (b.gold_labels) out << '\t' << (*b.gold_labels)[i];
        out << '\n';
    }
    std::size_t floats = b.textual.size() + b.predictive.size() + b.class_embeds.size() +
                         (b.reference ? b.reference->size() : 0);
    out << "payload " << floats * sizeof(float) << '\n';
    detail::write_floats(out, b.textual);
    detail::write_floats(out, b.predictive);
    detail::write_floats(out, b.class_embeds);
    if (b.reference) detail::write_floats(out, *b.reference);
    return std::move(out).str();
}

/// Parses a bundle image, validates it and renormalizes rows.
inline EmbeddingBundle decode_bundle(std::string_view bytes) {
    if (bytes.size() < kBundleMagic.size() + 2 || bytes.substr(0, kBundleMagic.size()) != kBundleMagic) {
        throw Error("malformed header: missing DEUCEBND magic");
    }
    if (static_cast<std::uint8_t>(bytes[kBundleMagic.size()]) != kBundleVersion) {
        throw Error("malformed header: unsupported version " +
                    std::to_string(static_cast<std::uint8_t>(bytes[kBundleMagic.size()])));
    }
    if (bytes[kBundleMagic.size() + 1] != '\n') {
        throw Error("malformed header: missing newline after version byte");
    }
    auto manifest = bytes.substr(kBundleMagic.size() + 2);
    detail::LineReader lines(manifest);
    const std::size_t n = detail::parse_count(lines.next(), "n_docs");
    const std::size_t c = detail::parse_count(lines.next(), "n_classes");
    const std::size_t d = detail::parse_count(lines.next(), "dim");
    const std::size_t gold = detail::parse_count(lines.next(), "gold");
    const std::size_t rdim = detail::parse_count(lines.next(), "reference_dim");
    if (gold > 1) throw Error("malformed header: gold flag must be 0 or 1");
    if (n == 0 || c == 0 || d == 0) throw Error("malformed header: zero-sized bundle");

    EmbeddingBundle b;
    b.class_names.reserve(c);
    for (std::size_t j = 0; j < c; ++j) {
        auto parts = detail::split_tabs(lines.next());
        if (parts.size() != 2 || parts[0] != "class") {
            throw Error("malformed header: bad class line " + std::to_string(j));
        }
        b.class_names.emplace_back(parts[1]);
    }
    b.doc_ids.reserve(n);
    if (gold) b.gold_labels.emplace();
    for (std::size_t i = 0; i < n; ++i) {
        auto parts = detail::split_tabs(lines.next());
        if (parts.size() != (gold ? 3u : 2u) || parts[0] != "doc") {
            throw Error("malformed header: bad doc line for row " + std::to_string(i));
        }
        b.doc_ids.emplace_back(parts[1]);
        if (gold) {
            auto lab = parts[2];
            if (lab.empty() || lab.find_first_not_of("0123456789") != std::string_view::npos || lab.size() > 9) {
                throw Error("malformed header: bad gold label for row " + std::to_string(i));
            }
            b.gold_labels->push_back(static_cast<Index>(std::stoul(std::string(lab))));
        }
    }
    const std::size_t payload = detail::parse_count(lines.next(), "payload");
    const std::size_t expected = (2 * n * d + c * d + n * rdim) * sizeof(float);
    if (payload != expected) {
        throw Error("dimension mismatch: payload of " + std::to_string(payload) + " bytes, expected " +
                    std::to_string(expected));
    }
    auto body = manifest.substr(lines.position());
    if (body.size() != expected) {
        throw Error("dimension mismatch: file holds " + std::to_string(body.size()) + " payload bytes, expected " +
                    std::to_string(expected));
    }
    b.textual = MatrixF(n, d);
    b.predictive = MatrixF(n, d);
    b.class_embeds = MatrixF(c, d);
    std::size_t off = 0;
    auto take = [&](MatrixF& m) {
        detail::read_floats(body.substr(off, m.size() * sizeof(float)), m);
        off += m.size() * sizeof(float);
    };
    take(b.textual);
    take(b.predictive);
    take(b.class_embeds);
    if (rdim > 0) {
        b.reference.emplace(n, rdim);
        take(*b.reference);
    }
    validate_and_normalize(b);
    return b;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

inline EmbeddingBundle load_bundle(const std::filesystem::path& path) { return decode_bundle(read_file(path)); }

inline void save_bundle(const EmbeddingBundle& b, const std::filesystem::path& path) {
    write_file(path, encode_bundle(b));
}

// ---------------------------------------------------------------------------
// Selection records

struct SelectionResult {
    std::vector<Index> selected;
    std::vector<std::string> selected_ids;
    /// FPS start index -> summed propagated uncertainty of its candidate.
    std::map<Index, double> candidate_scores;
    Json config_echo = Json::object();
    std::uint64_t rng_seed = 0;
    std::size_t n_docs = 0;

    friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

inline void validate_selection(const SelectionResult& r) {
    if (r.selected.empty()) throw Error("selection is empty");
    if (r.selected_ids.size() != r.selected.size()) {
        throw Error("selection has " + std::to_string(r.selected_ids.size()) + " ids for " +
                    std::to_string(r.selected.size()) + " indices");
    }
    std::vector<char> seen(r.n_docs, 0);
    for (Index i : r.selected) {
        if (i >= r.n_docs) {
            throw Error("selected index " + std::to_string(i) + " out of range for " + std::to_string(r.n_docs) +
                        " documents");
        }
        if (seen[i]) throw Error("selected index " + std::to_string(i) + " repeated");
        seen[i] = 1;
    }
}

/// Non-finite doubles are written as the strings "inf", "-inf" or "nan".
inline Json number_to_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double number_from_json(const Json& j) {
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw Error("bad numeric value '" + s + "'");
    }
    return j.get<double>();
}

inline std::string encode_selection(const SelectionResult& r) {
    validate_selection(r);
    Json j;
    j["n_docs"] = r.n_docs;
    j["selected_indices"] = r.selected;
    j["selected_ids"] = r.selected_ids;
    Json scores = Json::object();
    for (const auto& [start, s] : r.candidate_scores) {
        scores[std::to_string(start)] = number_to_json(s);
    }
    j["scores"] = std::move(scores);
    j["config"] = r.config_echo;
    j["rng_seed"] = r.rng_seed;
    return j.dump(2) + "\n";
}

inline SelectionResult decode_selection(std::string_view text) {
    SelectionResult r;
    try {
        auto j = Json::parse(text);
        r.n_docs = j.at("n_docs").get<std::size_t>();
        r.selected = j.at("selected_indices").get<std::vector<Index>>();
        r.selected_ids = j.at("selected_ids").get<std::vector<std::string>>();
        for (const auto& [key, value] : j.at("scores").items()) {
            r.candidate_scores[static_cast<Index>(std::stoul(key))] = number_from_json(value);
        }
        r.config_echo = j.at("config");
        r.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed selection record: ") + e.what());
    }
    validate_selection(r);
    return r;
}

inline void save_selection(const SelectionResult& r, const std::filesystem::path& path) {
    write_file(path, encode_selection(r));
}

inline SelectionResult load_selection(const std::filesystem::path& path) { return decode_selection(read_file(path)); }

} // namespace deuce

#endif // DEUCE_TENSOR_IO_HPP
