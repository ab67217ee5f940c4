#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advattrib {

/// Printable ASCII, 0x20 (space) through 0x7E (tilde).
inline constexpr std::size_t kAlphabetSize = 95;
inline constexpr char kAlphabetFirst = 0x20;
inline constexpr char kAlphabetLast = 0x7e;

using AuthorId = int;
using FeatureArray = std::array<double, kAlphabetSize>;

constexpr std::optional<std::size_t> alphabet_index(char c) noexcept {
    if (c < kAlphabetFirst || c > kAlphabetLast) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(c - kAlphabetFirst);
}

constexpr char alphabet_char(std::size_t index) noexcept {
    return static_cast<char>(kAlphabetFirst + static_cast<int>(index));
}

/// Column label used in CSV headers, e.g. "0x41" for 'A'.
std::string feature_label(std::size_t index);

struct CorpusConfig {
    std::size_t numAuthors = 25;
    std::size_t samplesPerAuthor = 4;
    std::size_t charsPerSample = 2000;
    std::uint64_t seed = 42;
    AuthorId authorIdBase = 1000;
    /// Dirichlet concentration around the shared base distribution. Larger
    /// values make authors harder to tell apart.
    double concentration = 4000.0;

    void validate() const;
    std::size_t document_count() const { return numAuthors * samplesPerAuthor; }
};

struct Document {
    std::string docId;
    std::optional<AuthorId> authorId;
    std::string text;
};

struct FeatureVector {
    std::string docId;
    FeatureArray values{};

    double sum() const;
};

struct LabeledVector {
    FeatureVector features;
    AuthorId author = 0;
};

struct TfidfModel {
    std::array<std::size_t, kAlphabetSize> documentFrequency{};
    std::size_t numDocuments = 0;
    FeatureArray idf{};
};

/// Shared character frequencies every author is perturbed around.
const FeatureArray& base_distribution();

/// Character distribution of one synthetic author. Depends only on the
/// corpus seed, concentration and author index.
FeatureArray author_distribution(const CorpusConfig& config, std::size_t authorIndex);

/// numAuthors x samplesPerAuthor documents, author-major order.
std::vector<Document> generate_corpus(const CorpusConfig& config);

/// Fresh samples from the same authors, drawn from a stream independent of
/// the corpus documents. Used for held-out evaluation and attack texts.
std::vector<Document> generate_heldout(const CorpusConfig& config, std::size_t perAuthor,
                                       std::string_view stream);

FeatureVector extract_unigrams(const Document& doc);
std::vector<LabeledVector> extract_labeled(std::span<const Document> docs);

TfidfModel fit_tfidf(std::span<const FeatureVector> trainVectors);
FeatureVector apply_tfidf(const TfidfModel& model, const FeatureVector& v);

/// Writes <dir>/<authorId>/sampleNN.txt for every document plus corpus.json.
void write_corpus(const std::filesystem::path& dir, const CorpusConfig& config,
                  std::span<const Document> docs);

struct LoadedCorpus {
    CorpusConfig config;
    std::vector<Document> documents;
};

LoadedCorpus read_corpus(const std::filesystem::path& dir);

/// Header "docId,authorId,<95 labels>" then one row per vector.
void write_feature_csv(std::ostream& out, std::span<const LabeledVector> rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace advattrib
