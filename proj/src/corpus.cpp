#include "advattrib/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "advattrib/error.hpp"
#include "advattrib/random.hpp"

namespace advattrib {

namespace fs = std::filesystem;

std::string feature_label(std::size_t index) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02X", static_cast<unsigned>(alphabet_char(index)));
    return buf;
}

void CorpusConfig::validate() const {
    if (numAuthors < 2) {
        throw ConfigError("corpus needs at least 2 authors");
    }
    if (samplesPerAuthor < 2) {
        throw ConfigError("corpus needs at least 2 samples per author");
    }
    if (charsPerSample == 0) {
        throw ConfigError("charsPerSample must be positive");
    }
    if (!(concentration > 0.0) || !std::isfinite(concentration)) {
        throw ConfigError("concentration must be a positive finite number");
    }
}

double FeatureVector::sum() const {
    return std::accumulate(values.begin(), values.end(), 0.0);
}

namespace {

FeatureArray make_base_distribution() {
    // Rough English letter frequencies (percent), a..z.
    constexpr std::array<double, 26> letters = {
        8.17, 1.49, 2.78, 4.25, 12.70, 2.23, 2.02, 6.09, 6.97, 0.15, 0.77, 4.03, 2.41,
        6.75, 7.51, 1.93, 0.10, 5.99, 6.33, 9.06, 2.76, 0.98, 2.36, 0.15, 1.97, 0.07};

    FeatureArray w{};
    w.fill(0.001);
    auto set = [&](char c, double weight) { w[*alphabet_index(c)] = weight; };
    set(' ', 18.0);
    for (std::size_t i = 0; i < letters.size(); ++i) {
        set(static_cast<char>('a' + i), letters[i] * 0.75);
        set(static_cast<char>('A' + i), letters[i] * 0.03);
    }
    for (char d = '0'; d <= '9'; ++d) {
        set(d, 0.1);
    }
    set(',', 1.0);
    set('.', 1.0);
    set('\'', 0.25);
    set('"', 0.2);
    set('-', 0.15);
    set('?', 0.08);
    set(';', 0.05);
    set(':', 0.05);
    set('!', 0.05);
    set('(', 0.04);
    set(')', 0.04);

    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) {
        x /= total;
    }
    return w;
}

std::string sample_text(const FeatureArray& dist, std::size_t length, std::uint64_t seed) {
    FeatureArray cdf{};
    std::partial_sum(dist.begin(), dist.end(), cdf.begin());
    Rng rng(seed);
    std::string text(length, ' ');
    for (auto& ch : text) {
        const double u = uniform01(rng) * cdf.back();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) {
            --it;
        }
        ch = alphabet_char(static_cast<std::size_t>(it - cdf.begin()));
    }
    return text;
}

std::string sample_id(AuthorId author, std::size_t sample) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "a%d_s%02zu", author, sample);
    return buf;
}

std::string sample_file_name(std::size_t sample) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample%02zu.txt", sample);
    return buf;
}

}  // namespace

const FeatureArray& base_distribution() {
    static const FeatureArray base = make_base_distribution();
    return base;
}

FeatureArray author_distribution(const CorpusConfig& config, std::size_t authorIndex) {
    const auto& base = base_distribution();
    Rng rng(derive_seed(config.seed, "author", authorIndex));
    FeatureArray p{};
    double total = 0.0;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        std::gamma_distribution<double> gamma(config.concentration * base[j], 1.0);
        p[j] = gamma(rng);
        total += p[j];
    }
    if (!(total > 0.0)) {
        return base;
    }
    for (double& x : p) {
        x /= total;
    }
    return p;
}

std::vector<Document> generate_corpus(const CorpusConfig& config) {
    config.validate();
    std::vector<Document> docs;
    docs.reserve(config.document_count());
    for (std::size_t a = 0; a < config.numAuthors; ++a) {
        const auto dist = author_distribution(config, a);
        const AuthorId author = config.authorIdBase + static_cast<AuthorId>(a);
        for (std::size_t s = 0; s < config.samplesPerAuthor; ++s) {
            const auto seed = derive_seed(config.seed, "document", a * 1000003ULL + s);
            docs.push_back({sample_id(author, s), author,
                            sample_text(dist, config.charsPerSample, seed)});
        }
    }
    return docs;
}

std::vector<Document> generate_heldout(const CorpusConfig& config, std::size_t perAuthor,
                                       std::string_view stream) {
    config.validate();
    const auto streamSeed = derive_seed(config.seed, stream);
    std::vector<Document> docs;
    docs.reserve(config.numAuthors * perAuthor);
    for (std::size_t a = 0; a < config.numAuthors; ++a) {
        const auto dist = author_distribution(config, a);
        const AuthorId author = config.authorIdBase + static_cast<AuthorId>(a);
        for (std::size_t s = 0; s < perAuthor; ++s) {
            const auto seed = derive_seed(streamSeed, "document", a * 1000003ULL + s);
            docs.push_back({std::string(stream) + "_" + sample_id(author, s), author,
                            sample_text(dist, config.charsPerSample, seed)});
        }
    }
    return docs;
}

FeatureVector extract_unigrams(const Document& doc) {
    if (doc.text.empty()) {
        throw EmptyDocumentError("document '" + doc.docId + "' is empty");
    }
    FeatureVector v;
    v.docId = doc.docId;
    for (char c : doc.text) {
        if (auto j = alphabet_index(c)) {
            v.values[*j] += 1.0;
        }
    }
    return v;
}

std::vector<LabeledVector> extract_labeled(std::span<const Document> docs) {
    std::vector<LabeledVector> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        if (!d.authorId) {
            throw ConfigError("document '" + d.docId + "' has no author label");
        }
        out.push_back({extract_unigrams(d), *d.authorId});
    }
    return out;
}

TfidfModel fit_tfidf(std::span<const FeatureVector> trainVectors) {
    if (trainVectors.empty()) {
        throw FitError("tf-idf needs at least one training vector");
    }
    TfidfModel model;
    model.numDocuments = trainVectors.size();
    for (const auto& v : trainVectors) {
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            if (v.values[j] > 0.0) {
                ++model.documentFrequency[j];
            }
        }
    }
    const double n = static_cast<double>(model.numDocuments);
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        const double df = static_cast<double>(model.documentFrequency[j]);
        model.idf[j] = std::log((1.0 + n) / (1.0 + df)) + 1.0;
    }
    return model;
}

FeatureVector apply_tfidf(const TfidfModel& model, const FeatureVector& v) {
    if (model.numDocuments == 0) {
        throw FitError("tf-idf model is not fitted");
    }
    const double total = v.sum();
    if (!(total > 0.0)) {
        throw EmptyDocumentError("vector '" + v.docId + "' has no in-alphabet characters");
    }
    FeatureVector out;
    out.docId = v.docId;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        out.values[j] = (v.values[j] / total) * model.idf[j];
    }
    return out;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

void write_corpus(const fs::path& dir, const CorpusConfig& config,
                  std::span<const Document> docs) {
    nlohmann::ordered_json manifest;
    manifest["numAuthors"] = config.numAuthors;
    manifest["samplesPerAuthor"] = config.samplesPerAuthor;
    manifest["charsPerSample"] = config.charsPerSample;
    manifest["seed"] = config.seed;
    manifest["authorIdBase"] = config.authorIdBase;
    manifest["concentration"] = config.concentration;
    auto& files = manifest["documents"] = nlohmann::ordered_json::array();

    std::map<AuthorId, std::size_t> nextSample;
    for (const auto& d : docs) {
        if (!d.authorId) {
            throw ConfigError("cannot write unlabeled document '" + d.docId + "' to a corpus");
        }
        const auto sample = nextSample[*d.authorId]++;
        const fs::path rel = fs::path(std::to_string(*d.authorId)) / sample_file_name(sample);
        write_text_file(dir / rel, d.text);
        files.push_back({{"docId", d.docId}, {"authorId", *d.authorId}, {"path", rel.generic_string()}});
    }
    write_text_file(dir / "corpus.json", manifest.dump(2) + "\n");
}

LoadedCorpus read_corpus(const fs::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(dir / "corpus.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed corpus.json in " + dir.string() + ": " + e.what());
    }
    LoadedCorpus out;
    try {
        auto& c = out.config;
        c.numAuthors = manifest.at("numAuthors").get<std::size_t>();
        c.samplesPerAuthor = manifest.at("samplesPerAuthor").get<std::size_t>();
        c.charsPerSample = manifest.at("charsPerSample").get<std::size_t>();
        c.seed = manifest.at("seed").get<std::uint64_t>();
        c.authorIdBase = manifest.at("authorIdBase").get<AuthorId>();
        c.concentration = manifest.at("concentration").get<double>();
        for (const auto& entry : manifest.at("documents")) {
            Document d;
            d.docId = entry.at("docId").get<std::string>();
            d.authorId = entry.at("authorId").get<AuthorId>();
            d.text = read_text_file(dir / entry.at("path").get<std::string>());
            out.documents.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed corpus.json in " + dir.string() + ": " + e.what());
    }
    return out;
}

void write_feature_csv(std::ostream& out, std::span<const LabeledVector> rows) {
    out << "docId,authorId";
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        out << ',' << feature_label(j);
    }
    out << '\n';
    char buf[32];
    for (const auto& row : rows) {
        out << row.features.docId << ',' << row.author;
        for (double x : row.features.values) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace advattrib
