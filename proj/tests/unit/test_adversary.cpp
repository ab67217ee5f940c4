#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "advattrib/adversary.hpp"
#include "advattrib/config.hpp"
#include "advattrib/error.hpp"
#include "advattrib/experiment.hpp"

using namespace advattrib;

namespace {

// Scores class 1 by count('a') - count('b') and class 2 by the negation.
TrainedModel ab_surrogate() {
    TrainedModel m;
    m.kind = ModelKind::Lsvm;
    m.labels = {1, 2};
    m.pipeline = Pipeline::from_parts(PipelineSpec{false, false, false}, std::nullopt, std::nullopt);
    m.mask = full_mask();
    LinearSvmParams p;
    p.weights = Matrix(2, kAlphabetSize);
    p.weights(0, *alphabet_index('a')) = 1.0;
    p.weights(0, *alphabet_index('b')) = -1.0;
    p.weights(1, *alphabet_index('a')) = -1.0;
    p.weights(1, *alphabet_index('b')) = 1.0;
    p.bias = {0.0, 0.0};
    m.params = p;
    return m;
}

std::size_t hamming(const std::string& a, const std::string& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] != b[i];
    }
    return d;
}

// Answers with a fixed function of the text and counts every call.
class CountingOracle : public ClassificationOracle {
public:
    AuthorId classify(const Document& doc) override {
        ++calls;
        seen.push_back(doc.docId);
        return doc.text.size() % 2 == 0 ? 1000 : 1001;
    }
    std::size_t calls = 0;
    std::vector<std::string> seen;
};

class CountingTarget : public TargetSystem {
public:
    explicit CountingTarget(const TrainedModel& m) : model_(&m) {}
    std::unique_ptr<TargetSession> open_session(std::uint64_t) const override {
        ++sessions;
        return std::make_unique<Session>(*model_, calls);
    }
    mutable std::size_t sessions = 0;
    mutable std::size_t calls = 0;

private:
    class Session : public TargetSession {
    public:
        Session(const TrainedModel& m, std::size_t& calls) : model_(&m), calls_(&calls) {}
        AuthorId classify(const Document& doc) override {
            ++*calls_;
            return predict(*model_, extract_unigrams(doc));
        }

    private:
        const TrainedModel* model_;
        std::size_t* calls_;
    };
    const TrainedModel* model_;
};

const AppConfig& app() {
    static const AppConfig c = [] {
        AppConfig a;
        a.resolve_seeds();
        return a;
    }();
    return c;
}

const std::vector<Document>& corpus() {
    static const auto docs = generate_corpus(app().corpus);
    return docs;
}

const TrainedModel& lsvm_target() {
    static const auto m = train(ModelKind::Lsvm, app().train, extract_labeled(corpus()), full_mask(),
                                app().pipeline);
    return m;
}

std::vector<Document> public_texts() {
    auto pub = corpus();
    for (auto& d : pub) {
        d.authorId.reset();
    }
    return pub;
}

}  // namespace

TEST_CASE("probing returns one pair per probe in order") {
    CountingOracle oracle;
    CHECK(probe(oracle, std::vector<Document>{}, 10).empty());
    const auto probes = make_probes(public_texts(), 7, AttackConfig{});
    REQUIRE(probes.size() == 7);
    KillChainTrace trace;
    const auto pairs = probe(oracle, probes, 7, &trace);
    REQUIRE(pairs.size() == 7);
    CHECK(oracle.calls == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(oracle.seen[i] == probes[i].docId);
        CHECK(pairs[i].author == (probes[i].text.size() % 2 == 0 ? 1000 : 1001));
    }
    CHECK(trace.records.front().phase == KillChainPhase::Recon);
    CHECK(trace.queries_spent() == 7);
    CHECK_THROWS_AS(probe(oracle, probes, 6), BudgetError);
}

TEST_CASE("probing a deterministic target twice gives the same labels") {
    UndefendedTarget target(lsvm_target());
    const auto probes = make_probes(public_texts(), 20, AttackConfig{});
    auto s1 = target.open_session(1);
    auto s2 = target.open_session(2);
    const auto a = probe(*s1, probes, 20);
    const auto b = probe(*s2, probes, 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(a[i].author == b[i].author);
    }
}

TEST_CASE("probes are public texts with spliced spans") {
    AttackConfig c;
    const auto pub = public_texts();
    const auto probes = make_probes(pub, 150, c);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        CHECK(probes[i].text.size() == pub[i % pub.size()].text.size());
        CHECK_FALSE(probes[i].authorId.has_value());
    }
    c.probeMixMax = 0.0;
    CHECK(make_probes(pub, 3, c)[2].text == pub[2].text);
}

TEST_CASE("surrogate extracts an unmasked linear target") {
    UndefendedTarget target(lsvm_target());
    auto session = target.open_session(0);
    const auto pairs = probe(*session, corpus(), corpus().size());
    AttackConfig c;
    c.surrogateKind = ModelKind::Lsvm;
    const auto fit = fit_surrogate(pairs, c);
    CHECK(fit.heldOut == 20);
    CHECK(fit.trainedOn == 80);
    CHECK(fit.agreement >= 0.9);
    CHECK(fit.agreement <= 1.0);
}

TEST_CASE("surrogate of a separable two-class target agrees fully") {
    std::vector<LabeledVector> pairs;
    for (int i = 0; i < 20; ++i) {
        LabeledVector r;
        r.features.values[*alphabet_index('a')] = 10 + i % 5;
        r.features.values[*alphabet_index('b')] = 1;
        r.author = 1;
        if (i % 2 == 1) {
            std::swap(r.features.values[*alphabet_index('a')], r.features.values[*alphabet_index('b')]);
            r.author = 2;
        }
        pairs.push_back(r);
    }
    AttackConfig c;
    c.surrogateKind = ModelKind::Lsvm;
    CHECK(fit_surrogate(pairs, c).agreement == 1.0);

    for (auto& p : pairs) {
        p.author = 1;
    }
    CHECK_THROWS_AS(fit_surrogate(pairs, c), TrainingError);
}

TEST_CASE("one substitution flips a point one edit from the boundary") {
    AttackConfig c;
    c.editFraction = 0.5;
    c.confidence = 0.0;
    const Document doc{"toy", std::nullopt, "aab"};
    const auto r = craft_adversarial(ab_surrogate(), doc, c);
    CHECK(r.originalLabel == 1);
    CHECK(r.flipped);
    CHECK(r.finalLabel == 2);
    CHECK(r.substitutions == 1);
    CHECK(extract_unigrams(r.document).values[*alphabet_index('b')] == 2.0);
}

TEST_CASE("a zero edit budget leaves the document unchanged") {
    AttackConfig c;
    c.editFraction = 1e-6;
    const auto& doc = corpus()[3];
    const auto r = craft_adversarial(ab_surrogate(), doc, c);
    CHECK(r.document.text == doc.text);
    CHECK(r.substitutions == 0);
}

TEST_CASE("crafting respects the edit budget and the alphabet") {
    UndefendedTarget target(lsvm_target());
    auto session = target.open_session(0);
    AttackConfig c;
    const auto pairs = probe(*session, make_probes(public_texts(), 120, c), 120);
    const auto fit = fit_surrogate(pairs, c);
    for (double ef : {0.01, 0.05}) {
        c.editFraction = ef;
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& doc = corpus()[i * 17];
            const auto r = craft_adversarial(fit.model, doc, c);
            CHECK(r.document.text.size() == doc.text.size());
            CHECK(hamming(r.document.text, doc.text) <= static_cast<std::size_t>(ef * doc.text.size()));
            CHECK(hamming(r.document.text, doc.text) == r.substitutions);
            for (char ch : r.document.text) {
                CHECK(alphabet_index(ch).has_value());
            }
        }
    }
}

TEST_CASE("targeted crafting aims for the chosen author") {
    AttackConfig c;
    c.editFraction = 0.5;
    c.confidence = 0.0;
    c.targetAuthor = 2;
    const auto r = craft_adversarial(ab_surrogate(), Document{"t", std::nullopt, "aaab"}, c);
    CHECK(r.finalLabel == 2);
    CHECK(r.flipped);
}

TEST_CASE("attack config validation") {
    AttackConfig c;
    c.probeBudget = 20;
    CHECK_THROWS_AS(c.validate(25), ConfigError);
    c = {};
    c.surrogateKind = ModelKind::RbfSvm;
    CHECK_THROWS_AS(c.validate(25), ConfigError);
    c = {};
    c.editFraction = 0.0;
    CHECK_THROWS_AS(c.validate(25), ConfigError);
    CHECK_NOTHROW(AttackConfig{}.validate(25));
}

TEST_CASE("kill chain: phases, budget and the no-op attack") {
    CountingTarget target(lsvm_target());
    const auto attack = generate_heldout(app().corpus, 1, "attack");
    AttackConfig c;
    c.editFraction = 1e-6;
    const auto dir = std::filesystem::temp_directory_path() / "advattrib_killchain";
    std::filesystem::remove_all(dir);
    const auto report = run_kill_chain(target, public_texts(), attack, c, &dir);

    CHECK(report.trace.complete_and_ordered());
    CHECK(report.trace.queries_spent() <= c.probeBudget);
    CHECK(report.trace.queries_spent() == c.probeBudget);
    // Harness baseline pass plus the attacker's session.
    CHECK(target.sessions == 2);
    CHECK(target.calls == c.probeBudget + attack.size());
    CHECK(report.accuracyDropPct == 0.0);
    CHECK(report.attackLabels == report.baselineLabels);
    CHECK(report.accuracyDropPct == (report.baselineAccuracy - report.underAttackAccuracy) * 100.0);

    REQUIRE(report.adversarialFiles.size() == 25);
    CHECK(report.adversarialFiles.front() == "advText00.txt");
    CHECK(report.adversarialFiles.back() == "advText24.txt");
    CHECK(std::filesystem::exists(dir / "advText24.txt"));
    CHECK(std::filesystem::exists(dir / "surrogate.json"));
    CHECK(std::filesystem::exists(dir / "attack_session.json"));
    const auto listing = read_text_file(dir / "AdversarialTests.txt");
    CHECK(listing.rfind("advText00.txt\nadvText01.txt\n", 0) == 0);
    CHECK(std::count(listing.begin(), listing.end(), '\n') == 25);
    std::filesystem::remove_all(dir);

    const auto json = attack_report_json(report);
    CHECK(json.find("\"accuracyDropPct\"") != std::string::npos);
    CHECK(json.find("\"CommandControl\"") != std::string::npos);
}

TEST_CASE("phase order check") {
    KillChainTrace t;
    for (auto p : {KillChainPhase::Recon, KillChainPhase::Weaponization, KillChainPhase::Delivery,
                   KillChainPhase::Exploitation, KillChainPhase::Installation,
                   KillChainPhase::CommandControl, KillChainPhase::Action}) {
        t.log({p, 0, std::nullopt, std::nullopt, ""});
    }
    CHECK(t.complete_and_ordered());
    std::swap(t.records[1], t.records[2]);
    CHECK_FALSE(t.complete_and_ordered());
    CHECK(to_string(KillChainPhase::CommandControl) == "CommandControl");
}
