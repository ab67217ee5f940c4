#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

#include "advattrib/adversary.hpp"
#include "advattrib/corpus.hpp"
#include "advattrib/error.hpp"
#include "advattrib/models.hpp"
#include "advattrib/serialization.hpp"
#include "advattrib/ssga.hpp"
#include "advattrib/stats.hpp"

namespace py = pybind11;
using namespace advattrib;

namespace {

std::vector<LabeledVector> labeled(const std::vector<std::vector<double>>& rows, const std::vector<AuthorId>& labels) {
    if (rows.size() != labels.size()) {
        throw ShapeError("rows and labels differ in length");
    }
    std::vector<LabeledVector> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != kAlphabetSize) {
            throw ShapeError("feature rows must have 95 entries");
        }
        LabeledVector v;
        std::copy(rows[i].begin(), rows[i].end(), v.features.values.begin());
        v.author = labels[i];
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<double> to_list(const FeatureArray& a) {
    return {a.begin(), a.end()};
}

FeatureMask mask_arg(const std::optional<std::string>& bits) {
    return bits ? mask_from_string(*bits) : full_mask();
}

}  // namespace

PYBIND11_MODULE(_advattrib, m) {
    m.doc() = "Authorship attribution, feature-mask evolution and adversarial evaluation";

    py::register_exception<Error>(m, "AdvattribError", PyExc_RuntimeError);

    py::class_<CorpusConfig>(m, "CorpusConfig")
        .def(py::init<>())
        .def_readwrite("num_authors", &CorpusConfig::numAuthors)
        .def_readwrite("samples_per_author", &CorpusConfig::samplesPerAuthor)
        .def_readwrite("chars_per_sample", &CorpusConfig::charsPerSample)
        .def_readwrite("seed", &CorpusConfig::seed)
        .def_readwrite("author_id_base", &CorpusConfig::authorIdBase)
        .def_readwrite("concentration", &CorpusConfig::concentration);

    py::class_<Document>(m, "Document")
        .def(py::init([](std::string docId, std::optional<AuthorId> author, std::string text) {
                 return Document{std::move(docId), author, std::move(text)};
             }),
             py::arg("doc_id"), py::arg("author_id"), py::arg("text"))
        .def_readwrite("doc_id", &Document::docId)
        .def_readwrite("author_id", &Document::authorId)
        .def_readwrite("text", &Document::text);

    m.def("generate_corpus", &generate_corpus, py::arg("config"));
    m.def("generate_heldout", &generate_heldout, py::arg("config"), py::arg("per_author"), py::arg("stream"));
    m.def(
        "extract_unigrams",
        [](const std::string& text) { return to_list(extract_unigrams(Document{"", std::nullopt, text}).values); },
        py::arg("text"));

    py::class_<TrainedModel>(m, "TrainedModel")
        .def_property_readonly("kind", [](const TrainedModel& t) { return std::string(to_string(t.kind)); })
        .def_readonly("labels", &TrainedModel::labels)
        .def_readonly("converged", &TrainedModel::converged)
        .def_property_readonly("mask", [](const TrainedModel& t) { return mask_to_string(t.mask); })
        .def("to_json", [](const TrainedModel& t) { return dump(to_json(t)); });

    m.def(
        "train",
        [](const std::string& kind, const std::vector<std::vector<double>>& rows, const std::vector<AuthorId>& labels,
           const std::optional<std::string>& mask, std::uint64_t seed) {
            TrainConfig c;
            c.svm.seed = seed;
            c.ffnn.seed = seed;
            return train(parse_model_kind(kind), c, labeled(rows, labels), mask_arg(mask), PipelineSpec{});
        },
        py::arg("kind"), py::arg("rows"), py::arg("labels"), py::arg("mask") = py::none(), py::arg("seed") = 0);
    m.def(
        "predict",
        [](const TrainedModel& model, const std::vector<double>& counts) { return predict(model, counts); },
        py::arg("model"), py::arg("counts"));
    m.def(
        "accuracy",
        [](const TrainedModel& model, const std::vector<std::vector<double>>& rows,
           const std::vector<AuthorId>& labels) { return evaluate_accuracy(model, labeled(rows, labels)); },
        py::arg("model"), py::arg("rows"), py::arg("labels"));
    m.def(
        "load_model", [](const std::string& text) { return model_from_json(nlohmann::json::parse(text)); },
        py::arg("json_text"));

    py::class_<GaRunResult>(m, "GaRunResult")
        .def_property_readonly("best_mask", [](const GaRunResult& r) { return mask_to_string(r.best.mask); })
        .def_property_readonly("best_fitness", [](const GaRunResult& r) { return r.best.fitness; })
        .def_readonly("evaluations_used", &GaRunResult::evaluationsUsed)
        .def_property_readonly("trace",
                               [](const GaRunResult& r) {
                                   std::vector<std::pair<std::size_t, double>> out;
                                   for (const auto& p : r.fitnessTrace) {
                                       out.emplace_back(p.evaluation, p.bestFitness);
                                   }
                                   return out;
                               })
        .def("masks_json", [](const GaRunResult& r) { return masks_json(r.population); });

    m.def(
        "run_ssga",
        [](const std::function<double(const std::string&)>& fitness, std::uint64_t seed, std::size_t populationSize,
           double mutationRate, std::size_t maxEvaluations, double targetFitness) {
            GaConfig c;
            c.seed = seed;
            c.populationSize = populationSize;
            c.mutationRate = mutationRate;
            c.maxEvaluations = maxEvaluations;
            c.targetFitness = targetFitness;
            return run_ssga(c, [&](const FeatureMask& mk) { return fitness(mask_to_string(mk)); });
        },
        py::arg("fitness"), py::arg("seed") = 0, py::arg("population_size") = 30, py::arg("mutation_rate") = 0.5,
        py::arg("max_evaluations") = 1000, py::arg("target_fitness") = 0.99754);

    auto st = m.def_submodule("stats", "ANOVA, F-test, t-tests and equivalence classes");
    st.def("t_cdf", &stats::t_cdf, py::arg("t"), py::arg("df"));
    st.def("f_cdf", &stats::f_cdf, py::arg("f"), py::arg("df1"), py::arg("df2"));
    st.def("t_quantile", &stats::t_quantile, py::arg("p"), py::arg("df"));
    st.def("f_quantile", &stats::f_quantile, py::arg("p"), py::arg("df1"), py::arg("df2"));
    st.def(
        "anova",
        [](const std::map<std::string, std::vector<double>>& groups, double alpha) {
            std::vector<stats::Sample> samples;
            for (const auto& [name, values] : groups) {
                samples.push_back({name, values});
            }
            const auto r = stats::anova_single_factor(samples, alpha);
            return py::dict(py::arg("f") = r.fStat, py::arg("p") = r.pValue, py::arg("f_crit") = r.fCrit,
                            py::arg("df_between") = r.dfBetween, py::arg("df_within") = r.dfWithin);
        },
        py::arg("groups"), py::arg("alpha") = 0.05);
    st.def(
        "t_test",
        [](const std::vector<double>& a, const std::vector<double>& b, bool pooled, double alpha) {
            const stats::Sample sa{"a", a};
            const stats::Sample sb{"b", b};
            const auto r = pooled ? stats::t_test_pooled(sa, sb, alpha) : stats::t_test_welch(sa, sb, alpha);
            return py::dict(py::arg("t") = r.tStat, py::arg("df") = r.df, py::arg("p_two_tail") = r.pTwoTail,
                            py::arg("p_one_tail") = r.pOneTail);
        },
        py::arg("a"), py::arg("b"), py::arg("pooled") = true, py::arg("alpha") = 0.05);
    st.def(
        "equivalence_classes",
        [](const std::vector<std::pair<std::string, std::vector<double>>>& groups, double alpha) {
            std::vector<stats::Sample> samples;
            for (const auto& [name, values] : groups) {
                samples.push_back({name, values});
            }
            return stats::equivalence_classes(samples, alpha).classes;
        },
        py::arg("groups"), py::arg("alpha") = 0.05);
}
