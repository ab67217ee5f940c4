#include "advattrib/serialization.hpp"

#include "advattrib/error.hpp"

namespace advattrib {

namespace {

template <typename Array>
Json array_json(const Array& a) {
    Json out = Json::array();
    for (const auto& v : a) {
        out.push_back(v);
    }
    return out;
}

template <std::size_t N>
std::array<double, N> fixed_array(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != N) {
        throw IoError("expected an array of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = j[i].get<double>();
    }
    return out;
}

Json matrix_json(const Matrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"data", array_json(m.data)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) {
        throw IoError("matrix data does not match its shape");
    }
    return m;
}

template <typename F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed artifact: ") + e.what());
    }
}

}  // namespace

Json to_json(const PipelineSpec& spec) {
    return {{"useNormalization", spec.useNormalization},
            {"useStandardization", spec.useStandardization},
            {"useTfidf", spec.useTfidf}};
}

PipelineSpec pipeline_spec_from_json(const nlohmann::json& j) {
    return guarded([&] {
        return PipelineSpec{j.at("useNormalization").get<bool>(), j.at("useStandardization").get<bool>(),
                            j.at("useTfidf").get<bool>()};
    });
}

Json to_json(const Pipeline& pipeline) {
    Json j;
    j["spec"] = to_json(pipeline.spec());
    if (const auto& t = pipeline.tfidf()) {
        j["tfidf"] = {{"numDocuments", t->numDocuments},
                      {"documentFrequency", array_json(t->documentFrequency)},
                      {"idf", array_json(t->idf)}};
    } else {
        j["tfidf"] = nullptr;
    }
    if (const auto& s = pipeline.scaler()) {
        j["scaler"] = {{"fittedOn", s->fittedOn}, {"mean", array_json(s->mean)},
                       {"stdDev", array_json(s->stdDev)}};
    } else {
        j["scaler"] = nullptr;
    }
    return j;
}

Pipeline pipeline_from_json(const nlohmann::json& j) {
    return guarded([&] {
        const auto spec = pipeline_spec_from_json(j.at("spec"));
        std::optional<TfidfModel> tfidf;
        if (!j.at("tfidf").is_null()) {
            const auto& t = j.at("tfidf");
            TfidfModel m;
            m.numDocuments = t.at("numDocuments").get<std::size_t>();
            const auto df = t.at("documentFrequency").get<std::vector<std::size_t>>();
            if (df.size() != kAlphabetSize) {
                throw IoError("documentFrequency must have 95 entries");
            }
            std::copy(df.begin(), df.end(), m.documentFrequency.begin());
            m.idf = fixed_array<kAlphabetSize>(t.at("idf"));
            tfidf = m;
        }
        std::optional<ScalerParams> scaler;
        if (!j.at("scaler").is_null()) {
            const auto& s = j.at("scaler");
            ScalerParams p;
            p.fittedOn = s.at("fittedOn").get<std::size_t>();
            p.mean = fixed_array<kAlphabetSize>(s.at("mean"));
            p.stdDev = fixed_array<kAlphabetSize>(s.at("stdDev"));
            scaler = p;
        }
        return Pipeline::from_parts(spec, tfidf, scaler);
    });
}

Json to_json(const TrainConfig& config) {
    const auto& s = config.svm;
    const auto& f = config.ffnn;
    Json svm = {{"c", s.c},
                {"gamma", s.gamma ? Json(*s.gamma) : Json("scale")},
                {"maxPasses", s.maxPasses},
                {"tolerance", s.tolerance},
                {"seed", s.seed}};
    Json ffnn = {{"hiddenUnits", f.hiddenUnits},
                 {"maxIterations", f.maxIterations},
                 {"learningRate", f.learningRate},
                 {"batchSize", f.batchSize},
                 {"l2", f.l2},
                 {"tolerance", f.tolerance},
                 {"patience", f.patience},
                 {"optimizer", f.optimizer == Optimizer::Adam ? "adam" : "sgd"},
                 {"seed", f.seed}};
    return {{"svm", svm}, {"ffnn", ffnn}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    return guarded([&] {
        TrainConfig c;
        if (j.contains("svm")) {
            const auto& s = j.at("svm");
            c.svm.c = s.value("c", c.svm.c);
            if (s.contains("gamma") && s.at("gamma").is_number()) {
                c.svm.gamma = s.at("gamma").get<double>();
            }
            c.svm.maxPasses = s.value("maxPasses", c.svm.maxPasses);
            c.svm.tolerance = s.value("tolerance", c.svm.tolerance);
            c.svm.seed = s.value("seed", c.svm.seed);
        }
        if (j.contains("ffnn")) {
            const auto& f = j.at("ffnn");
            c.ffnn.hiddenUnits = f.value("hiddenUnits", c.ffnn.hiddenUnits);
            c.ffnn.maxIterations = f.value("maxIterations", c.ffnn.maxIterations);
            c.ffnn.learningRate = f.value("learningRate", c.ffnn.learningRate);
            c.ffnn.batchSize = f.value("batchSize", c.ffnn.batchSize);
            c.ffnn.l2 = f.value("l2", c.ffnn.l2);
            c.ffnn.tolerance = f.value("tolerance", c.ffnn.tolerance);
            c.ffnn.patience = f.value("patience", c.ffnn.patience);
            c.ffnn.optimizer = f.value("optimizer", std::string("adam")) == "sgd" ? Optimizer::Sgd
                                                                                  : Optimizer::Adam;
            c.ffnn.seed = f.value("seed", c.ffnn.seed);
        }
        if (!(c.svm.c > 0.0) || !(c.svm.tolerance > 0.0)) {
            throw ConfigError("svm c and tolerance must be positive");
        }
        if (c.ffnn.hiddenUnits < 1 || c.ffnn.maxIterations < 1) {
            throw ConfigError("ffnn hiddenUnits and maxIterations must be at least 1");
        }
        return c;
    });
}

Json to_json(const TrainedModel& model) {
    Json j;
    j["kind"] = std::string(to_string(model.kind));
    j["config"] = to_json(model.config);
    j["labels"] = model.labels;
    j["pipeline"] = to_json(model.pipeline);
    j["mask"] = mask_to_string(model.mask);
    j["converged"] = model.converged;
    j["iterations"] = model.iterations;
    Json params;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LinearSvmParams>) {
                params = {{"weights", matrix_json(p.weights)}, {"bias", array_json(p.bias)}};
            } else if constexpr (std::is_same_v<T, RbfSvmParams>) {
                params = {{"gamma", p.gamma},
                          {"supportVectors", matrix_json(p.supportVectors)},
                          {"dualCoef", matrix_json(p.dualCoef)},
                          {"bias", array_json(p.bias)}};
            } else {
                params = {{"w1", matrix_json(p.w1)},
                          {"b1", array_json(p.b1)},
                          {"w2", matrix_json(p.w2)},
                          {"b2", array_json(p.b2)}};
            }
        },
        model.params);
    j["params"] = params;
    return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
    return guarded([&] {
        TrainedModel m;
        m.kind = parse_model_kind(j.at("kind").get<std::string>());
        m.config = train_config_from_json(j.at("config"));
        m.labels = j.at("labels").get<std::vector<AuthorId>>();
        m.pipeline = pipeline_from_json(j.at("pipeline"));
        m.mask = mask_from_string(j.at("mask").get<std::string>());
        m.converged = j.at("converged").get<bool>();
        m.iterations = j.at("iterations").get<std::size_t>();
        const auto& p = j.at("params");
        const std::size_t active = m.mask.count();
        const std::size_t classes = m.labels.size();
        switch (m.kind) {
            case ModelKind::Lsvm: {
                LinearSvmParams lp;
                lp.weights = matrix_from_json(p.at("weights"));
                lp.bias = p.at("bias").get<std::vector<double>>();
                if (lp.weights.rows != classes || lp.weights.cols != active || lp.bias.size() != classes) {
                    throw IoError("LSVM parameter shapes do not match labels and mask");
                }
                m.params = std::move(lp);
                break;
            }
            case ModelKind::RbfSvm: {
                RbfSvmParams rp;
                rp.gamma = p.at("gamma").get<double>();
                rp.supportVectors = matrix_from_json(p.at("supportVectors"));
                rp.dualCoef = matrix_from_json(p.at("dualCoef"));
                rp.bias = p.at("bias").get<std::vector<double>>();
                if (rp.supportVectors.cols != active || rp.dualCoef.rows != classes ||
                    rp.dualCoef.cols != rp.supportVectors.rows || rp.bias.size() != classes) {
                    throw IoError("RBFSVM parameter shapes do not match labels and mask");
                }
                m.params = std::move(rp);
                break;
            }
            case ModelKind::Ffnn: {
                FfnnParams fp;
                fp.w1 = matrix_from_json(p.at("w1"));
                fp.b1 = p.at("b1").get<std::vector<double>>();
                fp.w2 = matrix_from_json(p.at("w2"));
                fp.b2 = p.at("b2").get<std::vector<double>>();
                if (fp.w1.cols != active || fp.w2.rows != classes || fp.w2.cols != fp.w1.rows ||
                    fp.b1.size() != fp.w1.rows || fp.b2.size() != classes) {
                    throw IoError("FFNN parameter shapes do not match labels and mask");
                }
                m.params = std::move(fp);
                break;
            }
        }
        return m;
    });
}

Json to_json(const MaskBank& bank) {
    Json j;
    j["switchSeed"] = bank.switchSeed;
    Json masks = Json::array();
    for (std::size_t i = 0; i < bank.masks.size(); ++i) {
        masks.push_back({{"bits", mask_to_string(bank.masks[i])},
                         {"fitness", i < bank.fitness.size() ? bank.fitness[i] : 0.0}});
    }
    j["masks"] = masks;
    Json models = Json::array();
    for (const auto& m : bank.models) {
        models.push_back(to_json(m));
    }
    j["models"] = models;
    return j;
}

MaskBank bank_from_json(const nlohmann::json& j) {
    return guarded([&] {
        MaskBank bank;
        bank.switchSeed = j.at("switchSeed").get<std::uint64_t>();
        for (const auto& m : j.at("masks")) {
            bank.masks.push_back(mask_from_string(m.at("bits").get<std::string>()));
            bank.fitness.push_back(m.at("fitness").get<double>());
        }
        for (const auto& m : j.at("models")) {
            bank.models.push_back(model_from_json(m));
        }
        if (bank.masks.size() != bank.models.size() || bank.masks.empty()) {
            throw IoError("mask bank needs one model per mask");
        }
        for (std::size_t i = 0; i < bank.masks.size(); ++i) {
            if (bank.models[i].mask != bank.masks[i]) {
                throw IoError("bank model " + std::to_string(i) + " was not trained under its mask");
            }
        }
        return bank;
    });
}

Json to_json(const NormalcyBaseline& b) {
    Json j;
    j["labels"] = b.labels;
    Json means = Json::array();
    Json vars = Json::array();
    for (std::size_t c = 0; c < b.labels.size(); ++c) {
        means.push_back(array_json(b.classMeans[c]));
        vars.push_back(array_json(b.classVariances[c]));
    }
    j["classMeans"] = means;
    j["classVariances"] = vars;
    j["classPriors"] = array_json(b.classPriors);
    j["globalCharDist"] = array_json(b.globalCharDist);
    j["divergenceThreshold"] = b.divergenceThreshold;
    j["marginThreshold"] = b.marginThreshold;
    j["pipeline"] = to_json(b.pipeline);
    return j;
}

NormalcyBaseline baseline_from_json(const nlohmann::json& j) {
    return guarded([&] {
        NormalcyBaseline b;
        b.labels = j.at("labels").get<std::vector<AuthorId>>();
        for (const auto& m : j.at("classMeans")) {
            b.classMeans.push_back(fixed_array<kAlphabetSize>(m));
        }
        for (const auto& v : j.at("classVariances")) {
            b.classVariances.push_back(fixed_array<kAlphabetSize>(v));
        }
        b.classPriors = j.at("classPriors").get<std::vector<double>>();
        b.globalCharDist = fixed_array<kAlphabetSize>(j.at("globalCharDist"));
        b.divergenceThreshold = j.at("divergenceThreshold").get<double>();
        b.marginThreshold = j.at("marginThreshold").get<double>();
        b.pipeline = pipeline_from_json(j.at("pipeline"));
        const auto k = b.labels.size();
        if (b.classMeans.size() != k || b.classVariances.size() != k || b.classPriors.size() != k) {
            throw IoError("baseline class statistics do not match its labels");
        }
        return b;
    });
}

std::string dump(const Json& j) {
    return j.dump(2) + "\n";
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse " + path.string() + ": " + e.what());
    }
}

void save_json_file(const std::filesystem::path& path, const Json& j) {
    write_text_file(path, dump(j));
}

}  // namespace advattrib
