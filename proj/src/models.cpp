#include "biofuse/models.hpp"

#include "biofuse/error.hpp"

#include <json.hpp>

#include <cmath>

namespace biofuse {

using nlohmann::json;

const char* to_string(ModelKind kind) noexcept {
    switch (kind) {
    case ModelKind::Svm: return "svm";
    case ModelKind::RandomForest: return "rf";
    case ModelKind::Cart: return "cart";
    case ModelKind::NaiveBayes: return "nb";
    case ModelKind::Logistic: return "logreg";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "svm") return ModelKind::Svm;
    if (s == "rf") return ModelKind::RandomForest;
    if (s == "cart") return ModelKind::Cart;
    if (s == "nb") return ModelKind::NaiveBayes;
    if (s == "logreg") return ModelKind::Logistic;
    fail(ErrorCode::ConfigInvalid, "unknown model kind '" + s + "'");
}

Standardizer Standardizer::fit(const Matrix& X) {
    Standardizer st;
    const std::size_t n = X.rows();
    const std::size_t p = X.cols();
    st.mean.assign(p, 0.0);
    st.scale.assign(p, 1.0);
    if (n == 0) return st;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) st.mean[j] += X(i, j);
    for (double& m : st.mean) m /= static_cast<double>(n);
    if (n < 2) return st;
    for (std::size_t j = 0; j < p; ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (X(i, j) - st.mean[j]) * (X(i, j) - st.mean[j]);
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        st.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return st;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
    return z;
}

Matrix Standardizer::apply(const Matrix& X) const {
    Matrix Z(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < X.cols(); ++j) Z(i, j) = (X(i, j) - mean[j]) / scale[j];
    return Z;
}

ModelKind TrainedModel::kind() const noexcept {
    switch (impl_.index()) {
    case 0: return ModelKind::Svm;
    case 1: return ModelKind::RandomForest;
    case 2: return ModelKind::Cart;
    case 3: return ModelKind::NaiveBayes;
    default: return ModelKind::Logistic;
    }
}

double TrainedModel::threshold() const noexcept {
    const auto k = kind();
    return (k == ModelKind::RandomForest || k == ModelKind::Cart) ? 0.5 : 0.0;
}

bool TrainedModel::converged() const noexcept {
    if (const auto* m = std::get_if<LinearModel>(&impl_)) return m->converged;
    if (const auto* m = std::get_if<LogisticModel>(&impl_)) return m->converged;
    return true;
}

double TrainedModel::score(std::span<const double> x) const {
    if (x.size() != dim_)
        fail(ErrorCode::DimensionMismatch,
             "model expects " + std::to_string(dim_) + " features, got " + std::to_string(x.size()));
    struct Visitor {
        std::span<const double> x;
        double operator()(const LinearModel& m) const { return m.decision(x); }
        double operator()(const Forest& m) const { return m.vote_ratio(x); }
        double operator()(const CartModel& m) const { return m.tree.case_fraction(x); }
        double operator()(const GaussianNB& m) const { return m.log_odds(x); }
        double operator()(const LogisticModel& m) const { return m.linear_predictor(x); }
    };
    return std::visit(Visitor{x}, impl_);
}

Label TrainedModel::label(std::span<const double> x) const {
    return label_from_score(score(x), threshold());
}

TrainedModel train_model(const Dataset& d, const ModelSpec& spec) {
    switch (spec.kind) {
    case ModelKind::Svm: return train_linear_svm(d, spec.C);
    case ModelKind::RandomForest: return train_random_forest(d, spec.n_trees, spec.mtry, spec.seed, spec.bootstrap);
    case ModelKind::Cart: return train_cart(d);
    case ModelKind::NaiveBayes: return train_gaussian_nb(d);
    case ModelKind::Logistic: return train_logistic(d, spec.l2);
    }
    fail(ErrorCode::ConfigInvalid, "unknown model kind");
}

double predict_score(const TrainedModel& m, std::span<const double> x) {
    return m.score(x);
}

Label predict_label(const TrainedModel& m, std::span<const double> x) {
    return m.label(x);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr int kModelFormatVersion = 1;

json standardizer_json(const Standardizer& s) {
    return {{"mean", s.mean}, {"scale", s.scale}};
}

Standardizer standardizer_from(const json& j) {
    return {j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
}

json tree_json(const DecisionTree& t) {
    json nodes = json::array();
    for (const auto& nd : t.nodes)
        nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.n_case, nd.n_control});
    return nodes;
}

DecisionTree tree_from(const json& j) {
    DecisionTree t;
    for (const auto& e : j) {
        TreeNode nd;
        nd.feature = e.at(0).get<int>();
        nd.threshold = e.at(1).get<double>();
        nd.left = e.at(2).get<int>();
        nd.right = e.at(3).get<int>();
        nd.n_case = e.at(4).get<std::size_t>();
        nd.n_control = e.at(5).get<std::size_t>();
        t.nodes.push_back(nd);
    }
    const auto n = static_cast<int>(t.nodes.size());
    for (const auto& nd : t.nodes)
        if (!nd.is_leaf() && (nd.left <= 0 || nd.right <= 0 || nd.left >= n || nd.right >= n))
            fail(ErrorCode::Parse, "tree node references a missing child");
    if (t.nodes.empty()) fail(ErrorCode::Parse, "tree without nodes");
    return t;
}

} // namespace

std::string TrainedModel::to_json() const {
    json j;
    j["format"] = "biofuse.model";
    j["version"] = kModelFormatVersion;
    j["kind"] = biofuse::to_string(kind());
    j["dimension"] = dim_;
    struct Visitor {
        json& j;
        void operator()(const LinearModel& m) const {
            j["w"] = m.w;
            j["w0"] = m.w0;
            j["standardizer"] = standardizer_json(m.standardizer);
            j["alpha"] = m.alpha;
            j["C"] = m.C;
            j["converged"] = m.converged;
            j["iterations"] = m.iterations;
            j["kkt_gap"] = m.kkt_gap;
        }
        void operator()(const Forest& m) const {
            j["mtry"] = m.mtry;
            j["seed"] = m.seed;
            j["bootstrap"] = m.bootstrap;
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_json(t));
            j["trees"] = std::move(trees);
        }
        void operator()(const CartModel& m) const { j["tree"] = tree_json(m.tree); }
        void operator()(const GaussianNB& m) const {
            j["mean_case"] = m.mean_case;
            j["var_case"] = m.var_case;
            j["mean_control"] = m.mean_control;
            j["var_control"] = m.var_control;
            j["log_prior_case"] = m.log_prior_case;
            j["log_prior_control"] = m.log_prior_control;
            j["var_floor"] = m.var_floor;
        }
        void operator()(const LogisticModel& m) const {
            j["w"] = m.w;
            j["b"] = m.b;
            j["standardizer"] = standardizer_json(m.standardizer);
            j["l2"] = m.l2;
            j["converged"] = m.converged;
            j["iterations"] = m.iterations;
            j["grad_norm"] = m.grad_norm;
        }
    };
    std::visit(Visitor{j}, impl_);
    return j.dump();
}

TrainedModel TrainedModel::from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.value("format", "") != "biofuse.model") fail(ErrorCode::Parse, "not a model document");
        if (j.at("version").get<int>() != kModelFormatVersion)
            fail(ErrorCode::Parse, "unsupported model format version");
        const auto dim = j.at("dimension").get<std::size_t>();
        switch (model_kind_from_string(j.at("kind").get<std::string>())) {
        case ModelKind::Svm: {
            LinearModel m;
            m.w = j.at("w").get<std::vector<double>>();
            m.w0 = j.at("w0").get<double>();
            m.standardizer = standardizer_from(j.at("standardizer"));
            m.alpha = j.at("alpha").get<std::vector<double>>();
            m.C = j.at("C").get<double>();
            m.converged = j.at("converged").get<bool>();
            m.iterations = j.at("iterations").get<std::size_t>();
            m.kkt_gap = j.at("kkt_gap").get<double>();
            return TrainedModel(std::move(m), dim);
        }
        case ModelKind::RandomForest: {
            Forest m;
            m.mtry = j.at("mtry").get<int>();
            m.seed = j.at("seed").get<std::uint64_t>();
            m.bootstrap = j.at("bootstrap").get<bool>();
            for (const auto& t : j.at("trees")) m.trees.push_back(tree_from(t));
            return TrainedModel(std::move(m), dim);
        }
        case ModelKind::Cart:
            return TrainedModel(CartModel{tree_from(j.at("tree"))}, dim);
        case ModelKind::NaiveBayes: {
            GaussianNB m;
            m.mean_case = j.at("mean_case").get<std::vector<double>>();
            m.var_case = j.at("var_case").get<std::vector<double>>();
            m.mean_control = j.at("mean_control").get<std::vector<double>>();
            m.var_control = j.at("var_control").get<std::vector<double>>();
            m.log_prior_case = j.at("log_prior_case").get<double>();
            m.log_prior_control = j.at("log_prior_control").get<double>();
            m.var_floor = j.at("var_floor").get<double>();
            return TrainedModel(std::move(m), dim);
        }
        case ModelKind::Logistic: {
            LogisticModel m;
            m.w = j.at("w").get<std::vector<double>>();
            m.b = j.at("b").get<double>();
            m.standardizer = standardizer_from(j.at("standardizer"));
            m.l2 = j.at("l2").get<double>();
            m.converged = j.at("converged").get<bool>();
            m.iterations = j.at("iterations").get<std::size_t>();
            m.grad_norm = j.at("grad_norm").get<double>();
            return TrainedModel(std::move(m), dim);
        }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("model document: ") + e.what());
    }
    fail(ErrorCode::Parse, "model document: unknown kind");
}

} // namespace biofuse
