#include "biofuse/error.hpp"
#include "biofuse/models.hpp"
#include "biofuse/solvers.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

using namespace biofuse;

namespace {

Dataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
    Dataset d;
    d.X = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) d.X(i, j) = rows[i][j];
        d.y.push_back(labels[i] > 0 ? Label::Case : Label::Control);
        d.sample_ids.push_back("S" + std::to_string(i));
    }
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
        d.column_tags.push_back(SourceTag::Panel);
        d.column_names.push_back("f" + std::to_string(j));
    }
    return d;
}

std::vector<double> random_point(Rng& rng, std::size_t p, double scale = 2.0) {
    return testing::random_vector(rng, p, scale);
}

std::vector<ModelSpec> all_specs() {
    std::vector<ModelSpec> specs;
    for (ModelKind k : {ModelKind::Svm, ModelKind::RandomForest, ModelKind::Cart, ModelKind::NaiveBayes,
                        ModelKind::Logistic}) {
        ModelSpec s;
        s.kind = k;
        s.n_trees = 25;
        s.seed = 3;
        specs.push_back(s);
    }
    return specs;
}

} // namespace

TEST_CASE("SVM on two symmetric points") {
    const auto d = make_dataset({{-1.0}, {1.0}}, {-1, 1});
    const auto m = train_linear_svm(d, 1e6);
    const double lo = predict_score(m, std::vector<double>{-1.0});
    const double hi = predict_score(m, std::vector<double>{1.0});
    CHECK(lo == doctest::Approx(-hi).epsilon(1e-9));
    CHECK(std::abs(predict_score(m, std::vector<double>{0.0})) <= 1e-9);
}

TEST_CASE("SVM matches the analytic max-margin hyperplane on four points") {
    Rng rng(21);
    int checked = 0;
    while (checked < 25) {
        std::vector<std::vector<double>> rows;
        std::vector<int> y{1, 1, -1, -1};
        for (int i = 0; i < 4; ++i) {
            const double off = y[static_cast<std::size_t>(i)] > 0 ? 1.5 : -1.5;
            rows.push_back({testing::gauss(rng) + off, testing::gauss(rng) + 0.5 * off});
        }
        const auto d = make_dataset(rows, y);
        // The model works in standardised coordinates; the oracle sees the same points.
        const auto st = Standardizer::fit(d.X);
        std::vector<std::array<double, 2>> z;
        for (const auto& r : rows) {
            const auto v = st.apply(r);
            z.push_back({v[0], v[1]});
        }
        const auto expect = oracle::max_margin_2d(z, y);
        if (!expect) continue;
        const auto m = train_linear_svm(d, 1e6);
        const auto& lm = m.as<LinearModel>();
        CHECK(lm.converged);
        CHECK(lm.w[0] == doctest::Approx(expect->w1).epsilon(1e-4));
        CHECK(lm.w[1] == doctest::Approx(expect->w2).epsilon(1e-4));
        CHECK(std::abs(lm.w0 - expect->b) <= 1e-4 * std::max(1.0, std::abs(expect->b)));
        ++checked;
    }
}

TEST_CASE("SVM dual solution beats random feasible multipliers") {
    Rng rng(22);
    const auto d = testing::gaussian_dataset(rng, 40, 3, 1.0);
    const double C = 1.0;
    const auto m = train_linear_svm(d, C);
    const auto& lm = m.as<LinearModel>();
    const Matrix K = solvers::gram_matrix(lm.standardizer.apply(d.X));
    const double best = solvers::svm_dual_objective(K, d.y, lm.alpha);
    for (int s = 0; s < 1000; ++s) {
        std::vector<double> a(d.n_samples());
        double pos = 0.0, neg = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = C * uniform01(rng);
            (is_case(d.y[i]) ? pos : neg) += a[i];
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (pos > neg && is_case(d.y[i])) a[i] *= neg / pos;
            if (neg > pos && !is_case(d.y[i])) a[i] *= pos / neg;
        }
        CHECK(solvers::svm_dual_objective(K, d.y, a) <= best + 1e-9);
    }
    // KKT conditions on the stored multipliers.
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        const double margin = sign_of(d.y[i]) * lm.decision(d.X.row(i));
        if (lm.alpha[i] <= 1e-9) CHECK(margin >= 1.0 - 1e-3);
        else if (lm.alpha[i] >= C - 1e-9) CHECK(margin <= 1.0 + 1e-3);
        else CHECK(margin == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("SVM score grows along the normal and vanishes on the hyperplane") {
    Rng rng(23);
    const auto d = testing::gaussian_dataset(rng, 30, 4, 1.2);
    const auto m = train_linear_svm(d);
    const auto [w, w0] = m.as<LinearModel>().original_space();
    std::vector<double> x = random_point(rng, 4);
    double prev = predict_score(m, x);
    for (int step = 0; step < 10; ++step) {
        for (std::size_t j = 0; j < 4; ++j) x[j] += 0.1 * w[j];
        const double now = predict_score(m, x);
        CHECK(now > prev);
        prev = now;
    }
    // Project a point onto the hyperplane.
    std::vector<double> y = random_point(rng, 4);
    double ww = 0.0, val = w0;
    for (std::size_t j = 0; j < 4; ++j) {
        ww += w[j] * w[j];
        val += w[j] * y[j];
    }
    for (std::size_t j = 0; j < 4; ++j) y[j] -= val / ww * w[j];
    CHECK(std::abs(predict_score(m, y)) <= 1e-9);
}

TEST_CASE("linear models are invariant to column scaling") {
    Rng rng(24);
    const auto d = testing::gaussian_dataset(rng, 50, 3, 0.8);
    auto scaled = d;
    for (std::size_t i = 0; i < d.n_samples(); ++i) scaled.X(i, 1) *= 37.0;
    for (ModelKind k : {ModelKind::Svm, ModelKind::Logistic}) {
        ModelSpec s;
        s.kind = k;
        const auto a = train_model(d, s);
        const auto b = train_model(scaled, s);
        for (int t = 0; t < 200; ++t) {
            auto x = random_point(rng, 3);
            auto xs = x;
            xs[1] *= 37.0;
            CHECK(predict_label(a, x) == predict_label(b, xs));
        }
    }
}

TEST_CASE("random forest with one unbootstrapped tree equals CART") {
    Rng rng(25);
    const auto d = testing::gaussian_dataset(rng, 60, 4, 0.7);
    const auto rf = train_random_forest(d, 1, 4, 9, false);
    const auto cart = train_cart(d);
    for (int t = 0; t < 500; ++t) {
        const auto x = random_point(rng, 4);
        CHECK(predict_label(rf, x) == predict_label(cart, x));
    }
}

TEST_CASE("random forest vote ratios") {
    const auto d = make_dataset({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {-1.0, -1.0}, {-1.0, -1.0}, {-1.0, -1.0}},
                                {1, 1, 1, -1, -1, -1});
    const auto rf = train_random_forest(d, 50, std::nullopt, 4);
    // A bootstrap sample may miss one class entirely; the rest vote case on a case sample.
    CHECK(predict_score(rf, d.X.row(0)) >= 0.9);

    Forest f;
    for (int t = 0; t < 10; ++t) {
        DecisionTree tree;
        TreeNode leaf;
        leaf.n_case = t < 7 ? 3 : 1;
        leaf.n_control = t < 7 ? 1 : 3;
        tree.nodes.push_back(leaf);
        f.trees.push_back(tree);
    }
    const TrainedModel m(f, 2);
    const std::vector<double> x{0.0, 0.0};
    CHECK(predict_score(m, x) == doctest::Approx(0.7));
    CHECK(predict_label(m, x) == Label::Case);

    Forest half;
    for (int t = 0; t < 4; ++t) {
        DecisionTree tree;
        TreeNode leaf;
        leaf.n_case = t < 2 ? 2 : 0;
        leaf.n_control = t < 2 ? 0 : 2;
        tree.nodes.push_back(leaf);
        half.trees.push_back(tree);
    }
    const TrainedModel tie(half, 2);
    CHECK(predict_score(tie, x) == 0.5);
    CHECK(predict_label(tie, x) == Label::Control);
}

TEST_CASE("random forest is deterministic in its seed and thread count") {
    Rng rng(26);
    const auto d = testing::gaussian_dataset(rng, 40, 6, 0.5);
    const auto a = train_random_forest(d, 30, std::nullopt, 77, true, 1);
    const auto b = train_random_forest(d, 30, std::nullopt, 77, true, 4);
    const auto c = train_random_forest(d, 30, std::nullopt, 78, true, 1);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.to_json() != c.to_json());
    for (const auto& tree : a.as<Forest>().trees)
        for (const auto& node : tree.nodes)
            if (node.is_leaf()) CHECK(node.n_case + node.n_control >= 1);
}

TEST_CASE("CART splits") {
    const auto d = make_dataset({{1.0}, {2.0}, {3.0}, {10.0}, {11.0}, {12.0}}, {-1, -1, -1, 1, 1, 1});
    const auto m = train_cart(d);
    const auto& tree = m.as<CartModel>().tree;
    CHECK(tree.depth() == 1);
    CHECK(tree.nodes[0].threshold > 3.0);
    CHECK(tree.nodes[0].threshold < 10.0);

    const auto x = make_dataset({{0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}}, {-1, -1, 1, 1});
    const auto xm = train_cart(x);
    CHECK(xm.as<CartModel>().tree.depth() >= 2);
    for (std::size_t i = 0; i < 4; ++i) CHECK(predict_label(xm, x.X.row(i)) == x.y[i]);

    const auto flat = make_dataset({{5.0}, {5.0}, {5.0}, {5.0}, {5.0}}, {1, 1, 1, -1, -1});
    const auto fm = train_cart(flat);
    CHECK(fm.as<CartModel>().tree.nodes.size() == 1);
    CHECK(predict_label(fm, std::vector<double>{5.0}) == Label::Case);
}

TEST_CASE("CART fits duplicate-free training data exactly") {
    Rng rng(27);
    const auto d = testing::gaussian_dataset(rng, 80, 3, 0.3);
    const auto m = train_cart(d);
    for (std::size_t i = 0; i < d.n_samples(); ++i) CHECK(predict_label(m, d.X.row(i)) == d.y[i]);
}

TEST_CASE("Gaussian naive Bayes") {
    const auto sym = make_dataset({{-2.0}, {-1.0}, {-3.0}, {2.0}, {1.0}, {3.0}}, {-1, -1, -1, 1, 1, 1});
    const auto sm = train_gaussian_nb(sym);
    CHECK(std::abs(predict_score(sm, std::vector<double>{0.0})) <= 1e-12);

    const std::vector<double> xs{0.5, 1.0, 2.5, 3.0, 4.5, 6.0};
    const auto hand = make_dataset({{xs[0]}, {xs[1]}, {xs[2]}, {xs[3]}, {xs[4]}, {xs[5]}}, {-1, -1, -1, -1, 1, 1});
    const auto hm = train_gaussian_nb(hand);
    const double mc = (0.5 + 1.0 + 2.5 + 3.0) / 4.0;
    const double vc = ((0.5 - mc) * (0.5 - mc) + (1.0 - mc) * (1.0 - mc) + (2.5 - mc) * (2.5 - mc) +
                       (3.0 - mc) * (3.0 - mc)) / 4.0;
    const double mp = 5.25, vp = 0.5625;
    auto pdf = [](double x, double m, double v) { return std::exp(-(x - m) * (x - m) / (2 * v)) / std::sqrt(2 * M_PI * v); };
    for (double q : {-1.0, 0.0, 2.0, 3.7, 5.0, 8.0}) {
        const double expect = std::log((2.0 / 6.0) * pdf(q, mp, vp)) - std::log((4.0 / 6.0) * pdf(q, mc, vc));
        CHECK(predict_score(hm, std::vector<double>{q}) == doctest::Approx(expect).epsilon(1e-9));
    }

    const auto zero = make_dataset({{1.0, 0.1}, {1.0, 0.4}, {1.0, 0.9}, {1.0, 1.3}}, {-1, -1, 1, 1});
    const auto zm = train_gaussian_nb(zero);
    CHECK(std::isfinite(predict_score(zm, std::vector<double>{1.0, 0.7})));
    CHECK(std::isfinite(predict_score(zm, std::vector<double>{2.0, 0.7})));
}

TEST_CASE("logistic gradient matches finite differences") {
    Rng rng(28);
    const auto d = testing::gaussian_dataset(rng, 30, 4, 0.6);
    for (int rep = 0; rep < 20; ++rep) {
        const auto theta = testing::random_vector(rng, 5);
        const double l2 = 0.5 * rep;
        const auto g = solvers::logistic_gradient(d.X, d.y, theta, l2);
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double h = 1e-5;
            auto up = theta, dn = theta;
            up[k] += h;
            dn[k] -= h;
            const double fd = (solvers::logistic_objective(d.X, d.y, up, l2) -
                               solvers::logistic_objective(d.X, d.y, dn, l2)) / (2 * h);
            CHECK(std::abs(fd - g[k]) <= 1e-6 * std::max(1.0, std::abs(g[k])));
        }
    }
}

TEST_CASE("logistic regression limits") {
    const auto sep = make_dataset({{-2.0}, {-1.0}, {1.0}, {2.0}}, {-1, -1, 1, 1});
    const auto m = train_logistic(sep, 0.1);
    CHECK(m.converged());
    for (double w : m.as<LogisticModel>().w) CHECK(std::isfinite(w));

    Rng rng(29);
    auto d = testing::gaussian_dataset(rng, 40, 3, 1.0);
    d.y[1] = Label::Case; // 21 cases, 19 controls
    const auto big = train_logistic(d, 1e9);
    for (double w : big.as<LogisticModel>().w) CHECK(std::abs(w) <= 1e-6);
    CHECK(big.as<LogisticModel>().b == doctest::Approx(std::log(21.0 / 19.0)).epsilon(1e-6));
}

TEST_CASE("label and score agree for every model") {
    Rng rng(30);
    const auto d = testing::gaussian_dataset(rng, 60, 5, 0.8);
    for (const auto& spec : all_specs()) {
        const auto m = train_model(d, spec);
        for (int t = 0; t < 1000; ++t) {
            const auto x = random_point(rng, 5, 3.0);
            const double s = predict_score(m, x);
            CHECK(predict_label(m, x) == label_from_score(s, m.threshold()));
            if (spec.kind == ModelKind::RandomForest || spec.kind == ModelKind::Cart) {
                CHECK(s >= 0.0);
                CHECK(s <= 1.0);
            }
        }
    }
}

TEST_CASE("trained models round-trip through JSON") {
    Rng rng(31);
    const auto d = testing::gaussian_dataset(rng, 40, 3, 0.8);
    for (const auto& spec : all_specs()) {
        const auto m = train_model(d, spec);
        const auto back = TrainedModel::from_json(m.to_json());
        CHECK(back.kind() == m.kind());
        CHECK(back.to_json() == m.to_json());
        for (int t = 0; t < 50; ++t) {
            const auto x = random_point(rng, 3);
            CHECK(predict_score(back, x) == predict_score(m, x));
        }
    }
}

TEST_CASE("model errors") {
    Rng rng(32);
    const auto d = testing::gaussian_dataset(rng, 20, 3, 0.8);
    const auto m = train_linear_svm(d);
    CHECK_THROWS_AS(predict_score(m, std::vector<double>{1.0, 2.0}), Error);

    auto one = d;
    for (auto& y : one.y) y = Label::Case;
    for (const auto& spec : all_specs()) {
        try {
            (void)train_model(one, spec);
            FAIL("expected SingleClass");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SingleClass);
        }
    }
    CHECK(model_kind_from_string(to_string(ModelKind::NaiveBayes)) == ModelKind::NaiveBayes);
}
