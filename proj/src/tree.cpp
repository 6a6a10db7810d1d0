#include "biofuse/error.hpp"
#include "biofuse/models.hpp"
#include "biofuse/parallel.hpp"
#include "biofuse/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace biofuse {

namespace {

// n * Gini impurity of a node with c cases out of n.
double weighted_gini(double c, double n) {
    if (n <= 0) return 0.0;
    return n - (c * c + (n - c) * (n - c)) / n;
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
};

class TreeGrower {
public:
    TreeGrower(const Matrix& X, std::span<const Label> y, std::size_t mtry, Rng* rng)
        : X_(X), y_(y), mtry_(mtry), rng_(rng), order_(X.cols()) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }

    DecisionTree grow(std::vector<std::size_t> root_samples) {
        DecisionTree tree;
        struct Pending {
            int node;
            std::vector<std::size_t> samples;
        };
        std::vector<Pending> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, std::move(root_samples)});
        while (!stack.empty()) {
            Pending job = std::move(stack.back());
            stack.pop_back();
            std::size_t cases = 0;
            for (std::size_t s : job.samples) cases += is_case(y_[s]);
            TreeNode& node = tree.nodes[static_cast<std::size_t>(job.node)];
            node.n_case = cases;
            node.n_control = job.samples.size() - cases;
            if (cases == 0 || cases == job.samples.size()) continue;

            const Split best = find_split(job.samples);
            if (best.feature < 0) continue;

            std::vector<std::size_t> left, right;
            for (std::size_t s : job.samples)
                (X_(s, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(s);

            const int l = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            TreeNode& parent = tree.nodes[static_cast<std::size_t>(job.node)];
            parent.feature = best.feature;
            parent.threshold = best.threshold;
            parent.left = l;
            parent.right = l + 1;
            stack.push_back({l + 1, std::move(right)});
            stack.push_back({l, std::move(left)});
        }
        return tree;
    }

private:
    // Best Gini split; ties go to the lower feature index, then the lower threshold.
    // A zero-gain split is still taken when the node is impure.
    Split find_split(const std::vector<std::size_t>& samples) {
        const std::size_t p = X_.cols();
        Split best;
        const bool sample_features = rng_ != nullptr && mtry_ < p;
        std::size_t evaluated = 0;
        for (std::size_t k = 0; k < p; ++k) {
            std::size_t f = k;
            if (sample_features) {
                if (evaluated >= mtry_) break;
                const std::size_t pick = k + uniform_index(*rng_, p - k);
                std::swap(order_[k], order_[pick]);
                f = order_[k];
            }
            if (evaluate_feature(samples, f, best)) ++evaluated;
        }
        if (sample_features) std::iota(order_.begin(), order_.end(), std::size_t{0});
        return best;
    }

    // Returns false when the feature is constant on this node.
    bool evaluate_feature(const std::vector<std::size_t>& samples, std::size_t f, Split& best) {
        column_.clear();
        for (std::size_t s : samples) column_.emplace_back(X_(s, f), is_case(y_[s]));
        std::sort(column_.begin(), column_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (column_.front().first == column_.back().first) return false;

        double total_case = 0;
        for (const auto& [v, c] : column_) total_case += c;
        const double n = static_cast<double>(column_.size());
        double left_case = 0;
        for (std::size_t k = 0; k + 1 < column_.size(); ++k) {
            left_case += column_[k].second;
            const double a = column_[k].first;
            const double b = column_[k + 1].first;
            if (!(a < b)) continue;
            const double nl = static_cast<double>(k + 1);
            const double imp = weighted_gini(left_case, nl) + weighted_gini(total_case - left_case, n - nl);
            const int fi = static_cast<int>(f);
            if (imp < best.impurity || (imp == best.impurity && fi < best.feature)) {
                double thr = a + 0.5 * (b - a);
                if (!(thr < b)) thr = a;
                best = {fi, thr, imp};
            }
        }
        return true;
    }

    const Matrix& X_;
    std::span<const Label> y_;
    std::size_t mtry_;
    Rng* rng_;
    std::vector<std::size_t> order_;
    std::vector<std::pair<double, bool>> column_;
};

} // namespace

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    std::size_t k = 0;
    while (!nodes[k].is_leaf()) {
        const auto& nd = nodes[k];
        k = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
    }
    return nodes[k];
}

double DecisionTree::case_fraction(std::span<const double> x) const {
    const auto& leaf = leaf_for(x);
    const auto total = leaf.n_case + leaf.n_control;
    return total == 0 ? 0.0 : static_cast<double>(leaf.n_case) / static_cast<double>(total);
}

bool DecisionTree::votes_case(std::span<const double> x) const {
    const auto& leaf = leaf_for(x);
    return leaf.n_case > leaf.n_control;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t deepest = 0;
    while (!stack.empty()) {
        auto [k, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes[k].is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(nodes[k].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes[k].right), d + 1);
        }
    }
    return deepest;
}

double Forest::vote_ratio(std::span<const double> x) const {
    if (trees.empty()) return 0.0;
    std::size_t votes = 0;
    for (const auto& t : trees) votes += t.votes_case(x);
    return static_cast<double>(votes) / static_cast<double>(trees.size());
}

TrainedModel train_cart(const Dataset& d) {
    d.require_trainable();
    std::vector<std::size_t> all(d.n_samples());
    std::iota(all.begin(), all.end(), std::size_t{0});
    TreeGrower grower(d.X, d.y, d.n_features(), nullptr);
    CartModel m{grower.grow(std::move(all))};
    return TrainedModel(std::move(m), d.n_features());
}

TrainedModel train_random_forest(const Dataset& d, int n_trees, std::optional<int> mtry, std::uint64_t seed,
                                 bool bootstrap, unsigned threads) {
    d.require_trainable();
    if (n_trees < 1) fail(ErrorCode::ConfigInvalid, "random forest needs at least one tree");
    const std::size_t p = d.n_features();
    int m = mtry.value_or(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p)))));
    m = std::clamp(m, 1, static_cast<int>(std::max<std::size_t>(p, 1)));

    Forest forest;
    forest.mtry = m;
    forest.seed = seed;
    forest.bootstrap = bootstrap;
    forest.trees.resize(static_cast<std::size_t>(n_trees));
    const std::size_t n = d.n_samples();
    parallel_for(
        forest.trees.size(),
        [&](std::size_t t) {
            Rng rng(derive_seed(seed, t));
            std::vector<std::size_t> samples(n);
            if (bootstrap) {
                for (auto& s : samples) s = uniform_index(rng, n);
            } else {
                std::iota(samples.begin(), samples.end(), std::size_t{0});
            }
            TreeGrower grower(d.X, d.y, static_cast<std::size_t>(m), &rng);
            forest.trees[t] = grower.grow(std::move(samples));
        },
        threads);
    return TrainedModel(std::move(forest), p);
}

} // namespace biofuse
