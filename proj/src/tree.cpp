#include "tsgen/tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "tsgen/errors.hpp"
#include "tsgen/pca.hpp"

namespace tsgen {

namespace {

double gini(const std::vector<std::size_t>& counts, double total) {
    double g = 1.0;
    for (const std::size_t c : counts) {
        const double p = static_cast<double>(c) / total;
        g -= p * p;
    }
    return g;
}

int majority(const std::vector<std::size_t>& counts) {
    int best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k) {
        if (counts[k] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    return best;
}

}  // namespace

void DecisionTree::fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                       int max_depth) {
    if (x.rows() == 0) throw DataError("decision tree: empty training set");
    if (static_cast<std::size_t>(x.rows()) != y.size()) {
        throw DataError("decision tree: feature/label size mismatch");
    }
    nodes_.clear();
    std::vector<std::size_t> indices(static_cast<std::size_t>(x.rows()));
    std::iota(indices.begin(), indices.end(), 0);
    build(x, y, indices, n_classes, 0, max_depth);
}

int DecisionTree::build(const Eigen::MatrixXd& x, const std::vector<int>& y,
                        std::vector<std::size_t>& indices, int n_classes, int depth,
                        int max_depth) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (const std::size_t i : indices) counts[static_cast<std::size_t>(y[i])] += 1;
    const double total = static_cast<double>(indices.size());
    const double node_gini = gini(counts, total);

    const int node_id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[static_cast<std::size_t>(node_id)].label = majority(counts);

    if (depth >= max_depth || node_gini == 0.0 || indices.size() < 2) return node_id;

    // Best split: scan each feature over sorted node rows. Zero-gain splits
    // are allowed (the children keep shrinking toward pure leaves).
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = std::numeric_limits<double>::max();
    std::vector<std::size_t> order(indices);
    for (int f = 0; f < x.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = x(static_cast<Eigen::Index>(a), f);
            const double vb = x(static_cast<Eigen::Index>(b), f);
            return va < vb || (va == vb && a < b);
        });
        std::vector<std::size_t> left_counts(static_cast<std::size_t>(n_classes), 0);
        std::vector<std::size_t> right_counts = counts;
        for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
            const auto cls = static_cast<std::size_t>(y[order[pos]]);
            left_counts[cls] += 1;
            right_counts[cls] -= 1;
            const double v = x(static_cast<Eigen::Index>(order[pos]), f);
            const double next = x(static_cast<Eigen::Index>(order[pos + 1]), f);
            if (v == next) continue;
            const double n_left = static_cast<double>(pos + 1);
            const double n_right = total - n_left;
            const double impurity =
                (n_left * gini(left_counts, n_left) + n_right * gini(right_counts, n_right)) /
                total;
            if (impurity < best_impurity) {
                best_impurity = impurity;
                best_feature = f;
                best_threshold = v + 0.5 * (next - v);
            }
        }
    }
    if (best_feature < 0) return node_id;  // nothing reduces impurity

    std::vector<std::size_t> left, right;
    for (const std::size_t i : indices) {
        (x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right)
            .push_back(i);
    }
    nodes_[static_cast<std::size_t>(node_id)].feature = best_feature;
    nodes_[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    const int l = build(x, y, left, n_classes, depth + 1, max_depth);
    nodes_[static_cast<std::size_t>(node_id)].left = l;
    const int r = build(x, y, right, n_classes, depth + 1, max_depth);
    nodes_[static_cast<std::size_t>(node_id)].right = r;
    return node_id;
}

int DecisionTree::predict(const Eigen::VectorXd& x) const {
    if (nodes_.empty()) throw DataError("decision tree: not fitted");
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& n = nodes_[static_cast<std::size_t>(node)];
        node = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(node)].label;
}

std::vector<int> DecisionTree::predict(const Eigen::MatrixXd& x) const {
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out[static_cast<std::size_t>(r)] = predict(Eigen::VectorXd(x.row(r)));
    }
    return out;
}

DecisionTree fit_decision_tree(const SampleTable& train, int max_depth) {
    const std::size_t label = label_column(train.schema);
    const Eigen::MatrixXd x = feature_matrix(train);
    std::vector<int> y(train.n_rows());
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
        y[r] = static_cast<int>(train.rows[r][label]);
    }
    DecisionTree tree;
    tree.fit(x, y, static_cast<int>(train.schema[label].categories.size()), max_depth);
    return tree;
}

std::vector<int> tree_predict_table(const DecisionTree& tree, const SampleTable& table) {
    return tree.predict(feature_matrix(table));
}

}  // namespace tsgen
