#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tsgen/dataset.hpp"

namespace tsgen {

// Binary CART with Gini impurity. Thresholds sit at midpoints of consecutive
// distinct sorted values; ties resolve to the lower feature index, then the
// lower threshold; leaves predict the majority class (ties to the lower
// class index). Splits with no impurity decrease are not taken.
class DecisionTree {
public:
    void fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes, int max_depth);
    int predict(const Eigen::VectorXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        int feature = -1;       // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int label = 0;
    };
    std::vector<Node> nodes_;

    int build(const Eigen::MatrixXd& x, const std::vector<int>& y,
              std::vector<std::size_t>& indices, int n_classes, int depth, int max_depth);
};

// Table adapter: features from continuous feature-role columns, labels from
// the label column.
DecisionTree fit_decision_tree(const SampleTable& train, int max_depth);
std::vector<int> tree_predict_table(const DecisionTree& tree, const SampleTable& table);

}  // namespace tsgen
