#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tsgen/dataset.hpp"
#include "tsgen/net.hpp"

namespace tsgen {

struct MlpConfig {
    std::size_t hidden = 200;
    std::size_t max_iter = 500;  // epochs over the training set
    std::size_t batch = 200;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

// One-hidden-layer ReLU classifier with softmax cross-entropy, mini-batch
// Adam, features standardized by the training mean/std.
class MlpClassifier {
public:
    void fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
             const MlpConfig& config);
    int predict(const Eigen::VectorXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;

    const std::vector<double>& loss_history() const { return loss_history_; }

    // Gradient-check hooks on the standardized batch loss.
    double batch_loss(const Eigen::MatrixXd& x_std, const std::vector<int>& y);
    void batch_grads(const Eigen::MatrixXd& x_std, const std::vector<int>& y);
    std::vector<ParamRef> params();
    void init_net(std::size_t d, std::size_t hidden, int n_classes, Rng& rng);

private:
    Linear l1_, l2_;
    Eigen::VectorXd mean_, std_;
    int n_classes_ = 2;
    std::vector<double> loss_history_;

    Eigen::MatrixXd standardized(const Eigen::MatrixXd& x) const;
};

MlpClassifier fit_mlp_classifier(const SampleTable& train, const MlpConfig& config);
std::vector<int> mlp_predict_table(const MlpClassifier& mlp, const SampleTable& table);

}  // namespace tsgen
