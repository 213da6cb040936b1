#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsgen/rng.hpp"

namespace tsgen {

// Flat view of a trainable buffer; optimizers and the finite-difference
// checker walk these.
struct ParamRef {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t size = 0;
};

// Dense layer, batch stored column-wise (features x batch).
struct Linear {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
    Eigen::MatrixXd dw;
    Eigen::VectorXd db;

    void init(std::size_t in, std::size_t out, Rng& rng);
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    // Accumulates dw/db and returns dx; x must be the forward input.
    Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct BatchNorm {
    Eigen::VectorXd gamma, shift;
    Eigen::VectorXd running_mean, running_var;
    Eigen::VectorXd dgamma, dshift;
    double momentum = 0.1;
    double eps = 1e-5;

    struct Cache {
        Eigen::MatrixXd xhat;
        Eigen::VectorXd inv_std;
    };

    void init(std::size_t dim);
    Eigen::MatrixXd forward_train(const Eigen::MatrixXd& x, Cache& cache);
    Eigen::MatrixXd forward_eval(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& dy);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
};

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

class Adam {
public:
    explicit Adam(AdamConfig config) : config_(config) {}
    void step(std::vector<ParamRef>& params);

private:
    AdamConfig config_;
    std::vector<Eigen::VectorXd> m_, v_;
    long t_ = 0;
};

// Central-difference check of analytic gradients. `loss` must be a pure
// function of the parameter values (noise re-derived from fixed seeds);
// `compute_grads` fills the grads for the current values.
struct GradientCheckResult {
    double max_rel_error = 0.0;
    std::size_t n_params = 0;
    std::string worst_param;
};

GradientCheckResult finite_difference_check(const std::function<double()>& loss,
                                            const std::function<void()>& compute_grads,
                                            std::vector<ParamRef>& params, double h = 1e-5);

}  // namespace tsgen
