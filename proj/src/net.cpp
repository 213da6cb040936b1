#include "tsgen/net.hpp"

#include <cmath>

#include "tsgen/errors.hpp"

namespace tsgen {

void Linear::init(std::size_t in, std::size_t out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    w.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    }
    // Uniform bias init; an exactly-zero bias parks dropped-out samples on
    // the activation kink.
    const double b_limit = 1.0 / std::sqrt(static_cast<double>(in));
    b.resize(static_cast<Eigen::Index>(out));
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = rng.uniform(-b_limit, b_limit);
    zero_grad();
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) const {
    return (w * x).colwise() + b;
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy) {
    dw.noalias() += dy * x.transpose();
    db.noalias() += dy.rowwise().sum();
    return w.transpose() * dy;
}

void Linear::zero_grad() {
    dw = Eigen::MatrixXd::Zero(w.rows(), w.cols());
    db = Eigen::VectorXd::Zero(b.size());
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", w.data(), dw.data(), static_cast<std::size_t>(w.size())});
    out.push_back({prefix + ".b", b.data(), db.data(), static_cast<std::size_t>(b.size())});
}

void BatchNorm::init(std::size_t dim) {
    gamma = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim));
    shift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    running_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    running_var = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim));
    zero_grad();
}

Eigen::MatrixXd BatchNorm::forward_train(const Eigen::MatrixXd& x, Cache& cache) {
    const double n = static_cast<double>(x.cols());
    const Eigen::VectorXd mean = x.rowwise().mean();
    const Eigen::MatrixXd centered = x.colwise() - mean;
    const Eigen::VectorXd var = centered.array().square().rowwise().mean();
    cache.inv_std = (var.array() + eps).rsqrt();
    cache.xhat = centered.array().colwise() * cache.inv_std.array();

    running_mean = (1.0 - momentum) * running_mean + momentum * mean;
    const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
    running_var = (1.0 - momentum) * running_var + momentum * unbias * var;

    return (cache.xhat.array().colwise() * gamma.array()).colwise() + shift.array();
}

Eigen::MatrixXd BatchNorm::forward_eval(const Eigen::MatrixXd& x) const {
    const Eigen::VectorXd inv_std = (running_var.array() + eps).rsqrt();
    const Eigen::MatrixXd xhat = (x.colwise() - running_mean).array().colwise() * inv_std.array();
    return (xhat.array().colwise() * gamma.array()).colwise() + shift.array();
}

Eigen::MatrixXd BatchNorm::backward(const Cache& cache, const Eigen::MatrixXd& dy) {
    const double n = static_cast<double>(dy.cols());
    dgamma.noalias() += (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
    dshift.noalias() += dy.rowwise().sum();

    const Eigen::MatrixXd dxhat = dy.array().colwise() * gamma.array();
    const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
    const Eigen::VectorXd sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().sum();

    Eigen::MatrixXd dx = n * dxhat;
    dx.colwise() -= sum_dxhat;
    dx.array() -= cache.xhat.array().colwise() * sum_dxhat_xhat.array();
    dx.array() = dx.array().colwise() * (cache.inv_std.array() / n);
    return dx;
}

void BatchNorm::zero_grad() {
    dgamma = Eigen::VectorXd::Zero(gamma.size());
    dshift = Eigen::VectorXd::Zero(shift.size());
}

void BatchNorm::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back(
        {prefix + ".gamma", gamma.data(), dgamma.data(), static_cast<std::size_t>(gamma.size())});
    out.push_back(
        {prefix + ".shift", shift.data(), dshift.data(), static_cast<std::size_t>(shift.size())});
}

void Adam::step(std::vector<ParamRef>& params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size)));
            v_.emplace_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size)));
        }
    }
    if (m_.size() != params.size()) throw NumericError("Adam: parameter list changed size");
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, t_);
    const double bc2 = 1.0 - std::pow(config_.beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        Eigen::Map<Eigen::VectorXd> value(p.value, static_cast<Eigen::Index>(p.size));
        Eigen::Map<const Eigen::VectorXd> grad(p.grad, static_cast<Eigen::Index>(p.size));
        const Eigen::VectorXd g = grad + config_.weight_decay * value;
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
        value.array() -= config_.lr * (m_[i].array() / bc1) /
                         ((v_[i].array() / bc2).sqrt() + config_.eps);
    }
}

GradientCheckResult finite_difference_check(const std::function<double()>& loss,
                                            const std::function<void()>& compute_grads,
                                            std::vector<ParamRef>& params, double h) {
    compute_grads();
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) {
        analytic.emplace_back(p.grad, p.grad + p.size);
    }

    GradientCheckResult result;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        for (std::size_t j = 0; j < p.size; ++j) {
            const double saved = p.value[j];
            p.value[j] = saved + h;
            const double up = loss();
            p.value[j] = saved - h;
            const double down = loss();
            p.value[j] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = analytic[i][j];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-4});
            ++result.n_params;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = params[i].name + "[" + std::to_string(j) + "]";
            }
        }
    }
    return result;
}

}  // namespace tsgen
