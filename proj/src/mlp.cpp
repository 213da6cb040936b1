#include "tsgen/mlp.hpp"

#include <cmath>
#include <numeric>

#include "tsgen/errors.hpp"
#include "tsgen/pca.hpp"

namespace tsgen {

namespace {

// Columnwise log-softmax cross-entropy; returns loss and writes dlogits.
double softmax_ce(const Eigen::MatrixXd& logits, const std::vector<int>& y,
                  const std::vector<std::size_t>& batch, Eigen::MatrixXd* dlogits) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double mx = logits.col(c).maxCoeff();
        const Eigen::VectorXd e = (logits.col(c).array() - mx).exp();
        const double z = e.sum();
        const int label = y[batch[static_cast<std::size_t>(c)]];
        loss -= inv_b * (logits(label, c) - mx - std::log(z));
        if (dlogits) {
            dlogits->col(c) = inv_b * (e / z);
            (*dlogits)(label, c) -= inv_b;
        }
    }
    return loss;
}

}  // namespace

void MlpClassifier::init_net(std::size_t d, std::size_t hidden, int n_classes, Rng& rng) {
    n_classes_ = n_classes;
    l1_.init(d, hidden, rng);
    l2_.init(hidden, static_cast<std::size_t>(n_classes), rng);
    if (mean_.size() != static_cast<Eigen::Index>(d)) {
        mean_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        std_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d));
    }
}

Eigen::MatrixXd MlpClassifier::standardized(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd z(x.cols(), x.rows());  // transpose to features x batch
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        z.col(r) = ((x.row(r).transpose() - mean_).array() / std_.array()).matrix();
    }
    return z;
}

double MlpClassifier::batch_loss(const Eigen::MatrixXd& x_std, const std::vector<int>& y) {
    std::vector<std::size_t> all(static_cast<std::size_t>(x_std.cols()));
    std::iota(all.begin(), all.end(), 0);
    const Eigen::MatrixXd h = l1_.forward(x_std).cwiseMax(0.0);
    return softmax_ce(l2_.forward(h), y, all, nullptr);
}

void MlpClassifier::batch_grads(const Eigen::MatrixXd& x_std, const std::vector<int>& y) {
    std::vector<std::size_t> all(static_cast<std::size_t>(x_std.cols()));
    std::iota(all.begin(), all.end(), 0);
    l1_.zero_grad();
    l2_.zero_grad();
    const Eigen::MatrixXd z1 = l1_.forward(x_std);
    const Eigen::MatrixXd h = z1.cwiseMax(0.0);
    Eigen::MatrixXd dlogits;
    softmax_ce(l2_.forward(h), y, all, &dlogits);
    Eigen::MatrixXd dh = l2_.backward(h, dlogits);
    dh.array() *= (z1.array() > 0.0).cast<double>();
    l1_.backward(x_std, dh);
}

std::vector<ParamRef> MlpClassifier::params() {
    std::vector<ParamRef> out;
    l1_.collect("mlp.l1", out);
    l2_.collect("mlp.l2", out);
    return out;
}

void MlpClassifier::fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                        const MlpConfig& config) {
    if (x.rows() == 0) throw DataError("mlp: empty training set");
    if (static_cast<std::size_t>(x.rows()) != y.size()) {
        throw DataError("mlp: feature/label size mismatch");
    }
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());

    mean_ = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean_.transpose();
    std_ = (centered.array().square().colwise().sum() / std::max(1.0, static_cast<double>(n - 1)))
               .sqrt()
               .transpose();
    for (Eigen::Index i = 0; i < std_.size(); ++i) {
        if (std_(i) < 1e-12) std_(i) = 1.0;
    }

    Rng rng(derive_seed(config.seed, 0xA11CE));
    init_net(d, config.hidden, n_classes, rng);

    // Standardize once, batch columns drawn per epoch.
    const Eigen::MatrixXd z = standardized(x);
    Adam adam({config.lr, 0.9, 0.999, 1e-8, 0.0});
    auto param_refs = params();
    const std::size_t batch = std::min(config.batch, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    loss_history_.clear();
    for (std::size_t epoch = 0; epoch < config.max_iter; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, 1 + epoch));
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start + batch <= n; start += batch) {
            Eigen::MatrixXd xb(z.rows(), static_cast<Eigen::Index>(batch));
            std::vector<int> yb(batch);
            for (std::size_t i = 0; i < batch; ++i) {
                xb.col(static_cast<Eigen::Index>(i)) =
                    z.col(static_cast<Eigen::Index>(order[start + i]));
                yb[i] = y[order[start + i]];
            }
            std::vector<std::size_t> all(batch);
            std::iota(all.begin(), all.end(), 0);

            l1_.zero_grad();
            l2_.zero_grad();
            const Eigen::MatrixXd z1 = l1_.forward(xb);
            const Eigen::MatrixXd h = z1.cwiseMax(0.0);
            Eigen::MatrixXd dlogits;
            const double loss = softmax_ce(l2_.forward(h), yb, all, &dlogits);
            if (!std::isfinite(loss)) {
                throw NumericError("mlp: non-finite loss at epoch " + std::to_string(epoch));
            }
            Eigen::MatrixXd dh = l2_.backward(h, dlogits);
            dh.array() *= (z1.array() > 0.0).cast<double>();
            l1_.backward(xb, dh);
            adam.step(param_refs);
            epoch_loss += loss;
            ++steps;
        }
        loss_history_.push_back(steps ? epoch_loss / static_cast<double>(steps) : 0.0);
    }
}

int MlpClassifier::predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = ((x - mean_).array() / std_.array()).matrix();
    const Eigen::VectorXd h = (l1_.w * z + l1_.b).cwiseMax(0.0);
    const Eigen::VectorXd logits = l2_.w * h + l2_.b;
    Eigen::Index arg = 0;
    logits.maxCoeff(&arg);
    return static_cast<int>(arg);
}

std::vector<int> MlpClassifier::predict(const Eigen::MatrixXd& x) const {
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out[static_cast<std::size_t>(r)] = predict(Eigen::VectorXd(x.row(r)));
    }
    return out;
}

MlpClassifier fit_mlp_classifier(const SampleTable& train, const MlpConfig& config) {
    const std::size_t label = label_column(train.schema);
    const Eigen::MatrixXd x = feature_matrix(train);
    std::vector<int> y(train.n_rows());
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
        y[r] = static_cast<int>(train.rows[r][label]);
    }
    MlpClassifier mlp;
    mlp.fit(x, y, static_cast<int>(train.schema[label].categories.size()), config);
    return mlp;
}

std::vector<int> mlp_predict_table(const MlpClassifier& mlp, const SampleTable& table) {
    return mlp.predict(feature_matrix(table));
}

}  // namespace tsgen
