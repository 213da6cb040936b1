#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsgen/dataset.hpp"
#include "tsgen/net.hpp"
#include "tsgen/transform.hpp"

namespace tsgen {

struct TrainConfig {
    std::size_t latent_dim = 128;
    std::size_t hidden = 256;
    std::size_t batch = 500;
    std::size_t epochs = 300;
    double lr = 2e-4;
    double gp_lambda = 10.0;
    double dropout = 0.5;
    double tau = 0.2;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.9;
    double weight_decay = 1e-6;
    std::uint64_t seed = 0;

    void validate() const;
};

// Output-head segment of the generator: tanh for beta scalars, softmax over
// every one-hot block (mode indicators and categorical columns).
struct OutputSegment {
    enum class Kind { Tanh, Softmax };
    Kind kind = Kind::Tanh;
    std::size_t offset = 0;
    std::size_t size = 1;
};

class GeneratorNet {
public:
    void init(std::size_t latent_dim, std::size_t cond_dim, std::size_t hidden,
              const Transformer& transformer, Rng& rng);

    struct Cache {
        Eigen::MatrixXd input;
        BatchNorm::Cache bn1, bn2;
        Eigen::MatrixXd h1_in, h1, h2_in, h2;  // pre/post relu
        Eigen::MatrixXd y;                     // activated output
    };

    // Train mode: gumbel-softmax one-hot blocks at temperature tau.
    Eigen::MatrixXd forward_train(const Eigen::MatrixXd& z, const Eigen::MatrixXd& cond,
                                  double tau, Rng& gumbel_rng, Cache& cache);
    // Sample mode: batchnorm running averages, hard argmax one-hot blocks.
    Eigen::MatrixXd forward_sample(const Eigen::MatrixXd& z, const Eigen::MatrixXd& cond) const;

    // dy_critic flows through the activation jacobians; the condition
    // cross-entropy (y - t)/tau lands directly on the conditioned blocks.
    void backward(const Cache& cache, const Eigen::MatrixXd& dy_critic,
                  const Eigen::MatrixXd& cond, double tau, double ce_scale);

    void zero_grad();
    std::vector<ParamRef> params();

    std::size_t latent_dim() const { return latent_dim_; }
    std::size_t output_width() const { return output_width_; }
    const std::vector<OutputSegment>& segments() const { return segments_; }

    // Deserialization hooks: segments first, dims after the weights land.
    void restore_segments(std::vector<OutputSegment> segments) {
        segments_ = std::move(segments);
    }
    void finish_restore(std::size_t latent_dim, std::size_t cond_dim) {
        latent_dim_ = latent_dim;
        cond_dim_ = cond_dim;
        output_width_ = static_cast<std::size_t>(l3.w.rows());
    }

    Linear l1, l2, l3;
    BatchNorm bn1, bn2;

private:
    std::size_t latent_dim_ = 0;
    std::size_t cond_dim_ = 0;
    std::size_t output_width_ = 0;
    std::vector<OutputSegment> segments_;
    std::vector<Transformer::CondTarget> cond_targets_;
};

class DiscriminatorNet {
public:
    void init(std::size_t input_dim, std::size_t hidden, double dropout, Rng& rng);

    struct Cache {
        Eigen::MatrixXd u;
        Eigen::MatrixXd s1, s2;    // leaky-relu slopes
        Eigen::MatrixXd m1, m2;    // dropout masks, pre-scaled by 1/keep
        Eigen::MatrixXd d1, d2;    // post-dropout activations
        Eigen::RowVectorXd score;
    };

    Cache forward(const Eigen::MatrixXd& u, bool train, Rng& dropout_rng) const;
    // Accumulates parameter gradients for sum_b dscore_b * score_b.
    void backward(const Cache& cache, const Eigen::RowVectorXd& dscore);
    // Per-sample input gradient d score / d u (for the generator path).
    Eigen::MatrixXd input_gradient(const Cache& cache) const;
    // WGAN gradient penalty lambda * mean((||grad_u score|| - 1)^2) on an
    // interpolate cache; accumulates parameter gradients, returns the value.
    double gradient_penalty(const Cache& cache, double lambda);

    void zero_grad();
    std::vector<ParamRef> params();

    Linear l1, l2, l3;
    double dropout = 0.5;
    double leak = 0.2;
};

struct CtganModel {
    TrainConfig config;
    GeneratorNet generator;
    DiscriminatorNet discriminator;
    std::uint64_t transformer_fingerprint = 0;
    std::size_t cond_dim = 0;
    std::vector<std::pair<double, double>> loss_history;  // per step (d, g)

    void save(const std::string& path) const;
    static CtganModel load(const std::string& path);
};

CtganModel train_ctgan(const SampleTable& table, const Transformer& transformer,
                       const TrainConfig& config);

struct GenerationCondition {
    std::optional<std::string> stability;
    std::optional<std::string> load_level;
};

SampleTable generate_samples(const CtganModel& model, const Transformer& transformer,
                             std::size_t n, const GenerationCondition& condition,
                             std::uint64_t seed);

// Finite-difference audit of every parameter of a small generator +
// discriminator pair under the full losses (gradient penalty included).
struct CtganGradientReport {
    GradientCheckResult generator;
    GradientCheckResult discriminator;
    std::size_t total_params = 0;
};

CtganGradientReport ctgan_gradient_check(std::uint64_t seed);

}  // namespace tsgen
