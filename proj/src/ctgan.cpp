#include "tsgen/ctgan.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "tsgen/errors.hpp"

namespace tsgen {

void TrainConfig::validate() const {
    const auto bad = [](const std::string& why) { throw ConfigError("train config: " + why); };
    if (latent_dim < 1) bad("latent_dim must be positive");
    if (hidden < 1) bad("hidden must be positive");
    if (batch < 2) bad("batch must be at least 2");
    if (!(lr > 0.0)) bad("lr must be positive");
    if (!(gp_lambda >= 0.0)) bad("gp_lambda must be nonnegative");
    if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
    if (!(tau > 0.0)) bad("tau must be positive");
}

namespace {

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) {
    return x.cwiseMax(0.0);
}

// Columnwise softmax of (x + gumbel noise) / tau over a block.
Eigen::MatrixXd gumbel_softmax(const Eigen::MatrixXd& logits, double tau, Rng& rng) {
    Eigen::MatrixXd h = logits;
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
        for (Eigen::Index r = 0; r < h.rows(); ++r) h(r, c) += rng.gumbel();
    }
    h /= tau;
    const Eigen::RowVectorXd mx = h.colwise().maxCoeff();
    h.rowwise() -= mx;
    h = h.array().exp();
    const Eigen::RowVectorXd z = h.colwise().sum();
    h.array().rowwise() /= z.array();
    return h;
}

// d(softmax)/d(pre) applied to an upstream gradient, scaled by 1/tau.
Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy,
                                 double tau) {
    const Eigen::RowVectorXd dot = (y.array() * dy.array()).colwise().sum();
    Eigen::MatrixXd out = dy;
    out.rowwise() -= dot;
    out.array() *= y.array() / tau;
    return out;
}

}  // namespace

void GeneratorNet::init(std::size_t latent_dim, std::size_t cond_dim, std::size_t hidden,
                        const Transformer& transformer, Rng& rng) {
    latent_dim_ = latent_dim;
    cond_dim_ = cond_dim;
    output_width_ = transformer.encoded_width();
    segments_.clear();
    for (const auto& block : transformer.blocks()) {
        if (block.continuous) {
            segments_.push_back({OutputSegment::Kind::Tanh, block.offset, 1});
            segments_.push_back({OutputSegment::Kind::Softmax, block.offset + 1, block.size - 1});
        } else {
            segments_.push_back({OutputSegment::Kind::Softmax, block.offset, block.size});
        }
    }
    cond_targets_ = transformer.condition_targets();

    l1.init(latent_dim + cond_dim, hidden, rng);
    bn1.init(hidden);
    l2.init(hidden, hidden, rng);
    bn2.init(hidden);
    l3.init(hidden, output_width_, rng);
}

Eigen::MatrixXd GeneratorNet::forward_train(const Eigen::MatrixXd& z,
                                            const Eigen::MatrixXd& cond, double tau,
                                            Rng& gumbel_rng, Cache& cache) {
    if (z.rows() != static_cast<Eigen::Index>(latent_dim_) ||
        cond.rows() != static_cast<Eigen::Index>(cond_dim_) || z.cols() != cond.cols()) {
        throw DataError("generator forward: dimension mismatch");
    }
    cache.input.resize(z.rows() + cond.rows(), z.cols());
    cache.input << z, cond;

    cache.h1_in = bn1.forward_train(l1.forward(cache.input), cache.bn1);
    cache.h1 = relu(cache.h1_in);
    cache.h2_in = bn2.forward_train(l2.forward(cache.h1), cache.bn2);
    cache.h2 = relu(cache.h2_in);
    const Eigen::MatrixXd o = l3.forward(cache.h2);

    cache.y.resize(o.rows(), o.cols());
    for (const auto& seg : segments_) {
        const auto off = static_cast<Eigen::Index>(seg.offset);
        const auto size = static_cast<Eigen::Index>(seg.size);
        if (seg.kind == OutputSegment::Kind::Tanh) {
            cache.y.middleRows(off, size) = o.middleRows(off, size).array().tanh();
        } else {
            cache.y.middleRows(off, size) =
                gumbel_softmax(o.middleRows(off, size), tau, gumbel_rng);
        }
    }
    return cache.y;
}

Eigen::MatrixXd GeneratorNet::forward_sample(const Eigen::MatrixXd& z,
                                             const Eigen::MatrixXd& cond) const {
    if (z.rows() != static_cast<Eigen::Index>(latent_dim_) ||
        cond.rows() != static_cast<Eigen::Index>(cond_dim_) || z.cols() != cond.cols()) {
        throw DataError("generator forward: dimension mismatch");
    }
    Eigen::MatrixXd input(z.rows() + cond.rows(), z.cols());
    input << z, cond;
    const Eigen::MatrixXd h1 = relu(bn1.forward_eval(l1.forward(input)));
    const Eigen::MatrixXd h2 = relu(bn2.forward_eval(l2.forward(h1)));
    const Eigen::MatrixXd o = l3.forward(h2);

    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(o.rows(), o.cols());
    for (const auto& seg : segments_) {
        const auto off = static_cast<Eigen::Index>(seg.offset);
        const auto size = static_cast<Eigen::Index>(seg.size);
        if (seg.kind == OutputSegment::Kind::Tanh) {
            y.middleRows(off, size) = o.middleRows(off, size).array().tanh();
        } else {
            for (Eigen::Index c = 0; c < o.cols(); ++c) {
                Eigen::Index arg = 0;
                o.middleRows(off, size).col(c).maxCoeff(&arg);
                y(off + arg, c) = 1.0;
            }
        }
    }
    return y;
}

void GeneratorNet::backward(const Cache& cache, const Eigen::MatrixXd& dy_critic,
                            const Eigen::MatrixXd& cond, double tau, double ce_scale) {
    Eigen::MatrixXd do_(dy_critic.rows(), dy_critic.cols());
    for (const auto& seg : segments_) {
        const auto off = static_cast<Eigen::Index>(seg.offset);
        const auto size = static_cast<Eigen::Index>(seg.size);
        const auto y = cache.y.middleRows(off, size);
        if (seg.kind == OutputSegment::Kind::Tanh) {
            do_.middleRows(off, size) =
                dy_critic.middleRows(off, size).array() * (1.0 - y.array().square());
        } else {
            do_.middleRows(off, size) = softmax_backward(y, dy_critic.middleRows(off, size), tau);
        }
    }
    // Condition cross-entropy: d/d logits of -sum t log softmax = (y - t)/tau.
    for (const auto& target : cond_targets_) {
        const auto eoff = static_cast<Eigen::Index>(target.encoded_offset);
        const auto coff = static_cast<Eigen::Index>(target.cond_offset);
        const auto size = static_cast<Eigen::Index>(target.size);
        do_.middleRows(eoff, size) +=
            ce_scale / tau *
            (cache.y.middleRows(eoff, size) - cond.middleRows(coff, size));
    }

    Eigen::MatrixXd d = l3.backward(cache.h2, do_);
    d.array() *= (cache.h2_in.array() > 0.0).cast<double>();
    d = bn2.backward(cache.bn2, d);
    d = l2.backward(cache.h1, d);
    d.array() *= (cache.h1_in.array() > 0.0).cast<double>();
    d = bn1.backward(cache.bn1, d);
    l1.backward(cache.input, d);
}

void GeneratorNet::zero_grad() {
    l1.zero_grad();
    l2.zero_grad();
    l3.zero_grad();
    bn1.zero_grad();
    bn2.zero_grad();
}

std::vector<ParamRef> GeneratorNet::params() {
    std::vector<ParamRef> out;
    l1.collect("g.l1", out);
    bn1.collect("g.bn1", out);
    l2.collect("g.l2", out);
    bn2.collect("g.bn2", out);
    l3.collect("g.l3", out);
    return out;
}

void DiscriminatorNet::init(std::size_t input_dim, std::size_t hidden, double rate, Rng& rng) {
    dropout = rate;
    l1.init(input_dim, hidden, rng);
    l2.init(hidden, hidden, rng);
    l3.init(hidden, 1, rng);
}

DiscriminatorNet::Cache DiscriminatorNet::forward(const Eigen::MatrixXd& u, bool train,
                                                  Rng& dropout_rng) const {
    if (u.rows() != l1.w.cols()) throw DataError("discriminator forward: dimension mismatch");
    Cache c;
    c.u = u;

    const auto dropout_mask = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Ones(rows, cols);
        if (train && dropout > 0.0) {
            const double keep = 1.0 - dropout;
            for (Eigen::Index j = 0; j < cols; ++j) {
                for (Eigen::Index i = 0; i < rows; ++i) {
                    m(i, j) = dropout_rng.uniform() < keep ? 1.0 / keep : 0.0;
                }
            }
        }
        return m;
    };

    const Eigen::MatrixXd z1 = l1.forward(u);
    c.s1 = (z1.array() > 0.0).select(Eigen::MatrixXd::Ones(z1.rows(), z1.cols()),
                                     Eigen::MatrixXd::Constant(z1.rows(), z1.cols(), leak));
    c.m1 = dropout_mask(z1.rows(), z1.cols());
    c.d1 = z1.array() * c.s1.array() * c.m1.array();

    const Eigen::MatrixXd z2 = l2.forward(c.d1);
    c.s2 = (z2.array() > 0.0).select(Eigen::MatrixXd::Ones(z2.rows(), z2.cols()),
                                     Eigen::MatrixXd::Constant(z2.rows(), z2.cols(), leak));
    c.m2 = dropout_mask(z2.rows(), z2.cols());
    c.d2 = z2.array() * c.s2.array() * c.m2.array();

    c.score = l3.forward(c.d2).row(0);
    return c;
}

void DiscriminatorNet::backward(const Cache& cache, const Eigen::RowVectorXd& dscore) {
    Eigen::MatrixXd d = l3.backward(cache.d2, dscore);
    d.array() *= cache.s2.array() * cache.m2.array();
    d = l2.backward(cache.d1, d);
    d.array() *= cache.s1.array() * cache.m1.array();
    l1.backward(cache.u, d);
}

Eigen::MatrixXd DiscriminatorNet::input_gradient(const Cache& cache) const {
    // Per-sample grad of the score wrt the input; activations enter as
    // piecewise-constant slopes.
    const Eigen::MatrixXd c2 =
        cache.s2.array() * cache.m2.array() * l3.w.transpose().array().replicate(1, cache.u.cols());
    const Eigen::MatrixXd c1 =
        cache.s1.array() * cache.m1.array() * (l2.w.transpose() * c2).array();
    return l1.w.transpose() * c1;
}

double DiscriminatorNet::gradient_penalty(const Cache& cache, double lambda) {
    const Eigen::Index batch = cache.u.cols();
    const Eigen::MatrixXd c2 =
        cache.s2.array() * cache.m2.array() * l3.w.transpose().array().replicate(1, batch);
    const Eigen::MatrixXd c1 =
        cache.s1.array() * cache.m1.array() * (l2.w.transpose() * c2).array();
    const Eigen::MatrixXd g = l1.w.transpose() * c1;

    const Eigen::RowVectorXd norms = g.colwise().norm();
    const double penalty =
        lambda * (norms.array() - 1.0).square().mean();

    // dP/dg per sample, then backward through the gradient expression with
    // the slopes and masks held fixed (their second derivative is zero a.e.).
    const Eigen::RowVectorXd coeff =
        2.0 * lambda / static_cast<double>(batch) *
        (norms.array() - 1.0) / norms.array().max(1e-12);
    const Eigen::MatrixXd q = g.array().rowwise() * coeff.array();

    l1.dw.noalias() += c1 * q.transpose();
    const Eigen::MatrixXd r1 = cache.s1.array() * cache.m1.array() * (l1.w * q).array();
    l2.dw.noalias() += c2 * r1.transpose();
    const Eigen::MatrixXd r2 = cache.s2.array() * cache.m2.array() * (l2.w * r1).array();
    l3.dw.noalias() += r2.rowwise().sum().transpose();
    return penalty;
}

void DiscriminatorNet::zero_grad() {
    l1.zero_grad();
    l2.zero_grad();
    l3.zero_grad();
}

std::vector<ParamRef> DiscriminatorNet::params() {
    std::vector<ParamRef> out;
    l1.collect("d.l1", out);
    l2.collect("d.l2", out);
    l3.collect("d.l3", out);
    return out;
}

namespace {

Eigen::MatrixXd draw_normal(std::size_t rows, std::size_t cols, Rng& rng) {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = rng.normal();
    }
    return z;
}

double condition_cross_entropy(const Eigen::MatrixXd& y, const Eigen::MatrixXd& cond,
                               const std::vector<Transformer::CondTarget>& targets) {
    double ce = 0.0;
    for (const auto& t : targets) {
        const auto block = y.middleRows(static_cast<Eigen::Index>(t.encoded_offset),
                                        static_cast<Eigen::Index>(t.size));
        const auto want = cond.middleRows(static_cast<Eigen::Index>(t.cond_offset),
                                          static_cast<Eigen::Index>(t.size));
        ce -= (want.array() * (block.array() + 1e-12).log()).sum();
    }
    return ce / static_cast<double>(y.cols());
}

}  // namespace

CtganModel train_ctgan(const SampleTable& table, const Transformer& transformer,
                       const TrainConfig& config) {
    config.validate();
    if (table.rows.empty()) throw DataError("cannot train on an empty table");

    const Eigen::MatrixXd data = transformer.encode_table(table);
    const TrainingSampler sampler(table, transformer);
    const std::size_t width = transformer.encoded_width();
    const std::size_t cond_dim = transformer.condition_dim();
    const std::size_t batch = std::min(config.batch, table.n_rows());

    CtganModel model;
    model.config = config;
    model.transformer_fingerprint = transformer.fingerprint();
    model.cond_dim = cond_dim;
    Rng init_rng(derive_seed(config.seed, 0x47454E));
    model.generator.init(config.latent_dim, cond_dim, config.hidden, transformer, init_rng);
    model.discriminator.init(width + cond_dim, config.hidden, config.dropout, init_rng);

    Adam adam_g({config.lr, config.adam_beta1, config.adam_beta2, 1e-8, config.weight_decay});
    Adam adam_d({config.lr, config.adam_beta1, config.adam_beta2, 1e-8, config.weight_decay});
    auto params_g = model.generator.params();
    auto params_d = model.discriminator.params();

    const std::size_t steps_per_epoch = std::max<std::size_t>(1, table.n_rows() / batch);
    const double inv_b = 1.0 / static_cast<double>(batch);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            const std::uint64_t base =
                derive_seed(config.seed, 1 + epoch * steps_per_epoch + step);
            Rng rng_cond(derive_seed(base, 1));
            Rng rng_z(derive_seed(base, 2));
            Rng rng_gumbel(derive_seed(base, 3));
            Rng rng_dropout(derive_seed(base, 4));
            Rng rng_interp(derive_seed(base, 5));

            // Training-by-sampling: one condition batch per step, reused for
            // both updates, with matching real rows for the critic.
            Eigen::MatrixXd cond(static_cast<Eigen::Index>(cond_dim),
                                 static_cast<Eigen::Index>(batch));
            Eigen::MatrixXd real(static_cast<Eigen::Index>(width),
                                 static_cast<Eigen::Index>(batch));
            for (std::size_t i = 0; i < batch; ++i) {
                const auto draw = sampler.sample(rng_cond);
                cond.col(static_cast<Eigen::Index>(i)) = draw.cond;
                real.col(static_cast<Eigen::Index>(i)) =
                    data.col(static_cast<Eigen::Index>(draw.row));
            }

            // Discriminator update.
            GeneratorNet::Cache gcache;
            const Eigen::MatrixXd fake = model.generator.forward_train(
                draw_normal(config.latent_dim, batch, rng_z), cond, config.tau, rng_gumbel,
                gcache);

            Eigen::MatrixXd u_real(static_cast<Eigen::Index>(width + cond_dim),
                                   static_cast<Eigen::Index>(batch));
            u_real << real, cond;
            Eigen::MatrixXd u_fake(u_real.rows(), u_real.cols());
            u_fake << fake, cond;

            const auto cache_fake = model.discriminator.forward(u_fake, true, rng_dropout);
            const auto cache_real = model.discriminator.forward(u_real, true, rng_dropout);

            Eigen::MatrixXd u_mix(u_real.rows(), u_real.cols());
            for (std::size_t i = 0; i < batch; ++i) {
                const double eps = rng_interp.uniform();
                u_mix.col(static_cast<Eigen::Index>(i)) =
                    eps * u_real.col(static_cast<Eigen::Index>(i)) +
                    (1.0 - eps) * u_fake.col(static_cast<Eigen::Index>(i));
            }
            const auto cache_mix = model.discriminator.forward(u_mix, true, rng_dropout);

            model.discriminator.zero_grad();
            model.discriminator.backward(
                cache_fake, Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(batch), inv_b));
            model.discriminator.backward(
                cache_real,
                Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(batch), -inv_b));
            const double gp = model.discriminator.gradient_penalty(cache_mix, config.gp_lambda);
            adam_d.step(params_d);
            const double loss_d =
                cache_fake.score.mean() - cache_real.score.mean() + gp;

            // Generator update: fresh noise, same conditions.
            Rng rng_z2(derive_seed(base, 6));
            Rng rng_gumbel2(derive_seed(base, 7));
            Rng rng_dropout2(derive_seed(base, 8));
            GeneratorNet::Cache gcache2;
            const Eigen::MatrixXd fake2 = model.generator.forward_train(
                draw_normal(config.latent_dim, batch, rng_z2), cond, config.tau, rng_gumbel2,
                gcache2);
            Eigen::MatrixXd u_gen(u_real.rows(), u_real.cols());
            u_gen << fake2, cond;
            const auto cache_gen = model.discriminator.forward(u_gen, true, rng_dropout2);

            const Eigen::MatrixXd du =
                -inv_b * model.discriminator.input_gradient(cache_gen);
            model.generator.zero_grad();
            model.generator.backward(gcache2, du.topRows(static_cast<Eigen::Index>(width)), cond,
                                     config.tau, inv_b);
            adam_g.step(params_g);

            const double ce =
                condition_cross_entropy(fake2, cond, transformer.condition_targets());
            const double loss_g = -cache_gen.score.mean() + ce;

            if (!std::isfinite(loss_d) || !std::isfinite(loss_g)) {
                throw NumericError(
                    "non-finite loss at epoch " + std::to_string(epoch) + " step " +
                    std::to_string(step) + " (d=" + std::to_string(loss_d) +
                    ", g=" + std::to_string(loss_g) +
                    ", fake mean=" + std::to_string(fake.mean()) +
                    ", real mean=" + std::to_string(real.mean()) + ")");
            }
            model.loss_history.emplace_back(loss_d, loss_g);
        }
    }
    return model;
}

SampleTable generate_samples(const CtganModel& model, const Transformer& transformer,
                             std::size_t n, const GenerationCondition& condition,
                             std::uint64_t seed) {
    if (model.transformer_fingerprint != transformer.fingerprint()) {
        throw DataError("model was trained against a different transformer layout");
    }
    const auto& cblocks = transformer.condition_blocks();
    if (cblocks.size() != 2) throw DataError("generation expects stability+load conditions");
    const auto& counts = transformer.category_counts();

    std::optional<std::size_t> fixed[2];
    if (condition.stability) {
        const int idx = transformer.schema()[cblocks[0].column].category_index(*condition.stability);
        if (idx < 0) throw DataError("unknown stability category '" + *condition.stability + "'");
        fixed[0] = static_cast<std::size_t>(idx);
    }
    if (condition.load_level) {
        const int idx =
            transformer.schema()[cblocks[1].column].category_index(*condition.load_level);
        if (idx < 0) throw DataError("unknown load level category '" + *condition.load_level + "'");
        fixed[1] = static_cast<std::size_t>(idx);
    }

    // Unspecified blocks follow the training-time condition frequency: a fair
    // coin between log(1+count) weighting and the raw data frequency.
    const auto draw_category = [&](std::size_t block, Rng& rng) {
        const bool log_side = rng.uniform() < 0.5;
        double total = 0.0;
        for (const auto c : counts[block]) {
            total += log_side ? std::log1p(static_cast<double>(c)) : static_cast<double>(c);
        }
        if (total <= 0.0) throw DataError("empty category counts in transformer");
        double target = rng.uniform() * total;
        for (std::size_t i = 0; i < counts[block].size(); ++i) {
            const double w = log_side ? std::log1p(static_cast<double>(counts[block][i]))
                                      : static_cast<double>(counts[block][i]);
            target -= w;
            if (target <= 0.0) return i;
        }
        return counts[block].size() - 1;
    };

    const std::size_t latent = model.config.latent_dim;
    Eigen::MatrixXd z(static_cast<Eigen::Index>(latent), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd cond(static_cast<Eigen::Index>(transformer.condition_dim()),
                         static_cast<Eigen::Index>(n));
    cond.setZero();
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, i));
        for (std::size_t b = 0; b < 2; ++b) {
            const std::size_t cat = fixed[b] ? *fixed[b] : draw_category(b, rng);
            cond(static_cast<Eigen::Index>(cblocks[b].offset + cat), static_cast<Eigen::Index>(i)) =
                1.0;
        }
        for (std::size_t r = 0; r < latent; ++r) {
            z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = rng.normal();
        }
    }

    SampleTable out;
    out.schema = transformer.schema();
    if (n == 0) return out;
    const Eigen::MatrixXd y = model.generator.forward_sample(z, cond);
    return transformer.decode_table(y);
}

namespace {

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
    const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || rows > 1u << 24 || cols > 1u << 24) throw DataError("corrupt model file");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw DataError("corrupt model file");
    return m;
}

void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
    write_matrix(out, v);
}

Eigen::VectorXd read_vector(std::ifstream& in) {
    return read_matrix(in);
}

constexpr std::uint32_t kModelMagic = 0x4D475354;  // "TSGM"
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

void CtganModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model '" + path + "'");
    out.write(reinterpret_cast<const char*>(&kModelMagic), sizeof kModelMagic);
    out.write(reinterpret_cast<const char*>(&kModelVersion), sizeof kModelVersion);

    const std::uint64_t scalars[] = {config.latent_dim, config.hidden, config.batch,
                                     config.epochs, config.seed, transformer_fingerprint,
                                     cond_dim};
    out.write(reinterpret_cast<const char*>(scalars), sizeof scalars);
    const double reals[] = {config.lr,         config.gp_lambda,  config.dropout,
                            config.tau,        config.adam_beta1, config.adam_beta2,
                            config.weight_decay};
    out.write(reinterpret_cast<const char*>(reals), sizeof reals);

    const std::uint64_t n_segments = generator.segments().size();
    out.write(reinterpret_cast<const char*>(&n_segments), sizeof n_segments);
    for (const auto& seg : generator.segments()) {
        const std::uint64_t rec[] = {seg.kind == OutputSegment::Kind::Tanh ? 0ull : 1ull,
                                     seg.offset, seg.size};
        out.write(reinterpret_cast<const char*>(rec), sizeof rec);
    }

    const GeneratorNet& g = generator;
    write_matrix(out, g.l1.w);
    write_vector(out, g.l1.b);
    write_vector(out, g.bn1.gamma);
    write_vector(out, g.bn1.shift);
    write_vector(out, g.bn1.running_mean);
    write_vector(out, g.bn1.running_var);
    write_matrix(out, g.l2.w);
    write_vector(out, g.l2.b);
    write_vector(out, g.bn2.gamma);
    write_vector(out, g.bn2.shift);
    write_vector(out, g.bn2.running_mean);
    write_vector(out, g.bn2.running_var);
    write_matrix(out, g.l3.w);
    write_vector(out, g.l3.b);

    const DiscriminatorNet& d = discriminator;
    write_matrix(out, d.l1.w);
    write_vector(out, d.l1.b);
    write_matrix(out, d.l2.w);
    write_vector(out, d.l2.b);
    write_matrix(out, d.l3.w);
    write_vector(out, d.l3.b);
    if (!out) throw DataError("write failed for model '" + path + "'");
}

CtganModel CtganModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model '" + path + "'");
    std::uint32_t magic = 0, version = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof magic);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (!in || magic != kModelMagic) throw DataError("'" + path + "' is not a model file");
    if (version != kModelVersion) {
        throw DataError("unsupported model version " + std::to_string(version));
    }

    CtganModel model;
    std::uint64_t scalars[7];
    in.read(reinterpret_cast<char*>(scalars), sizeof scalars);
    model.config.latent_dim = scalars[0];
    model.config.hidden = scalars[1];
    model.config.batch = scalars[2];
    model.config.epochs = scalars[3];
    model.config.seed = scalars[4];
    model.transformer_fingerprint = scalars[5];
    model.cond_dim = scalars[6];
    double reals[7];
    in.read(reinterpret_cast<char*>(reals), sizeof reals);
    model.config.lr = reals[0];
    model.config.gp_lambda = reals[1];
    model.config.dropout = reals[2];
    model.config.tau = reals[3];
    model.config.adam_beta1 = reals[4];
    model.config.adam_beta2 = reals[5];
    model.config.weight_decay = reals[6];

    std::uint64_t n_segments = 0;
    in.read(reinterpret_cast<char*>(&n_segments), sizeof n_segments);
    if (!in || n_segments > 1u << 20) throw DataError("corrupt model file");
    std::vector<OutputSegment> segments(n_segments);
    for (auto& seg : segments) {
        std::uint64_t rec[3];
        in.read(reinterpret_cast<char*>(rec), sizeof rec);
        seg.kind = rec[0] == 0 ? OutputSegment::Kind::Tanh : OutputSegment::Kind::Softmax;
        seg.offset = rec[1];
        seg.size = rec[2];
    }
    model.generator.restore_segments(segments);

    GeneratorNet& g = model.generator;
    g.l1.w = read_matrix(in);
    g.l1.b = read_vector(in);
    g.bn1.gamma = read_vector(in);
    g.bn1.shift = read_vector(in);
    g.bn1.running_mean = read_vector(in);
    g.bn1.running_var = read_vector(in);
    g.l2.w = read_matrix(in);
    g.l2.b = read_vector(in);
    g.bn2.gamma = read_vector(in);
    g.bn2.shift = read_vector(in);
    g.bn2.running_mean = read_vector(in);
    g.bn2.running_var = read_vector(in);
    g.l3.w = read_matrix(in);
    g.l3.b = read_vector(in);
    g.finish_restore(model.config.latent_dim, model.cond_dim);

    DiscriminatorNet& d = model.discriminator;
    d.l1.w = read_matrix(in);
    d.l1.b = read_vector(in);
    d.l2.w = read_matrix(in);
    d.l2.b = read_vector(in);
    d.l3.w = read_matrix(in);
    d.l3.b = read_vector(in);
    d.dropout = model.config.dropout;
    return model;
}

CtganGradientReport ctgan_gradient_check(std::uint64_t seed) {
    // Tiny fixture: one bimodal continuous column, two-way condition, label.
    Schema schema;
    schema.push_back({"f", ColumnKind::Continuous, {}, "", ColumnRole::Feature});
    schema.push_back({"c", ColumnKind::Categorical, {"a", "b"}, "", ColumnRole::Condition});
    schema.push_back({"s", ColumnKind::Categorical, {"stable", "unstable"}, "", ColumnRole::Label});
    SampleTable table;
    table.schema = schema;
    Rng data_rng(derive_seed(seed, 100));
    for (int i = 0; i < 64; ++i) {
        const double center = data_rng.uniform() < 0.5 ? -2.0 : 2.0;
        table.rows.push_back({center + 0.1 * data_rng.normal(),
                              static_cast<double>(data_rng.below(2)),
                              static_cast<double>(data_rng.below(2))});
    }
    TransformConfig tc;
    tc.max_modes = 2;
    tc.seed = derive_seed(seed, 101);
    const Transformer transformer = Transformer::fit_serial(table, tc);

    TrainConfig cfg;
    cfg.latent_dim = 2;
    cfg.hidden = 2;
    cfg.batch = 6;
    cfg.dropout = 0.5;
    cfg.tau = 0.4;
    cfg.seed = seed;

    const std::size_t width = transformer.encoded_width();
    const std::size_t cond_dim = transformer.condition_dim();
    const std::size_t batch = cfg.batch;

    Rng init_rng(derive_seed(seed, 1));
    GeneratorNet gen;
    gen.init(cfg.latent_dim, cond_dim, cfg.hidden, transformer, init_rng);
    DiscriminatorNet disc;
    disc.init(width + cond_dim, cfg.hidden, cfg.dropout, init_rng);

    // Frozen batch ingredients; every loss evaluation re-derives its noise
    // from fixed seeds so the losses are pure functions of the parameters.
    Rng fix_rng(derive_seed(seed, 2));
    Eigen::MatrixXd z = draw_normal(cfg.latent_dim, batch, fix_rng);
    Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cond_dim),
                                                 static_cast<Eigen::Index>(batch));
    Eigen::MatrixXd real(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(batch));
    const TrainingSampler sampler(table, transformer);
    const Eigen::MatrixXd encoded = transformer.encode_table_serial(table);
    for (std::size_t i = 0; i < batch; ++i) {
        const auto draw = sampler.sample(fix_rng);
        cond.col(static_cast<Eigen::Index>(i)) = draw.cond;
        real.col(static_cast<Eigen::Index>(i)) = encoded.col(static_cast<Eigen::Index>(draw.row));
    }
    const std::uint64_t noise_seed = derive_seed(seed, 3);
    const double inv_b = 1.0 / static_cast<double>(batch);

    CtganGradientReport report;

    // Discriminator loss with gradient penalty; the fake batch is a constant.
    {
        Rng gum(derive_seed(noise_seed, 1));
        GeneratorNet::Cache gc;
        const Eigen::MatrixXd fake = gen.forward_train(z, cond, cfg.tau, gum, gc);
        Eigen::MatrixXd u_real(static_cast<Eigen::Index>(width + cond_dim),
                               static_cast<Eigen::Index>(batch));
        u_real << real, cond;
        Eigen::MatrixXd u_fake(u_real.rows(), u_real.cols());
        u_fake << fake, cond;
        Eigen::MatrixXd u_mix(u_real.rows(), u_real.cols());
        Rng mix(derive_seed(noise_seed, 2));
        for (std::size_t i = 0; i < batch; ++i) {
            const double alpha = mix.uniform();
            u_mix.col(static_cast<Eigen::Index>(i)) =
                alpha * u_real.col(static_cast<Eigen::Index>(i)) +
                (1.0 - alpha) * u_fake.col(static_cast<Eigen::Index>(i));
        }

        const auto d_loss = [&]() {
            Rng drop(derive_seed(noise_seed, 3));
            const auto cf = disc.forward(u_fake, true, drop);
            const auto cr = disc.forward(u_real, true, drop);
            const auto cm = disc.forward(u_mix, true, drop);
            const Eigen::MatrixXd g_in = disc.input_gradient(cm);
            const Eigen::RowVectorXd norms = g_in.colwise().norm();
            return cf.score.mean() - cr.score.mean() +
                   cfg.gp_lambda * (norms.array() - 1.0).square().mean();
        };
        const auto d_grads = [&]() {
            Rng drop(derive_seed(noise_seed, 3));
            const auto cf = disc.forward(u_fake, true, drop);
            const auto cr = disc.forward(u_real, true, drop);
            const auto cm = disc.forward(u_mix, true, drop);
            disc.zero_grad();
            disc.backward(cf, Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(batch),
                                                           inv_b));
            disc.backward(cr, Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(batch),
                                                           -inv_b));
            disc.gradient_penalty(cm, cfg.gp_lambda);
        };
        auto params = disc.params();
        report.discriminator = finite_difference_check(d_loss, d_grads, params);
        report.total_params += report.discriminator.n_params;
    }

    // Generator loss: critic score plus condition cross-entropy.
    {
        const auto g_loss = [&]() {
            Rng gum(derive_seed(noise_seed, 11));
            Rng drop(derive_seed(noise_seed, 12));
            GeneratorNet::Cache gc;
            const Eigen::MatrixXd fake = gen.forward_train(z, cond, cfg.tau, gum, gc);
            Eigen::MatrixXd u(static_cast<Eigen::Index>(width + cond_dim),
                              static_cast<Eigen::Index>(batch));
            u << fake, cond;
            const auto cs = disc.forward(u, true, drop);
            return -cs.score.mean() +
                   condition_cross_entropy(fake, cond, transformer.condition_targets());
        };
        const auto g_grads = [&]() {
            Rng gum(derive_seed(noise_seed, 11));
            Rng drop(derive_seed(noise_seed, 12));
            GeneratorNet::Cache gc;
            const Eigen::MatrixXd fake = gen.forward_train(z, cond, cfg.tau, gum, gc);
            Eigen::MatrixXd u(static_cast<Eigen::Index>(width + cond_dim),
                              static_cast<Eigen::Index>(batch));
            u << fake, cond;
            const auto cs = disc.forward(u, true, drop);
            const Eigen::MatrixXd du = -inv_b * disc.input_gradient(cs);
            gen.zero_grad();
            gen.backward(gc, du.topRows(static_cast<Eigen::Index>(width)), cond, cfg.tau, inv_b);
        };
        auto params = gen.params();
        report.generator = finite_difference_check(g_loss, g_grads, params);
        report.total_params += report.generator.n_params;
    }
    return report;
}

}  // namespace tsgen
