#include "tsgen/gmm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "tsgen/errors.hpp"
#include "tsgen/rng.hpp"

namespace tsgen {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double digamma(double x) {
    double value = 0.0;
    while (x < 6.0) {
        value -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    value += std::log(x) - 0.5 * inv -
             inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
    return value;
}

// k-means++ seeding followed by a few Lloyd iterations; the hard assignment
// initializes the variational responsibilities.
std::vector<double> kmeans_centers(std::span<const double> x, std::size_t k, Rng& rng) {
    const std::size_t n = x.size();
    std::vector<double> centers;
    centers.reserve(k);
    centers.push_back(x[rng.below(n)]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(x[rng.below(n)]);
            continue;
        }
        double target = rng.uniform() * total;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= d2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(x[pick]);
    }

    std::vector<std::size_t> assign(n, 0);
    for (int it = 0; it < 10; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < centers.size(); ++c) {
                const double d = (x[i] - centers[c]) * (x[i] - centers[c]);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            assign[i] = arg;
        }
        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> cnt(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[assign[i]] += x[i];
            cnt[assign[i]] += 1;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (cnt[c] > 0) centers[c] = sum[c] / static_cast<double>(cnt[c]);
        }
    }
    std::sort(centers.begin(), centers.end());
    return centers;
}

// One variational EM fit at a fixed component count. Stick-breaking
// (truncated Dirichlet-process) weight prior, normal-gamma prior on each
// mode's (mean, precision), both data-scaled.
std::vector<GmmMode> fit_vb_at_k(std::span<const double> values, std::size_t k,
                                 double weight_threshold, std::uint64_t seed, double data_mean,
                                 double data_var, double data_span) {
    const std::size_t n = values.size();
    Rng rng(seed);
    const auto centers = kmeans_centers(values, k, rng);

    const double alpha0 = 1e-3;
    const double beta0 = 1.0;
    const double m0 = data_mean;
    const double a0 = 0.5;
    const double b0 = 0.5 * data_var;

    std::vector<double> gamma1(k), gamma2(k), beta(k), m(k), a(k), b(k);
    std::vector<double> nk(k), xbar(k), sk(k);

    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::max();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = (values[i] - centers[c]) * (values[i] - centers[c]);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(arg)) = 1.0;
    }

    const auto m_step = [&]() {
        for (std::size_t c = 0; c < k; ++c) {
            const auto col = resp.col(static_cast<Eigen::Index>(c));
            nk[c] = col.sum() + 1e-12;
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += col(static_cast<Eigen::Index>(i)) * values[i];
            xbar[c] = s / nk[c];
            double q = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = values[i] - xbar[c];
                q += col(static_cast<Eigen::Index>(i)) * d * d;
            }
            sk[c] = q / nk[c];

            beta[c] = beta0 + nk[c];
            m[c] = (beta0 * m0 + nk[c] * xbar[c]) / beta[c];
            a[c] = a0 + 0.5 * nk[c];
            b[c] = b0 + 0.5 * (nk[c] * sk[c] +
                               beta0 * nk[c] * (xbar[c] - m0) * (xbar[c] - m0) / beta[c]);
        }
        // gamma1_k pairs with N_k, gamma2_k with the mass after stick k.
        double tail = 0.0;
        for (std::size_t c = k; c-- > 0;) {
            gamma1[c] = 1.0 + nk[c];
            gamma2[c] = alpha0 + tail;
            tail += nk[c];
        }
    };

    m_step();
    std::vector<double> prev_m = m;
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<double> e_log_pi(k), e_log_lambda(k);
        double acc = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double total = digamma(gamma1[c] + gamma2[c]);
            e_log_pi[c] = digamma(gamma1[c]) - total + acc;
            acc += digamma(gamma2[c]) - total;
            e_log_lambda[c] = digamma(a[c]) - std::log(b[c]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::max();
            std::array<double, 64> logr;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = values[i] - m[c];
                const double quad = a[c] / b[c] * d * d + 1.0 / beta[c];
                logr[c] = e_log_pi[c] + 0.5 * e_log_lambda[c] - 0.5 * kLog2Pi - 0.5 * quad;
                mx = std::max(mx, logr[c]);
            }
            double z = 0.0;
            for (std::size_t c = 0; c < k; ++c) z += std::exp(logr[c] - mx);
            for (std::size_t c = 0; c < k; ++c) {
                resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                    std::exp(logr[c] - mx) / z;
            }
        }
        m_step();
        double delta = 0.0;
        for (std::size_t c = 0; c < k; ++c) delta = std::max(delta, std::abs(m[c] - prev_m[c]));
        prev_m = m;
        if (delta < 1e-10 * (data_span + 1.0)) break;
    }

    // Point estimates from the stick means, then pruning + renormalization.
    std::vector<GmmMode> modes;
    double stick_remaining = 1.0;
    double weight_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double v = gamma1[c] / (gamma1[c] + gamma2[c]);
        GmmMode mode;
        mode.weight = v * stick_remaining;
        stick_remaining *= 1.0 - v;
        mode.mean = m[c];
        mode.std_dev = std::max(std::sqrt(b[c] / a[c]), 1e-9 * (1.0 + std::abs(m[c])));
        modes.push_back(mode);
        weight_sum += mode.weight;
    }
    for (auto& mode : modes) mode.weight /= weight_sum;

    std::vector<GmmMode> kept;
    for (const auto& mode : modes) {
        if (mode.weight >= weight_threshold) kept.push_back(mode);
    }
    if (kept.empty()) {
        kept.push_back(*std::max_element(modes.begin(), modes.end(),
                                         [](const auto& x1, const auto& x2) {
                                             return x1.weight < x2.weight;
                                         }));
    }
    double total = 0.0;
    for (const auto& mode : kept) total += mode.weight;
    for (auto& mode : kept) mode.weight /= total;
    std::sort(kept.begin(), kept.end(),
              [](const auto& x1, const auto& x2) { return x1.mean < x2.mean; });
    return kept;
}

double log_likelihood(const std::vector<GmmMode>& modes, std::span<const double> values) {
    double ll = 0.0;
    for (const double v : values) {
        double density = 0.0;
        for (const auto& m : modes) {
            const double z = (v - m.mean) / m.std_dev;
            density += m.weight * std::exp(-0.5 * z * z) /
                       (m.std_dev * std::sqrt(2.0 * std::numbers::pi));
        }
        ll += std::log(std::max(density, 1e-300));
    }
    return ll;
}

}  // namespace

GmmColumnModel fit_vgm(std::span<const double> values, std::size_t max_modes,
                       double weight_threshold, std::uint64_t seed) {
    if (max_modes < 1 || max_modes > 64) {
        throw ConfigError("fit_vgm: max_modes must be in [1, 64]");
    }
    if (values.size() < 2 * max_modes) {
        throw DataError("fit_vgm: need at least 2*max_modes values, got " +
                        std::to_string(values.size()));
    }
    double lo = values[0], hi = values[0];
    double mean = 0.0;
    for (const double v : values) {
        if (!std::isfinite(v)) throw DataError("fit_vgm: non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        mean += v;
    }
    const std::size_t n = values.size();
    mean /= static_cast<double>(n);

    GmmColumnModel model;
    if (hi == lo) {
        // Constant column: one degenerate mode with a tiny positive width.
        model.modes.push_back({1.0, mean, std::max(1e-6, std::abs(mean) * 1e-6)});
        return model;
    }

    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);

    // A single fit at k = max_modes settles into whatever tiling the seeding
    // produced, even on unimodal data. Scan the component count instead and
    // keep the BIC-best pruned mixture; the scan stops once adding modes has
    // stopped paying twice in a row.
    std::vector<GmmMode> best;
    double best_bic = std::numeric_limits<double>::max();
    int worse_streak = 0;
    for (std::size_t k = 1; k <= max_modes; ++k) {
        const auto modes =
            fit_vb_at_k(values, k, weight_threshold, derive_seed(seed, k), mean, var, hi - lo);
        const double ll = log_likelihood(modes, values);
        const double n_params = 3.0 * static_cast<double>(modes.size()) - 1.0;
        const double bic = -2.0 * ll + n_params * std::log(static_cast<double>(n));
        if (bic < best_bic - 1e-9) {
            best_bic = bic;
            best = modes;
            worse_streak = 0;
        } else if (++worse_streak >= 2) {
            break;
        }
    }
    model.modes = std::move(best);
    return model;
}

Eigen::VectorXd mode_density(const GmmColumnModel& model, double c) {
    const std::size_t k = model.n_modes();
    Eigen::VectorXd rho(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& mode = model.modes[i];
        const double z = (c - mode.mean) / mode.std_dev;
        rho(static_cast<Eigen::Index>(i)) = mode.weight *
                                            std::exp(-0.5 * z * z) /
                                            (mode.std_dev * std::sqrt(2.0 * std::numbers::pi));
    }
    return rho;
}

double mixture_density(const GmmColumnModel& model, double c) {
    return mode_density(model, c).sum();
}

NormalizedValue normalize_value(const GmmColumnModel& model, double c) {
    const Eigen::VectorXd rho = mode_density(model, c);
    // Argmax with ties resolved to the lowest index.
    std::size_t best = 0;
    for (std::size_t i = 1; i < model.n_modes(); ++i) {
        if (rho(static_cast<Eigen::Index>(i)) > rho(static_cast<Eigen::Index>(best))) best = i;
    }
    const auto& mode = model.modes[best];
    const double beta = (c - mode.mean) / (4.0 * mode.std_dev);
    return {best, std::clamp(beta, -1.0, 1.0)};
}

double denormalize_value(const GmmColumnModel& model, const NormalizedValue& nv) {
    if (nv.mode >= model.n_modes()) throw DataError("denormalize_value: mode index out of range");
    const auto& mode = model.modes[nv.mode];
    return mode.mean + 4.0 * mode.std_dev * nv.beta;
}

}  // namespace tsgen
