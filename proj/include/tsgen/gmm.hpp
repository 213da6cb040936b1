#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tsgen {

struct GmmMode {
    double weight = 1.0;  // mixture weight, sums to 1 over modes
    double mean = 0.0;
    double std_dev = 1.0;
};

// Per-column mixture fitted by the variational EM below; modes kept sorted by
// mean so refits are comparable.
struct GmmColumnModel {
    std::string column;
    std::vector<GmmMode> modes;

    std::size_t n_modes() const { return modes.size(); }
};

// One continuous value in model space: the argmax mode plus a scaled offset
// beta = (c - mean) / (4 std), clamped to [-1, 1].
struct NormalizedValue {
    std::size_t mode = 0;
    double beta = 0.0;
};

// Variational Bayesian GMM (Dirichlet weight prior, normal-gamma prior per
// mode) fitted by EM with k-means++ seeding. Modes whose posterior weight
// falls below `weight_threshold` are pruned and the rest renormalized.
// Deterministic for a fixed seed.
GmmColumnModel fit_vgm(std::span<const double> values, std::size_t max_modes,
                       double weight_threshold, std::uint64_t seed);

// Weighted densities rho_k = w_k * N(c; mean_k, std_k).
Eigen::VectorXd mode_density(const GmmColumnModel& model, double c);

// Mixture density sum_k rho_k.
double mixture_density(const GmmColumnModel& model, double c);

NormalizedValue normalize_value(const GmmColumnModel& model, double c);
double denormalize_value(const GmmColumnModel& model, const NormalizedValue& nv);

}  // namespace tsgen
