#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace tsgen {

struct GridBounds {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

// Axis-aligned bounds of a point set, padded by `pad` of each range.
GridBounds grid_bounds(const Eigen::MatrixXd& points, double pad = 0.01);

// Discrete distribution over a B^k grid; out-of-bounds points clip to the
// edge cells. Keeps per-dimension marginals for the 1-D transport distance.
struct GridHistogram {
    Eigen::VectorXd probs;                    // flattened joint, size B^k
    std::vector<Eigen::VectorXd> marginals;   // per dimension, size B
    Eigen::VectorXd bin_width;                // per dimension
    std::size_t bins = 0;
    std::size_t dims = 0;
};

GridHistogram bin_histogram(const Eigen::MatrixXd& points, std::size_t bins,
                            const GridBounds& bounds);

// Natural-log divergences over equal-support discrete distributions.
double js_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q, double eps = 1e-10);
// L1 distance between CDFs scaled by the bin width.
double wasserstein_1d(const Eigen::VectorXd& p, const Eigen::VectorXd& q, double bin_width = 1.0);

// JS / KL on the joint grid, Wasserstein averaged over per-dim marginals.
struct DistanceTriple {
    double js = 0.0;
    double kl = 0.0;
    double wasserstein = 0.0;
};

DistanceTriple histogram_distances(const GridHistogram& p, const GridHistogram& q);

}  // namespace tsgen
