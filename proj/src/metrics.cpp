#include "tsgen/metrics.hpp"

#include <cmath>

#include "tsgen/errors.hpp"

namespace tsgen {

GridBounds grid_bounds(const Eigen::MatrixXd& points, double pad) {
    if (points.rows() == 0) throw DataError("grid_bounds: empty point set");
    GridBounds b;
    b.lo = points.colwise().minCoeff();
    b.hi = points.colwise().maxCoeff();
    for (Eigen::Index d = 0; d < b.lo.size(); ++d) {
        const double range = b.hi(d) - b.lo(d);
        const double margin = range > 0.0 ? pad * range : 0.5;
        b.lo(d) -= margin;
        b.hi(d) += margin;
    }
    return b;
}

GridHistogram bin_histogram(const Eigen::MatrixXd& points, std::size_t bins,
                            const GridBounds& bounds) {
    if (points.rows() == 0) throw DataError("bin_histogram: empty point set");
    if (bins < 1) throw ConfigError("bin_histogram: need at least one bin");
    const std::size_t dims = static_cast<std::size_t>(points.cols());
    if (bounds.lo.size() != static_cast<Eigen::Index>(dims)) {
        throw DataError("bin_histogram: bounds dimension mismatch");
    }

    GridHistogram h;
    h.bins = bins;
    h.dims = dims;
    h.bin_width.resize(static_cast<Eigen::Index>(dims));
    std::size_t cells = 1;
    for (std::size_t d = 0; d < dims; ++d) {
        h.bin_width(static_cast<Eigen::Index>(d)) =
            (bounds.hi(static_cast<Eigen::Index>(d)) - bounds.lo(static_cast<Eigen::Index>(d))) /
            static_cast<double>(bins);
        cells *= bins;
    }
    h.probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells));
    h.marginals.assign(dims, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins)));

    const double mass = 1.0 / static_cast<double>(points.rows());
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        std::size_t cell = 0;
        for (std::size_t d = 0; d < dims; ++d) {
            const auto di = static_cast<Eigen::Index>(d);
            double t = (points(r, di) - bounds.lo(di)) / h.bin_width(di);
            long idx = static_cast<long>(std::floor(t));
            idx = std::max(0L, std::min(static_cast<long>(bins) - 1, idx));
            cell = cell * bins + static_cast<std::size_t>(idx);
            h.marginals[d](idx) += mass;
        }
        h.probs(static_cast<Eigen::Index>(cell)) += mass;
    }
    return h;
}

namespace {

void check_pair(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw DataError("distributions have different support sizes");
    if (std::abs(p.sum() - 1.0) > 1e-6 || std::abs(q.sum() - 1.0) > 1e-6) {
        throw DataError("distributions must sum to one");
    }
}

}  // namespace

double js_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    check_pair(p, q);
    double js = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p(i) + q(i));
        if (p(i) > 0.0) js += 0.5 * p(i) * std::log(p(i) / m);
        if (q(i) > 0.0) js += 0.5 * q(i) * std::log(q(i) / m);
    }
    return js;
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q, double eps) {
    check_pair(p, q);
    // Additive smoothing then renormalization keeps empty bins finite.
    const double n = static_cast<double>(p.size());
    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double ps = (p(i) + eps) / (1.0 + n * eps);
        const double qs = (q(i) + eps) / (1.0 + n * eps);
        kl += ps * std::log(ps / qs);
    }
    return kl;
}

double wasserstein_1d(const Eigen::VectorXd& p, const Eigen::VectorXd& q, double bin_width) {
    check_pair(p, q);
    double distance = 0.0;
    double cdf_gap = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        cdf_gap += p(i) - q(i);
        distance += std::abs(cdf_gap);
    }
    return distance * bin_width;
}

DistanceTriple histogram_distances(const GridHistogram& p, const GridHistogram& q) {
    if (p.bins != q.bins || p.dims != q.dims) {
        throw DataError("histograms use different grids");
    }
    DistanceTriple t;
    t.js = js_divergence(p.probs, q.probs);
    t.kl = kl_divergence(p.probs, q.probs);
    double w = 0.0;
    for (std::size_t d = 0; d < p.dims; ++d) {
        w += wasserstein_1d(p.marginals[d], q.marginals[d],
                            p.bin_width(static_cast<Eigen::Index>(d)));
    }
    t.wasserstein = w / static_cast<double>(p.dims);
    return t;
}

}  // namespace tsgen
