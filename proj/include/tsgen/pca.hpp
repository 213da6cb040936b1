#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsgen/dataset.hpp"

namespace tsgen {

// Projection basis fit on a reference set: columns standardized by the
// reference mean/std, then projected onto the top-k covariance eigenvectors
// (descending eigenvalue, sign fixed so the largest-magnitude loading is
// positive). Zero-variance features are excluded and reported.
struct PcaProjection {
    Eigen::VectorXd mean;
    Eigen::VectorXd std_dev;
    Eigen::MatrixXd components;   // k x d (standardized space)
    Eigen::VectorXd eigenvalues;  // descending, length k
    double explained_variance_ratio = 0.0;
    std::vector<std::string> excluded_features;
    std::vector<std::size_t> kept_columns;  // schema indices used

    Eigen::MatrixXd project(const Eigen::MatrixXd& rows_by_features) const;
};

// Continuous feature-role columns of a table, rows as matrix rows.
Eigen::MatrixXd feature_matrix(const SampleTable& table);
std::vector<std::size_t> feature_columns(const Schema& schema);

PcaProjection fit_pca(const Eigen::MatrixXd& reference_rows, std::size_t k);

// Per the evaluation protocol: basis fit on `reference`, applied to it and
// every other table. Returns projected point sets in order (reference first).
std::vector<Eigen::MatrixXd> pca_project(const SampleTable& reference,
                                         const std::vector<const SampleTable*>& others,
                                         std::size_t k, PcaProjection* fitted = nullptr);

}  // namespace tsgen
