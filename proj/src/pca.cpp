#include "tsgen/pca.hpp"

#include <Eigen/Eigenvalues>

#include "tsgen/errors.hpp"

namespace tsgen {

std::vector<std::size_t> feature_columns(const Schema& schema) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema[c].role == ColumnRole::Feature && schema[c].kind == ColumnKind::Continuous) {
            cols.push_back(c);
        }
    }
    return cols;
}

Eigen::MatrixXd feature_matrix(const SampleTable& table) {
    const auto cols = feature_columns(table.schema);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(table.n_rows()),
                      static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                table.rows[r][cols[c]];
        }
    }
    return m;
}

PcaProjection fit_pca(const Eigen::MatrixXd& reference_rows, std::size_t k) {
    const Eigen::Index n = reference_rows.rows();
    const Eigen::Index d = reference_rows.cols();
    if (n < 2) throw DataError("fit_pca: need at least two reference rows");
    if (k < 1 || static_cast<Eigen::Index>(k) > d) {
        throw DataError("fit_pca: component count out of range");
    }

    PcaProjection p;
    p.mean = reference_rows.colwise().mean();
    const Eigen::MatrixXd centered = reference_rows.rowwise() - p.mean.transpose();
    p.std_dev = (centered.array().square().colwise().sum() / static_cast<double>(n - 1))
                    .sqrt()
                    .transpose();

    for (Eigen::Index c = 0; c < d; ++c) {
        if (p.std_dev(c) > 1e-12) p.kept_columns.push_back(static_cast<std::size_t>(c));
    }
    if (static_cast<Eigen::Index>(k) > static_cast<Eigen::Index>(p.kept_columns.size())) {
        throw DataError("fit_pca: fewer non-constant features than components");
    }

    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(p.kept_columns.size()));
    for (std::size_t j = 0; j < p.kept_columns.size(); ++j) {
        const auto c = static_cast<Eigen::Index>(p.kept_columns[j]);
        z.col(static_cast<Eigen::Index>(j)) = centered.col(c) / p.std_dev(c);
    }

    const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");

    // SelfAdjointEigenSolver returns ascending eigenvalues; take the top k.
    const Eigen::Index kd = static_cast<Eigen::Index>(p.kept_columns.size());
    p.components.resize(static_cast<Eigen::Index>(k), kd);
    p.eigenvalues.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const Eigen::Index src = kd - 1 - static_cast<Eigen::Index>(i);
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index biggest = 0;
        v.cwiseAbs().maxCoeff(&biggest);
        if (v(biggest) < 0.0) v = -v;
        p.components.row(static_cast<Eigen::Index>(i)) = v.transpose();
        p.eigenvalues(static_cast<Eigen::Index>(i)) = solver.eigenvalues()(src);
    }
    const double total = solver.eigenvalues().sum();
    p.explained_variance_ratio = total > 0.0 ? p.eigenvalues.sum() / total : 1.0;
    return p;
}

Eigen::MatrixXd PcaProjection::project(const Eigen::MatrixXd& rows_by_features) const {
    Eigen::MatrixXd z(rows_by_features.rows(), static_cast<Eigen::Index>(kept_columns.size()));
    for (std::size_t j = 0; j < kept_columns.size(); ++j) {
        const auto c = static_cast<Eigen::Index>(kept_columns[j]);
        z.col(static_cast<Eigen::Index>(j)) =
            (rows_by_features.col(c).array() - mean(c)) / std_dev(c);
    }
    return z * components.transpose();
}

std::vector<Eigen::MatrixXd> pca_project(const SampleTable& reference,
                                         const std::vector<const SampleTable*>& others,
                                         std::size_t k, PcaProjection* fitted) {
    const Eigen::MatrixXd ref = feature_matrix(reference);
    PcaProjection p = fit_pca(ref, k);
    const auto cols = feature_columns(reference.schema);
    std::size_t kept = 0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (kept < p.kept_columns.size() && p.kept_columns[kept] == j) {
            ++kept;
        } else {
            p.excluded_features.push_back(reference.schema[cols[j]].name);
        }
    }
    std::vector<Eigen::MatrixXd> out;
    out.push_back(p.project(ref));
    for (const auto* t : others) {
        out.push_back(p.project(feature_matrix(*t)));
    }
    if (fitted) *fitted = std::move(p);
    return out;
}

}  // namespace tsgen
