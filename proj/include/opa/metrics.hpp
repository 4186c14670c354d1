#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "opa/fock.hpp"

namespace opa {

namespace detail {

inline Eigen::MatrixXcd to_eigen(const DensityMatrix& rho) {
    return Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(rho.a.data(), rho.dim, rho.dim);
}

}  // namespace detail

// (1/2) ||a - b||_1 over the common dimension (the larger matrix is
// truncated; callers compare states built on the same cutoff).
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    const int d = std::min(a.dim, b.dim);
    Eigen::MatrixXcd diff = detail::to_eigen(a).topLeftCorner(d, d)
                          - detail::to_eigen(b).topLeftCorner(d, d);
    diff = 0.5 * (diff + diff.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(diff, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ||a - b||_1/2 <= sqrt(dim) ||a - b||_F / 2; cheap sufficient bound used
// before paying for an eigensolve.
inline double trace_distance_upper_bound(const DensityMatrix& a, const DensityMatrix& b) {
    const int d = std::min(a.dim, b.dim);
    double fro_sq = 0.0;
    for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) fro_sq += std::norm(a.at(m, n) - b.at(m, n));
    return 0.5 * std::sqrt(double(d) * fro_sq);
}

// Exact distance only when the cheap bound cannot already settle tol.
inline double trace_distance_within(const DensityMatrix& a, const DensityMatrix& b,
                                    double tol) {
    const double bound = trace_distance_upper_bound(a, b);
    if (bound < tol) return bound;
    return trace_distance(a, b);
}

inline double min_eigenvalue(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(detail::to_eigen(rho),
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace opa
