#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "augopt/matrix.hpp"

namespace augopt {

namespace detail {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const EigenRowMajor> as_eigen(const Matrix& m) {
    return Eigen::Map<const EigenRowMajor>(m.data(), static_cast<Eigen::Index>(m.rows()),
                                           static_cast<Eigen::Index>(m.cols()));
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j)
            m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
    return m;
}

}  // namespace detail

/// Thin SVD of a real matrix: columns of left_basis/right_basis are
/// orthonormal, singular values are nonincreasing. `rank` counts values above
/// `rank_tolerance` = max(rows, cols) * eps * s_max.
struct SpectralData {
    std::vector<double> singular_values;
    Matrix left_basis;
    Matrix right_basis;
    std::size_t rank = 0;
    double rank_tolerance = 0.0;
};

inline SpectralData svd(const Matrix& m) {
    m.check_finite();
    if (m.rows() == 0 || m.cols() == 0) throw InvalidMatrix("empty matrix");
    Eigen::JacobiSVD<Eigen::MatrixXd> solver(detail::as_eigen(m),
                                             Eigen::ComputeThinU | Eigen::ComputeThinV);
    SpectralData out;
    const auto& s = solver.singularValues();
    out.singular_values.assign(s.data(), s.data() + s.size());
    out.left_basis = detail::from_eigen(solver.matrixU());
    out.right_basis = detail::from_eigen(solver.matrixV());
    const double smax = out.singular_values.empty() ? 0.0 : out.singular_values.front();
    out.rank_tolerance = static_cast<double>(std::max(m.rows(), m.cols())) *
                         std::numeric_limits<double>::epsilon() * smax;
    out.rank = 0;
    for (double v : out.singular_values)
        if (v > out.rank_tolerance) ++out.rank;
    return out;
}

/// Moore-Penrose pseudoinverse via SVD with the standard rank cutoff.
inline Matrix pseudoinverse(const Matrix& m) {
    const SpectralData sd = svd(m);
    // pinv = V diag(1/s) U^T over the numerical rank
    Matrix scaled_v = sd.right_basis;  // cols x k
    for (std::size_t j = 0; j < sd.singular_values.size(); ++j) {
        const double inv =
            sd.singular_values[j] > sd.rank_tolerance ? 1.0 / sd.singular_values[j] : 0.0;
        for (std::size_t i = 0; i < scaled_v.rows(); ++i) scaled_v(i, j) *= inv;
    }
    return scaled_v.multiply_nt(sd.left_basis);
}

inline void require_symmetric(const Matrix& m, double tol, const char* what) {
    if (m.rows() != m.cols()) throw InvalidMatrix(std::string(what) + ": not square");
    const double scale = std::max(1.0, m.max_abs());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol * scale)
                throw InvalidMatrix(std::string(what) + ": not symmetric");
}

/// Eigenvalues of a symmetric matrix, ascending.
inline std::vector<double> symmetric_eigenvalues(const Matrix& m) {
    require_symmetric(m, 1e-10, "symmetric_eigenvalues");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(detail::as_eigen(m),
                                                          Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

/// Symmetric eigendecomposition: pairs (eigenvalues ascending, column basis).
inline std::pair<std::vector<double>, Matrix> symmetric_eigensystem(const Matrix& m) {
    require_symmetric(m, 1e-10, "symmetric_eigensystem");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(detail::as_eigen(m));
    const auto& ev = solver.eigenvalues();
    return {std::vector<double>(ev.data(), ev.data() + ev.size()),
            detail::from_eigen(solver.eigenvectors())};
}

/// Orthogonal projector onto the column span of a symmetric nonnegative
/// definite matrix, at the SVD rank tolerance.
inline Matrix column_span_projector(const Matrix& m) {
    require_symmetric(m, 1e-10, "column_span_projector");
    auto [values, basis] = symmetric_eigensystem(m);
    const double lmax = values.empty() ? 0.0 : std::abs(values.back());
    const double tol =
        static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() * lmax;
    for (double v : values)
        if (v < -std::max(tol, 1e-10 * std::max(1.0, lmax)) * 100.0)
            throw InvalidMatrix("column_span_projector: matrix is not nonnegative definite");
    const std::size_t n = m.rows();
    Matrix q(n, n);
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] <= tol) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double bik = basis(i, k);
            if (bik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) q(i, j) += bik * basis(j, k);
        }
    }
    q.symmetrize();
    return q;
}

/// Smallest eigenvalue of q m q as an operator on range(q); 0 when q = 0.
/// q must be an orthogonal projector that commutes with m.
inline double restricted_min_eigenvalue(const Matrix& m, const Matrix& q) {
    require_symmetric(m, 1e-10, "restricted_min_eigenvalue");
    if (q.rows() != m.rows() || q.cols() != m.cols())
        throw InvalidMatrix("restricted_min_eigenvalue: projector shape mismatch");
    require_symmetric(q, 1e-8, "restricted_min_eigenvalue projector");
    const double scale = std::max(1.0, m.max_abs());
    const Matrix qq = q * q;
    if (distance_frobenius(qq, q) > 1e-8 * std::max(1.0, q.max_abs()) * q.rows())
        throw InvalidMatrix("restricted_min_eigenvalue: q is not idempotent");
    const Matrix mq = m * q;
    const Matrix qm = q * m;
    if (distance_frobenius(mq, qm) > 1e-8 * scale * m.rows())
        throw InvalidMatrix("restricted_min_eigenvalue: projector does not commute with m");

    const auto r = static_cast<std::size_t>(std::llround(q.trace()));
    if (r == 0) return 0.0;
    const Matrix restricted = q * mq;
    std::vector<double> values = symmetric_eigenvalues(restricted);  // ascending
    // The top r eigenvalues are the spectrum on range(q); the rest are the
    // exact zeros contributed by the complement.
    return values[values.size() - r];
}

inline double spectral_norm(const Matrix& m) {
    if (m.empty()) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> solver(detail::as_eigen(m));
    return solver.singularValues()(0);
}

/// Solve W A = B for W with A symmetric positive definite, Cholesky first and
/// an SVD pseudoinverse fallback if the factorization is not positive.
inline Matrix solve_right_spd(const Matrix& b, const Matrix& a) {
    if (a.rows() != a.cols() || b.cols() != a.rows())
        throw ShapeError("solve_right_spd shape mismatch");
    Eigen::MatrixXd ae = detail::as_eigen(a);
    Eigen::LLT<Eigen::MatrixXd> llt(ae);
    if (llt.info() == Eigen::Success) {
        // W = B A^{-1}  <=>  A W^T = B^T
        Eigen::MatrixXd wt = llt.solve(detail::as_eigen(b).transpose());
        return detail::from_eigen(wt.transpose());
    }
    return b * pseudoinverse(a);
}

}  // namespace augopt
