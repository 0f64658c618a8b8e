#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "augopt/linalg.hpp"
#include "augopt/matrix.hpp"
#include "augopt/rng.hpp"

namespace augopt {

/// A fixed regression dataset: inputs X (n x N) and labels Y (p x N) with
/// more input dimensions than samples (N < n). The loss is the mean squared
/// residual (1/N) |Y - W X|_F^2 over weight matrices W (p x n).
struct Dataset {
    Matrix x;
    Matrix y;

    Dataset(Matrix inputs, Matrix labels) : x(std::move(inputs)), y(std::move(labels)) {
        if (x.cols() != y.cols()) throw ShapeError("inputs and labels disagree on sample count");
        if (x.cols() == 0) throw InvalidParameter("dataset needs at least one sample");
        if (samples() >= dim())
            throw InvalidParameter("overparameterized regime required: need N < n, got N=" +
                                   std::to_string(samples()) + ", n=" + std::to_string(dim()));
    }

    std::size_t dim() const { return x.rows(); }      // n
    std::size_t samples() const { return x.cols(); }  // N
    std::size_t outputs() const { return y.rows(); }  // p
};

/// X entries are iid N(0, 1/n); Y = W_true X with iid standard normal W_true,
/// plus optional additive label noise of the given standard deviation.
inline Dataset synthetic_dataset(std::size_t n, std::size_t samples, std::size_t p,
                                 std::uint64_t seed, double label_noise = 0.0) {
    RngStream stream{seed ^ seed_salt::synthetic_data};
    Generator gx = stream.at(0);
    Matrix x(n, samples);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < samples; ++j) x(i, j) = scale * gx.normal();

    Generator gw = stream.at(1);
    Matrix w_true(p, n);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < n; ++j) w_true(i, j) = gw.normal();

    Matrix y = w_true * x;
    if (label_noise > 0.0) {
        Generator gn = stream.at(2);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < samples; ++j) y(i, j) += label_noise * gn.normal();
    }
    return Dataset(std::move(x), std::move(y));
}

inline Dataset load_dataset(const std::string& inputs_path, const std::string& labels_path) {
    return Dataset(load_matrix_csv(inputs_path), load_matrix_csv(labels_path));
}

inline void save_dataset(const Dataset& d, const std::string& inputs_path,
                         const std::string& labels_path) {
    save_matrix_csv(d.x, inputs_path);
    save_matrix_csv(d.y, labels_path);
}

inline double loss(const Matrix& w, const Dataset& d) {
    if (w.rows() != d.outputs() || w.cols() != d.dim())
        throw ShapeError("loss: weight shape mismatch");
    const Matrix r = d.y - w * d.x;
    return r.squared_norm() / static_cast<double>(d.samples());
}

/// Gradient of the loss with respect to W: -(2/N)(Y - W X) X^T.
inline Matrix gradient(const Matrix& w, const Dataset& d) {
    if (w.rows() != d.outputs() || w.cols() != d.dim())
        throw ShapeError("gradient: weight shape mismatch");
    const Matrix r = d.y - w * d.x;
    Matrix g = r.multiply_nt(d.x);
    g *= -2.0 / static_cast<double>(d.samples());
    return g;
}

/// Minimum Frobenius norm solution of Y = W X: Y X^T (X X^T)^+.
inline Matrix min_norm_solution(const Dataset& d) {
    const Matrix gram = d.x.multiply_nt(d.x);
    return d.y.multiply_nt(d.x) * pseudoinverse(gram);
}

/// Unique minimizer of loss + sigma2 |W|_F^2, i.e. Y X^T (X X^T + sigma2 N I)^{-1}.
inline Matrix ridge_solution(const Dataset& d, double sigma2) {
    if (!(sigma2 > 0.0)) throw InvalidParameter("ridge_solution: sigma2 must be positive");
    Matrix a = d.x.multiply_nt(d.x);
    const double shift = sigma2 * static_cast<double>(d.samples());
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += shift;
    return solve_right_spd(d.y.multiply_nt(d.x), a);
}

/// Precomputed problem quantities shared by the samplers, recursions, and
/// diagnostics. q_parallel projects onto the column span of X X^T; that span
/// is the subspace gradient descent can reach from any initialization.
struct RegressionProblem {
    Dataset data;
    Matrix gram;        // X X^T
    Matrix q_parallel;  // projector onto colspan(X X^T)
    Matrix w_min;       // Y X^T (X X^T)^+
    double lambda_min_parallel;  // smallest positive eigenvalue of the gram

    explicit RegressionProblem(Dataset d)
        : data(std::move(d)),
          gram(data.x.multiply_nt(data.x)),
          q_parallel(column_span_projector(gram)),
          w_min(data.y.multiply_nt(data.x) * pseudoinverse(gram)),
          lambda_min_parallel(restricted_min_eigenvalue(gram, q_parallel)) {
        const Matrix lhs = w_min * gram;
        const Matrix rhs = data.y.multiply_nt(data.x);
        const double scale = std::max(1.0, rhs.frobenius_norm());
        if (distance_frobenius(lhs, rhs) > 1e-8 * scale)
            throw InvalidMatrix("normal equations residual too large for w_min");
    }

    std::size_t dim() const { return data.dim(); }
    std::size_t samples() const { return data.samples(); }
    std::size_t outputs() const { return data.outputs(); }
};

}  // namespace augopt
