#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "augopt/problem.hpp"
#include "augopt/rng.hpp"
#include "augopt/schedule.hpp"

namespace augopt {

enum class SchemeKind { Identity, AdditiveNoise, Minibatch, MinibatchWithNoise };
enum class NoiseKind { Gaussian, Rademacher, Uniform };

inline const char* scheme_name(SchemeKind k) {
    switch (k) {
        case SchemeKind::Identity: return "identity";
        case SchemeKind::AdditiveNoise: return "noise";
        case SchemeKind::Minibatch: return "minibatch";
        case SchemeKind::MinibatchWithNoise: return "minibatch-noise";
    }
    return "?";
}

inline const char* noise_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Rademacher: return "rademacher";
        case NoiseKind::Uniform: return "uniform";
    }
    return "?";
}

/// An augmentation scheme: which random transformation replaces the dataset
/// at each step, plus the joint schedule it reads sigma_t^2 and B_t from.
/// The noise distribution is zero-mean, unit-variance, iid per entry.
struct AugmentationScheme {
    SchemeKind kind = SchemeKind::Identity;
    NoiseKind noise = NoiseKind::Gaussian;
    ScheduleSet schedule;

    AugmentationScheme() = default;
    AugmentationScheme(SchemeKind kind, ScheduleSet schedule, NoiseKind noise = NoiseKind::Gaussian)
        : kind(kind), noise(noise), schedule(std::move(schedule)) {
        const bool wants_noise =
            kind == SchemeKind::AdditiveNoise || kind == SchemeKind::MinibatchWithNoise;
        const bool wants_batch =
            kind == SchemeKind::Minibatch || kind == SchemeKind::MinibatchWithNoise;
        if (wants_noise && !this->schedule.sigma2)
            throw InvalidParameter("scheme requires a sigma2 schedule");
        if (wants_batch && !this->schedule.batch)
            throw InvalidParameter("scheme requires a batch rule");
    }

    bool uses_noise() const {
        return kind == SchemeKind::AdditiveNoise || kind == SchemeKind::MinibatchWithNoise;
    }
    bool uses_batch() const {
        return kind == SchemeKind::Minibatch || kind == SchemeKind::MinibatchWithNoise;
    }
    /// Closed-form fourth moments exist for Gaussian noise and for plain
    /// minibatch sampling; other noise distributions fall back to Monte Carlo.
    bool has_closed_fourth_moments() const {
        return !uses_noise() || noise == NoiseKind::Gaussian;
    }
};

struct AugmentedBatch {
    Matrix x_t;
    Matrix y_t;
    long t = 0;
};

namespace detail {

inline double draw_noise(Generator& g, NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Gaussian: return g.normal();
        case NoiseKind::Rademacher: return g.rademacher();
        case NoiseKind::Uniform: return g.uniform_unit_variance();
    }
    return 0.0;
}

}  // namespace detail

/// Draw the augmented dataset for step t. Deterministic given (stream, t):
/// minibatch indices are drawn first, then noise entries column by column.
/// Writes into `out` without reallocating when shapes already match.
inline void sample_into(AugmentedBatch& out, const AugmentationScheme& scheme, const Dataset& d,
                        long t, const RngStream& stream) {
    const long n = static_cast<long>(d.dim());
    const long N = static_cast<long>(d.samples());
    const long p = static_cast<long>(d.outputs());
    const ScheduleSample sched = scheme.schedule.eval(t, N);
    out.t = t;

    auto resize = [](Matrix& m, std::size_t r, std::size_t c) {
        if (m.rows() != r || m.cols() != c) m = Matrix(r, c);
    };

    switch (scheme.kind) {
        case SchemeKind::Identity: {
            out.x_t = d.x;
            out.y_t = d.y;
            return;
        }
        case SchemeKind::AdditiveNoise: {
            out.x_t = d.x;
            out.y_t = d.y;
            if (sched.sigma2 == 0.0) return;
            const double sigma = std::sqrt(sched.sigma2);
            Generator g = stream.at(static_cast<std::uint64_t>(t));
            for (long j = 0; j < N; ++j)
                for (long i = 0; i < n; ++i)
                    out.x_t(i, j) += sigma * detail::draw_noise(g, scheme.noise);
            return;
        }
        case SchemeKind::Minibatch:
        case SchemeKind::MinibatchWithNoise: {
            const long b = sched.batch;
            const double c = std::sqrt(static_cast<double>(N) / static_cast<double>(b));
            Generator g = stream.at(static_cast<std::uint64_t>(t));
            resize(out.x_t, n, b);
            resize(out.y_t, p, b);
            std::vector<long> picks(b);
            for (long j = 0; j < b; ++j)
                picks[j] = static_cast<long>(g.uniform_below(static_cast<std::uint64_t>(N)));
            for (long j = 0; j < b; ++j) {
                const long k = picks[j];
                for (long i = 0; i < n; ++i) out.x_t(i, j) = c * d.x(i, k);
                for (long i = 0; i < p; ++i) out.y_t(i, j) = c * d.y(i, k);
            }
            if (scheme.kind == SchemeKind::MinibatchWithNoise && sched.sigma2 > 0.0) {
                const double cs = c * std::sqrt(sched.sigma2);
                for (long j = 0; j < b; ++j)
                    for (long i = 0; i < n; ++i)
                        out.x_t(i, j) += cs * detail::draw_noise(g, scheme.noise);
            }
            return;
        }
    }
}

inline AugmentedBatch sample(const AugmentationScheme& scheme, const Dataset& d, long t,
                             const RngStream& stream) {
    AugmentedBatch out;
    sample_into(out, scheme, d, t, stream);
    return out;
}

/// Exact first/second moments of the augmented data at one step, plus scalar
/// variances of the augmented gram and cross-gram. `fourth_exact` is false
/// when var_xx had to be estimated by Monte Carlo (non-Gaussian noise).
struct MomentSet {
    Matrix exx;     // E[X_t X_t^T]
    Matrix eyx;     // E[Y_t X_t^T]
    double var_xx = 0.0;  // E|X_t X_t^T - E[X_t X_t^T]|_F^2
    double var_yx = 0.0;  // E|Y_t X_t^T - E[Y_t X_t^T]|_F^2
    bool fourth_exact = true;
    std::function<double(const Matrix&)> grad_var_at;
};

namespace detail {

struct SchemeContext {
    const Dataset& d;
    double sigma2;
    long batch;
    long n, N, p;
    Matrix gram;  // X X^T

    SchemeContext(const AugmentationScheme& scheme, const Dataset& d, long t)
        : d(d),
          n(static_cast<long>(d.dim())),
          N(static_cast<long>(d.samples())),
          p(static_cast<long>(d.outputs())) {
        const ScheduleSample s = scheme.schedule.eval(t, N);
        sigma2 = scheme.uses_noise() ? s.sigma2 : 0.0;
        batch = scheme.uses_batch() ? s.batch : N;
        gram = d.x.multiply_nt(d.x);
    }

    double nd() const { return static_cast<double>(n); }
    double Nd() const { return static_cast<double>(N); }
    double Bd() const { return static_cast<double>(batch); }

    // sum_i |x_i|^2 |m_i|^2 over columns, i.e. Tr(X diag(M^T M) X^T).
    static double diag_weighted_trace(const Matrix& x, const Matrix& m) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double nx = 0.0, nm = 0.0;
            for (std::size_t i = 0; i < x.rows(); ++i) nx += x(i, j) * x(i, j);
            for (std::size_t i = 0; i < m.rows(); ++i) nm += m(i, j) * m(i, j);
            s += nx * nm;
        }
        return s;
    }

    // X diag(v) X^T for a per-column weight vector v.
    static Matrix column_weighted_gram(const Matrix& x, const std::vector<double>& v) {
        Matrix out(x.rows(), x.rows());
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double w = v[j];
            if (w == 0.0) continue;
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const double xi = w * x(i, j);
                if (xi == 0.0) continue;
                for (std::size_t k = 0; k < x.rows(); ++k) out(i, k) += xi * x(k, j);
            }
        }
        return out;
    }

    static std::vector<double> column_squared_norms(const Matrix& x) {
        std::vector<double> v(x.cols(), 0.0);
        for (std::size_t j = 0; j < x.cols(); ++j)
            for (std::size_t i = 0; i < x.rows(); ++i) v[j] += x(i, j) * x(i, j);
        return v;
    }
};

}  // namespace detail

inline Matrix expected_gram(const AugmentationScheme& scheme, const Dataset& d, long t) {
    detail::SchemeContext c(scheme, d, t);
    Matrix exx = c.gram;
    if (scheme.uses_noise() && c.sigma2 > 0.0) {
        const double shift = c.sigma2 * c.Nd();
        for (std::size_t i = 0; i < exx.rows(); ++i) exx(i, i) += shift;
    }
    return exx;
}

/// lambda_min over the column span of E[X_t X_t^T]. For the sampling-only
/// schemes this is the problem's restricted gram eigenvalue; with additive
/// noise the span is everything and the floor is sigma_t^2 N.
inline double lambda_min_parallel(const AugmentationScheme& scheme, const RegressionProblem& prob,
                                  long t) {
    if (!scheme.uses_noise()) return prob.lambda_min_parallel;
    const double s2 = scheme.schedule.sigma2_value(t);
    if (s2 == 0.0) return prob.lambda_min_parallel;
    // rank(X X^T) = N < n, so the smallest eigenvalue over R^n is the shift.
    return s2 * static_cast<double>(prob.samples());
}

/// E[X_t X_t^T Z X_t X_t^T] for symmetric Z, in closed form.
/// Throws UnsupportedScheme when only Monte-Carlo fourth moments exist.
inline Matrix gram_quartic_map(const AugmentationScheme& scheme, const Dataset& d, long t,
                               const Matrix& z) {
    if (!scheme.has_closed_fourth_moments())
        throw UnsupportedScheme("no closed fourth moments for non-Gaussian noise");
    detail::SchemeContext c(scheme, d, t);
    if (z.rows() != static_cast<std::size_t>(c.n) || z.cols() != static_cast<std::size_t>(c.n))
        throw ShapeError("gram_quartic_map: z must be n x n");
    const Matrix& s = c.gram;
    const double s2 = c.sigma2;

    switch (scheme.kind) {
        case SchemeKind::Identity:
            return s * z * s;
        case SchemeKind::AdditiveNoise: {
            Matrix out = s * z * s;
            if (s2 > 0.0) {
                const Matrix sz = s * z;
                const Matrix zs = z * s;
                const double trz = z.trace();
                const double trsz = sz.trace();
                Matrix term = (sz + zs) * (c.Nd() + 1.0);
                term += s * trz;
                for (long i = 0; i < c.n; ++i) term(i, i) += trsz;
                out += term * s2;
                Matrix quart = z * (c.Nd() * (c.Nd() + 1.0));
                for (long i = 0; i < c.n; ++i) quart(i, i) += c.Nd() * trz;
                out += quart * (s2 * s2);
            }
            return out;
        }
        case SchemeKind::Minibatch:
        case SchemeKind::MinibatchWithNoise: {
            const double B = c.Bd(), N = c.Nd();
            // X A A^T X^T pieces via the exact selector-matrix moments.
            const Matrix xtzx = d.x.multiply_tn(z * d.x);  // X^T Z X
            Matrix out = detail::SchemeContext::column_weighted_gram(d.x, xtzx.diagonal_entries());
            out *= N / B;
            out += s * z * s * ((B - 1.0) / B);
            if (scheme.kind == SchemeKind::MinibatchWithNoise && s2 > 0.0) {
                const Matrix sz = s * z;
                const Matrix zs = z * s;
                const double trz = z.trace();
                const double trsz = sz.trace();
                Matrix term = (sz + zs) * (N + N / B);
                term += s * ((N / B) * trz);
                for (long i = 0; i < c.n; ++i) term(i, i) += (N / B) * trsz;
                out += term * s2;
                Matrix quart = z * (N * N * (B + 1.0) / B);
                for (long i = 0; i < c.n; ++i) quart(i, i) += (N * N / B) * trz;
                out += quart * (s2 * s2);
            }
            return out;
        }
    }
    throw UnsupportedScheme("unreachable");
}

/// Id o Var of the stochastic gradient numerator A = W X_t X_t^T - Y_t X_t^T,
/// i.e. E[A^T A] - E[A]^T E[A], as a full n x n matrix.
inline Matrix grad_variance_matrix(const AugmentationScheme& scheme, const Dataset& d, long t,
                                   const Matrix& w) {
    if (!scheme.has_closed_fourth_moments())
        throw UnsupportedScheme("no closed fourth moments for non-Gaussian noise");
    detail::SchemeContext c(scheme, d, t);
    if (w.rows() != static_cast<std::size_t>(c.p) || w.cols() != static_cast<std::size_t>(c.n))
        throw ShapeError("grad_variance_matrix: weight shape mismatch");
    const Matrix& s = c.gram;
    const double s2 = c.sigma2;
    const Matrix m = w * d.x - d.y;  // residual on the sample columns, p x N

    switch (scheme.kind) {
        case SchemeKind::Identity:
            return Matrix(c.n, c.n);
        case SchemeKind::AdditiveNoise: {
            // E[A^T A] assembled from the quartic map, the mixed cubic term
            // psi(C) = E[X_t X_t^T C X_t^T] with C = W^T Y, and E[X_t Y^T Y X_t^T].
            const Matrix k = w.multiply_tn(w);   // W^T W
            const Matrix cm = w.multiply_tn(d.y);  // W^T Y, n x N
            Matrix eata = gram_quartic_map(scheme, d, t, k);
            Matrix psi = s * cm.multiply_nt(d.x);
            if (s2 > 0.0) {
                Matrix extra = d.x * cm.transpose();
                extra += cm.multiply_nt(d.x) * c.Nd();
                const double trxc = frobenius_inner(d.x, cm);
                for (long i = 0; i < c.n; ++i) extra(i, i) += trxc;
                psi += extra * s2;
            }
            eata -= psi;
            eata -= psi.transpose();
            Matrix xyyx = d.x * d.y.multiply_tn(d.y) * d.x.transpose();
            if (s2 > 0.0) {
                const double y2 = d.y.squared_norm();
                for (long i = 0; i < c.n; ++i) xyyx(i, i) += s2 * y2;
            }
            eata += xyyx;

            Matrix ea = w * expected_gram(scheme, d, t) - d.y.multiply_nt(d.x);
            eata -= ea.multiply_tn(ea);
            eata.symmetrize();
            return eata;
        }
        case SchemeKind::Minibatch: {
            const double B = c.Bd(), N = c.Nd();
            const Matrix mtm = m.multiply_tn(m);  // M^T M, N x N
            Matrix out = detail::SchemeContext::column_weighted_gram(d.x, mtm.diagonal_entries());
            out *= N / B;
            out -= d.x * mtm * d.x.transpose() * (1.0 / B);
            out.symmetrize();
            return out;
        }
        case SchemeKind::MinibatchWithNoise: {
            const double B = c.Bd(), N = c.Nd();
            const Matrix mtm = m.multiply_tn(m);
            Matrix out = detail::SchemeContext::column_weighted_gram(d.x, mtm.diagonal_entries());
            out *= N / B;
            out -= d.x * mtm * d.x.transpose() * (1.0 / B);
            if (s2 > 0.0) {
                const Matrix xmw = d.x * m.transpose() * w;  // X M^T W, n x n
                Matrix term = xmw + xmw.transpose();
                const double m2 = m.squared_norm();
                const double w2 = w.squared_norm();
                for (long i = 0; i < c.n; ++i) term(i, i) += m2;
                term += s * w2;
                out += term * (s2 * N / B);
                Matrix quart = w.multiply_tn(w);
                for (long i = 0; i < c.n; ++i) quart(i, i) += w2;
                out += quart * (s2 * s2 * N * N / B);
            }
            out.symmetrize();
            return out;
        }
    }
    throw UnsupportedScheme("unreachable");
}

/// Tr[Id o Var(W X_t X_t^T - Y_t X_t^T)]. No eta factor; the dynamics and the
/// condition checkers scale this by 4 eta_t^2 / N^2 where needed.
inline double grad_variance_trace(const AugmentationScheme& scheme, const Dataset& d, long t,
                                  const Matrix& w) {
    return grad_variance_matrix(scheme, d, t, w).trace();
}

namespace detail {

/// Monte-Carlo fallback for var_xx when no closed fourth moments exist; the
/// estimate is seeded from the step index so it stays reproducible.
inline double var_xx_monte_carlo(const AugmentationScheme& scheme, const Dataset& d, long t,
                                 long draws) {
    const Matrix exx = expected_gram(scheme, d, t);
    double sum = 0.0;
    Matrix g(d.dim(), d.dim());
    AugmentedBatch batch;
    for (long i = 0; i < draws; ++i) {
        sample_into(batch, scheme, d, t, RngStream{seed_salt::moment_mc ^ static_cast<std::uint64_t>(i)});
        Matrix::multiply_nt_into(g, batch.x_t, batch.x_t);
        sum += distance_frobenius(g, exx) * distance_frobenius(g, exx);
    }
    return sum / static_cast<double>(draws);
}

}  // namespace detail

inline MomentSet exact_moments(const AugmentationScheme& scheme, const Dataset& d, long t,
                               long mc_fallback_draws = 20000) {
    detail::SchemeContext c(scheme, d, t);
    MomentSet out;
    out.exx = expected_gram(scheme, d, t);
    out.eyx = d.y.multiply_nt(d.x);
    const double s2 = c.sigma2;
    const double n = c.nd(), N = c.Nd(), B = c.Bd();
    const double x2 = d.x.squared_norm();
    const double y2 = d.y.squared_norm();

    switch (scheme.kind) {
        case SchemeKind::Identity:
            out.var_xx = 0.0;
            out.var_yx = 0.0;
            break;
        case SchemeKind::AdditiveNoise:
            if (scheme.noise == NoiseKind::Gaussian) {
                out.var_xx = 2.0 * s2 * (n + 1.0) * x2 + s2 * s2 * N * n * (n + 1.0);
            } else {
                out.fourth_exact = false;
                out.var_xx = s2 > 0.0
                                 ? detail::var_xx_monte_carlo(scheme, d, t, mc_fallback_draws)
                                 : 0.0;
            }
            // Second-moment identity, valid for every unit-variance noise.
            out.var_yx = s2 * n * y2;
            break;
        case SchemeKind::Minibatch: {
            const double diag4 = detail::SchemeContext::diag_weighted_trace(d.x, d.x);
            const double trs2 = c.gram.squared_norm();
            out.var_xx = (N / B) * diag4 - trs2 / B;
            const double diagxy = detail::SchemeContext::diag_weighted_trace(d.x, d.y);
            const double trxy = d.y.multiply_nt(d.x).squared_norm();
            out.var_yx = (N / B) * diagxy - trxy / B;
            break;
        }
        case SchemeKind::MinibatchWithNoise: {
            const double diag4 = detail::SchemeContext::diag_weighted_trace(d.x, d.x);
            const double trs2 = c.gram.squared_norm();
            const double diagxy = detail::SchemeContext::diag_weighted_trace(d.x, d.y);
            const double trxy = d.y.multiply_nt(d.x).squared_norm();
            if (scheme.noise == NoiseKind::Gaussian) {
                out.var_xx = (N / B) * (diag4 + 2.0 * s2 * (n + 1.0) * x2 +
                                        s2 * s2 * N * n * (n + 1.0)) -
                             trs2 / B;
            } else {
                out.fourth_exact = false;
                out.var_xx = detail::var_xx_monte_carlo(scheme, d, t, mc_fallback_draws);
            }
            out.var_yx = (N / B) * diagxy - trxy / B + s2 * (N * n / B) * y2;
            break;
        }
    }

    if (scheme.has_closed_fourth_moments()) {
        out.grad_var_at = [scheme, d, t](const Matrix& w) {
            return grad_variance_trace(scheme, d, t, w);
        };
    } else {
        out.grad_var_at = [scheme, d, t, mc_fallback_draws](const Matrix& w) {
            const Matrix ea = w * expected_gram(scheme, d, t) - d.y.multiply_nt(d.x);
            double sum = 0.0;
            Matrix a(w.rows(), d.dim());
            AugmentedBatch batch;
            for (long i = 0; i < mc_fallback_draws; ++i) {
                sample_into(batch, scheme, d, t,
                            RngStream{seed_salt::moment_mc ^ (0x1234ULL + static_cast<std::uint64_t>(i))});
                Matrix r = w * batch.x_t - batch.y_t;
                Matrix::multiply_nt_into(a, r, batch.x_t);
                sum += distance_frobenius(a, ea) * distance_frobenius(a, ea);
            }
            return sum / static_cast<double>(mc_fallback_draws);
        };
    }
    return out;
}

/// Expectation of the augmented loss at step t. Sampling-only schemes are
/// scaled to be unbiased for the plain loss; additive noise adds the ridge
/// penalty sigma_t^2 |w|_F^2.
inline double proxy_loss(const AugmentationScheme& scheme, const Dataset& d, long t,
                         const Matrix& w) {
    const double base = loss(w, d);
    if (!scheme.uses_noise()) return base;
    const double s2 = scheme.schedule.sigma2_value(t);
    return base + s2 * w.squared_norm();
}

/// Minimum-norm minimizer of the proxy loss at step t.
inline Matrix proxy_optimum(const AugmentationScheme& scheme, const Dataset& d, long t) {
    if (!scheme.uses_noise()) return min_norm_solution(d);
    const double s2 = scheme.schedule.sigma2_value(t);
    if (s2 == 0.0) return min_norm_solution(d);
    return ridge_solution(d, s2);
}

/// |W*_{t+1} - W*_t|_F, the per-step drift of the proxy optimum.
inline double proxy_drift_norm(const AugmentationScheme& scheme, const Dataset& d, long t) {
    if (!scheme.uses_noise()) return 0.0;
    const double a = scheme.schedule.sigma2_value(t);
    const double b = scheme.schedule.sigma2_value(t + 1);
    if (a == b) return 0.0;
    return distance_frobenius(proxy_optimum(scheme, d, t + 1), proxy_optimum(scheme, d, t));
}

/// Upper bound N |sigma_t^2 - sigma_{t+1}^2| |Y X^T ((X X^T)^+)^2|_F on the
/// drift for the noise schemes.
inline double proxy_drift_bound(const AugmentationScheme& scheme, const Dataset& d, long t) {
    if (!scheme.uses_noise()) return 0.0;
    const double a = scheme.schedule.sigma2_value(t);
    const double b = scheme.schedule.sigma2_value(t + 1);
    const Matrix pinv = pseudoinverse(d.x.multiply_nt(d.x));
    const Matrix ref = d.y.multiply_nt(d.x) * pinv * pinv;
    return static_cast<double>(d.samples()) * std::abs(a - b) * ref.frobenius_norm();
}

/// Precomputed spectral data for evaluating proxy optima, drifts, and
/// recursion contractions in O(n) per step. All implemented schemes share the
/// eigenbasis of X X^T.
struct ProxySpectrum {
    std::vector<double> lambda;     // eigenvalues of X X^T, ascending
    Matrix basis;                   // orthonormal eigenvectors, columns
    Matrix yx_in_basis;             // Y X^T U, p x n
    double drift_bound_const = 0.0; // |Y X^T ((X X^T)^+)^2|_F

    explicit ProxySpectrum(const Dataset& d) {
        auto [values, vectors] = symmetric_eigensystem(d.x.multiply_nt(d.x));
        lambda = std::move(values);
        basis = std::move(vectors);
        yx_in_basis = d.y.multiply_nt(d.x) * basis;
        const double lmax = lambda.empty() ? 0.0 : std::abs(lambda.back());
        const double tol = static_cast<double>(lambda.size()) *
                           std::numeric_limits<double>::epsilon() * lmax;
        double s = 0.0;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            if (lambda[i] > tol) {
                double col2 = 0.0;
                for (std::size_t r = 0; r < yx_in_basis.rows(); ++r)
                    col2 += yx_in_basis(r, i) * yx_in_basis(r, i);
                s += col2 / (lambda[i] * lambda[i] * lambda[i] * lambda[i]);
            }
        }
        drift_bound_const = std::sqrt(s);
    }

    /// |W*(sigma_a^2) - W*(sigma_b^2)|_F without forming the matrices.
    double drift_norm(double s2a, double s2b, double n_samples) const {
        const double aa = s2a * n_samples, bb = s2b * n_samples;
        double s = 0.0;
        const double lmax = lambda.empty() ? 0.0 : std::abs(lambda.back());
        const double tol = static_cast<double>(lambda.size()) *
                           std::numeric_limits<double>::epsilon() * lmax;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            const double li = lambda[i] > tol ? lambda[i] : 0.0;
            const double fa = (li > 0.0 || aa > 0.0) ? 1.0 / (li + aa) : 0.0;
            const double fb = (li > 0.0 || bb > 0.0) ? 1.0 / (li + bb) : 0.0;
            const double diff = fa - fb;
            double col2 = 0.0;
            for (std::size_t r = 0; r < yx_in_basis.rows(); ++r)
                col2 += yx_in_basis(r, i) * yx_in_basis(r, i);
            s += col2 * diff * diff;
        }
        return std::sqrt(s);
    }
};

}  // namespace augopt
