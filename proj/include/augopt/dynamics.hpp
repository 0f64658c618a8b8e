#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <thread>
#include <vector>

#include "augopt/augmentation.hpp"
#include "augopt/problem.hpp"

namespace augopt {

struct DivergenceError : Error {
    DivergenceError(long step, double norm)
        : Error("weight norm exceeded divergence guard at step " + std::to_string(step)),
          step(step),
          norm(norm) {}
    long step;
    double norm;
    long trajectory = -1;
};

inline constexpr double kDivergenceGuard = 1e12;

/// One step of augmented gradient descent:
/// W + (2 eta / N) (Y_t - W X_t) X_t^T.
inline Matrix step(const Matrix& w, const AugmentedBatch& batch, double eta, long n_samples) {
    if (w.cols() != batch.x_t.rows() || w.rows() != batch.y_t.rows() ||
        batch.x_t.cols() != batch.y_t.cols())
        throw ShapeError("step: weight/batch shape mismatch");
    if (eta < 0.0) throw InvalidParameter("step: eta must be nonnegative");
    Matrix residual = batch.y_t - w * batch.x_t;
    Matrix update = residual.multiply_nt(batch.x_t);
    update *= 2.0 * eta / static_cast<double>(n_samples);
    return w + update;
}

/// Checkpoint step indices: {0, 1, 2, 4, ...} up to t_max plus t_max itself
/// when record_every <= 0, otherwise every record_every steps.
inline std::vector<long> checkpoint_steps(long t_max, long record_every) {
    std::vector<long> ts{0};
    if (record_every > 0) {
        for (long t = record_every; t < t_max; t += record_every) ts.push_back(t);
    } else {
        for (long t = 1; t < t_max; t *= 2) ts.push_back(t);
    }
    if (ts.back() != t_max) ts.push_back(t_max);
    return ts;
}

struct TrajectoryPoint {
    long t = 0;
    double err_par = 0.0;    // |W_t Q - W_min|_F
    double err_total = 0.0;  // |W_t - W_min|_F
    double loss = 0.0;
    Matrix w;
};

struct TrajectoryRecord {
    std::vector<TrajectoryPoint> points;
    std::uint64_t seed = 0;
    SchemeKind scheme_kind = SchemeKind::Identity;
    bool stability_warning = false;  // 2 eta_t |X_t X_t^T|_2 / N exceeded 2 at a checkpoint
    long first_unstable_step = -1;
};

inline Matrix default_initial_weights(const RegressionProblem& prob, std::uint64_t seed) {
    Generator g = RngStream{seed ^ seed_salt::weights_init}.at(0);
    Matrix w0(prob.outputs(), prob.dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(prob.dim()));
    for (std::size_t i = 0; i < w0.rows(); ++i)
        for (std::size_t j = 0; j < w0.cols(); ++j) w0(i, j) = scale * g.normal();
    return w0;
}

/// Run one trajectory of augmented gradient descent. Deterministic given the
/// seed; w0 defaults to seeded Gaussian entries at scale 1/sqrt(n).
inline TrajectoryRecord run_trajectory(const RegressionProblem& prob,
                                       const AugmentationScheme& scheme, long t_max,
                                       std::uint64_t seed, long record_every = 0,
                                       const Matrix* w0 = nullptr) {
    if (t_max < 1) throw InvalidParameter("run_trajectory: t_max must be >= 1");
    const long N = static_cast<long>(prob.samples());
    const RngStream stream{seed};
    const std::vector<long> marks = checkpoint_steps(t_max, record_every);

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.scheme_kind = scheme.kind;
    rec.points.reserve(marks.size());

    Matrix w = w0 ? *w0 : default_initial_weights(prob, seed);
    Matrix wq(w.rows(), w.cols());
    Matrix residual(prob.outputs(), 0);
    Matrix update(w.rows(), w.cols());
    AugmentedBatch batch;

    std::size_t next_mark = 0;
    auto record = [&](long t) {
        Matrix::multiply_into(wq, w, prob.q_parallel);
        TrajectoryPoint pt;
        pt.t = t;
        pt.err_par = distance_frobenius(wq, prob.w_min);
        pt.err_total = distance_frobenius(w, prob.w_min);
        pt.loss = loss(w, prob.data);
        pt.w = w;
        rec.points.push_back(std::move(pt));
    };

    for (long t = 0; t < t_max; ++t) {
        if (next_mark < marks.size() && marks[next_mark] == t) {
            record(t);
            ++next_mark;
        }
        const ScheduleSample sched = scheme.schedule.eval(t, N);
        sample_into(batch, scheme, prob.data, t, stream);

        if (!rec.points.empty() && rec.points.back().t == t && !rec.stability_warning) {
            const Matrix bg = batch.x_t.multiply_nt(batch.x_t);
            if (2.0 * sched.eta * spectral_norm(bg) / static_cast<double>(N) > 2.0) {
                rec.stability_warning = true;
                rec.first_unstable_step = t;
            }
        }

        if (residual.rows() != batch.y_t.rows() || residual.cols() != batch.y_t.cols())
            residual = Matrix(batch.y_t.rows(), batch.y_t.cols());
        Matrix::multiply_into(residual, w, batch.x_t);
        residual *= -1.0;
        residual += batch.y_t;
        Matrix::multiply_nt_into(update, residual, batch.x_t);
        update *= 2.0 * sched.eta / static_cast<double>(N);
        w += update;

        const double norm2 = w.squared_norm();
        if (!(norm2 < kDivergenceGuard * kDivergenceGuard))
            throw DivergenceError(t + 1, std::sqrt(norm2));
    }
    record(t_max);
    return rec;
}

struct EnsembleStats {
    std::vector<long> ts;
    std::vector<Matrix> mean_w;            // per checkpoint, Kahan-compensated
    std::vector<double> err_par_median;
    std::vector<double> err_par_se;        // bootstrap SE of the median
    std::vector<double> err_total_median;
    std::vector<double> err_total_se;
    std::vector<double> loss_median;
    std::vector<double> var_trace;         // sample E|(W - mean) Q|_F^2
    std::vector<double> var_trace_se;
    std::vector<double> mean_err_par;      // |mean_w Q - W_min|_F
    std::vector<double> mean_err_par_se;   // bootstrap SE of that norm
    long count = 0;
    bool stability_warning = false;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    const std::size_t k = v.size();
    std::sort(v.begin(), v.end());
    return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

inline double bootstrap_se_median(const std::vector<double>& v, Generator& g, int resamples) {
    std::vector<double> stats(resamples);
    std::vector<double> draw(v.size());
    for (int r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < v.size(); ++i) draw[i] = v[g.uniform_below(v.size())];
        stats[r] = median_of(draw);
    }
    double mean = 0.0;
    for (double s : stats) mean += s;
    mean /= resamples;
    double var = 0.0;
    for (double s : stats) var += (s - mean) * (s - mean);
    return std::sqrt(var / (resamples - 1));
}

}  // namespace detail

/// Run n_traj independent trajectories (stream id = master_seed ^ index; all
/// share one seeded W_0) and aggregate cross-trajectory statistics. Parallel
/// execution over `workers` threads; reductions run serially in trajectory
/// order, so the result is identical for any worker count.
inline EnsembleStats run_ensemble(const RegressionProblem& prob, const AugmentationScheme& scheme,
                                  long t_max, long n_traj, std::uint64_t master_seed,
                                  long record_every = 0, int workers = 0) {
    if (n_traj < 2) throw InvalidParameter("run_ensemble: need at least 2 trajectories");
    if (workers <= 0)
        workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = static_cast<int>(std::min<long>(workers, n_traj));

    const Matrix w0 = default_initial_weights(prob, master_seed);
    std::vector<TrajectoryRecord> records(n_traj);
    std::vector<std::optional<DivergenceError>> failures(n_traj);

    std::atomic<long> cursor{0};
    auto worker = [&]() {
        while (true) {
            const long i = cursor.fetch_add(1);
            if (i >= n_traj) return;
            try {
                records[i] = run_trajectory(prob, scheme, t_max,
                                            master_seed ^ static_cast<std::uint64_t>(i),
                                            record_every, &w0);
            } catch (const DivergenceError& e) {
                failures[i] = e;
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (long i = 0; i < n_traj; ++i) {
        if (failures[i]) {
            DivergenceError e = *failures[i];
            e.trajectory = i;
            throw e;
        }
    }

    const std::vector<long> marks = checkpoint_steps(t_max, record_every);
    EnsembleStats out;
    out.ts = marks;
    out.count = n_traj;
    const std::size_t nc = marks.size();
    const std::size_t p = prob.outputs(), n = prob.dim();

    Generator boot = RngStream{master_seed ^ seed_salt::bootstrap}.at(0);
    out.mean_w.assign(nc, Matrix(p, n));

    std::vector<double> col(n_traj);
    for (std::size_t c = 0; c < nc; ++c) {
        // Entrywise compensated mean over trajectories, fixed order.
        Matrix& mean = out.mean_w[c];
        Matrix comp(p, n);
        for (long i = 0; i < n_traj; ++i) {
            const Matrix& wi = records[i].points[c].w;
            for (std::size_t k = 0; k < p; ++k)
                for (std::size_t j = 0; j < n; ++j) {
                    const double y = wi(k, j) - comp(k, j);
                    const double next = mean(k, j) + y;
                    comp(k, j) = (next - mean(k, j)) - y;
                    mean(k, j) = next;
                }
        }
        mean *= 1.0 / static_cast<double>(n_traj);

        for (long i = 0; i < n_traj; ++i) col[i] = records[i].points[c].err_par;
        out.err_par_median.push_back(detail::median_of(col));
        out.err_par_se.push_back(detail::bootstrap_se_median(col, boot, 200));

        for (long i = 0; i < n_traj; ++i) col[i] = records[i].points[c].err_total;
        out.err_total_median.push_back(detail::median_of(col));
        out.err_total_se.push_back(detail::bootstrap_se_median(col, boot, 200));

        for (long i = 0; i < n_traj; ++i) col[i] = records[i].points[c].loss;
        out.loss_median.push_back(detail::median_of(col));

        // Fluctuation trace restricted to the visible subspace.
        Matrix dev(p, n), devq(p, n);
        double vsum = 0.0, vsumsq = 0.0;
        for (long i = 0; i < n_traj; ++i) {
            dev = records[i].points[c].w;
            dev -= mean;
            Matrix::multiply_into(devq, dev, prob.q_parallel);
            const double v = devq.squared_norm();
            col[i] = v;
            vsum += v;
            vsumsq += v * v;
        }
        const double k = static_cast<double>(n_traj);
        out.var_trace.push_back(vsum / (k - 1.0));
        const double var_of_v = std::max(0.0, (vsumsq - vsum * vsum / k) / (k - 1.0));
        out.var_trace_se.push_back(std::sqrt(var_of_v / k) * k / (k - 1.0));

        Matrix meanq(p, n);
        Matrix::multiply_into(meanq, mean, prob.q_parallel);
        out.mean_err_par.push_back(distance_frobenius(meanq, prob.w_min));

        // Bootstrap the norm of the resampled ensemble mean.
        {
            std::vector<double> stats(200);
            Matrix acc(p, n);
            for (int r = 0; r < 200; ++r) {
                acc.set_zero();
                for (long i = 0; i < n_traj; ++i)
                    acc += records[boot.uniform_below(n_traj)].points[c].w;
                acc *= 1.0 / k;
                Matrix::multiply_into(meanq, acc, prob.q_parallel);
                stats[r] = distance_frobenius(meanq, prob.w_min);
            }
            double m = 0.0;
            for (double s : stats) m += s;
            m /= stats.size();
            double var = 0.0;
            for (double s : stats) var += (s - m) * (s - m);
            out.mean_err_par_se.push_back(std::sqrt(var / (stats.size() - 1.0)));
        }

        for (long i = 0; i < n_traj; ++i) out.stability_warning |= records[i].stability_warning;
    }
    return out;
}

/// Exact evolution of Delta_t = E[W_t] - W*_t and, optionally, of the
/// fluctuation second moment Z_t = E[(W - E W)^T (W - E W)].
struct RecursionState {
    long t = 0;
    Matrix delta;  // E[W_t] - W*_t, p x n
    Matrix z;      // n x n, empty unless the variance recursion ran
};

namespace detail {

struct RecursionEngine {
    const RegressionProblem& prob;
    const AugmentationScheme& scheme;
    ProxySpectrum spectrum;
    long N;

    RecursionEngine(const RegressionProblem& prob, const AugmentationScheme& scheme)
        : prob(prob), scheme(scheme), spectrum(prob.data), N(static_cast<long>(prob.samples())) {}

    Matrix proxy_optimum_at(long t) const {
        const double s2 = scheme.uses_noise() ? scheme.schedule.sigma2_value(t) : 0.0;
        const double shift = s2 * static_cast<double>(N);
        const std::size_t n = spectrum.lambda.size();
        const double lmax = n ? std::abs(spectrum.lambda.back()) : 0.0;
        const double tol =
            static_cast<double>(n) * std::numeric_limits<double>::epsilon() * lmax;
        Matrix scaled = spectrum.yx_in_basis;
        for (std::size_t j = 0; j < n; ++j) {
            const double lj = spectrum.lambda[j] > tol ? spectrum.lambda[j] : 0.0;
            const double denom = lj + shift;
            const double f = denom > 0.0 ? 1.0 / denom : 0.0;
            for (std::size_t i = 0; i < scaled.rows(); ++i) scaled(i, j) *= f;
        }
        return scaled.multiply_nt(spectrum.basis);
    }
};

}  // namespace detail

/// Propagates Delta'_{t+1} = Delta'_t (I - (2 eta_t/N) E[X_t X_t^T]) - Xi_t
/// exactly, recording at the requested checkpoints. Runs for any scheme with
/// exact second moments (all of them).
inline std::vector<RecursionState> exact_mean_recursion(const RegressionProblem& prob,
                                                        const AugmentationScheme& scheme,
                                                        long t_max, const Matrix& w0,
                                                        const std::vector<long>& record_at) {
    detail::RecursionEngine eng(prob, scheme);
    std::vector<RecursionState> out;
    Matrix wstar = eng.proxy_optimum_at(0);
    Matrix delta = w0 - wstar;
    std::size_t mark = 0;
    for (long t = 0; t <= t_max; ++t) {
        if (mark < record_at.size() && record_at[mark] == t) {
            out.push_back({t, delta, Matrix()});
            ++mark;
        }
        if (t == t_max) break;
        const double eta = scheme.schedule.eta_value(t);
        const Matrix exx = expected_gram(scheme, prob.data, t);
        Matrix next = delta;
        Matrix dexx(delta.rows(), delta.cols());
        Matrix::multiply_into(dexx, delta, exx);
        dexx *= 2.0 * eta / static_cast<double>(eng.N);
        next -= dexx;
        const Matrix wstar_next = eng.proxy_optimum_at(t + 1);
        next -= wstar_next - wstar;  // Xi_t
        delta = std::move(next);
        wstar = wstar_next;
    }
    return out;
}

/// Jointly propagates the mean deviation and the fluctuation second moment
/// Z_{t+1} = E[(I - c X X^T) Z (I - c X X^T)] + c^2 IdVar(E[W_t] X X^T - Y X^T)
/// with c = 2 eta_t / N, using the closed-form quartic maps. Throws
/// UnsupportedScheme when the scheme has no closed fourth moments.
inline std::vector<RecursionState> exact_variance_recursion(const RegressionProblem& prob,
                                                            const AugmentationScheme& scheme,
                                                            long t_max, const Matrix& w0,
                                                            const std::vector<long>& record_at) {
    if (!scheme.has_closed_fourth_moments())
        throw UnsupportedScheme("variance recursion needs closed fourth moments");
    detail::RecursionEngine eng(prob, scheme);
    const std::size_t n = prob.dim();
    std::vector<RecursionState> out;
    Matrix wstar = eng.proxy_optimum_at(0);
    Matrix delta = w0 - wstar;
    Matrix z(n, n);  // Z_0 = 0: deterministic initialization
    std::size_t mark = 0;
    for (long t = 0; t <= t_max; ++t) {
        if (mark < record_at.size() && record_at[mark] == t) {
            out.push_back({t, delta, z});
            ++mark;
        }
        if (t == t_max) break;
        const double eta = scheme.schedule.eta_value(t);
        const double c = 2.0 * eta / static_cast<double>(eng.N);
        const Matrix exx = expected_gram(scheme, prob.data, t);

        // Two-sided contraction of Z through the exact quartic map.
        Matrix znext = z;
        const Matrix ez = exx * z;
        znext -= (ez + ez.transpose()) * c;
        znext += gram_quartic_map(scheme, prob.data, t, z) * (c * c);
        const Matrix mean_w = delta + wstar;
        znext += grad_variance_matrix(scheme, prob.data, t, mean_w) * (c * c);
        znext.symmetrize();

        Matrix next = delta;
        Matrix dexx(delta.rows(), delta.cols());
        Matrix::multiply_into(dexx, delta, exx);
        dexx *= c;
        next -= dexx;
        const Matrix wstar_next = eng.proxy_optimum_at(t + 1);
        next -= wstar_next - wstar;
        delta = std::move(next);
        wstar = wstar_next;
        z = std::move(znext);
    }
    return out;
}

}  // namespace augopt
