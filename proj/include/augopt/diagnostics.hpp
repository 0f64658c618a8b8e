#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "augopt/augmentation.hpp"
#include "augopt/conditions.hpp"
#include "augopt/dynamics.hpp"

namespace augopt {

struct RateFit {
    RateKind kind = RateKind::PowerLaw;
    double slope = 0.0;      // power law: slope of log e vs log t (negated decay
                             // exponent); exponential: slope of log e vs t^(1-x)
    double intercept = 0.0;
    double r_squared = 0.0;
    long window_lo = 0;
    long window_hi = 0;
    double x_exponent = 0.0;  // the x used for the t^(1-x) axis, exponential only
};

namespace detail {

struct LsqResult {
    double slope, intercept, r2;
};

inline LsqResult least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = m * sxx - sx * sx;
    const double slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    const double intercept = (sy - slope * sx) / m;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ybar = sy / m;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double fit = slope * xs[i] + intercept;
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
    }
    const double r2 = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot)
                                   : (ss_res <= 1e-300 ? 1.0 : 0.0);
    return {slope, intercept, r2};
}

}  // namespace detail

/// Least squares of log e_t on log t over the window [lo, hi]. Needs at least
/// five positive points with t >= 1.
inline RateFit fit_power_law(const std::vector<std::pair<long, double>>& errs, long lo, long hi) {
    std::vector<double> xs, ys;
    for (const auto& [t, e] : errs) {
        if (t < lo || t > hi || t < 1) continue;
        if (!(e > 0.0)) throw InvalidData("fit_power_law: nonpositive error inside the window");
        xs.push_back(std::log(static_cast<double>(t)));
        ys.push_back(std::log(e));
    }
    if (xs.size() < 5) throw InvalidData("fit_power_law: need at least 5 points in the window");
    const auto r = detail::least_squares(xs, ys);
    return {RateKind::PowerLaw, r.slope, r.intercept, r.r2, lo, hi, 0.0};
}

/// Least squares of log e_t on t^(1-x); a negative slope indicates
/// exponential convergence at that time scale.
inline RateFit fit_exponential(const std::vector<std::pair<long, double>>& errs, double x, long lo,
                               long hi) {
    if (!(x >= 0.0) || !(x < 1.0))
        throw InvalidParameter("fit_exponential: x must lie in [0, 1)");
    std::vector<double> xs, ys;
    for (const auto& [t, e] : errs) {
        if (t < lo || t > hi || t < 1) continue;
        if (!(e > 0.0)) throw InvalidData("fit_exponential: nonpositive error inside the window");
        xs.push_back(std::pow(static_cast<double>(t), 1.0 - x));
        ys.push_back(std::log(e));
    }
    if (xs.size() < 5) throw InvalidData("fit_exponential: need at least 5 points in the window");
    const auto r = detail::least_squares(xs, ys);
    return {RateKind::Exponential, r.slope, r.intercept, r.r2, lo, hi, x};
}

/// Default fit window: drop the first 10% of checkpoints (transient) and stop
/// once the error reaches the floating-point floor.
inline std::pair<long, long> default_fit_window(const std::vector<std::pair<long, double>>& errs) {
    std::vector<long> ts;
    for (const auto& [t, e] : errs)
        if (t >= 1) ts.push_back(t);
    if (ts.empty()) throw InvalidData("default_fit_window: no usable checkpoints");
    const std::size_t skip = static_cast<std::size_t>(std::ceil(0.1 * ts.size()));
    const long lo = ts[std::min(skip, ts.size() - 1)];
    long hi = ts.back();
    for (const auto& [t, e] : errs)
        if (t >= lo && e <= 1e-13) {
            hi = std::min(hi, t);
            break;
        }
    return {lo, hi};
}

/// Monte-Carlo z-scores for every closed-form moment statistic of a scheme.
struct MomentZEntry {
    std::string statistic;
    double closed_form = 0.0;
    double mc_mean = 0.0;
    double se = 0.0;
    double z = 0.0;
};

struct MomentZReport {
    std::vector<MomentZEntry> entries;
    double max_abs_z() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, std::abs(e.z));
        return m;
    }
};

namespace detail {

class Welford {
  public:
    void add(double v) {
        ++count_;
        const double d = v - mean_;
        mean_ += d / static_cast<double>(count_);
        m2_ += d * (v - mean_);
    }
    double mean() const { return mean_; }
    double se() const {
        return count_ > 1 ? std::sqrt(m2_ / ((count_ - 1.0) * count_)) : 0.0;
    }
    long count() const { return count_; }

  private:
    long count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline void push_matrix_stats(std::vector<MomentZEntry>& out, const std::string& name,
                              const Matrix& closed, const std::vector<Welford>& acc) {
    for (std::size_t i = 0; i < closed.rows(); ++i)
        for (std::size_t j = 0; j < closed.cols(); ++j) {
            const Welford& w = acc[i * closed.cols() + j];
            MomentZEntry e;
            {
                std::ostringstream os;
                os << name << "(" << i << "," << j << ")";
                e.statistic = os.str();
            }
            e.closed_form = closed(i, j);
            e.mc_mean = w.mean();
            e.se = w.se();
            const double diff = e.mc_mean - e.closed_form;
            e.z = e.se > 0.0 ? diff / e.se : (std::abs(diff) <= 1e-12 ? 0.0 : INFINITY);
            out.push_back(std::move(e));
        }
}

}  // namespace detail

/// Compare every closed-form moment of the scheme against Monte Carlo over
/// n_samples independent draws at step t: the second moments, the scalar
/// variances, the fourth-moment matrices, the quartic map on a seeded
/// symmetric probe, and the gradient variance trace at a seeded weight.
inline MomentZReport validate_moments(const AugmentationScheme& scheme,
                                      const RegressionProblem& prob, long t, long n_samples,
                                      std::uint64_t master_seed) {
    if (n_samples < 1000) throw InvalidParameter("validate_moments: need n_samples >= 1000");
    const Dataset& d = prob.data;
    const std::size_t n = d.dim(), N = d.samples(), p = d.outputs();

    // Seeded probes shared by closed form and Monte Carlo.
    Generator gp = RngStream{master_seed ^ 0xABCDEF12ULL}.at(0);
    Matrix z_probe(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = gp.normal();
            z_probe(i, j) = v;
            z_probe(j, i) = v;
        }
    Matrix w_probe(p, n);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < n; ++j) w_probe(i, j) = gp.normal();

    const MomentSet ms = exact_moments(scheme, d, t);
    const bool closed4 = scheme.has_closed_fourth_moments();

    struct Tracked {
        std::string name;
        Matrix closed;
        std::vector<detail::Welford> acc;
    };
    std::vector<Tracked> tracked;
    auto track = [&](const std::string& name, Matrix closed) {
        Tracked tr;
        tr.name = name;
        tr.acc.resize(closed.rows() * closed.cols());
        tr.closed = std::move(closed);
        tracked.push_back(std::move(tr));
    };

    track("E[XX^T]", ms.exx);
    track("E[YX^T]", ms.eyx);
    if (closed4) {
        track("E[XX^T Z XX^T]", gram_quartic_map(scheme, d, t, z_probe));
        track("E[XX^T XX^T]", gram_quartic_map(scheme, d, t, Matrix::identity(n)));
        track("IdVar(WXX^T - YX^T)", grad_variance_matrix(scheme, d, t, w_probe));
    }
    // Third moment E[X X^T X], closed for the noise scheme only.
    const bool with_cubic = scheme.kind == SchemeKind::AdditiveNoise && closed4;
    if (with_cubic) {
        const double s2 = scheme.schedule.sigma2_value(t);
        Matrix cubic = d.x.multiply_nt(d.x) * d.x;
        cubic += d.x * (s2 * static_cast<double>(N + n + 1));
        track("E[XX^T X]", cubic);
    }
    // Cross fourth moments E[Y X^T X Y^T] and E[Y X^T X X^T].
    const bool with_cross = closed4;
    if (with_cross) {
        const double s2 = scheme.uses_noise() ? scheme.schedule.sigma2_value(t) : 0.0;
        const Matrix xtns = d.x.multiply_tn(d.x);  // X^T X
        Matrix yxxy, yxxx;
        if (scheme.kind == SchemeKind::AdditiveNoise || scheme.kind == SchemeKind::Identity) {
            yxxy = d.y * xtns * d.y.transpose();
            if (s2 > 0.0) yxxy += d.y.multiply_nt(d.y) * (s2 * static_cast<double>(n));
            yxxx = d.y * xtns * d.x.transpose();
            if (s2 > 0.0) yxxx += d.y.multiply_nt(d.x) * (s2 * static_cast<double>(N + n + 1));
        } else {
            const long b = scheme.schedule.batch_value(t, static_cast<long>(N));
            const double B = static_cast<double>(b), Nd = static_cast<double>(N),
                         nd = static_cast<double>(n);
            const auto colnorm = detail::SchemeContext::column_squared_norms(d.x);
            yxxy = detail::SchemeContext::column_weighted_gram(d.y, colnorm) * (Nd / B);
            yxxy += d.y * xtns * d.y.transpose() * ((B - 1.0) / B);
            if (s2 > 0.0) yxxy += d.y.multiply_nt(d.y) * (s2 * Nd * nd / B);
            Matrix wgram(d.y.rows(), d.x.rows());
            // sum_i v_i y_i x_i^T
            wgram.set_zero();
            for (std::size_t jj = 0; jj < N; ++jj)
                for (std::size_t r = 0; r < p; ++r)
                    for (std::size_t cc = 0; cc < n; ++cc)
                        wgram(r, cc) += colnorm[jj] * d.y(r, jj) * d.x(cc, jj);
            yxxx = wgram * (Nd / B);
            yxxx += d.y * xtns * d.x.transpose() * ((B - 1.0) / B);
            if (s2 > 0.0)
                yxxx += d.y.multiply_nt(d.x) * (s2 * (Nd / B) * (nd + B + 1.0));
        }
        track("E[YX^T X Y^T]", yxxy);
        track("E[YX^T X X^T]", yxxx);
    }

    detail::Welford var_xx_acc, var_yx_acc, grad_var_acc;

    // One pass of Monte Carlo; each draw uses its own stream so draws are iid.
    AugmentedBatch batch;
    Matrix xx(n, n), yx(p, n), zxx(n, n), grad(p, n);
    for (long i = 0; i < n_samples; ++i) {
        sample_into(batch, scheme, d, t, RngStream{master_seed ^ static_cast<std::uint64_t>(i)});
        Matrix::multiply_nt_into(xx, batch.x_t, batch.x_t);
        Matrix::multiply_nt_into(yx, batch.y_t, batch.x_t);

        std::size_t idx = 0;
        auto feed = [&](const Matrix& value) {
            auto& acc = tracked[idx].acc;
            for (std::size_t k = 0; k < value.size(); ++k) acc[k].add(value.data()[k]);
            ++idx;
        };
        feed(xx);
        feed(yx);
        if (closed4) {
            Matrix tmp = xx * z_probe * xx;
            feed(tmp);
            Matrix::multiply_into(zxx, xx, xx);
            feed(zxx);
            Matrix::multiply_into(grad, w_probe, xx);
            grad -= yx;
            Matrix dev = grad;
            dev -= (w_probe * ms.exx - ms.eyx);
            Matrix gv = dev.multiply_tn(dev);
            feed(gv);
        }
        if (with_cubic) feed(xx * batch.x_t);
        if (with_cross) {
            const Matrix xtx = batch.x_t.multiply_tn(batch.x_t);
            feed(batch.y_t * xtx * batch.y_t.transpose());
            feed(batch.y_t * xtx * batch.x_t.transpose());
        }

        var_xx_acc.add(distance_frobenius(xx, ms.exx) * distance_frobenius(xx, ms.exx));
        var_yx_acc.add(distance_frobenius(yx, ms.eyx) * distance_frobenius(yx, ms.eyx));
        if (closed4) {
            Matrix::multiply_into(grad, w_probe, xx);
            grad -= yx;
            const Matrix ea = w_probe * ms.exx - ms.eyx;
            grad_var_acc.add(distance_frobenius(grad, ea) * distance_frobenius(grad, ea));
        }
    }

    MomentZReport rep;
    for (const auto& tr : tracked) detail::push_matrix_stats(rep.entries, tr.name, tr.closed, tr.acc);

    auto push_scalar = [&](const std::string& name, double closed, const detail::Welford& acc) {
        MomentZEntry e;
        e.statistic = name;
        e.closed_form = closed;
        e.mc_mean = acc.mean();
        e.se = acc.se();
        const double diff = e.mc_mean - e.closed_form;
        e.z = e.se > 0.0 ? diff / e.se : (std::abs(diff) <= 1e-12 ? 0.0 : INFINITY);
        rep.entries.push_back(std::move(e));
    };
    push_scalar("var_xx", ms.var_xx, var_xx_acc);
    push_scalar("var_yx", ms.var_yx, var_yx_acc);
    if (closed4)
        push_scalar("grad_var(W)", grad_variance_trace(scheme, d, t, w_probe), grad_var_acc);
    return rep;
}

/// Max over checkpoints of |(W_t - W_0)(I - Q)|_F for schemes whose updates
/// stay inside the visible span. Noise schemes intentionally move the
/// perpendicular component and are rejected.
inline double frozen_subspace_residual(const TrajectoryRecord& rec,
                                       const RegressionProblem& prob) {
    if (rec.scheme_kind == SchemeKind::AdditiveNoise ||
        rec.scheme_kind == SchemeKind::MinibatchWithNoise)
        throw InvalidParameter("frozen_subspace_residual: noise schemes move the complement");
    if (rec.points.empty()) throw InvalidData("frozen_subspace_residual: empty record");
    const Matrix& w0 = rec.points.front().w;
    Matrix complement = Matrix::identity(prob.dim());
    complement -= prob.q_parallel;
    double worst = 0.0;
    Matrix dev(w0.rows(), w0.cols()), devc(w0.rows(), w0.cols());
    for (const auto& pt : rec.points) {
        dev = pt.w;
        dev -= w0;
        Matrix::multiply_into(devc, dev, complement);
        worst = std::max(worst, devc.frobenius_norm());
    }
    return worst;
}

/// Exact mean decay factor of the perpendicular component for noise schemes:
/// prod_{s<t} (1 - 2 eta_s sigma_s^2).
inline double perpendicular_decay_product(const ScheduleSet& schedule, long t) {
    double prod = 1.0;
    for (long s = 0; s < t; ++s)
        prod *= 1.0 - 2.0 * schedule.eta_value(s) * schedule.sigma2_value(s);
    return prod;
}

}  // namespace augopt
