#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "augopt/augmentation.hpp"
#include "augopt/schedule.hpp"

namespace augopt {

/// A power-law schedule plan: eta_t ~ t^-x, sigma_t^2 ~ t^-y.
struct PowerLawPlan {
    double x = 0.0;
    double y = 0.0;
    SchemeKind scheme_kind = SchemeKind::AdditiveNoise;
    std::optional<BatchRule> batch;
};

enum class Verdict { GuaranteedConvergent, NotGuaranteed };

inline const char* verdict_name(Verdict v) {
    return v == Verdict::GuaranteedConvergent ? "guaranteed-convergent" : "not-guaranteed";
}

struct ConditionCheck {
    std::string name;
    bool satisfied = false;
    bool symbolic = false;  // heuristic evidence never upgrades the verdict
    std::string evidence;
};

enum class RateKind { PowerLaw, Exponential };

struct RateForecast {
    RateKind kind = RateKind::PowerLaw;
    double exponent = 0.0;       // decay exponent: err ~ t^-exponent, or
                                 // err ~ exp(-C t^exponent) for Exponential
    double epsilon_slack = 0.05; // tolerance consumed by rate-fit diagnostics
};

struct ConditionReport {
    Verdict verdict = Verdict::NotGuaranteed;
    std::vector<ConditionCheck> conditions;
    std::optional<RateForecast> forecast;
    std::string scheme;

    bool all_symbolic_satisfied() const {
        for (const auto& c : conditions)
            if (c.symbolic && !c.satisfied) return false;
        return true;
    }
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline ConditionCheck strict_check(const std::string& name, double lhs, const char* rel,
                                   double rhs) {
    ConditionCheck c;
    c.name = name;
    c.symbolic = true;
    const bool less = std::string(rel) == "<";
    c.satisfied = less ? (lhs < rhs) : (lhs > rhs);
    c.evidence = fmt(lhs) + (c.satisfied ? (less ? " < " : " > ") : (less ? " !< " : " !> ")) +
                 fmt(rhs);
    return c;
}

}  // namespace detail

/// Conditions for additive input noise: x, y > 0, x + y < 1, 2x + y > 1.
/// Boundary cases are not guaranteed; the theorems are strict.
inline ConditionReport classify_gauss(const PowerLawPlan& plan) {
    if (plan.scheme_kind != SchemeKind::AdditiveNoise)
        throw InvalidParameter("classify_gauss expects an additive-noise plan");
    ConditionReport rep;
    rep.scheme = scheme_name(plan.scheme_kind);
    rep.conditions.push_back(detail::strict_check("eta decays (x > 0)", plan.x, ">", 0.0));
    rep.conditions.push_back(detail::strict_check("sigma2 decays (y > 0)", plan.y, ">", 0.0));
    rep.conditions.push_back(
        detail::strict_check("sum eta sigma2 diverges (x + y < 1)", plan.x + plan.y, "<", 1.0));
    rep.conditions.push_back(detail::strict_check("sum eta^2 sigma2 converges (2x + y > 1)",
                                                  2.0 * plan.x + plan.y, ">", 1.0));
    rep.verdict = rep.all_symbolic_satisfied() ? Verdict::GuaranteedConvergent
                                               : Verdict::NotGuaranteed;
    if (rep.verdict == Verdict::GuaranteedConvergent)
        rep.forecast = RateForecast{RateKind::PowerLaw, std::min(plan.y, 0.5 * plan.x), 0.05};
    return rep;
}

/// Conditions for plain minibatch SGD: 0 < x < 1 gives eta_t -> 0 with
/// divergent sum, and convergence is exponential in t^(1-x).
inline ConditionReport classify_sgd(const PowerLawPlan& plan) {
    if (plan.scheme_kind != SchemeKind::Minibatch)
        throw InvalidParameter("classify_sgd expects a minibatch plan");
    ConditionReport rep;
    rep.scheme = scheme_name(plan.scheme_kind);
    rep.conditions.push_back(detail::strict_check("eta decays (x > 0)", plan.x, ">", 0.0));
    rep.conditions.push_back(detail::strict_check("sum eta diverges (x < 1)", plan.x, "<", 1.0));
    rep.verdict = rep.all_symbolic_satisfied() ? Verdict::GuaranteedConvergent
                                               : Verdict::NotGuaranteed;
    if (rep.verdict == Verdict::GuaranteedConvergent)
        rep.forecast = RateForecast{RateKind::Exponential, 1.0 - plan.x, 0.05};
    return rep;
}

/// Conditions for minibatch SGD with additive noise. The constant C in the
/// divergence condition reduces, for power laws, to requiring that
/// eta sigma2 dominates eta^2; both are implied by x + y < 1 < 2x + y with
/// x, y > 0.
inline ConditionReport classify_sgd_noise(const PowerLawPlan& plan) {
    if (plan.scheme_kind != SchemeKind::MinibatchWithNoise)
        throw InvalidParameter("classify_sgd_noise expects a minibatch-noise plan");
    ConditionReport rep;
    rep.scheme = scheme_name(plan.scheme_kind);
    rep.conditions.push_back(detail::strict_check("eta decays (x > 0)", plan.x, ">", 0.0));
    rep.conditions.push_back(detail::strict_check("sigma2 decays (y > 0)", plan.y, ">", 0.0));
    rep.conditions.push_back(detail::strict_check("sum (eta sigma2 - C eta^2) diverges (x + y < 1)",
                                                  plan.x + plan.y, "<", 1.0));
    rep.conditions.push_back(detail::strict_check("sum eta^2 sigma2 converges (2x + y > 1)",
                                                  2.0 * plan.x + plan.y, ">", 1.0));
    rep.verdict = rep.all_symbolic_satisfied() ? Verdict::GuaranteedConvergent
                                               : Verdict::NotGuaranteed;
    if (rep.verdict == Verdict::GuaranteedConvergent) {
        rep.forecast = RateForecast{RateKind::PowerLaw, std::min(plan.y, 0.5 * plan.x), 0.05};
        if (2.0 * plan.x <= 1.0) {
            ConditionCheck note;
            note.name = "large-eta allowance";
            note.satisfied = true;
            note.symbolic = false;
            note.evidence = "sum eta^2 itself diverges (2x = " + detail::fmt(2.0 * plan.x) +
                            " <= 1) but sum eta^2 sigma2 does not";
            rep.conditions.push_back(note);
        }
    }
    return rep;
}

/// Dispatch on scheme kind. Identity runs are full-batch gradient descent and
/// are classified with the same learning-rate conditions as minibatch SGD.
inline ConditionReport classify(const PowerLawPlan& plan) {
    switch (plan.scheme_kind) {
        case SchemeKind::AdditiveNoise: return classify_gauss(plan);
        case SchemeKind::Minibatch: return classify_sgd(plan);
        case SchemeKind::MinibatchWithNoise: return classify_sgd_noise(plan);
        case SchemeKind::Identity: {
            PowerLawPlan p = plan;
            p.scheme_kind = SchemeKind::Minibatch;
            ConditionReport rep = classify_sgd(p);
            rep.scheme = scheme_name(SchemeKind::Identity);
            return rep;
        }
    }
    throw InvalidParameter("unknown scheme kind");
}

struct MomentSummary {
    double lambda_min = 0.0;  // lambda_min restricted to the visible span
    double var_xx = 0.0;
    double var_yx = 0.0;
};

/// Evaluates the four Monro-Robbins series numerically up to the horizon:
///   S1 = sum eta_t lambda_min,t         (must diverge)
///   S2 = sum |Xi_t|                     (must converge)
///   S3 = sum eta_t^2 var_xx,t           (must converge)
///   S4 = sum eta_t^2 var_yx,t           (must converge)
/// The numeric evidence is a heuristic and never yields a guaranteed verdict;
/// when a power-law plan is supplied the series exponents are compared
/// symbolically (strict inequalities) and decide the verdict.
inline ConditionReport check_general(const ScheduleSet& schedule,
                                     const std::function<MomentSummary(long)>& moments_at,
                                     const std::function<double(long)>& xi_at, long horizon,
                                     const std::optional<PowerLawPlan>& symbolic = {}) {
    ConditionReport rep;
    rep.scheme = symbolic ? scheme_name(symbolic->scheme_kind) : "general";

    auto series_check = [&](const std::string& name, const std::function<double(long)>& f,
                            bool want_divergent) {
        ConditionCheck c;
        c.name = name;
        c.symbolic = false;
        const double total = partial_sum(f, horizon);
        if (total == 0.0) {
            // An identically zero series converges exactly.
            c.satisfied = !want_divergent;
            c.symbolic = true;
            c.evidence = "identically zero up to horizon";
            return c;
        }
        const double g = growth_exponent(f, horizon);
        c.satisfied = want_divergent ? g > 0.0 : g < 0.0;
        std::ostringstream os;
        os << "partial sum " << detail::fmt(total) << " at horizon " << horizon
           << ", growth exponent " << detail::fmt(g) << " (heuristic)";
        c.evidence = os.str();
        return c;
    };

    rep.conditions.push_back(series_check(
        "sum eta lambda_min diverges",
        [&](long t) { return schedule.eta_value(t) * moments_at(t).lambda_min; }, true));
    rep.conditions.push_back(series_check("sum |Xi| converges", xi_at, false));
    rep.conditions.push_back(series_check(
        "sum eta^2 var_xx converges",
        [&](long t) {
            const double e = schedule.eta_value(t);
            return e * e * moments_at(t).var_xx;
        },
        false));
    rep.conditions.push_back(series_check(
        "sum eta^2 var_yx converges",
        [&](long t) {
            const double e = schedule.eta_value(t);
            return e * e * moments_at(t).var_yx;
        },
        false));

    if (symbolic) {
        ConditionReport closed = classify(*symbolic);
        for (auto& c : closed.conditions) c.name = "symbolic: " + c.name;
        rep.conditions.insert(rep.conditions.end(), closed.conditions.begin(),
                              closed.conditions.end());
        rep.verdict = closed.verdict;
        rep.forecast = closed.forecast;
    } else {
        rep.verdict = Verdict::NotGuaranteed;  // numeric evidence only
    }
    return rep;
}

/// Concentration bound for a product Z_n = Y_n ... Y_1 Z_0 of independent
/// random matrices with |E[Y_i]|_2 <= a_i and E|Y_i - E[Y_i]|_2^2 <= b_i^2 a_i^2:
///   E|Z_n|_2^2         <= exp(sum b_i^2) prod a_i^2 |Z_0|_2^2
///   E|Z_n - E Z_n|_2^2 <= (exp(sum b_i^2) - 1) prod a_i^2 |Z_0|_2^2.
inline std::pair<double, double> matrix_product_bound(const std::vector<double>& a,
                                                      const std::vector<double>& b2,
                                                      double z0_norm, std::size_t n_terms) {
    if (n_terms > a.size() || n_terms > b2.size())
        throw InvalidParameter("matrix_product_bound: sequences shorter than n_terms");
    double log_prod_a2 = 0.0, sum_b2 = 0.0;
    for (std::size_t i = 0; i < n_terms; ++i) {
        if (!(a[i] > 0.0) || b2[i] < 0.0)
            throw InvalidParameter("matrix_product_bound: need a_i > 0 and b_i^2 >= 0");
        log_prod_a2 += 2.0 * std::log(a[i]);
        sum_b2 += b2[i];
    }
    const double base = std::exp(log_prod_a2) * z0_norm * z0_norm;
    return {std::exp(sum_b2) * base, std::expm1(sum_b2) * base};
}

struct LinearScalingReport {
    double ratio = 0.0;  // b(t) / a(t)
    double bound = 0.0;  // C eta_t / B_t with C from the problem
};

/// Noise-to-contraction ratio for minibatch SGD at a reference weight matrix:
/// a(t) = (2 eta_t / N) lambda_min, b(t) = (4 eta_t^2 / N^2) Tr[Id o Var].
/// Keeping eta_t / B_t fixed keeps the bound fixed ("linear scaling").
inline LinearScalingReport linear_scaling_ratio(const RegressionProblem& prob,
                                                const AugmentationScheme& scheme,
                                                const Matrix& w_mean, long t) {
    if (scheme.kind != SchemeKind::Minibatch)
        throw InvalidParameter("linear_scaling_ratio expects a minibatch scheme");
    const long N = static_cast<long>(prob.samples());
    const ScheduleSample s = scheme.schedule.eval(t, N);
    const double lam = prob.lambda_min_parallel;
    const double a = 2.0 * s.eta / static_cast<double>(N) * lam;
    const double gv = grad_variance_trace(scheme, prob.data, t, w_mean);
    const double b = 4.0 * s.eta * s.eta / (static_cast<double>(N) * static_cast<double>(N)) * gv;

    Matrix devq(w_mean.rows(), w_mean.cols());
    Matrix::multiply_into(devq, w_mean - prob.w_min, prob.q_parallel);
    const double gram_norm = spectral_norm(prob.gram);
    const double c_const =
        4.0 * static_cast<double>(N) * gram_norm * gram_norm * spectral_norm(devq) *
        spectral_norm(devq) / lam;
    return {a > 0.0 ? b / a : 0.0, c_const * s.eta / static_cast<double>(s.batch)};
}

}  // namespace augopt
