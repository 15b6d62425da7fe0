#include "survgam/backfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survgam/error.hpp"
#include "survgam/quadrature.hpp"

namespace survgam {

namespace {

bool oscillating(const std::vector<double>& trace) {
    constexpr std::size_t kWindow = 5;
    if (trace.size() < kWindow + 1) return false;
    const std::size_t n = trace.size();
    for (std::size_t k = n - kWindow; k + 1 < n; ++k) {
        const double d0 = trace[k] - trace[k - 1];
        const double d1 = trace[k + 1] - trace[k];
        if (!(d0 * d1 < 0.0)) return false;
    }
    return true;
}

}  // namespace

BackfitResult two_stage_fit(const GamProblem& p, const ExpandedDataset& e, const BackfitConfig& cfg) {
    if (cfg.max_iters < 1) throw ValidationError("max_iters must be at least 1");
    if (!(cfg.deviance_rtol > 0.0)) throw ValidationError("deviance_rtol must be positive");

    BackfitResult out;
    out.nodes = e.nodes_per_record;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(e.n_subjects);
    FrailtyConfig fcfg;
    fcfg.method = cfg.frailty_method;
    fcfg.with_intercept = cfg.with_intercept;
    fcfg.sigma_lower = cfg.sigma_lower;
    fcfg.sigma_upper = cfg.sigma_upper;

    GamFit gam;
    FrailtyFit fr;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        out.iterations = iter;
        // Stage one: frailties frozen as offsets.
        Eigen::VectorXd extra;
        if (iter > 1) {
            extra.resize(e.size());
            for (Index r = 0; r < e.size(); ++r) extra(r) = b(e.rows[static_cast<std::size_t>(r)].subject);
        }
        try {
            gam = optimize_smoothing(p, extra, cfg.gam, iter > 1 ? &gam : nullptr);
        } catch (const NumericalError& err) {
            throw NumericalError("backfit iteration " + std::to_string(iter) + ", stage one: " + err.what());
        }
        if (!cfg.frailty) {
            out.converged = gam.converged;
            break;
        }

        // Stage two: survival linear predictor frozen.
        const Eigen::VectorXd frozen = p.log_weights + p.X.linear_predictor(gam.coef);
        try {
            fr = fit_frailty(e, frozen, fcfg);
        } catch (const NumericalError& err) {
            throw NumericalError("backfit iteration " + std::to_string(iter) + ", stage two: " + err.what());
        }
        out.deviance_trace.push_back(fr.deviance);
        if (!out.damped && oscillating(out.deviance_trace)) out.damped = true;
        b = out.damped ? Eigen::VectorXd(b + 0.5 * (fr.modes - b)) : fr.modes;

        const std::size_t n = out.deviance_trace.size();
        if (n >= 2) {
            const double cur = out.deviance_trace[n - 1];
            const double prev = out.deviance_trace[n - 2];
            if (std::abs(cur - prev) < cfg.deviance_rtol * std::abs(cur) + cfg.deviance_atol) {
                out.converged = true;
                break;
            }
        }
    }
    if (cfg.frailty) {
        if (fr.with_intercept) gam.shift_baseline(fr.alpha);
        fr.modes = b;
        out.frailty = fr;
    }
    out.gam = std::move(gam);
    return out;
}

BackfitResult two_stage_fit(const Dataset& d, const BackfitConfig& cfg) {
    validate_for_fit(d);
    const ExpandedDataset e = expand(d, cfg.nodes);
    const GamProblem p = build_gam_problem(d, e, cfg.basis_dim, cfg.penalty_order);
    BackfitResult r = two_stage_fit(p, e, cfg);
    r.max_time = d.max_time();
    r.subject_ids.reserve(static_cast<std::size_t>(d.n_subjects()));
    for (Index s = 0; s < d.n_subjects(); ++s) r.subject_ids.push_back(d.subject_id(s));
    return r;
}

std::vector<double> predict_survival(const GamFit& fit, double max_time, int nodes,
                                     std::span<const double> covariates, double frailty,
                                     std::span<const double> times) {
    if (static_cast<Index>(covariates.size()) != fit.beta.size()) {
        throw ValidationError("predict_survival: expected " + std::to_string(fit.beta.size()) + " covariates");
    }
    double lp = frailty;
    for (std::size_t j = 0; j < covariates.size(); ++j) lp += covariates[j] * fit.beta(static_cast<Index>(j));
    for (double t : times) {
        if (!(t >= 0.0) || t > max_time * (1.0 + 1e-12)) {
            throw ValidationError("predict_survival: time " + std::to_string(t) + " outside [0, " +
                                  std::to_string(max_time) + "]");
        }
    }
    const LobattoRule rule = lobatto_rule(nodes);
    auto integrate = [&](double a, double b) {
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double acc = 0.0;
        for (int j = 0; j < rule.n; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            acc += rule.weights[ju] * std::exp(fit.log_baseline_hazard(mid + half * rule.nodes[ju]) + lp);
        }
        return half * acc;
    };
    // Distinct knots break the integral into smooth pieces.
    std::vector<double> breaks(fit.basis.knots);
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    std::vector<double> out(times.size());
    double cum = 0.0;
    double at = 0.0;
    for (std::size_t idx : order) {
        const double t = std::min(times[idx], max_time);
        while (at < t) {
            auto next = std::upper_bound(breaks.begin(), breaks.end(), at);
            const double stop = next == breaks.end() ? t : std::min(t, *next);
            cum += integrate(at, stop);
            at = stop;
        }
        out[idx] = std::exp(-cum);
    }
    return out;
}

std::vector<double> predict_survival(const BackfitResult& r, std::span<const double> covariates, double frailty,
                                     std::span<const double> times) {
    return predict_survival(r.gam, r.max_time, r.nodes, covariates, frailty, times);
}

}  // namespace survgam
