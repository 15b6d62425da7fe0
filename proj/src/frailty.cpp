#include "survgam/frailty.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "survgam/error.hpp"
#include "survgam/optimize.hpp"
#include "survgam/parallel.hpp"

namespace survgam {

std::string FrailtyMethod::label() const { return is_laplace() ? "laplace" : "agq:" + std::to_string(nodes); }

FrailtyMethod parse_frailty_method(std::string_view s) {
    if (s == "laplace") return FrailtyMethod::laplace();
    if (s.starts_with("agq")) {
        s.remove_prefix(3);
        if (!s.empty() && s.front() == ':') s.remove_prefix(1);
        int k = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
        if (ec == std::errc() && ptr == s.data() + s.size() && k >= 1) return FrailtyMethod::agq(k);
    }
    throw ValidationError("unknown frailty method '" + std::string(s) + "' (expected laplace or agq:K)");
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
constexpr int kChunkSubjects = 2048;

// Root of g(b) = events - exp(a + b) - b / sigma2, which is strictly decreasing.
double solve_mode(double events, double a, double sigma2, double start) {
    const double g0 = events - std::exp(a);
    if (g0 == 0.0) return 0.0;
    double lo, hi;
    if (g0 > 0.0) {
        lo = 0.0;
        hi = events * sigma2;
    } else {
        hi = 0.0;
        lo = -std::exp(a) * sigma2;
        if (!std::isfinite(lo)) lo = -a;
    }
    double b = (start > lo && start < hi) ? start : 0.5 * (lo + hi);
    double last_step = hi - lo;
    for (int it = 0; it < 400; ++it) {
        const double e = std::exp(a + b);
        const double g = events - e - b / sigma2;
        if (g > 0.0) lo = b;
        else if (g < 0.0) hi = b;
        else return b;
        const double dg = -e - 1.0 / sigma2;
        double next = b - g / dg;
        // Bisect when Newton leaves the bracket or is not at least halving the step.
        if (!(next > lo && next < hi) || std::abs(next - b) > 0.5 * last_step) next = 0.5 * (lo + hi);
        last_step = std::abs(next - b);
        if (std::abs(next - b) <= 1e-15 * (1.0 + std::abs(b)) || hi - lo <= 1e-15 * (1.0 + std::abs(b))) {
            return next;
        }
        b = next;
    }
    return b;
}

double log_integrand(const SubjectStats& s, double alpha, double b, double sigma2) {
    return s.sum_y_eta + s.events * (alpha + b) - std::exp(alpha + b + s.log_exposure) - 0.5 * b * b / sigma2 -
           0.5 * (kLog2Pi + std::log(sigma2)) - s.log_factorial;
}

double marginal_at_mode(const SubjectStats& s, double alpha, double mode, double sigma2, const HermiteRule* gh) {
    const double c = std::exp(alpha + mode + s.log_exposure) + 1.0 / sigma2;
    if (gh == nullptr) return log_integrand(s, alpha, mode, sigma2) + 0.5 * kLog2Pi - 0.5 * std::log(c);
    const double scale = std::sqrt(2.0 / c);
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(gh->nodes.size());
    for (std::size_t k = 0; k < gh->nodes.size(); ++k) {
        const double x = gh->nodes[k];
        terms[k] = std::log(gh->weights[k]) + x * x + log_integrand(s, alpha, mode + scale * x, sigma2);
        m = std::max(m, terms[k]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - m);
    return std::log(scale) + m + std::log(acc);
}

SubjectStats single_subject(std::span<const double> y, std::span<const double> eta) {
    if (y.size() != eta.size() || y.empty()) throw ValidationError("subject rows: y and eta must match and be nonempty");
    SubjectStats s;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (!std::isfinite(eta[j]) || !std::isfinite(y[j])) throw NumericalError("non-finite subject input");
        m = std::max(m, eta[j]);
        s.events += y[j];
        s.sum_y_eta += y[j] * eta[j];
        if (y[j] > 0.0) {
            s.log_factorial += std::lgamma(y[j] + 1.0);
            s.sum_y_log_y += y[j] * std::log(y[j]);
        }
    }
    double acc = 0.0;
    for (double e : eta) acc += std::exp(e - m);
    s.log_exposure = m + std::log(acc);
    return s;
}

struct AlphaSums {
    double score = 0.0;
    double info = 0.0;

    AlphaSums& operator+=(const AlphaSums& o) {
        score += o.score;
        info += o.info;
        return *this;
    }
};

}  // namespace

SubjectMode subject_mode(std::span<const double> y, std::span<const double> eta, double sigma2) {
    if (!(sigma2 > 0.0)) throw ValidationError("frailty variance must be positive");
    const SubjectStats s = single_subject(y, eta);
    SubjectMode out;
    out.mode = solve_mode(s.events, s.log_exposure, sigma2, 0.0);
    out.curvature = std::exp(out.mode + s.log_exposure) + 1.0 / sigma2;
    return out;
}

double subject_marginal(std::span<const double> y, std::span<const double> eta, double sigma2,
                        FrailtyMethod method) {
    if (!(sigma2 > 0.0)) throw ValidationError("frailty variance must be positive");
    const SubjectStats s = single_subject(y, eta);
    const double mode = solve_mode(s.events, s.log_exposure, sigma2, 0.0);
    if (method.is_laplace()) return marginal_at_mode(s, 0.0, mode, sigma2, nullptr);
    const HermiteRule gh = gauss_hermite_rule(method.nodes);
    return marginal_at_mode(s, 0.0, mode, sigma2, &gh);
}

std::vector<SubjectStats> subject_stats(const ExpandedDataset& e, const Eigen::VectorXd& offsets) {
    if (offsets.size() != e.size()) throw ValidationError("frozen offsets must have one value per expanded row");
    std::vector<SubjectStats> stats(static_cast<std::size_t>(e.n_subjects));
    std::vector<double> peak(stats.size(), -std::numeric_limits<double>::infinity());
    for (Index r = 0; r < e.size(); ++r) {
        const auto& row = e.rows[static_cast<std::size_t>(r)];
        const auto s = static_cast<std::size_t>(row.subject);
        const double eta = offsets(r);
        if (!std::isfinite(eta)) throw NumericalError("non-finite frozen offset at row " + std::to_string(r + 1));
        peak[s] = std::max(peak[s], eta);
        stats[s].events += row.y;
        stats[s].sum_y_eta += row.y * eta;
        if (row.y > 0.0) {
            stats[s].log_factorial += std::lgamma(row.y + 1.0);
            stats[s].sum_y_log_y += row.y * std::log(row.y);
        }
    }
    std::vector<double> acc(stats.size(), 0.0);
    for (Index r = 0; r < e.size(); ++r) {
        const auto s = static_cast<std::size_t>(e.rows[static_cast<std::size_t>(r)].subject);
        acc[s] += std::exp(offsets(r) - peak[s]);
    }
    for (std::size_t s = 0; s < stats.size(); ++s) stats[s].log_exposure = peak[s] + std::log(acc[s]);
    return stats;
}

double frailty_loglik(const std::vector<SubjectStats>& stats, double sigma, FrailtyMethod method, bool with_intercept,
                      double& alpha, Eigen::VectorXd& modes) {
    const Index n = static_cast<Index>(stats.size());
    const double sigma2 = sigma * sigma;
    const double tau = 1.0 / sigma2;
    if (modes.size() != n) modes = Eigen::VectorXd::Zero(n);
    if (!with_intercept) alpha = 0.0;

    auto update_modes = [&](double a) {
        return chunked_sum(n, kChunkSubjects, AlphaSums{}, [&](Index b, Index e) {
            AlphaSums acc;
            for (Index i = b; i < e; ++i) {
                const auto& s = stats[static_cast<std::size_t>(i)];
                modes(i) = solve_mode(s.events, a + s.log_exposure, sigma2, modes(i));
                const double h = std::exp(a + modes(i) + s.log_exposure);
                acc.score += s.events - h;
                acc.info += h * tau / (h + tau);
            }
            return acc;
        });
    };

    double total_events = 0.0;
    for (const auto& s : stats) total_events += s.events;
    AlphaSums sums = update_modes(alpha);
    if (with_intercept) {
        // The profiled score is decreasing in alpha: Newton inside a bracket.
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        int it = 0;
        while (std::abs(sums.score) > 1e-10 * std::max(1.0, total_events)) {
            if (++it > 200) throw NumericalError("frailty intercept did not converge");
            if (!(sums.info > 0.0)) throw NumericalError("frailty intercept has no information");
            (sums.score > 0.0 ? lo : hi) = alpha;
            double next = alpha + std::clamp(sums.score / sums.info, -10.0, 10.0);
            if (std::isfinite(lo) && std::isfinite(hi) && !(next > lo && next < hi)) next = 0.5 * (lo + hi);
            const bool tiny = std::abs(next - alpha) <= 1e-14 * (1.0 + std::abs(alpha));
            alpha = next;
            sums = update_modes(alpha);
            if (tiny) break;
        }
    }

    HermiteRule gh;
    if (!method.is_laplace()) gh = gauss_hermite_rule(method.nodes);
    const HermiteRule* rule = method.is_laplace() ? nullptr : &gh;
    double total = chunked_sum(n, kChunkSubjects, 0.0, [&](Index b, Index e) {
        double acc = 0.0;
        for (Index i = b; i < e; ++i) {
            acc += marginal_at_mode(stats[static_cast<std::size_t>(i)], alpha, modes(i), sigma2, rule);
        }
        return acc;
    });
    if (with_intercept) total += 0.5 * kLog2Pi - 0.5 * std::log(sums.info);
    return total;
}

FrailtyFit fit_frailty(const std::vector<SubjectStats>& stats, const FrailtyConfig& cfg) {
    if (!(cfg.sigma_lower > 0.0) || !(cfg.sigma_upper > cfg.sigma_lower)) {
        throw ValidationError("invalid frailty sigma bounds");
    }
    if (stats.empty()) throw ValidationError("fit_frailty: no subjects");
    double alpha = 0.0;
    Eigen::VectorXd modes;
    auto objective = [&](double log_sigma) {
        return frailty_loglik(stats, std::exp(log_sigma), cfg.method, cfg.with_intercept, alpha, modes);
    };
    Maximize1DOptions opts;
    opts.lower = std::log(cfg.sigma_lower);
    opts.upper = std::log(cfg.sigma_upper);
    opts.grid_step = 1.0;
    opts.width = 1e-3;
    opts.max_evaluations = cfg.max_evaluations;
    const Maximum1D best = maximize_1d(objective, opts);

    FrailtyFit fit;
    fit.method = cfg.method;
    fit.with_intercept = cfg.with_intercept;
    fit.sigma_u = std::exp(best.x);
    fit.marginal_loglik = frailty_loglik(stats, fit.sigma_u, cfg.method, cfg.with_intercept, alpha, modes);
    fit.alpha = alpha;
    fit.modes = modes;
    fit.evaluations = best.evaluations + 1;
    fit.converged = best.converged;
    fit.boundary = best.at_lower || best.at_upper;

    double dev = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        const double lin = alpha + modes(static_cast<Index>(i));
        dev += 2.0 * (s.sum_y_log_y - s.sum_y_eta - s.events * lin - s.events + std::exp(lin + s.log_exposure));
    }
    fit.deviance = dev;
    return fit;
}

FrailtyFit fit_frailty(const ExpandedDataset& e, const Eigen::VectorXd& frozen_offsets, const FrailtyConfig& cfg) {
    return fit_frailty(subject_stats(e, frozen_offsets), cfg);
}

}  // namespace survgam
