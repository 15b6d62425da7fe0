#include "survgam/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "survgam/error.hpp"
#include "survgam/quadrature.hpp"

namespace survgam {

namespace {

struct RiskSums {
    double time = 0.0;
    double deaths = 0.0;
    Eigen::VectorXd dead_x;  // sum of x over deaths
    double s0 = 0.0;
    Eigen::VectorXd s1;
    Eigen::MatrixXd s2;
};

/**
 * Risk-set sums at every distinct event time, from a descending sweep:
 * at risk at t means entry < t <= time, i.e. {time >= t} minus {entry >= t}.
 */
std::vector<RiskSums> risk_sums(const Dataset& d, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                                bool second_order) {
    const Index n = d.size();
    const Index p = x.cols();
    const auto& recs = d.records();
    std::vector<Index> by_time(static_cast<std::size_t>(n)), by_entry(static_cast<std::size_t>(n));
    std::iota(by_time.begin(), by_time.end(), 0);
    std::iota(by_entry.begin(), by_entry.end(), 0);
    auto rec = [&](Index i) -> const SurvivalRecord& { return recs[static_cast<std::size_t>(i)]; };
    std::stable_sort(by_time.begin(), by_time.end(), [&](Index a, Index b) { return rec(a).time > rec(b).time; });
    std::stable_sort(by_entry.begin(), by_entry.end(), [&](Index a, Index b) { return rec(a).entry > rec(b).entry; });

    const Eigen::VectorXd risk = (x * beta).array().exp();
    std::vector<RiskSums> out;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(second_order ? p : 0, second_order ? p : 0);
    double s0 = 0.0;
    std::size_t it = 0, ie = 0;
    auto add = [&](Index i, double sign) {
        const double w = sign * risk(i);
        s0 += w;
        s1 += w * x.row(i).transpose();
        if (second_order) s2 += w * x.row(i).transpose() * x.row(i);
    };
    while (it < by_time.size()) {
        const double t = rec(by_time[it]).time;
        RiskSums rs;
        rs.time = t;
        rs.dead_x = Eigen::VectorXd::Zero(p);
        for (; it < by_time.size() && rec(by_time[it]).time == t; ++it) {
            const Index i = by_time[it];
            add(i, 1.0);
            if (rec(i).event == 1) {
                rs.deaths += 1.0;
                rs.dead_x += x.row(i).transpose();
            }
        }
        for (; ie < by_entry.size() && rec(by_entry[ie]).entry >= t; ++ie) add(by_entry[ie], -1.0);
        if (rs.deaths > 0.0) {
            if (!(s0 > 0.0)) throw NumericalError("empty risk set at event time " + std::to_string(t));
            rs.s0 = s0;
            rs.s1 = s1;
            if (second_order) rs.s2 = s2;
            out.push_back(std::move(rs));
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

Eigen::MatrixXd centered_covariates(const Dataset& d) {
    Eigen::MatrixXd x = d.covariate_matrix();
    if (x.cols() > 0) x.rowwise() -= x.colwise().mean();
    return x;
}

void reject_constant(const Dataset& d) {
    const FitSummary s = validate_for_fit(d);
    if (!s.constant_covariates.empty()) {
        throw ValidationError("covariate '" + s.constant_covariates.front() + "' is constant");
    }
}

struct CoxEval {
    double loglik = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd info;
};

CoxEval cox_eval(const Dataset& d, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, bool derivatives) {
    CoxEval e;
    const Index p = x.cols();
    e.score = Eigen::VectorXd::Zero(p);
    e.info = Eigen::MatrixXd::Zero(p, p);
    for (const auto& rs : risk_sums(d, x, beta, derivatives)) {
        e.loglik += rs.dead_x.dot(beta) - rs.deaths * std::log(rs.s0);
        if (derivatives) {
            const Eigen::VectorXd m = rs.s1 / rs.s0;
            e.score += rs.dead_x - rs.deaths * m;
            e.info += rs.deaths * (rs.s2 / rs.s0 - m * m.transpose());
        }
    }
    return e;
}

}  // namespace

double cox_partial_loglik(const Dataset& d, const Eigen::VectorXd& beta) {
    return cox_eval(d, d.covariate_matrix(), beta, false).loglik;
}

Eigen::VectorXd cox_score(const Dataset& d, const Eigen::VectorXd& beta) {
    return cox_eval(d, d.covariate_matrix(), beta, true).score;
}

CoxFit cox_partial_fit(const Dataset& d) {
    reject_constant(d);
    const Eigen::MatrixXd x = centered_covariates(d);
    const Index p = x.cols();
    CoxFit fit;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    CoxEval cur = cox_eval(d, x, beta, true);
    bool converged = p == 0;
    Eigen::VectorXd step = Eigen::VectorXd::Zero(p);
    for (int iter = 0; iter < 50 && !converged; ++iter) {
        fit.iterations = iter + 1;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.info);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
            if (beta.cwiseAbs().maxCoeff() > 10.0) throw NumericalError("separation");
            throw NumericalError("Cox information matrix is singular");
        }
        step = ldlt.solve(cur.score);
        double scale = 1.0;
        CoxEval next;
        for (int h = 0; h < 30; ++h) {
            next = cox_eval(d, x, beta + scale * step, true);
            if (std::isfinite(next.loglik) && next.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) break;
            scale *= 0.5;
        }
        beta += scale * step;
        cur = std::move(next);
        if (beta.cwiseAbs().maxCoeff() > 50.0) throw NumericalError("separation");
        converged = cur.score.cwiseAbs().maxCoeff() < 1e-8 && (scale * step).cwiseAbs().maxCoeff() < 1e-6;
    }
    if (!converged) {
        if (beta.cwiseAbs().maxCoeff() > 10.0) throw NumericalError("separation");
        throw NumericalError("Cox fit did not converge in 50 iterations");
    }
    fit.beta = beta;
    fit.loglik = cur.loglik;
    fit.information = cur.info;
    fit.se = p > 0 ? Eigen::VectorXd(cur.info.inverse().diagonal().cwiseSqrt()) : Eigen::VectorXd();
    fit.increments = breslow_baseline(d, beta);
    for (const auto& rs : risk_sums(d, x, beta, false)) fit.event_times.push_back(rs.time);
    return fit;
}

std::vector<double> breslow_baseline(const Dataset& d, const Eigen::VectorXd& beta) {
    if (beta.size() != d.n_covariates()) throw ValidationError("beta has the wrong length");
    std::vector<double> inc;
    for (const auto& rs : risk_sums(d, d.covariate_matrix(), beta, false)) inc.push_back(rs.deaths / rs.s0);
    return inc;
}

std::vector<double> PoissonSemiparametricFit::increments() const {
    std::vector<double> out(lengths.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(log_hazard(static_cast<Index>(k))) * lengths[k];
    return out;
}

PoissonSemiparametricFit poisson_semiparametric_fit(const Dataset& d) {
    reject_constant(d);
    const RiskSetPartition part = partition_at_events(d);
    if (part.n_exposure_rows() > 10'000'000) throw ValidationError("semiparametric Poisson fit limited to 1e7 rows");
    const Eigen::MatrixXd x = centered_covariates(d);
    const Index p = x.cols();
    const Index K = part.n_intervals();
    const Index n = d.size();

    std::vector<double> log_len(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) log_len[static_cast<std::size_t>(k)] = std::log(part.lengths[static_cast<std::size_t>(k)]);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd lam(K);
    {
        std::vector<double> at_risk(static_cast<std::size_t>(K), 0.0);
        for (const auto& m : part.membership) {
            for (Index k : m) at_risk[static_cast<std::size_t>(k)] += 1.0;
        }
        for (Index k = 0; k < K; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            lam(k) = std::log(static_cast<double>(part.deaths[ku]) / at_risk[ku]) - log_len[ku];
        }
    }
    Eigen::VectorXd dead_x = Eigen::VectorXd::Zero(p);
    for (Index i = 0; i < n; ++i) {
        if (part.death_interval[static_cast<std::size_t>(i)] >= 0) dead_x += x.row(i).transpose();
    }

    auto loglik = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& l) {
        const Eigen::VectorXd xb = x * b;
        double ll = dead_x.dot(b);
        for (Index k = 0; k < K; ++k) ll += static_cast<double>(part.deaths[static_cast<std::size_t>(k)]) * l(k);
        for (Index i = 0; i < n; ++i) {
            for (Index k : part.membership[static_cast<std::size_t>(i)]) {
                ll -= std::exp(l(k) + xb(i) + log_len[static_cast<std::size_t>(k)]);
            }
        }
        return ll;
    };

    PoissonSemiparametricFit fit;
    double ll = loglik(beta, lam);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
        fit.iterations = iter + 1;
        const Eigen::VectorXd xb = x * beta;
        Eigen::VectorXd gb = dead_x;
        Eigen::VectorXd gl(K);
        for (Index k = 0; k < K; ++k) gl(k) = static_cast<double>(part.deaths[static_cast<std::size_t>(k)]);
        Eigen::MatrixXd hbb = Eigen::MatrixXd::Zero(p, p);
        Eigen::MatrixXd hbl = Eigen::MatrixXd::Zero(p, K);
        Eigen::VectorXd hll = Eigen::VectorXd::Zero(K);
        for (Index i = 0; i < n; ++i) {
            double mu_i = 0.0;
            for (Index k : part.membership[static_cast<std::size_t>(i)]) {
                const double mu = std::exp(lam(k) + xb(i) + log_len[static_cast<std::size_t>(k)]);
                mu_i += mu;
                gl(k) -= mu;
                hll(k) += mu;
                hbl.col(k) += mu * x.row(i).transpose();
            }
            gb -= mu_i * x.row(i).transpose();
            hbb += mu_i * x.row(i).transpose() * x.row(i);
        }
        const double gmax = std::max(gb.size() ? gb.cwiseAbs().maxCoeff() : 0.0, gl.cwiseAbs().maxCoeff());
        A = hbb - hbl * hll.cwiseInverse().asDiagonal() * hbl.transpose();
        if (gmax < 1e-10) {
            converged = true;
            break;
        }
        Eigen::VectorXd db = Eigen::VectorXd::Zero(p);
        if (p > 0) {
            Eigen::LLT<Eigen::MatrixXd> llt(A);
            if (llt.info() != Eigen::Success) throw NumericalError("semiparametric Poisson information is singular");
            db = llt.solve(gb - hbl * gl.cwiseQuotient(hll));
        }
        const Eigen::VectorXd dl = (gl - hbl.transpose() * db).cwiseQuotient(hll);
        double scale = 1.0;
        double ll_new = ll;
        for (int h = 0; h < 30; ++h) {
            ll_new = loglik(beta + scale * db, lam + scale * dl);
            if (std::isfinite(ll_new) && ll_new >= ll - 1e-12 * std::abs(ll)) break;
            scale *= 0.5;
        }
        beta += scale * db;
        lam += scale * dl;
        ll = ll_new;
        if (p > 0 && beta.cwiseAbs().maxCoeff() > 50.0) throw NumericalError("separation");
    }
    if (!converged) throw NumericalError("semiparametric Poisson fit did not converge");

    fit.beta = beta;
    fit.se = p > 0 ? Eigen::VectorXd(A.inverse().diagonal().cwiseSqrt()) : Eigen::VectorXd();
    const Eigen::VectorXd means = p > 0 ? Eigen::VectorXd(d.covariate_matrix().colwise().mean().transpose())
                                        : Eigen::VectorXd();
    fit.log_hazard = lam.array() - (p > 0 ? means.dot(beta) : 0.0);
    fit.boundaries = part.boundaries;
    fit.lengths = part.lengths;
    return fit;
}

KaplanMeier kaplan_meier(const Dataset& d) {
    std::vector<double> exits, entries, deaths;
    for (const auto& r : d.records()) {
        exits.push_back(r.time);
        entries.push_back(r.entry);
        if (r.event) deaths.push_back(r.time);
    }
    std::sort(exits.begin(), exits.end());
    std::sort(entries.begin(), entries.end());
    std::sort(deaths.begin(), deaths.end());
    auto at_least = [](const std::vector<double>& v, double t) {
        return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), t));
    };

    KaplanMeier km;
    double s = 1.0, greenwood = 0.0;
    for (std::size_t i = 0; i < deaths.size();) {
        const double t = deaths[i];
        std::size_t j = i;
        while (j < deaths.size() && deaths[j] == t) ++j;
        const double dk = static_cast<double>(j - i);
        const double nk = at_least(exits, t) - at_least(entries, t);
        s *= 1.0 - dk / nk;
        greenwood += nk > dk ? dk / (nk * (nk - dk)) : 0.0;
        km.times.push_back(t);
        km.survival.push_back(s);
        km.variance.push_back(s * s * greenwood);
        i = j;
    }
    return km;
}

double KaplanMeier::at(double t) const {
    const auto k = std::upper_bound(times.begin(), times.end(), t) - times.begin();
    return k == 0 ? 1.0 : survival[static_cast<std::size_t>(k - 1)];
}

double KaplanMeier::variance_at(double t) const {
    const auto k = std::upper_bound(times.begin(), times.end(), t) - times.begin();
    return k == 0 ? 0.0 : variance[static_cast<std::size_t>(k - 1)];
}

}  // namespace survgam
