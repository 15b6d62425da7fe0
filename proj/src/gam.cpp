#include "survgam/gam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "survgam/error.hpp"
#include "survgam/optimize.hpp"

namespace survgam {

GamProblem build_gam_problem(const Dataset& d, const ExpandedDataset& e, int basis_dim, int penalty_order) {
    validate_for_fit(d);
    if (e.n_records != d.size()) throw ValidationError("expanded dataset does not match the dataset");

    std::vector<double> event_times;
    for (const auto& r : d.records()) {
        if (r.event == 1) event_times.push_back(r.time);
    }
    GamProblem p;
    std::tie(p.basis, p.pd) = build_basis(event_times, basis_dim, penalty_order, d.max_time());

    const Index N = d.size();
    const Index k = d.n_covariates();
    const Eigen::MatrixXd cov = d.covariate_matrix();
    p.covariate_names = d.covariate_names();
    p.covariate_means = k > 0 ? Eigen::VectorXd(cov.colwise().mean().transpose()) : Eigen::VectorXd();

    p.X.rows_per_unit = e.nodes_per_record;
    p.X.unit.resize(N, 1 + k);
    p.X.unit.col(0).setOnes();
    if (k > 0) p.X.unit.rightCols(k) = cov.rowwise() - p.covariate_means.transpose();

    std::vector<double> t(static_cast<std::size_t>(e.size()));
    for (std::size_t r = 0; r < t.size(); ++r) t[r] = e.rows[r].t;
    BasisBlocks blocks = evaluate_basis(p.basis, p.pd, t);
    p.n_fixed_smooth = p.pd.n_fixed() - 1;  // the constant direction is the intercept
    p.n_random_smooth = p.pd.n_random();
    p.X.row.resize(e.size(), p.n_fixed_smooth + p.n_random_smooth);
    p.X.row << blocks.fixed.rightCols(p.n_fixed_smooth), blocks.random;

    p.X.names.push_back("(Intercept)");
    for (const auto& n : p.covariate_names) p.X.names.push_back(n);
    for (Index j = 1; j <= p.n_fixed_smooth; ++j) p.X.names.push_back("s(t).F" + std::to_string(j));
    for (Index j = 1; j <= p.n_random_smooth; ++j) p.X.names.push_back("s(t).R" + std::to_string(j));

    p.X.group = d.record_subjects();
    p.X.n_groups = d.n_subjects();
    p.y = e.responses();
    p.log_weights = e.log_weights();
    return p;
}

Penalty smoothing_penalty(const GamProblem& p, double log_lambda, double frailty_precision) {
    Penalty pen;
    pen.diag = Eigen::VectorXd::Zero(p.n_coef());
    pen.diag.tail(p.n_random_smooth).setConstant(std::exp(log_lambda));
    pen.group_precision = frailty_precision;
    return pen;
}

double GamFit::log_baseline_hazard(double t) const { return basis.evaluate(t).dot(spline_raw); }

void GamFit::shift_baseline(double c) {
    spline_fixed(0) += c;
    spline_raw.array() += c;
}

namespace {

Eigen::VectorXd total_offset(const GamProblem& p, const Eigen::VectorXd& extra) {
    if (extra.size() == 0) return p.log_weights;
    if (extra.size() != p.log_weights.size()) throw ValidationError("extra offset has the wrong length");
    return p.log_weights + extra;
}

Eigen::VectorXd default_init(const GamProblem& p, const Eigen::VectorXd& offset) {
    Eigen::VectorXd init = Eigen::VectorXd::Zero(p.n_coef());
    init(0) = std::log(std::max(p.y.sum(), 1e-8) / offset.array().exp().sum());
    return init;
}

GamFit make_fit(const GamProblem& p, const WorkingState& s, const Penalty& pen, double log_lambda) {
    GamFit f;
    const Index k = p.n_covariates();
    f.names = p.X.names;
    f.coef = s.coef;
    f.covariance = s.covariance;
    f.beta = s.coef.segment(1, k);
    f.beta_se = s.covariance.diagonal().segment(1, k).cwiseSqrt();
    f.covariate_names = p.covariate_names;
    f.covariate_means = p.covariate_means;
    f.basis = p.basis;
    f.pd = p.pd;

    f.spline_fixed.resize(p.pd.n_fixed());
    f.spline_fixed(0) = s.coef(0) - (k > 0 ? p.covariate_means.dot(f.beta) : 0.0);
    f.spline_fixed.tail(p.n_fixed_smooth) = s.coef.segment(1 + k, p.n_fixed_smooth);
    f.spline_random = s.coef.tail(p.n_random_smooth);
    f.spline_raw = p.pd.to_raw(f.spline_fixed, f.spline_random);

    f.log_lambda = log_lambda;
    f.edf = 1.0 + static_cast<double>(p.n_fixed_smooth);
    for (Index j = p.random_begin(); j < p.n_coef(); ++j) f.edf += 1.0 - pen.diag(j) * s.covariance(j, j);
    f.deviance = s.deviance;
    f.reml = reml_criterion(p.X, s, pen);
    f.iterations = s.iterations;
    f.converged = s.converged;
    return f;
}

}  // namespace

GamFit fit_gam_at(const GamProblem& p, const Eigen::VectorXd& extra_offset, double log_lambda,
                  const PirlsOptions& opts, const Eigen::VectorXd* init) {
    const Eigen::VectorXd offset = total_offset(p, extra_offset);
    const Penalty pen = smoothing_penalty(p, log_lambda);
    const Eigen::VectorXd start = init != nullptr ? *init : default_init(p, offset);
    const WorkingState s = pirls(p.X, p.y, offset, pen, start, {}, opts);
    GamFit f = make_fit(p, s, pen, log_lambda);
    f.evaluations = 1;
    return f;
}

GamFit optimize_smoothing(const GamProblem& p, const Eigen::VectorXd& extra_offset, const GamConfig& cfg,
                          const GamFit* warm) {
    const Eigen::VectorXd offset = total_offset(p, extra_offset);
    Eigen::VectorXd current = warm != nullptr && warm->coef.size() == p.n_coef() ? warm->coef : default_init(p, offset);
    if (cfg.fixed_log_lambda) return fit_gam_at(p, extra_offset, *cfg.fixed_log_lambda, cfg.pirls, &current);

    auto objective = [&](double rho) {
        const Penalty pen = smoothing_penalty(p, rho);
        try {
            const WorkingState s = pirls(p.X, p.y, offset, pen, current, {}, cfg.pirls);
            current = s.coef;
            return reml_criterion(p.X, s, pen);
        } catch (const NumericalError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };
    Maximize1DOptions opts;
    opts.lower = cfg.log_lambda_lower;
    opts.upper = cfg.log_lambda_upper;
    opts.grid_step = cfg.grid_step;
    opts.max_evaluations = cfg.max_evaluations;
    const Maximum1D best = maximize_1d(objective, opts);

    GamFit f = fit_gam_at(p, extra_offset, best.x, cfg.pirls, &current);
    f.evaluations = best.evaluations + 1;
    f.lambda_at_bound = best.at_lower || best.at_upper;
    return f;
}

Eigen::VectorXd standard_errors(const GamFit& fit) {
    const Eigen::VectorXd d = fit.covariance.diagonal();
    if (!(d.array() > 0.0).all() || !d.allFinite()) throw NumericalError("covariance is not positive definite");
    return fit.beta_se;
}

LogHazardBand log_hazard_band(const GamFit& fit, std::span<const double> times) {
    LogHazardBand band;
    const Index k = fit.beta.size();
    const Index nf = fit.pd.n_fixed() - 1;
    const Index nr = fit.pd.n_random();
    for (double t : times) {
        const Eigen::VectorXd raw = fit.basis.evaluate(t);
        Eigen::VectorXd a(fit.coef.size());
        a(0) = 1.0;
        if (k > 0) a.segment(1, k) = -fit.covariate_means;
        a.segment(1 + k, nf) = (raw.transpose() * fit.pd.fixed_transform.rightCols(nf)).transpose();
        a.tail(nr) = (raw.transpose() * fit.pd.random_transform).transpose();
        band.t.push_back(t);
        band.estimate.push_back(raw.dot(fit.spline_raw));
        band.se.push_back(std::sqrt(a.dot(fit.covariance * a)));
    }
    return band;
}

OneStageResult one_stage_fit(const GamProblem& p, const OneStageConfig& cfg) {
    if (p.X.n_groups > cfg.max_subjects) {
        throw ValidationError("one-stage fit limited to " + std::to_string(cfg.max_subjects) + " subjects (got " +
                              std::to_string(p.X.n_groups) + ")");
    }
    const double ls_lo = std::log(cfg.sigma_lower);
    const double ls_hi = std::log(cfg.sigma_upper);
    const double rho_lo = cfg.gam.log_lambda_lower;
    const double rho_hi = cfg.gam.log_lambda_upper;

    const GamFit base = optimize_smoothing(p, {}, cfg.gam);
    Eigen::VectorXd coef = base.coef;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p.X.n_groups);
    int evaluations = base.evaluations;

    auto solve = [&](double rho, double log_sigma) {
        const Penalty pen = smoothing_penalty(p, rho, std::exp(-2.0 * log_sigma));
        WorkingState s = pirls(p.X, p.y, p.log_weights, pen, coef, b, cfg.gam.pirls);
        return std::make_pair(std::move(s), pen);
    };
    auto criterion = [&](double rho, double log_sigma) {
        ++evaluations;
        try {
            auto [s, pen] = solve(rho, log_sigma);
            coef = s.coef;
            b = s.group_effects;
            return reml_criterion(p.X, s, pen);
        } catch (const NumericalError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    double rho = base.log_lambda;
    double log_sigma = 0.0;
    if (cfg.fixed_log_sigma) {
        log_sigma = std::clamp(*cfg.fixed_log_sigma, ls_lo, ls_hi);
        if (cfg.gam.fixed_log_lambda) {
            rho = *cfg.gam.fixed_log_lambda;
        } else {
            Maximize1DOptions opts;
            opts.lower = rho_lo;
            opts.upper = rho_hi;
            opts.grid_step = cfg.gam.grid_step;
            opts.max_evaluations = cfg.gam.max_evaluations;
            rho = maximize_1d([&](double r) { return criterion(r, log_sigma); }, opts).x;
        }
    } else {
        auto clamp_x = [&](const Eigen::VectorXd& x) {
            Eigen::Vector2d c(std::clamp(x(0), rho_lo, rho_hi), std::clamp(x(1), ls_lo, ls_hi));
            if (cfg.gam.fixed_log_lambda) c(0) = *cfg.gam.fixed_log_lambda;
            return c;
        };
        auto negative = [&](const Eigen::VectorXd& x) {
            const Eigen::Vector2d c = clamp_x(x);
            const double outside = (x - c).squaredNorm();
            if (cfg.gam.fixed_log_lambda) return -criterion(c(0), c(1)) + (x(1) - c(1)) * (x(1) - c(1));
            return -criterion(c(0), c(1)) + outside;
        };
        Eigen::VectorXd start(2);
        start << base.log_lambda, std::log(0.5);
        NelderMeadOptions nm;
        nm.initial_step = 1.0;
        nm.f_tol = 1e-7;
        nm.x_tol = 1e-3;
        nm.max_evaluations = cfg.max_evaluations;
        NelderMeadResult res = nelder_mead(negative, start, nm);
        Eigen::VectorXd x = clamp_x(res.x);

        // Newton polish on finite differences when the optimum is interior.
        const double h = 1e-3;
        for (int step = 0; step < 3; ++step) {
            if (x(0) - rho_lo < 2 * h || rho_hi - x(0) < 2 * h || x(1) - ls_lo < 2 * h || ls_hi - x(1) < 2 * h) break;
            if (cfg.gam.fixed_log_lambda) break;
            const Eigen::VectorXd g = fd_gradient(negative, x, h);
            if (g.cwiseAbs().maxCoeff() < 1e-5) break;
            const Eigen::MatrixXd H = fd_hessian(negative, x, h);
            Eigen::LLT<Eigen::MatrixXd> llt(H);
            if (llt.info() != Eigen::Success) break;
            Eigen::VectorXd dx = -llt.solve(g);
            if (dx.cwiseAbs().maxCoeff() > 0.1) dx *= 0.1 / dx.cwiseAbs().maxCoeff();
            const Eigen::VectorXd xn = clamp_x(x + dx);
            if (negative(xn) > negative(x)) break;
            x = xn;
        }
        rho = x(0);
        log_sigma = x(1);
    }

    auto [s, pen] = solve(rho, log_sigma);
    OneStageResult out;
    out.gam = make_fit(p, s, pen, rho);
    out.gam.evaluations = evaluations;
    out.gam.lambda_at_bound = rho - rho_lo < 1e-3 || rho_hi - rho < 1e-3;
    out.frailty.sigma_u = std::exp(log_sigma);
    out.frailty.modes = s.group_effects;
    out.frailty.method = FrailtyMethod::laplace();
    out.frailty.with_intercept = false;
    out.frailty.marginal_loglik = out.gam.reml;
    out.frailty.deviance = s.deviance;
    out.frailty.converged = s.converged;
    out.frailty.boundary = log_sigma - ls_lo < 1e-3 || ls_hi - log_sigma < 1e-3;
    out.frailty.evaluations = evaluations;
    return out;
}

}  // namespace survgam
