#include "survgam/simulate.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "survgam/error.hpp"
#include "survgam/optimize.hpp"

namespace survgam {

std::pair<int, int> derive_counts(int dim_beta, double f) {
    if (dim_beta < 2) throw ValidationError("dim_beta must be at least 2");
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("f must lie in [0, 1]");
    const int rounded = static_cast<int>(std::floor(f * dim_beta + 0.5));
    const int n_cont = std::max(1, std::min(dim_beta - 1, rounded));
    return {n_cont, dim_beta - n_cont};
}

namespace {

// Strictly inside (0, 1).
double open_uniform(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = 0.0;
    do {
        u = unif(rng);
    } while (u <= 0.0);
    return u;
}

class McSample {
public:
    McSample(double B, double var, Index size, std::uint64_t seed) : exp_l_(size) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal;
        const double sd = std::sqrt(var);
        for (Index i = 0; i < size; ++i) exp_l_(i) = std::exp(B + sd * normal(rng));
    }

    // Monte-Carlo S(t) and d S / d(lambda t^gamma).
    std::pair<double, double> survival(double scale) const {
        double s = 0.0, ds = 0.0;
        for (Index i = 0; i < exp_l_.size(); ++i) {
            const double e = std::exp(-scale * exp_l_(i));
            s += e;
            ds -= exp_l_(i) * e;
        }
        const double n = static_cast<double>(exp_l_.size());
        return {s / n, ds / n};
    }

private:
    Eigen::VectorXd exp_l_;
};

WeibullCalibration calibrate(double S_Tmax, double q, double T_max, double B, double var, Index mc_size,
                             std::uint64_t seed) {
    if (!(S_Tmax > 0.0 && S_Tmax < 1.0)) throw ValidationError("S_Tmax must lie in (0, 1)");
    if (!(T_max > 1.0)) throw ValidationError("T_max must exceed 1");
    const double S1 = 1.0 - (1.0 - S_Tmax) / q;
    if (!(S1 > S_Tmax && S1 < 1.0)) throw ValidationError("S(1) = 1 - (1 - S_Tmax) / q must lie in (S_Tmax, 1)");
    if (mc_size < 1) throw ValidationError("Monte-Carlo size must be positive");

    const McSample mc(B, var, mc_size, seed);
    const double log_T = std::log(T_max);
    auto residuals = [&](const Eigen::VectorXd& x) {
        const double gamma = std::exp(x(0));
        const double lambda = std::exp(x(1));
        return Eigen::Vector2d(std::log(mc.survival(lambda * std::pow(T_max, gamma)).first) - std::log(S_Tmax),
                               std::log(mc.survival(lambda).first) - std::log(S1));
    };
    auto objective = [&](const Eigen::VectorXd& x) { return residuals(x).squaredNorm(); };

    Eigen::VectorXd x(2);
    x << 0.0, std::log(-std::log(S_Tmax)) - log_T - B;
    NelderMeadOptions nm;
    nm.initial_step = 0.5;
    nm.f_tol = 1e-16;
    nm.x_tol = 1e-9;
    nm.max_evaluations = 1000;
    x = nelder_mead(objective, x, nm).x;

    // Gauss-Newton polish with the analytic Jacobian.
    for (int it = 0; it < 20; ++it) {
        const double gamma = std::exp(x(0));
        const double lambda = std::exp(x(1));
        const double scale_T = lambda * std::pow(T_max, gamma);
        const auto [sT, dsT] = mc.survival(scale_T);
        const auto [s1, ds1] = mc.survival(lambda);
        const Eigen::Vector2d r(std::log(sT) - std::log(S_Tmax), std::log(s1) - std::log(S1));
        if (r.cwiseAbs().maxCoeff() < 1e-13) break;
        // d log S / d log lambda = scale * S' / S; d/d log gamma adds a factor gamma log T.
        const double aT = scale_T * dsT / sT;
        const double a1 = lambda * ds1 / s1;
        Eigen::Matrix2d J;
        J << aT * gamma * log_T, aT, 0.0, a1;
        const Eigen::Vector2d step = J.fullPivLu().solve(-r);
        if (!step.allFinite()) break;
        const Eigen::VectorXd xn = x + step;
        if (!(objective(xn) < r.squaredNorm())) break;
        x = xn;
    }

    WeibullCalibration out;
    out.gamma = std::exp(x(0));
    out.lambda = std::exp(x(1));
    out.residual = objective(x);
    if (!(out.residual <= 1e-6)) throw NumericalError("calibration failed");
    return out;
}

}  // namespace

WeibullCalibration calibrate_weibull(double S_Tmax, double q, double T_max, double B, double u2, double r,
                                     Index mc_size, std::uint64_t seed) {
    if (u2 < 0.0 || r < 0.0) throw ValidationError("u2 and r must be nonnegative");
    return calibrate(S_Tmax, q, T_max, B, (r * r + 1.0) * u2, mc_size, seed);
}

double marginal_survival(double t, double gamma, double lambda, double B, double u2, double r, Index mc_size,
                         std::uint64_t seed) {
    const McSample mc(B, (r * r + 1.0) * u2, mc_size, seed);
    return mc.survival(lambda * std::pow(t, gamma)).first;
}

WeibullDraw draw_weibull_time(double lambda, double gamma, double lp, double U, double T_max) {
    if (!(U > 0.0 && U < 1.0)) throw ValidationError("U must lie in (0, 1)");
    if (!(lambda > 0.0 && gamma > 0.0)) throw ValidationError("lambda and gamma must be positive");
    const double t = std::pow(-std::log(U) / (lambda * std::exp(lp)), 1.0 / gamma);
    if (t > T_max) return {T_max, 0};
    return {t, 1};
}

SimulatedDataset simulate_dataset(const DesignPoint& dp, const SimulationConfig& cfg) {
    if (dp.N < 1) throw ValidationError("N must be positive");
    if (!(dp.T_max > 0.0)) throw ValidationError("T_max must be positive");
    std::mt19937_64 rng(dp.seed);

    // Covariate counts.
    int n_cont = 0, n_bin = 0;
    if (cfg.columns.empty()) {
        std::tie(n_cont, n_bin) = derive_counts(dp.dim_beta, dp.f);
    }
    const int p = cfg.columns.empty() ? n_cont + n_bin : static_cast<int>(cfg.columns.size());

    // Coefficients.
    Eigen::VectorXd beta(p);
    if (cfg.beta) {
        if (cfg.beta->size() != p) throw ValidationError("fixed beta has the wrong length");
        beta = *cfg.beta;
    } else {
        std::normal_distribution<double> normal;
        if (cfg.columns.empty()) {
            for (int j = 0; j < n_cont; ++j) beta(j) = cfg.sigma_cont * normal(rng);
            for (int j = 0; j < n_bin; ++j) beta(n_cont + j) = cfg.sigma_bin * normal(rng);
        } else {
            for (int j = 0; j < p; ++j) {
                beta(j) = (cfg.columns[static_cast<std::size_t>(j)].binary ? cfg.sigma_bin : cfg.sigma_cont) *
                          normal(rng);
            }
        }
    }

    // Column distributions.
    std::vector<CovariateSpec> columns = cfg.columns;
    if (columns.empty()) {
        std::uniform_real_distribution<double> s_dist(cfg.s_cont_lower, cfg.s_cont_upper);
        std::uniform_real_distribution<double> p_dist(cfg.p_bin_lower, cfg.p_bin_upper);
        for (int j = 0; j < n_cont; ++j) columns.push_back({"x" + std::to_string(j + 1), false, s_dist(rng)});
        for (int j = 0; j < n_bin; ++j) columns.push_back({"x" + std::to_string(n_cont + j + 1), true, p_dist(rng)});
    }

    // Design matrix, column by column.
    const Index N = dp.N;
    Eigen::MatrixXd X(N, p);
    for (int j = 0; j < p; ++j) {
        const auto& c = columns[static_cast<std::size_t>(j)];
        if (c.binary) {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (Index i = 0; i < N; ++i) X(i, j) = unif(rng) < c.param ? 1.0 : 0.0;
        } else {
            std::normal_distribution<double> normal(0.0, c.param);
            for (Index i = 0; i < N; ++i) X(i, j) = normal(rng);
        }
    }

    // Moments of the realized linear predictor.
    SimulatedDataset out;
    SimulationTruth& truth = out.truth;
    truth.seed = dp.seed;
    truth.beta = beta;
    const Eigen::VectorXd lp = X * beta;
    truth.B = lp.mean();
    const double u2 = N > 1 ? (lp.array() - truth.B).square().sum() / static_cast<double>(N - 1) : 0.0;
    truth.u = std::sqrt(u2);

    // Frailties.
    truth.sigma_f = cfg.sigma_f ? *cfg.sigma_f : dp.r * truth.u;
    truth.frailties.resize(N);
    {
        std::normal_distribution<double> normal;
        for (Index i = 0; i < N; ++i) {
            const double z = normal(rng);
            truth.frailties(i) = truth.sigma_f > 0.0 ? truth.sigma_f * z : 0.0;
        }
    }

    // Calibration.
    const std::uint64_t calibration_seed = rng();
    if (cfg.weibull) {
        truth.gamma = cfg.weibull->first;
        truth.lambda = cfg.weibull->second;
    } else {
        const WeibullCalibration cal = calibrate(dp.S_Tmax, dp.q, dp.T_max, truth.B, u2 + truth.sigma_f * truth.sigma_f,
                                                 cfg.mc_size, calibration_seed);
        truth.gamma = cal.gamma;
        truth.lambda = cal.lambda;
    }

    // Lifetimes with administrative censoring.
    std::vector<SurvivalRecord> records;
    records.reserve(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
        const double U = open_uniform(rng);
        const WeibullDraw w = draw_weibull_time(truth.lambda, truth.gamma, lp(i) + truth.frailties(i), U, dp.T_max);
        SurvivalRecord r;
        r.subject_id = std::to_string(i + 1);
        r.entry = 0.0;
        r.time = w.time;
        r.event = w.event;
        r.covariates.resize(static_cast<std::size_t>(p));
        for (int j = 0; j < p; ++j) r.covariates[static_cast<std::size_t>(j)] = X(i, j);
        records.push_back(std::move(r));
    }
    std::vector<std::string> names;
    for (const auto& c : columns) names.push_back(c.name);
    out.dataset = Dataset(std::move(records), std::move(names));
    return out;
}

SimulationConfig pilot_config(double lambda, double sigma_f) {
    SimulationConfig cfg;
    cfg.columns = {{"trt", true, 0.5}, {"adult", true, 0.6}, {"X1", false, 1.0}, {"X2", false, 1.0}};
    Eigen::VectorXd beta(4);
    beta << -0.4, 0.5, 0.3, -0.2;
    cfg.beta = beta;
    cfg.weibull = std::make_pair(1.2, lambda);
    cfg.sigma_f = sigma_f;
    return cfg;
}

}  // namespace survgam
