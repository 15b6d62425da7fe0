#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "survgam/basis.hpp"
#include "survgam/data.hpp"
#include "survgam/frailty.hpp"
#include "survgam/glm.hpp"
#include "survgam/quadrature.hpp"

namespace survgam {

/**
 * Poisson working model of a proportional-hazards fit with a smooth log
 * baseline hazard:
 *
 *   log mu = log w + intercept + (x - xbar) beta + s(t) [+ b_subject]
 *
 * Unit columns are [intercept, centered covariates]; row columns are the
 * non-constant fixed spline directions followed by the penalized ones.
 */
struct GamProblem {
    ModelMatrix X;
    Eigen::VectorXd y;
    Eigen::VectorXd log_weights;
    SplineBasis basis;
    PenaltyDecomposition pd;
    std::vector<std::string> covariate_names;
    Eigen::VectorXd covariate_means;
    Index n_fixed_smooth = 0;   // unpenalized row columns
    Index n_random_smooth = 0;  // penalized row columns

    Index n_covariates() const noexcept { return covariate_means.size(); }
    Index n_coef() const noexcept { return X.n_coef(); }
    Index random_begin() const noexcept { return 1 + n_covariates() + n_fixed_smooth; }
};

GamProblem build_gam_problem(const Dataset& d, const ExpandedDataset& e, int basis_dim = 10,
                             int penalty_order = 2);

// Penalty lambda on the penalized spline columns, plus an optional frailty block.
Penalty smoothing_penalty(const GamProblem& p, double log_lambda, double frailty_precision = 0.0);

struct GamConfig {
    std::optional<double> fixed_log_lambda;
    double log_lambda_lower = -15.0;
    double log_lambda_upper = 25.0;
    double grid_step = 2.5;
    int max_evaluations = 100;
    PirlsOptions pirls;
};

struct GamFit {
    std::vector<std::string> names;
    Eigen::VectorXd coef;        // internal parameterization (centered covariates)
    Eigen::MatrixXd covariance;  // inverse penalized information of coef
    Eigen::VectorXd beta;
    Eigen::VectorXd beta_se;
    std::vector<std::string> covariate_names;
    Eigen::VectorXd covariate_means;
    // Log baseline hazard (all covariates zero) = B(t) * spline_raw, with
    // spline_raw = fixed_transform * spline_fixed + random_transform * spline_random.
    Eigen::VectorXd spline_fixed;
    Eigen::VectorXd spline_random;
    Eigen::VectorXd spline_raw;
    SplineBasis basis;
    PenaltyDecomposition pd;
    double log_lambda = 0.0;
    double edf = 0.0;
    double deviance = 0.0;
    double reml = 0.0;
    int iterations = 0;   // PIRLS iterations at the selected lambda
    int evaluations = 0;  // outer criterion evaluations
    bool converged = false;
    bool lambda_at_bound = false;

    double log_baseline_hazard(double t) const;
    // Adds a constant to the log baseline hazard.
    void shift_baseline(double c);
};

/**
 * REML smoothing selection: bounded 1-D search over log lambda, PIRLS inside.
 * `extra_offset` (one value per row, may be empty) is added to the
 * log-weights, e.g. frozen frailty terms.
 */
GamFit optimize_smoothing(const GamProblem& p, const Eigen::VectorXd& extra_offset = {}, const GamConfig& cfg = {},
                          const GamFit* warm = nullptr);

// Fit at a given log lambda without any search.
GamFit fit_gam_at(const GamProblem& p, const Eigen::VectorXd& extra_offset, double log_lambda,
                  const PirlsOptions& opts = {}, const Eigen::VectorXd* init = nullptr);

Eigen::VectorXd standard_errors(const GamFit& fit);

struct LogHazardBand {
    std::vector<double> t;
    std::vector<double> estimate;
    std::vector<double> se;
};

// Pointwise log baseline hazard with standard errors on a time grid.
LogHazardBand log_hazard_band(const GamFit& fit, std::span<const double> times);

struct OneStageConfig {
    GamConfig gam;
    std::optional<double> fixed_log_sigma;
    double sigma_lower = 1e-4;
    double sigma_upper = 50.0;
    Index max_subjects = 50000;
    int max_evaluations = 300;
};

struct OneStageResult {
    GamFit gam;
    FrailtyFit frailty;
};

/**
 * Joint fit of smooth, covariates and per-subject Gaussian frailty: the
 * criterion is maximized over (log lambda, log sigma) with the frailty block
 * eliminated by Schur complement.
 */
OneStageResult one_stage_fit(const GamProblem& p, const OneStageConfig& cfg = {});

}  // namespace survgam
