#pragma once

#include <vector>

#include <Eigen/Core>

#include "survgam/data.hpp"

namespace survgam {

/// Cox proportional hazards fit, Breslow ties.
struct CoxFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::MatrixXd information;  // observed information at beta
    std::vector<double> event_times;  // distinct, increasing
    std::vector<double> increments;   // Breslow cumulative-hazard increments
    double loglik = 0.0;
    int iterations = 0;
};

// Partial log-likelihood and its score at beta (delayed entry supported).
double cox_partial_loglik(const Dataset& d, const Eigen::VectorXd& beta);
Eigen::VectorXd cox_score(const Dataset& d, const Eigen::VectorXd& beta);

/**
 * Newton-Raphson on the partial likelihood with step halving. Throws
 * ValidationError for constant covariates and NumericalError("separation")
 * when the estimates run off to infinity.
 */
CoxFit cox_partial_fit(const Dataset& d);

// d_k / sum_{R_k} exp(x beta) at each distinct event time.
std::vector<double> breslow_baseline(const Dataset& d, const Eigen::VectorXd& beta);

/// Poisson GLM on the event-time partition (one log-hazard per interval).
struct PoissonSemiparametricFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd log_hazard;  // per interval, covariates at zero
    std::vector<double> boundaries;
    std::vector<double> lengths;
    int iterations = 0;

    // exp(log_hazard_k) * length_k.
    std::vector<double> increments() const;
};

// Guarded at 1e7 exposure rows.
PoissonSemiparametricFit poisson_semiparametric_fit(const Dataset& d);

/// Product-limit estimate with Greenwood variance (delayed entry supported).
struct KaplanMeier {
    std::vector<double> times;     // distinct event times
    std::vector<double> survival;  // S just after each time
    std::vector<double> variance;  // Greenwood

    // Right-continuous step function; 1 before the first event.
    double at(double t) const;
    double variance_at(double t) const;
};

KaplanMeier kaplan_meier(const Dataset& d);

}  // namespace survgam
