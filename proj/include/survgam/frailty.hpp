#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "survgam/quadrature.hpp"

namespace survgam {

/// How the per-subject frailty integral is evaluated: Laplace (nodes == 0)
/// or adaptive Gauss-Hermite with `nodes` points.
struct FrailtyMethod {
    int nodes = 0;

    static FrailtyMethod laplace() { return {0}; }
    static FrailtyMethod agq(int k) { return {k}; }
    bool is_laplace() const noexcept { return nodes == 0; }
    std::string label() const;
};

// Accepts "laplace", "agq:K" and "agqK".
FrailtyMethod parse_frailty_method(std::string_view s);

struct SubjectMode {
    double mode = 0.0;
    double curvature = 0.0;  // sum_j exp(eta_j + mode) + 1 / sigma2
};

// Posterior mode of a subject's frailty given frozen linear predictors.
SubjectMode subject_mode(std::span<const double> y, std::span<const double> eta, double sigma2);

// log of  integral prod_j Poisson(y_j | exp(eta_j + b)) N(b; 0, sigma2) db.
double subject_marginal(std::span<const double> y, std::span<const double> eta, double sigma2,
                        FrailtyMethod method);

/// Per-subject sufficient statistics of the frozen stage-one fit.
struct SubjectStats {
    double events = 0.0;        // sum_j y_j
    double log_exposure = 0.0;  // log sum_j exp(eta_j)
    double sum_y_eta = 0.0;     // sum_j y_j eta_j
    double log_factorial = 0.0; // sum_j log(y_j!)
    double sum_y_log_y = 0.0;
};

std::vector<SubjectStats> subject_stats(const ExpandedDataset& e, const Eigen::VectorXd& offsets);

struct FrailtyConfig {
    FrailtyMethod method = FrailtyMethod::agq(9);
    bool with_intercept = true;
    double sigma_lower = 1e-4;
    double sigma_upper = 50.0;
    int max_evaluations = 200;
};

struct FrailtyFit {
    double sigma_u = 0.0;
    Eigen::VectorXd modes;  // one per subject
    double alpha = 0.0;
    bool with_intercept = false;
    double marginal_loglik = 0.0;  // includes the intercept adjustment when present
    double deviance = 0.0;         // Poisson deviance at (alpha, modes)
    FrailtyMethod method;
    bool converged = false;
    bool boundary = false;
    int evaluations = 0;
};

/**
 * Marginal log-likelihood of all subjects at one sigma, profiling the global
 * intercept at the joint mode when `with_intercept`. On return `alpha` and
 * `modes` hold the modes used; they are also read as warm starts.
 */
double frailty_loglik(const std::vector<SubjectStats>& stats, double sigma, FrailtyMethod method,
                      bool with_intercept, double& alpha, Eigen::VectorXd& modes);

// Maximum likelihood over sigma with frozen offsets (one per expanded row).
FrailtyFit fit_frailty(const ExpandedDataset& e, const Eigen::VectorXd& frozen_offsets, const FrailtyConfig& cfg);
FrailtyFit fit_frailty(const std::vector<SubjectStats>& stats, const FrailtyConfig& cfg);

}  // namespace survgam
