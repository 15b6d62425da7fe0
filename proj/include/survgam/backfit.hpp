#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "survgam/data.hpp"
#include "survgam/frailty.hpp"
#include "survgam/gam.hpp"

namespace survgam {

struct BackfitConfig {
    int nodes = 9;
    int basis_dim = 10;
    int penalty_order = 2;
    bool frailty = true;  // false: plain GAM fit, no stage two
    FrailtyMethod frailty_method = FrailtyMethod::agq(9);
    bool with_intercept = true;
    int max_iters = 50;
    double deviance_rtol = 1e-6;
    double deviance_atol = 1e-10;
    GamConfig gam;
    double sigma_lower = 1e-4;
    double sigma_upper = 50.0;
};

struct BackfitResult {
    GamFit gam;  // baseline already includes the stage-two intercept
    std::optional<FrailtyFit> frailty;
    int iterations = 0;
    std::vector<double> deviance_trace;
    bool converged = false;
    bool damped = false;  // b updates were halved after the trace oscillated
    double max_time = 0.0;
    int nodes = 9;
    std::vector<std::string> subject_ids;
};

/**
 * Two-stage backfitting: alternate a REML GAM fit with the frailties frozen
 * as offsets and a frailty fit with the GAM linear predictor frozen, until
 * the stage-two deviance settles.
 */
BackfitResult two_stage_fit(const Dataset& d, const BackfitConfig& cfg = {});

// Same loop on a prebuilt problem and expansion.
BackfitResult two_stage_fit(const GamProblem& p, const ExpandedDataset& e, const BackfitConfig& cfg);

/**
 * Survival S(t) = exp(-int_0^t exp(log h0(u) + x beta + frailty) du) on a
 * grid, integrating with a Lobatto rule on [0, t]. Times beyond the fitted
 * follow-up are rejected.
 */
std::vector<double> predict_survival(const BackfitResult& r, std::span<const double> covariates, double frailty,
                                     std::span<const double> times);
std::vector<double> predict_survival(const GamFit& fit, double max_time, int nodes,
                                     std::span<const double> covariates, double frailty,
                                     std::span<const double> times);

}  // namespace survgam
