#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "survgam/backfit.hpp"
#include "survgam/frailty.hpp"
#include "survgam/gam.hpp"
#include "survgam/simulate.hpp"

namespace survgam {

using Json = nlohmann::json;

/**
 * Fit document blocks:
 *   coefficients  [{name, estimate, se}] for the covariates
 *   smoothing     {log_lambda, edf}
 *   baseline      {knots, degree, dim, penalty_order, spline_raw, spline_fixed,
 *                  spline_random, fixed_transform, random_transform}
 *   convergence   {iterations, evaluations, deviance, reml, converged, lambda_at_bound}
 */
Json gam_to_json(const GamFit& fit);
Json frailty_to_json(const FrailtyFit& f);
// Joined document: gam blocks, an optional frailty block and a backfit block.
Json backfit_to_json(const BackfitResult& r);
Json one_stage_to_json(const OneStageResult& r, double max_time, int nodes);

// Rebuilds the parts of a fit that predictions need (basis, spline, beta).
GamFit gam_from_json(const Json& j);

Json truth_to_json(const SimulationTruth& t);

void write_modes_csv(std::ostream& out, const std::vector<std::string>& subject_ids, const Eigen::VectorXd& modes);

}  // namespace survgam
