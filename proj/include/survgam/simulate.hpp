#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "survgam/data.hpp"

namespace survgam {

/// One point of the simulation hypercube.
struct DesignPoint {
    Index N = 1000;
    int dim_beta = 4;
    double f = 0.5;       // 1 - (binary covariates) / dim_beta
    double r = 0.0;       // frailty sd as a multiple of sd(X beta)
    double S_Tmax = 0.5;  // survival at the censoring time
    double q = 10.0;      // (1 - S(T_max)) / (1 - S(1))
    double T_max = 20.0;
    std::uint64_t seed = 1;

    double S1() const noexcept { return 1.0 - (1.0 - S_Tmax) / q; }
};

/// A covariate column with a fixed distribution (used by preset designs).
struct CovariateSpec {
    std::string name;
    bool binary = false;
    double param = 1.0;  // standard deviation (continuous) or P(x = 1) (binary)
};

struct SimulationConfig {
    double sigma_cont = 0.4;
    double sigma_bin = 2.0;
    double s_cont_lower = 1.0, s_cont_upper = 3.0;
    double p_bin_lower = 0.1, p_bin_upper = 0.9;
    Index mc_size = 100000;

    // Overrides. Each replaces the corresponding random draws; the remaining
    // draws keep their order in the stream.
    std::vector<CovariateSpec> columns;          // replaces the random columns (dim_beta and f are ignored)
    std::optional<Eigen::VectorXd> beta;         // replaces the random coefficients
    std::optional<std::pair<double, double>> weibull;  // (gamma, lambda); replaces calibration
    std::optional<double> sigma_f;               // replaces r * u
};

struct SimulationTruth {
    Eigen::VectorXd beta;
    double gamma = 1.0;
    double lambda = 1.0;
    Eigen::VectorXd frailties;
    double sigma_f = 0.0;
    double B = 0.0;  // sample mean of X beta
    double u = 0.0;  // sample sd of X beta (n - 1 divisor)
    std::uint64_t seed = 0;
};

struct SimulatedDataset {
    Dataset dataset;
    SimulationTruth truth;
};

// n_cont = max(1, min(dim - 1, round(f * dim))) with halves rounded up.
std::pair<int, int> derive_counts(int dim_beta, double f);

struct WeibullCalibration {
    double gamma = 1.0;
    double lambda = 1.0;
    double residual = 0.0;  // sum of squared log-survival misfits
};

/**
 * Finds (gamma, lambda) whose Monte-Carlo marginal survival over
 * l ~ Normal(B, (r^2 + 1) u2) hits S_Tmax at T_max and S(1) at 1.
 * Throws NumericalError("calibration failed") when the residual exceeds 1e-6.
 */
WeibullCalibration calibrate_weibull(double S_Tmax, double q, double T_max, double B, double u2, double r,
                                     Index mc_size, std::uint64_t seed);

// Monte-Carlo marginal survival at t under the calibration sample convention.
double marginal_survival(double t, double gamma, double lambda, double B, double u2, double r, Index mc_size,
                         std::uint64_t seed);

struct WeibullDraw {
    double time = 0.0;
    int event = 0;
};

// Inverse transform of S(t) = exp(-lambda t^gamma e^lp), censored at T_max.
WeibullDraw draw_weibull_time(double lambda, double gamma, double lp, double U, double T_max);

SimulatedDataset simulate_dataset(const DesignPoint& dp, const SimulationConfig& cfg = {});

/**
 * The four-covariate trial used in the pilot experiments: treatment
 * (Bernoulli 0.5), adult (Bernoulli 0.6), X1 and X2 (standard normal),
 * Weibull shape 1.2 and a fixed scale lambda.
 */
SimulationConfig pilot_config(double lambda, double sigma_f = 0.0);

}  // namespace survgam
