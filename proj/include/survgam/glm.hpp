#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace survgam {

using Index = Eigen::Index;

/**
 * Design of a Poisson working model whose rows come in fixed-size blocks.
 *
 * Every unit (a survival record) owns `rows_per_unit` consecutive rows. The
 * coefficient vector is [unit columns, row columns]: unit columns are
 * constant within a unit (intercept, covariates), row columns vary by row
 * (the time smooth). Units may be grouped (subjects) to carry a Gaussian
 * random intercept, which is eliminated by block Schur complement instead of
 * being stored as design columns.
 */
struct ModelMatrix {
    Index rows_per_unit = 1;
    Eigen::MatrixXd unit;  // n_units x p_unit
    Eigen::MatrixXd row;   // n_rows x p_row
    std::vector<std::string> names;
    std::vector<Index> group;  // group of each unit, empty when ungrouped
    Index n_groups = 0;

    Index n_units() const noexcept { return unit.rows(); }
    Index n_rows() const noexcept { return unit.rows() * rows_per_unit; }
    Index n_unit_cols() const noexcept { return unit.cols(); }
    Index n_row_cols() const noexcept { return row.cols(); }
    Index n_coef() const noexcept { return unit.cols() + row.cols(); }

    // Design times coefficients, one value per row; no offsets or group effects.
    Eigen::VectorXd linear_predictor(const Eigen::VectorXd& coef) const;
};

/// Diagonal quadratic penalty: coefficient j carries diag(j) * coef(j)^2 / 2.
/// Group effects carry group_precision * b^2 / 2; zero means no group effects.
struct Penalty {
    Eigen::VectorXd diag;
    double group_precision = 0.0;

    bool has_groups() const noexcept { return group_precision > 0.0; }
};

struct PirlsOptions {
    int max_iterations = 200;
    double rel_tol = 1e-8;
    int max_halvings = 30;
    int polish_steps = 2;  // extra Newton steps once the deviance has settled
};

struct WorkingState {
    Eigen::VectorXd coef;
    Eigen::VectorXd group_effects;
    Eigen::VectorXd eta;  // linear predictor including offsets
    double loglik = 0.0;
    double penalty = 0.0;  // coef' P coef + precision * |b|^2
    double deviance = 0.0;
    // Penalized information of the coefficients with group effects
    // eliminated, and its inverse.
    Eigen::MatrixXd information;
    Eigen::MatrixXd covariance;
    double log_det_v = 0.0;  // log determinant of the full penalized information
    int iterations = 0;
    bool converged = false;

    double penalized_deviance() const noexcept { return deviance + penalty; }
};

double penalized_loglik(const ModelMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                        const Penalty& pen, const Eigen::VectorXd& coef, const Eigen::VectorXd& b);

// Gradient of penalized_loglik: [coefficient part; group-effect part].
Eigen::VectorXd penalized_score(const ModelMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                                const Penalty& pen, const Eigen::VectorXd& coef, const Eigen::VectorXd& b);

/**
 * Penalized IRLS (Newton with step halving) for the log-link Poisson model.
 * `init_b` may be empty; it is ignored when the penalty has no group block.
 *
 * Throws NumericalError when the likelihood stays non-finite after all
 * halvings, or when the penalized information is singular (the message
 * names the coefficient most involved in the null direction).
 */
WorkingState pirls(const ModelMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                   const Penalty& pen, const Eigen::VectorXd& init, const Eigen::VectorXd& init_b = {},
                   const PirlsOptions& opts = {});

/**
 * Laplace approximation to the log marginal likelihood, with the penalized
 * coefficients and group effects integrated against their Gaussian priors
 * and the unpenalized ones against a flat prior:
 *
 *   l - pen/2 + (1/2) log|P|_+ - (1/2) log|V| + (n_unpenalized / 2) log(2 pi)
 */
double reml_criterion(const ModelMatrix& X, const WorkingState& state, const Penalty& pen);

}  // namespace survgam
