#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace survgam {

using Index = Eigen::Index;

struct Maximum1D {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
    bool at_lower = false;
    bool at_upper = false;
    bool converged = false;
};

struct Maximize1DOptions {
    double lower = 0.0;
    double upper = 1.0;
    double grid_step = 1.0;       // coarse scan spacing used to bracket the maximum
    double width = 1e-3;          // golden-section termination width
    double fd_step = 1e-3;        // finite-difference step for the Newton polish
    double gradient_tol = 1e-5;   // polish stops once |f'| is below this
    int newton_steps = 8;
    int max_evaluations = 100;
};

/**
 * Deterministic bounded 1-D maximization: coarse grid scan, golden-section
 * refinement inside the best bracket, then Newton steps on central
 * finite-difference derivatives. On exact ties the smaller x wins.
 *
 * Throws NumericalError carrying the best point if the evaluation budget runs
 * out before the golden-section width is reached.
 */
Maximum1D maximize_1d(const std::function<double(double)>& f, const Maximize1DOptions& opts);

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    double initial_step = 0.5;
    double f_tol = 1e-14;
    double x_tol = 1e-10;
    int max_evaluations = 2000;
};

// Minimizes f. Standard reflection/expansion/contraction/shrink coefficients.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd start,
                             const NelderMeadOptions& opts = {});

// Central finite-difference gradient and Hessian.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h);
Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                           double h);

}  // namespace survgam
