#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "survgam/data.hpp"

namespace survgam {

/// Clamped B-spline basis on [lower, upper].
struct SplineBasis {
    std::vector<double> knots;  // full knot vector, boundary knots repeated degree+1 times
    int degree = 3;
    int dim = 10;
    int penalty_order = 2;

    double lower() const { return knots.front(); }
    double upper() const { return knots.back(); }

    // Raw basis at one point; t is clamped to [lower, upper]. Entries sum to one.
    Eigen::VectorXd evaluate(double t) const;
    // Greville abscissae scaled to [0, 1].
    Eigen::VectorXd greville() const;
};

/**
 * Split of the spline coefficients into an unpenalized part spanning the
 * penalty null space and a penalized part on which the penalty is the
 * identity:
 *
 *     c = fixed_transform * b_F + random_transform * b_R,
 *     c' S c = |b_R|^2.
 *
 * The first fixed column is the all-ones coefficient vector, so the first
 * fixed design column is identically one.
 */
struct PenaltyDecomposition {
    Eigen::MatrixXd penalty;           // raw dim x dim penalty S
    Eigen::MatrixXd fixed_transform;   // dim x d_F
    Eigen::MatrixXd random_transform;  // dim x d_R

    Index n_fixed() const { return fixed_transform.cols(); }
    Index n_random() const { return random_transform.cols(); }

    Eigen::VectorXd to_raw(const Eigen::VectorXd& fixed, const Eigen::VectorXd& random) const;
    // Inverse of to_raw.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> from_raw(const Eigen::VectorXd& raw) const;
};

/**
 * Cubic (or other degree) B-spline basis with a difference penalty.
 *
 * Interior knots sit at equally spaced quantiles of the distinct supplied
 * times; boundary knots are 0 and `upper` (max of times when not given).
 * The penalty uses divided differences on the Greville abscissae, so its null
 * space is exactly the polynomials of degree < penalty_order in the abscissae;
 * for penalty_order 2 that is every affine function of t.
 */
std::pair<SplineBasis, PenaltyDecomposition> build_basis(std::span<const double> times, int dim,
                                                         int penalty_order = 2, double upper = -1.0,
                                                         int degree = 3);

struct BasisBlocks {
    Eigen::MatrixXd fixed;   // n x d_F
    Eigen::MatrixXd random;  // n x d_R
};

BasisBlocks evaluate_basis(const SplineBasis& b, const PenaltyDecomposition& pd, std::span<const double> t);

// Raw basis rows, n x dim.
Eigen::MatrixXd evaluate_raw(const SplineBasis& b, std::span<const double> t);

}  // namespace survgam
