#include "survgam/basis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "survgam/error.hpp"

namespace survgam {

Eigen::VectorXd SplineBasis::evaluate(double t) const {
    const int p = degree;
    const int n_knots = static_cast<int>(knots.size());
    t = std::clamp(t, lower(), upper());

    // Knot span s with knots[s] <= t < knots[s+1]; the right end uses the last non-empty span.
    int s = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), t) - knots.begin()) - 1;
    s = std::clamp(s, p, n_knots - p - 2);

    std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
    std::vector<double> nz(static_cast<std::size_t>(p + 1), 0.0);
    nz[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<std::size_t>(j)] = t - knots[static_cast<std::size_t>(s + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots[static_cast<std::size_t>(s + j)] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
            const double tmp = nz[static_cast<std::size_t>(r)] / denom;
            nz[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
            saved = left[static_cast<std::size_t>(j - r)] * tmp;
        }
        nz[static_cast<std::size_t>(j)] = saved;
    }

    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    for (int j = 0; j <= p; ++j) out(s - p + j) = nz[static_cast<std::size_t>(j)];
    return out;
}

Eigen::VectorXd SplineBasis::greville() const {
    Eigen::VectorXd g(dim);
    const double span = upper() - lower();
    for (int k = 0; k < dim; ++k) {
        double acc = 0.0;
        for (int j = 1; j <= degree; ++j) acc += knots[static_cast<std::size_t>(k + j)];
        g(k) = (acc / degree - lower()) / span;
    }
    return g;
}

Eigen::VectorXd PenaltyDecomposition::to_raw(const Eigen::VectorXd& fixed, const Eigen::VectorXd& random) const {
    return fixed_transform * fixed + random_transform * random;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> PenaltyDecomposition::from_raw(const Eigen::VectorXd& raw) const {
    Eigen::MatrixXd full(raw.size(), n_fixed() + n_random());
    full << fixed_transform, random_transform;
    Eigen::VectorXd coef = full.partialPivLu().solve(raw);
    return {coef.head(n_fixed()), coef.tail(n_random())};
}

std::pair<SplineBasis, PenaltyDecomposition> build_basis(std::span<const double> times, int dim, int penalty_order,
                                                         double upper, int degree) {
    if (times.empty()) throw ValidationError("build_basis: no times supplied");
    if (penalty_order < 1) throw ValidationError("build_basis: penalty order must be positive");
    if (degree < 1) throw ValidationError("build_basis: degree must be positive");
    if (dim < penalty_order + 2 || dim < degree + 1) {
        throw ValidationError("build_basis: basis dimension " + std::to_string(dim) + " is too small");
    }
    std::vector<double> sorted(times.begin(), times.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0.0) throw ValidationError("build_basis: negative time");
    if (sorted.front() == sorted.back()) throw ValidationError("build_basis: all times are identical");
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    const double lo = 0.0;
    const double hi = upper > 0.0 ? std::max(upper, sorted.back()) : sorted.back();

    // Interior knots at equally spaced quantiles of the distinct times.
    const int n_interior = dim - degree - 1;
    std::vector<double> interior;
    for (int j = 1; j <= n_interior; ++j) {
        const double pos = static_cast<double>(j) / (n_interior + 1) * static_cast<double>(sorted.size() - 1);
        const auto i0 = static_cast<std::size_t>(std::floor(pos));
        const auto i1 = std::min(i0 + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(i0);
        interior.push_back(sorted[i0] * (1.0 - frac) + sorted[i1] * frac);
    }
    bool usable = true;
    for (std::size_t j = 0; j < interior.size(); ++j) {
        const double prev = j == 0 ? lo : interior[j - 1];
        if (!(interior[j] > prev) || !(interior[j] < hi)) usable = false;
    }
    if (!usable) {
        // Too few distinct times for quantile knots; space them evenly.
        for (int j = 1; j <= n_interior; ++j) {
            interior[static_cast<std::size_t>(j - 1)] = lo + (hi - lo) * j / (n_interior + 1);
        }
    }

    SplineBasis basis;
    basis.degree = degree;
    basis.dim = dim;
    basis.penalty_order = penalty_order;
    basis.knots.assign(static_cast<std::size_t>(degree + 1), lo);
    basis.knots.insert(basis.knots.end(), interior.begin(), interior.end());
    basis.knots.insert(basis.knots.end(), static_cast<std::size_t>(degree + 1), hi);

    // Divided differences of order m on the Greville abscissae, rescaled so
    // that equally spaced abscissae give the ordinary m-th difference.
    const Eigen::VectorXd g = basis.greville();
    const double mean_gap = 1.0 / (dim - 1);
    Eigen::MatrixXd diff = Eigen::MatrixXd::Identity(dim, dim);
    for (int order = 1; order <= penalty_order; ++order) {
        const Index rows = diff.rows() - 1;
        Eigen::MatrixXd next(rows, dim);
        for (Index k = 0; k < rows; ++k) {
            const double gap = (g(k + order) - g(k)) / (order * mean_gap);
            next.row(k) = (diff.row(k + 1) - diff.row(k)) / gap;
        }
        diff = std::move(next);
    }

    PenaltyDecomposition pd;
    pd.penalty = diff.transpose() * diff;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pd.penalty);
    if (es.info() != Eigen::Success) throw NumericalError("build_basis: penalty eigen-decomposition failed");

    const int d_fixed = penalty_order;
    const int d_random = dim - d_fixed;
    pd.fixed_transform.resize(dim, d_fixed);
    for (int k = 0; k < d_fixed; ++k) pd.fixed_transform.col(k) = g.array().pow(k).matrix();
    // Eigenvalues ascend; the first d_fixed span the null space.
    pd.random_transform.resize(dim, d_random);
    for (int k = 0; k < d_random; ++k) {
        const double ev = es.eigenvalues()(d_fixed + k);
        if (!(ev > 0.0)) throw NumericalError("build_basis: penalty range space is degenerate");
        pd.random_transform.col(k) = es.eigenvectors().col(d_fixed + k) / std::sqrt(ev);
    }
    return {std::move(basis), std::move(pd)};
}

Eigen::MatrixXd evaluate_raw(const SplineBasis& b, std::span<const double> t) {
    Eigen::MatrixXd out(static_cast<Index>(t.size()), b.dim);
    for (std::size_t r = 0; r < t.size(); ++r) out.row(static_cast<Index>(r)) = b.evaluate(t[r]).transpose();
    return out;
}

BasisBlocks evaluate_basis(const SplineBasis& b, const PenaltyDecomposition& pd, std::span<const double> t) {
    const Eigen::MatrixXd raw = evaluate_raw(b, t);
    return {raw * pd.fixed_transform, raw * pd.random_transform};
}

}  // namespace survgam
