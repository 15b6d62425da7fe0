#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "survgam/basis.hpp"
#include "survgam/error.hpp"

using namespace survgam;

namespace {

std::vector<double> spread_times(int n, double upper, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, upper);
    std::vector<double> t(static_cast<std::size_t>(n));
    for (auto& x : t) x = u(rng);
    return t;
}

}  // namespace

TEST_CASE("second-order penalty leaves a two-dimensional null space") {
    const auto t = spread_times(200, 10.0, 1);
    const auto [b, pd] = build_basis(t, 10, 2);
    CHECK(pd.n_fixed() == 2);
    CHECK(pd.n_random() == 8);
    CHECK(b.dim == 10);
    // Column 0 of the fixed transform is the ones vector.
    for (Index j = 0; j < 10; ++j) CHECK(std::abs(pd.fixed_transform(j, 0) - 1.0) < 1e-12);
    // Null space: S * F = 0; range: R' S R = I.
    CHECK((pd.penalty * pd.fixed_transform).norm() < 1e-9);
    const Eigen::MatrixXd rsr = pd.random_transform.transpose() * pd.penalty * pd.random_transform;
    CHECK((rsr - Eigen::MatrixXd::Identity(8, 8)).norm() < 1e-9);

    const auto [b3, pd3] = build_basis(t, 12, 3);
    CHECK(pd3.n_fixed() == 3);
}

TEST_CASE("raw basis rows form a partition of unity and are deterministic") {
    const auto t = spread_times(100, 5.0, 2);
    const auto [b, pd] = build_basis(t, 8);
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(5.0 * i / 200.0);
    const Eigen::MatrixXd raw = evaluate_raw(b, grid);
    for (Index r = 0; r < raw.rows(); ++r) {
        CHECK(std::abs(raw.row(r).sum() - 1.0) < 1e-12);
        CHECK(raw.row(r).minCoeff() >= 0.0);
    }
    const Eigen::MatrixXd again = evaluate_raw(b, grid);
    CHECK(raw == again);
    // Clamping beyond the boundary.
    CHECK((b.evaluate(7.0) - b.evaluate(b.upper())).norm() == 0.0);
}

TEST_CASE("fixed block reproduces any affine function") {
    const auto t = spread_times(150, 12.0, 3);
    const auto [b, pd] = build_basis(t, 10);
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(b.upper() * i / 100.0);
    const BasisBlocks blocks = evaluate_basis(b, pd, grid);
    Eigen::VectorXd target(static_cast<Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) target(static_cast<Index>(i)) = 0.7 - 0.25 * grid[i];
    const Eigen::VectorXd coef = blocks.fixed.colPivHouseholderQr().solve(target);
    CHECK((blocks.fixed * coef - target).cwiseAbs().maxCoeff() < 1e-10);
    for (Index r = 0; r < blocks.fixed.rows(); ++r) CHECK(std::abs(blocks.fixed(r, 0) - 1.0) < 1e-12);
}

TEST_CASE("predictions and penalty are invariant under the reparameterization") {
    const auto t = spread_times(150, 9.0, 4);
    const auto [b, pd] = build_basis(t, 10);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z;
    std::vector<double> grid;
    for (int i = 0; i <= 50; ++i) grid.push_back(b.upper() * i / 50.0);
    const Eigen::MatrixXd raw = evaluate_raw(b, grid);
    const BasisBlocks blocks = evaluate_basis(b, pd, grid);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd c(10);
        for (Index j = 0; j < 10; ++j) c(j) = z(rng);
        const auto [f, r] = pd.from_raw(c);
        CHECK((pd.to_raw(f, r) - c).norm() < 1e-10);
        CHECK((raw * c - (blocks.fixed * f + blocks.random * r)).cwiseAbs().maxCoeff() < 1e-10);
        const double pen_raw = c.dot(pd.penalty * c);
        CHECK(std::abs(pen_raw - r.squaredNorm()) < 1e-9 * std::max(1.0, pen_raw));
    }
}

TEST_CASE("basis construction errors") {
    const std::vector<double> same(10, 2.0);
    CHECK_THROWS_AS(build_basis(same, 10), ValidationError);
    const auto t = spread_times(50, 3.0, 5);
    CHECK_THROWS_AS(build_basis(t, 2), ValidationError);
    CHECK_THROWS_AS(build_basis(std::vector<double>{}, 10), ValidationError);
}
