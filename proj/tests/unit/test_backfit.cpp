#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "survgam/backfit.hpp"
#include "survgam/cox.hpp"
#include "survgam/error.hpp"
#include "survgam/simulate.hpp"

using namespace survgam;

namespace {

Dataset pilot(std::uint64_t seed, Index n, double sigma_f) {
    DesignPoint dp;
    dp.N = n;
    dp.seed = seed;
    return simulate_dataset(dp, pilot_config(0.03, sigma_f)).dataset;
}

}  // namespace

TEST_CASE("without frailty the driver is the plain GAM fit") {
    const Dataset d = pilot(1, 500, 0.0);
    BackfitConfig cfg;
    cfg.frailty = false;
    const BackfitResult r = two_stage_fit(d, cfg);
    CHECK_FALSE(r.frailty.has_value());
    const GamFit plain = optimize_smoothing(build_gam_problem(d, expand(d, 9)));
    CHECK(r.gam.coef == plain.coef);
    CHECK(r.iterations == 1);
}

TEST_CASE("the first stage-one fit starts from zero frailties") {
    const Dataset d = pilot(2, 500, 0.5);
    BackfitConfig cfg;
    cfg.max_iters = 1;
    const BackfitResult r = two_stage_fit(d, cfg);
    const GamFit plain = optimize_smoothing(build_gam_problem(d, expand(d, 9)));
    CHECK(r.gam.beta == plain.beta);
    CHECK(r.gam.log_lambda == plain.log_lambda);
    REQUIRE(r.frailty.has_value());
    // Only the baseline level moves, by the stage-two intercept.
    CHECK(std::abs(r.gam.log_baseline_hazard(4.0) - plain.log_baseline_hazard(4.0) - r.frailty->alpha) < 1e-10);
    CHECK_FALSE(r.converged);
}

TEST_CASE("no simulated frailty: sigma near zero and beta close to the plain GAM") {
    const Dataset d = pilot(3, 2000, 0.0);
    const BackfitResult r = two_stage_fit(d);
    REQUIRE(r.frailty.has_value());
    CHECK(r.converged);
    CHECK(r.frailty->sigma_u < 0.05);
    const GamFit plain = optimize_smoothing(build_gam_problem(d, expand(d, 9)));
    CHECK((r.gam.beta - plain.beta).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("the loop stops the first time the relative deviance change drops below rtol") {
    const Dataset d = pilot(4, 800, 0.7);
    BackfitConfig cfg;
    cfg.deviance_rtol = 1e-6;
    cfg.max_iters = 100;
    const BackfitResult r = two_stage_fit(d, cfg);
    REQUIRE(r.converged);
    const auto& tr = r.deviance_trace;
    REQUIRE(tr.size() >= 2);
    CHECK(static_cast<int>(tr.size()) == r.iterations);
    auto small = [&](std::size_t k) {
        return std::abs(tr[k] - tr[k - 1]) < cfg.deviance_rtol * std::abs(tr[k]) + cfg.deviance_atol;
    };
    CHECK(small(tr.size() - 1));
    for (std::size_t k = 1; k + 1 < tr.size(); ++k) CHECK_FALSE(small(k));
}

TEST_CASE("two-stage fits are bit-reproducible") {
    const Dataset d = pilot(5, 600, 0.5);
    const BackfitResult a = two_stage_fit(d);
    const BackfitResult b = two_stage_fit(d);
    CHECK(a.gam.coef == b.gam.coef);
    CHECK(a.frailty->sigma_u == b.frailty->sigma_u);
    CHECK(a.frailty->modes == b.frailty->modes);
    CHECK(a.deviance_trace == b.deviance_trace);
}

TEST_CASE("predicted survival starts at one and never increases") {
    const Dataset d = pilot(6, 600, 0.3);
    const BackfitResult r = two_stage_fit(d);
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(r.max_time * i / 40.0);
    const std::vector<double> x{1.0, 0.0, 0.5, -0.5};
    const std::vector<double> s = predict_survival(r, x, 0.0, grid);
    CHECK(s.front() == 1.0);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] <= s[i - 1]);
    CHECK(s.back() > 0.0);
    CHECK_THROWS_AS(predict_survival(r, x, 0.0, std::vector<double>{r.max_time * 1.01}), ValidationError);
    CHECK_THROWS_AS(predict_survival(r, std::vector<double>{1.0}, 0.0, grid), ValidationError);
}

TEST_CASE("no-covariate survival curve against Kaplan-Meier") {
    const Dataset d = testing_helpers::random_dataset(9, 5000, {}, 0.08, 15.0);
    BackfitConfig cfg;
    cfg.frailty = false;
    const BackfitResult r = two_stage_fit(d, cfg);
    const KaplanMeier km = kaplan_meier(d);
    std::vector<double> grid;
    for (int k = 1; k <= 9; ++k) grid.push_back(r.max_time * k / 10.0);
    const std::vector<double> s = predict_survival(r, std::vector<double>{}, 0.0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(s[i] - km.at(grid[i])) < 0.02);
}

TEST_CASE("configuration errors") {
    const Dataset d = pilot(7, 100, 0.0);
    BackfitConfig cfg;
    cfg.max_iters = 0;
    CHECK_THROWS_AS(two_stage_fit(d, cfg), ValidationError);
    cfg.max_iters = 5;
    cfg.deviance_rtol = 0.0;
    CHECK_THROWS_AS(two_stage_fit(d, cfg), ValidationError);
}
