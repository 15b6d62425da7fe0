#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "survgam/cox.hpp"
#include "survgam/error.hpp"

using namespace survgam;

namespace {

// Hand-derived score of the three-subject example, u = exp(beta).
double abc_score(double beta) {
    const double u = std::exp(beta);
    return 1.0 - 2.0 * u / (2.0 * u + 1.0) - u / (u + 1.0);
}

double bisect(double (*f)(double), double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((f(lo) > 0.0) == (f(mid) > 0.0)) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("three-subject example: estimate and Breslow increments") {
    const Dataset d = testing_helpers::abc_dataset();
    const double oracle = bisect(abc_score, -3.0, 3.0);
    CHECK(std::abs(oracle + 0.5 * std::log(2.0)) < 1e-12);
    const CoxFit f = cox_partial_fit(d);
    CHECK(std::abs(f.beta(0) - oracle) < 1e-8);
    CHECK(f.event_times == std::vector<double>{1.0, 2.0});
    const double u = std::exp(oracle);
    CHECK(std::abs(f.increments[0] - 1.0 / (2.0 * u + 1.0)) < 1e-8);
    CHECK(std::abs(f.increments[0] - 0.414214) < 1e-6);
    CHECK(std::abs(f.increments[1] - 0.585786) < 1e-6);
    CHECK(f.se(0) > 0.0);
}

TEST_CASE("Nelson-Aalen steps at beta zero") {
    const Dataset d = testing_helpers::make_dataset(
        {{"a", 0, 1, 1, {0.3}}, {"b", 0, 2, 0, {1.0}}, {"c", 0, 4, 1, {-2.0}}, {"e", 0, 5, 0, {0.1}}}, {"x"});
    const std::vector<double> inc = breslow_baseline(d, Eigen::VectorXd::Zero(1));
    REQUIRE(inc.size() == 2);
    CHECK(inc[0] == doctest::Approx(1.0 / 4.0));
    CHECK(inc[1] == doctest::Approx(1.0 / 2.0));
}

TEST_CASE("separation and constant covariates") {
    const Dataset sep = testing_helpers::make_dataset({{"A", 0, 1, 1, {1}}, {"B", 0, 2, 0, {0}}}, {"x"});
    try {
        cox_partial_fit(sep);
        FAIL("expected separation");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()) == "separation");
    }
    const Dataset flat = testing_helpers::make_dataset({{"A", 0, 1, 1, {2}}, {"B", 0, 2, 1, {2}}}, {"x"});
    CHECK_THROWS_AS(cox_partial_fit(flat), ValidationError);
}

TEST_CASE("score matches finite differences of the partial likelihood") {
    const Dataset d = testing_helpers::random_dataset(4, 120, {0.5, -0.4, 0.2}, 0.3, 5.0, true, 0.2);
    Eigen::VectorXd beta(3);
    beta << 0.2, -0.1, 0.4;
    const Eigen::VectorXd g = cox_score(d, beta);
    for (Index j = 0; j < 3; ++j) {
        Eigen::VectorXd bp = beta, bm = beta;
        bp(j) += 1e-5;
        bm(j) -= 1e-5;
        const double fd = (cox_partial_loglik(d, bp) - cox_partial_loglik(d, bm)) / 2e-5;
        CHECK(std::abs(fd - g(j)) < 1e-6 * std::max(1.0, std::abs(g(j))));
    }
}

TEST_CASE("adding a constant to a covariate leaves beta unchanged") {
    const Dataset d = testing_helpers::random_dataset(5, 200, {0.7, -0.3}, 0.2, 6.0);
    std::vector<SurvivalRecord> recs = d.records();
    for (auto& r : recs) r.covariates[1] += 3.0;
    const CoxFit a = cox_partial_fit(d);
    const CoxFit b = cox_partial_fit(Dataset(recs, d.covariate_names()));
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Poisson on the event-time partition reproduces the Cox fit") {
    const PoissonSemiparametricFit p = poisson_semiparametric_fit(testing_helpers::abc_dataset());
    CHECK(std::abs(p.beta(0) + 0.5 * std::log(2.0)) < 1e-6);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const bool delayed = seed % 2 == 0;
        const double grid = seed % 3 == 0 ? 0.5 : 0.0;
        const Dataset d = testing_helpers::random_dataset(seed, 150 + 30 * static_cast<int>(seed), {0.4, -0.6}, 0.2,
                                                          8.0, delayed, grid);
        const CoxFit c = cox_partial_fit(d);
        const PoissonSemiparametricFit q = poisson_semiparametric_fit(d);
        CHECK((c.beta - q.beta).cwiseAbs().maxCoeff() < 1e-5);
        const std::vector<double> inc = q.increments();
        REQUIRE(inc.size() == c.increments.size());
        for (std::size_t k = 0; k < inc.size(); ++k) CHECK(std::abs(inc[k] - c.increments[k]) < 1e-5);
        CHECK((c.se - q.se).cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("Kaplan-Meier with Greenwood variance") {
    const KaplanMeier km = kaplan_meier(testing_helpers::abc_dataset());
    CHECK(km.at(0.5) == 1.0);
    CHECK(km.at(1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(km.at(2.5) == doctest::Approx(1.0 / 3.0));
    CHECK(km.variance_at(1.0) == doctest::Approx(2.0 / 27.0));
    // Second step adds d / (n (n - d)) = 1/2 to the Greenwood sum.
    CHECK(km.variance_at(2.0) == doctest::Approx((1.0 / 9.0) * (1.0 / 6.0 + 1.0 / 2.0)));

    // Delayed entry: b enters at 1.5, after a's event.
    const Dataset late = testing_helpers::make_dataset({{"a", 0, 1, 1, {}}, {"b", 1.5, 3, 1, {}}, {"c", 0, 4, 0, {}}}, {});
    const KaplanMeier k2 = kaplan_meier(late);
    CHECK(k2.at(1.0) == doctest::Approx(0.5));
    CHECK(k2.at(3.0) == doctest::Approx(0.25));
}
