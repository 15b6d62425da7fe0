#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "survgam/data.hpp"

namespace testing_helpers {

struct Row {
    std::string id;
    double entry;
    double time;
    int event;
    std::vector<double> x;
};

inline survgam::Dataset make_dataset(const std::vector<Row>& rows, std::vector<std::string> names) {
    std::vector<survgam::SurvivalRecord> recs;
    for (const auto& r : rows) recs.push_back({r.id, r.entry, r.time, r.event, r.x});
    return survgam::Dataset(std::move(recs), std::move(names));
}

// A(x=1,T=1,d=1), B(x=0,T=2,d=1), C(x=1,T=3,d=0).
inline survgam::Dataset abc_dataset() {
    return make_dataset({{"A", 0, 1, 1, {1}}, {"B", 0, 2, 1, {0}}, {"C", 0, 3, 0, {1}}}, {"x"});
}

// Exponential lifetimes with log hazard log(rate) + x beta, censored at t_max,
// optionally with delayed entry and ties (times rounded to `grid`).
inline survgam::Dataset random_dataset(std::uint64_t seed, int n, const std::vector<double>& beta, double rate,
                                       double t_max, bool delayed = false, double grid = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> norm;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Row> rows;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < beta.size(); ++j) names.push_back("x" + std::to_string(j + 1));
    for (int i = 0; i < n; ++i) {
        Row r{std::to_string(i + 1), 0.0, 0.0, 0, {}};
        double lp = 0.0;
        for (double b : beta) {
            const double x = norm(rng);
            r.x.push_back(x);
            lp += b * x;
        }
        const double entry = delayed ? 0.3 * t_max * unif(rng) : 0.0;
        double t = entry - std::log(1.0 - unif(rng)) / (rate * std::exp(lp));
        if (grid > 0.0) t = entry + grid * std::ceil((t - entry) / grid);
        r.entry = entry;
        if (t >= t_max) {
            r.time = t_max;
            r.event = 0;
        } else {
            r.time = t;
            r.event = 1;
        }
        rows.push_back(r);
    }
    return make_dataset(rows, names);
}

}  // namespace testing_helpers
