#include "survgam/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "survgam/error.hpp"

namespace survgam {

namespace {

struct LegendreEval {
    double p;   // P_m(x)
    double dp;  // P_m'(x)
    double d2p; // P_m''(x)
};

// Three-term recurrence for P_m plus the Legendre ODE for the derivatives.
// Valid for |x| < 1.
LegendreEval legendre(int m, double x) {
    double p0 = 1.0;
    double p1 = x;
    if (m == 0) return {1.0, 0.0, 0.0};
    for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const double one_minus_x2 = 1.0 - x * x;
    const double dp = m * (p0 - x * p1) / one_minus_x2;
    const double d2p = (2.0 * x * dp - m * (m + 1.0) * p1) / one_minus_x2;
    return {p1, dp, d2p};
}

double legendre_value(int m, double x) {
    double p0 = 1.0;
    double p1 = x;
    if (m == 0) return 1.0;
    for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

}  // namespace

LobattoRule lobatto_rule(int n) {
    if (n < 2) throw ValidationError("Lobatto rule needs at least 2 nodes");
    if (n > 64) throw ValidationError("Lobatto rule supports at most 64 nodes");

    LobattoRule rule;
    rule.n = n;
    rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
    rule.weights.assign(static_cast<std::size_t>(n), 0.0);
    const int m = n - 1;  // interior nodes are the roots of P_m'
    rule.nodes.front() = -1.0;
    rule.nodes.back() = 1.0;

    // Interior roots come in +/- pairs; solve the positive half and mirror.
    for (int i = 1; i <= (n - 2 + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * i / m);  // Chebyshev-Gauss-Lobatto guess, descending
        for (int it = 0; it < 100; ++it) {
            const auto ev = legendre(m, x);
            const double step = ev.dp / ev.d2p;
            x -= step;
            if (std::abs(step) < 1e-14) break;
        }
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.nodes[static_cast<std::size_t>(i)] = -x;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;

    for (int j = 0; j < n; ++j) {
        const double p = legendre_value(m, rule.nodes[static_cast<std::size_t>(j)]);
        rule.weights[static_cast<std::size_t>(j)] = 2.0 / (n * (n - 1.0) * p * p);
    }
    return rule;
}

HermiteRule gauss_hermite_rule(int n) {
    if (n < 1) throw ValidationError("Gauss-Hermite rule needs at least 1 node");
    HermiteRule rule;
    rule.n = n;
    if (n == 1) {
        rule.nodes = {0.0};
        rule.weights = {std::sqrt(std::numbers::pi)};
        return rule;
    }
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigen-solve failed");
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const double mu0 = std::sqrt(std::numbers::pi);
    for (int k = 0; k < n; ++k) {
        const double v = es.eigenvectors()(0, k);
        rule.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
        rule.weights[static_cast<std::size_t>(k)] = mu0 * v * v;
    }
    // Enforce exact symmetry of the rule.
    for (int k = 0; k < n / 2; ++k) {
        const auto a = static_cast<std::size_t>(k);
        const auto b = static_cast<std::size_t>(n - 1 - k);
        const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
        const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
        rule.nodes[a] = -x;
        rule.nodes[b] = x;
        rule.weights[a] = rule.weights[b] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

Eigen::VectorXd ExpandedDataset::responses() const {
    Eigen::VectorXd y(size());
    for (Index r = 0; r < size(); ++r) y(r) = rows[static_cast<std::size_t>(r)].y;
    return y;
}

Eigen::VectorXd ExpandedDataset::log_weights() const {
    Eigen::VectorXd w(size());
    for (Index r = 0; r < size(); ++r) w(r) = rows[static_cast<std::size_t>(r)].log_weight;
    return w;
}

ExpandedDataset expand(const Dataset& d, int n) {
    const LobattoRule rule = lobatto_rule(n);
    ExpandedDataset e;
    e.n_records = d.size();
    e.n_subjects = d.n_subjects();
    e.nodes_per_record = n;
    e.rows.reserve(static_cast<std::size_t>(d.size() * n));
    std::vector<double> log_w(rule.weights.size());
    std::transform(rule.weights.begin(), rule.weights.end(), log_w.begin(), [](double w) { return std::log(w); });

    for (Index r = 0; r < d.size(); ++r) {
        const auto& rec = d.records()[static_cast<std::size_t>(r)];
        const double half = 0.5 * (rec.time - rec.entry);
        if (!(half > 0.0)) throw ValidationError("record " + std::to_string(r + 1) + " has a zero-length interval");
        const double mid = 0.5 * (rec.time + rec.entry);
        const double log_half = std::log(half);
        for (int j = 0; j < n; ++j) {
            ExpandedRow row;
            row.subject = d.subject_of(r);
            row.record = r;
            const auto ju = static_cast<std::size_t>(j);
            if (j == 0) row.t = rec.entry;
            else if (j == n - 1) row.t = rec.time;
            else row.t = mid + half * rule.nodes[ju];
            row.y = (j == n - 1) ? static_cast<double>(rec.event) : 0.0;
            row.log_weight = log_half + log_w[ju];
            e.rows.push_back(row);
        }
    }
    return e;
}

void write_expanded(std::ostream& out, const ExpandedDataset& e, const Dataset& d) {
    out << "subject,t,y,log_weight\n";
    out.precision(17);
    for (const auto& row : e.rows) {
        out << d.subject_id(row.subject) << ',' << row.t << ',' << row.y << ',' << row.log_weight << '\n';
    }
}

Index RiskSetPartition::n_exposure_rows() const noexcept {
    Index n = 0;
    for (const auto& m : membership) n += static_cast<Index>(m.size());
    return n;
}

RiskSetPartition partition_at_events(const Dataset& d) {
    RiskSetPartition part;
    for (const auto& r : d.records()) {
        if (r.event == 1) part.boundaries.push_back(r.time);
    }
    if (part.boundaries.empty()) throw ValidationError("no events");
    std::sort(part.boundaries.begin(), part.boundaries.end());
    part.boundaries.erase(std::unique(part.boundaries.begin(), part.boundaries.end()), part.boundaries.end());

    const auto K = part.boundaries.size();
    part.lengths.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        part.lengths[k] = part.boundaries[k] - (k == 0 ? 0.0 : part.boundaries[k - 1]);
    }
    part.deaths.assign(K, 0);
    part.membership.resize(static_cast<std::size_t>(d.size()));
    part.death_interval.assign(static_cast<std::size_t>(d.size()), -1);

    for (Index r = 0; r < d.size(); ++r) {
        const auto& rec = d.records()[static_cast<std::size_t>(r)];
        // First boundary strictly after entry, last boundary <= time.
        auto lo = std::upper_bound(part.boundaries.begin(), part.boundaries.end(), rec.entry);
        auto hi = std::upper_bound(part.boundaries.begin(), part.boundaries.end(), rec.time);
        auto& mem = part.membership[static_cast<std::size_t>(r)];
        for (auto it = lo; it < hi; ++it) mem.push_back(static_cast<Index>(it - part.boundaries.begin()));
        if (rec.event == 1) {
            const auto k = static_cast<Index>(hi - part.boundaries.begin()) - 1;
            part.death_interval[static_cast<std::size_t>(r)] = k;
            part.deaths[static_cast<std::size_t>(k)] += 1;
        }
    }
    return part;
}

}  // namespace survgam
