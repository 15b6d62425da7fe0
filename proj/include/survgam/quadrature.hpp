#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "survgam/data.hpp"

namespace survgam {

/// Gauss-Lobatto-Legendre rule on [-1, 1]. Both endpoints are nodes; the rule
/// integrates polynomials of degree 2n-3 exactly.
struct LobattoRule {
    int n = 0;
    std::vector<double> nodes;    // strictly increasing, nodes.front() == -1, nodes.back() == 1
    std::vector<double> weights;  // positive, sum to 2
};

// 2 <= n <= 64.
LobattoRule lobatto_rule(int n);

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
struct HermiteRule {
    int n = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix.
HermiteRule gauss_hermite_rule(int n);

/// One Poisson pseudo-observation at a quadrature node.
struct ExpandedRow {
    Index subject = 0;  // dense subject index
    Index record = 0;   // source record index
    double t = 0.0;
    double y = 0.0;
    double log_weight = 0.0;
};

/**
 * Dataset expanded at Gauss-Lobatto nodes.
 *
 * Rows are ordered by (record, node); record r owns rows
 * [r * nodes_per_record, (r + 1) * nodes_per_record). Only the last node of a
 * record can carry y = 1, and its value is the record's event indicator.
 */
struct ExpandedDataset {
    std::vector<ExpandedRow> rows;
    Index n_records = 0;
    Index n_subjects = 0;
    int nodes_per_record = 0;

    Index size() const noexcept { return static_cast<Index>(rows.size()); }
    Index row_begin(Index record) const noexcept { return record * nodes_per_record; }
    Index row_end(Index record) const noexcept { return (record + 1) * nodes_per_record; }

    Eigen::VectorXd responses() const;
    Eigen::VectorXd log_weights() const;
};

ExpandedDataset expand(const Dataset& d, int n);

// CSV with columns subject,t,y,log_weight. Subject is the original id.
void write_expanded(std::ostream& out, const ExpandedDataset& e, const Dataset& d);

/**
 * Partition of follow-up at the distinct event times.
 *
 * Interval k is (boundaries[k-1], boundaries[k]] with boundaries[-1] = 0.
 * A record is at risk in interval k when entry < boundaries[k] <= time.
 * Exposure after the last event time is dropped.
 */
struct RiskSetPartition {
    std::vector<double> boundaries;
    std::vector<Index> deaths;           // d_k >= 1
    std::vector<double> lengths;         // delta t_k
    // Interval membership: for each record, the intervals it is at risk in.
    std::vector<std::vector<Index>> membership;
    // For each record, the interval it dies in or -1.
    std::vector<Index> death_interval;

    Index n_intervals() const noexcept { return static_cast<Index>(boundaries.size()); }
    Index n_exposure_rows() const noexcept;
};

RiskSetPartition partition_at_events(const Dataset& d);

}  // namespace survgam
