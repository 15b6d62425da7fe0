#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "survgam/data.hpp"

namespace survgam {

/// One row of a benchmark design table.
struct DesignRow {
    Index N = 1000;
    int dim_beta = 4;
    double f = 0.5;
    double r = 0.1;
    double S_Tmax = 0.5;
    double q = 10.0;
};

// CSV with header N,dim_beta,f,r,S_Tmax,q (extra columns ignored).
std::vector<DesignRow> parse_design(std::istream& in);
std::vector<DesignRow> load_design(const std::filesystem::path& path);
void write_design(std::ostream& out, const std::vector<DesignRow>& rows);

/**
 * Space-filling Sobol points over N x dim_beta x f x r x S_Tmax x q =
 * [20000, 40000] x [10, 80] x [0.1, 0.9] x [0.1, 1] x [0.05, 0.95] x [10, 20].
 * For smoke tests only; it is not a D-optimal design.
 */
std::vector<DesignRow> sobol_design(int n);

// 100 |1 - estimate / truth|.
double bias_metric(double estimate, double truth);

struct Measurement {
    Index row = 0;
    DesignRow design;
    std::uint64_t seed = 0;
    int replicate = 0;
    std::string method;
    double wall_time_s = 0.0;
    std::optional<std::uint64_t> peak_mem_bytes;
    double sigma_f_true = 0.0;
    std::optional<double> sigma_f_est;
    double mean_abs_rel_bias_beta = 0.0;
    bool converged = false;
    std::string error;
};

const std::vector<std::string>& bench_methods();

// Simulation seed of one (row, replicate) cell, mixed with a base seed.
std::uint64_t replicate_seed(Index row, int replicate, std::uint64_t base = 0);

struct BenchConfig {
    std::vector<std::string> methods{"two-stage-agq9"};
    int replicates = 2;
    int nodes = 9;
    int basis_dim = 10;
    double T_max = 20.0;
    Index mc_size = 100000;
    std::uint64_t seed = 0;
    std::ostream* log = nullptr;  // one progress line per measurement
};

/**
 * Simulates the design point with the replicate seed, then times expansion
 * plus fitting under `method`. Failures are recorded, not thrown.
 */
Measurement run_one(Index row, const DesignRow& design, const std::string& method, int replicate,
                    const BenchConfig& cfg);

/**
 * Every row x method x replicate, appended to `out` one line at a time.
 * Keys already present in `out` are skipped. Returns all measurements in the
 * file afterwards.
 */
std::vector<Measurement> run_design(const std::vector<DesignRow>& design, const BenchConfig& cfg,
                                    const std::filesystem::path& out);

void write_measurement_header(std::ostream& out);
void write_measurement(std::ostream& out, const Measurement& m);
std::vector<Measurement> parse_measurements(std::istream& in);

/**
 * Samples the resident set size of this process every 50 ms and keeps the
 * maximum. peak() is empty when /proc is unavailable.
 */
class RssWatcher {
public:
    RssWatcher();
    ~RssWatcher();
    RssWatcher(const RssWatcher&) = delete;
    RssWatcher& operator=(const RssWatcher&) = delete;

    std::optional<std::uint64_t> stop();

private:
    void sample();

    std::atomic<bool> running_{true};
    std::atomic<std::uint64_t> peak_{0};
    bool available_ = false;
    std::thread thread_;
};

// Current VmRSS in bytes, if readable.
std::optional<std::uint64_t> current_rss();

}  // namespace survgam
