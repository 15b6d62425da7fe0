#include "survgam/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <boost/random/sobol.hpp>

#include "survgam/backfit.hpp"
#include "survgam/cox.hpp"
#include "survgam/error.hpp"
#include "survgam/gam.hpp"
#include "survgam/quadrature.hpp"
#include "survgam/simulate.hpp"

namespace survgam {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_double(const std::string& s, Index row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("not a number: '" + s + "'", row);
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::optional<std::uint64_t> status_field(const char* key) {
    std::ifstream in("/proc/self/status");
    if (!in) return std::nullopt;
    std::string line;
    const std::string k(key);
    while (std::getline(in, line)) {
        if (line.rfind(k, 0) == 0) {
            std::istringstream ss(line.substr(k.size()));
            std::uint64_t kb = 0;
            if (ss >> kb) return kb * 1024;
        }
    }
    return std::nullopt;
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

using Key = std::tuple<Index, std::string, int>;

}  // namespace

std::vector<DesignRow> parse_design(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty design", 0);
    const auto header = split(line);
    const std::vector<std::string> want{"N", "dim_beta", "f", "r", "S_Tmax", "q"};
    std::vector<int> col(want.size(), -1);
    for (std::size_t i = 0; i < header.size(); ++i) {
        for (std::size_t k = 0; k < want.size(); ++k) {
            if (trim(header[i]) == want[k]) col[k] = static_cast<int>(i);
        }
    }
    for (std::size_t k = 0; k < want.size(); ++k) {
        if (col[k] < 0) throw ParseError("design is missing column '" + want[k] + "'", 0);
    }
    std::vector<DesignRow> rows;
    Index row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        auto get = [&](std::size_t k) {
            const auto c = static_cast<std::size_t>(col[k]);
            if (c >= cells.size()) throw ParseError("short design row", row);
            return to_double(trim(cells[c]), row);
        };
        DesignRow d;
        d.N = static_cast<Index>(std::llround(get(0)));
        d.dim_beta = static_cast<int>(std::lround(get(1)));
        d.f = get(2);
        d.r = get(3);
        d.S_Tmax = get(4);
        d.q = get(5);
        if (d.N < 1 || d.dim_beta < 2) throw ParseError("N must be positive and dim_beta at least 2", row);
        rows.push_back(d);
    }
    return rows;
}

std::vector<DesignRow> load_design(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open design " + path.string());
    return parse_design(in);
}

void write_design(std::ostream& out, const std::vector<DesignRow>& rows) {
    out << "N,dim_beta,f,r,S_Tmax,q\n";
    out.precision(17);
    for (const auto& d : rows) {
        out << d.N << ',' << d.dim_beta << ',' << d.f << ',' << d.r << ',' << d.S_Tmax << ',' << d.q << '\n';
    }
}

std::vector<DesignRow> sobol_design(int n) {
    if (n < 1) throw ValidationError("design size must be positive");
    boost::random::sobol gen(6);
    const double span = static_cast<double>(gen.max() - gen.min()) + 1.0;
    std::vector<DesignRow> rows;
    for (int i = 0; i < n; ++i) {
        double u[6];
        for (double& v : u) v = static_cast<double>(gen() - gen.min()) / span;
        DesignRow d;
        d.N = static_cast<Index>(std::llround(20000.0 + 20000.0 * u[0]));
        d.dim_beta = static_cast<int>(std::lround(10.0 + 70.0 * u[1]));
        d.f = 0.1 + 0.8 * u[2];
        d.r = 0.1 + 0.9 * u[3];
        d.S_Tmax = 0.05 + 0.9 * u[4];
        d.q = 10.0 + 10.0 * u[5];
        rows.push_back(d);
    }
    return rows;
}

double bias_metric(double estimate, double truth) {
    if (truth == 0.0) throw ValidationError("undefined relative bias");
    return 100.0 * std::abs(1.0 - estimate / truth);
}

const std::vector<std::string>& bench_methods() {
    static const std::vector<std::string> m{"one-stage",      "two-stage-laplace", "two-stage-agq3",
                                            "two-stage-agq9", "two-stage-agq15",   "cox-oracle"};
    return m;
}

std::uint64_t replicate_seed(Index row, int replicate, std::uint64_t base) {
    const std::uint64_t h = splitmix64(splitmix64(base) ^ static_cast<std::uint64_t>(row));
    return splitmix64(h ^ static_cast<std::uint64_t>(replicate));
}

std::optional<std::uint64_t> current_rss() { return status_field("VmRSS:"); }

RssWatcher::RssWatcher() {
    available_ = current_rss().has_value();
    if (!available_) return;
    // Reset the kernel high-water mark so it covers this window only.
    {
        std::ofstream reset("/proc/self/clear_refs");
        if (reset) reset << "5";
    }
    sample();
    thread_ = std::thread([this] {
        while (running_.load()) {
            sample();
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    });
}

RssWatcher::~RssWatcher() { stop(); }

void RssWatcher::sample() {
    if (auto rss = current_rss()) {
        std::uint64_t prev = peak_.load();
        while (*rss > prev && !peak_.compare_exchange_weak(prev, *rss)) {
        }
    }
}

std::optional<std::uint64_t> RssWatcher::stop() {
    if (!available_) return std::nullopt;
    if (running_.exchange(false) && thread_.joinable()) thread_.join();
    sample();
    std::uint64_t peak = peak_.load();
    if (auto hwm = status_field("VmHWM:")) peak = std::max(peak, *hwm);
    return peak;
}

Measurement run_one(Index row, const DesignRow& design, const std::string& method, int replicate,
                    const BenchConfig& cfg) {
    Measurement m;
    m.row = row;
    m.design = design;
    m.replicate = replicate;
    m.method = method;
    m.seed = replicate_seed(row, replicate, cfg.seed);

    SimulatedDataset sim;
    try {
        DesignPoint dp;
        dp.N = design.N;
        dp.dim_beta = design.dim_beta;
        dp.f = design.f;
        dp.r = design.r;
        dp.S_Tmax = design.S_Tmax;
        dp.q = design.q;
        dp.T_max = cfg.T_max;
        dp.seed = m.seed;
        SimulationConfig sc;
        sc.mc_size = cfg.mc_size;
        sim = simulate_dataset(dp, sc);
    } catch (const std::exception& e) {
        m.error = std::string("simulation: ") + e.what();
        return m;
    }
    m.sigma_f_true = sim.truth.sigma_f;

    Eigen::VectorXd beta;
    RssWatcher watcher;
    const auto start = std::chrono::steady_clock::now();
    try {
        if (method == "one-stage") {
            const ExpandedDataset e = expand(sim.dataset, cfg.nodes);
            const GamProblem p = build_gam_problem(sim.dataset, e, cfg.basis_dim);
            const OneStageResult r = one_stage_fit(p);
            beta = r.gam.beta;
            m.sigma_f_est = r.frailty.sigma_u;
            m.converged = r.gam.converged && r.frailty.converged;
        } else if (method.rfind("two-stage-", 0) == 0) {
            BackfitConfig bc;
            bc.nodes = cfg.nodes;
            bc.basis_dim = cfg.basis_dim;
            bc.frailty_method = parse_frailty_method(method.substr(10));
            const BackfitResult r = two_stage_fit(sim.dataset, bc);
            beta = r.gam.beta;
            m.sigma_f_est = r.frailty->sigma_u;
            m.converged = r.converged;
        } else if (method == "cox-oracle") {
            beta = cox_partial_fit(sim.dataset).beta;
            m.converged = true;
        } else {
            throw ValidationError("unknown method '" + method + "'");
        }
    } catch (const std::exception& e) {
        m.error = e.what();
        m.converged = false;
    }
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.peak_mem_bytes = watcher.stop();

    if (beta.size() == sim.truth.beta.size() && beta.size() > 0) {
        double acc = 0.0;
        for (Index j = 0; j < beta.size(); ++j) acc += bias_metric(beta(j), sim.truth.beta(j));
        m.mean_abs_rel_bias_beta = acc / static_cast<double>(beta.size());
    }
    return m;
}

void write_measurement_header(std::ostream& out) {
    out << "row,N,dim_beta,f,r,S_Tmax,q,seed,replicate,method,wall_time_s,peak_mem_bytes,sigma_f_true,"
           "sigma_f_est,mean_abs_rel_bias_beta,converged,error\n";
}

void write_measurement(std::ostream& out, const Measurement& m) {
    out.precision(17);
    const auto& d = m.design;
    out << m.row << ',' << d.N << ',' << d.dim_beta << ',' << d.f << ',' << d.r << ',' << d.S_Tmax << ',' << d.q
        << ',' << m.seed << ',' << m.replicate << ',' << m.method << ',' << m.wall_time_s << ',';
    if (m.peak_mem_bytes) out << *m.peak_mem_bytes;
    out << ',' << m.sigma_f_true << ',';
    if (m.sigma_f_est) out << *m.sigma_f_est;
    out << ',' << m.mean_abs_rel_bias_beta << ',' << (m.converged ? 1 : 0) << ',' << sanitize(m.error) << '\n';
}

std::vector<Measurement> parse_measurements(std::istream& in) {
    std::string line;
    std::vector<Measurement> out;
    if (!std::getline(in, line)) return out;
    Index row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto c = split(line);
        if (c.size() < 17) throw ParseError("short measurement row", row);
        Measurement m;
        m.row = static_cast<Index>(std::llround(to_double(c[0], row)));
        m.design.N = static_cast<Index>(std::llround(to_double(c[1], row)));
        m.design.dim_beta = static_cast<int>(std::lround(to_double(c[2], row)));
        m.design.f = to_double(c[3], row);
        m.design.r = to_double(c[4], row);
        m.design.S_Tmax = to_double(c[5], row);
        m.design.q = to_double(c[6], row);
        m.seed = std::stoull(c[7]);
        m.replicate = static_cast<int>(std::lround(to_double(c[8], row)));
        m.method = c[9];
        m.wall_time_s = to_double(c[10], row);
        if (!c[11].empty()) m.peak_mem_bytes = std::stoull(c[11]);
        m.sigma_f_true = to_double(c[12], row);
        if (!c[13].empty()) m.sigma_f_est = to_double(c[13], row);
        m.mean_abs_rel_bias_beta = to_double(c[14], row);
        m.converged = c[15] == "1";
        m.error = c[16];
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<Measurement> run_design(const std::vector<DesignRow>& design, const BenchConfig& cfg,
                                    const std::filesystem::path& out) {
    for (const auto& method : cfg.methods) {
        bool known = false;
        for (const auto& k : bench_methods()) known = known || k == method;
        if (!known) throw ValidationError("unknown method '" + method + "'");
    }
    if (cfg.replicates < 1) throw ValidationError("replicates must be positive");

    std::vector<Measurement> all;
    if (std::filesystem::exists(out) && std::filesystem::file_size(out) > 0) {
        std::ifstream in(out);
        all = parse_measurements(in);
    }
    std::set<Key> done;
    for (const auto& m : all) done.insert({m.row, m.method, m.replicate});

    const bool fresh = all.empty() && !(std::filesystem::exists(out) && std::filesystem::file_size(out) > 0);
    std::ofstream file(out, std::ios::app);
    if (!file) throw ValidationError("cannot write " + out.string());
    if (fresh) write_measurement_header(file);

    for (std::size_t i = 0; i < design.size(); ++i) {
        const auto row = static_cast<Index>(i);
        for (const auto& method : cfg.methods) {
            for (int rep = 1; rep <= cfg.replicates; ++rep) {
                if (done.count({row, method, rep})) continue;
                Measurement m = run_one(row, design[i], method, rep, cfg);
                write_measurement(file, m);
                file.flush();
                if (cfg.log) {
                    *cfg.log << "row " << row << " " << method << " rep " << rep << ": " << m.wall_time_s << " s"
                             << (m.error.empty() ? "" : " (" + m.error + ")") << '\n';
                }
                all.push_back(std::move(m));
            }
        }
    }
    return all;
}

}  // namespace survgam
