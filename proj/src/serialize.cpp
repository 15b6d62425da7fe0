#include "survgam/serialize.hpp"

#include <ostream>

#include "survgam/error.hpp"

namespace survgam {

namespace {

Json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json mat(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd to_vec(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

Eigen::MatrixXd to_mat(const Json& j, Index cols_if_empty) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) return Eigen::MatrixXd(0, cols_if_empty);
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ValidationError("ragged matrix in fit document");
        for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
    return m;
}

}  // namespace

Json gam_to_json(const GamFit& fit) {
    Json coefs = Json::array();
    for (Index j = 0; j < fit.beta.size(); ++j) {
        coefs.push_back({{"name", fit.covariate_names[static_cast<std::size_t>(j)]},
                         {"estimate", fit.beta(j)},
                         {"se", fit.beta_se.size() > j ? fit.beta_se(j) : 0.0}});
    }
    Json j;
    j["coefficients"] = coefs;
    j["smoothing"] = {{"log_lambda", fit.log_lambda}, {"edf", fit.edf}};
    j["baseline"] = {{"knots", fit.basis.knots},
                     {"degree", fit.basis.degree},
                     {"dim", fit.basis.dim},
                     {"penalty_order", fit.basis.penalty_order},
                     {"spline_raw", vec(fit.spline_raw)},
                     {"spline_fixed", vec(fit.spline_fixed)},
                     {"spline_random", vec(fit.spline_random)},
                     {"fixed_transform", mat(fit.pd.fixed_transform)},
                     {"random_transform", mat(fit.pd.random_transform)}};
    j["convergence"] = {{"iterations", fit.iterations}, {"evaluations", fit.evaluations},
                        {"deviance", fit.deviance},     {"reml", fit.reml},
                        {"converged", fit.converged},   {"lambda_at_bound", fit.lambda_at_bound}};
    return j;
}

Json frailty_to_json(const FrailtyFit& f) {
    return {{"sigma_u", f.sigma_u},        {"alpha", f.alpha},       {"with_intercept", f.with_intercept},
            {"method", f.method.label()},  {"boundary", f.boundary}, {"loglik", f.marginal_loglik},
            {"deviance", f.deviance},      {"converged", f.converged}, {"evaluations", f.evaluations}};
}

Json backfit_to_json(const BackfitResult& r) {
    Json j = gam_to_json(r.gam);
    if (r.frailty) j["frailty"] = frailty_to_json(*r.frailty);
    j["backfit"] = {{"iterations", r.iterations},
                    {"converged", r.converged},
                    {"damped", r.damped},
                    {"deviance_trace", r.deviance_trace}};
    j["max_time"] = r.max_time;
    j["nodes"] = r.nodes;
    return j;
}

Json one_stage_to_json(const OneStageResult& r, double max_time, int nodes) {
    Json j = gam_to_json(r.gam);
    j["frailty"] = frailty_to_json(r.frailty);
    j["max_time"] = max_time;
    j["nodes"] = nodes;
    return j;
}

GamFit gam_from_json(const Json& j) {
    try {
        GamFit fit;
        for (const auto& c : j.at("coefficients")) fit.covariate_names.push_back(c.at("name").get<std::string>());
        const auto p = static_cast<Index>(fit.covariate_names.size());
        fit.beta.resize(p);
        fit.beta_se.resize(p);
        for (Index k = 0; k < p; ++k) {
            fit.beta(k) = j["coefficients"][static_cast<std::size_t>(k)].at("estimate").get<double>();
            fit.beta_se(k) = j["coefficients"][static_cast<std::size_t>(k)].at("se").get<double>();
        }
        const Json& b = j.at("baseline");
        fit.basis.knots = b.at("knots").get<std::vector<double>>();
        fit.basis.degree = b.at("degree").get<int>();
        fit.basis.dim = b.at("dim").get<int>();
        fit.basis.penalty_order = b.at("penalty_order").get<int>();
        fit.spline_raw = to_vec(b.at("spline_raw"));
        fit.spline_fixed = to_vec(b.at("spline_fixed"));
        fit.spline_random = to_vec(b.at("spline_random"));
        fit.pd.fixed_transform = to_mat(b.at("fixed_transform"), 0);
        fit.pd.random_transform = to_mat(b.at("random_transform"), 0);
        if (fit.spline_raw.size() != fit.basis.dim ||
            static_cast<Index>(fit.basis.knots.size()) != fit.basis.dim + fit.basis.degree + 1) {
            throw ValidationError("inconsistent baseline block in fit document");
        }
        fit.log_lambda = j.at("smoothing").at("log_lambda").get<double>();
        fit.edf = j.at("smoothing").at("edf").get<double>();
        const Json& c = j.at("convergence");
        fit.iterations = c.at("iterations").get<int>();
        fit.deviance = c.at("deviance").get<double>();
        fit.reml = c.at("reml").get<double>();
        fit.converged = c.at("converged").get<bool>();
        return fit;
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed fit document: ") + e.what());
    }
}

Json truth_to_json(const SimulationTruth& t) {
    return {{"beta", vec(t.beta)}, {"gamma", t.gamma}, {"lambda", t.lambda}, {"sigma_f", t.sigma_f},
            {"B", t.B},            {"u", t.u},         {"seed", t.seed}};
}

void write_modes_csv(std::ostream& out, const std::vector<std::string>& subject_ids, const Eigen::VectorXd& modes) {
    if (static_cast<Index>(subject_ids.size()) != modes.size()) throw ValidationError("modes and subject ids differ");
    out << "subject,mode\n";
    out.precision(17);
    for (std::size_t s = 0; s < subject_ids.size(); ++s) out << subject_ids[s] << ',' << modes(static_cast<Index>(s)) << '\n';
}

}  // namespace survgam
