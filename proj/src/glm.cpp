#include "survgam/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "survgam/error.hpp"
#include "survgam/parallel.hpp"

namespace survgam {

namespace {

void check_shapes(const ModelMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                  const Penalty& pen) {
    if (X.row.cols() > 0 && X.row.rows() != X.n_rows()) throw ValidationError("row design has the wrong row count");
    if (y.size() != X.n_rows() || offset.size() != X.n_rows()) {
        throw ValidationError("response/offset length does not match the design");
    }
    if (pen.diag.size() != X.n_coef()) throw ValidationError("penalty length does not match the design");
    if (pen.has_groups() && static_cast<Index>(X.group.size()) != X.n_units()) {
        throw ValidationError("group effects requested without a unit grouping");
    }
}

Eigen::VectorXd compute_eta(const ModelMatrix& X, const Eigen::VectorXd& offset, const Penalty& pen,
                            const Eigen::VectorXd& coef, const Eigen::VectorXd& b) {
    const Index n = X.rows_per_unit;
    const Eigen::VectorXd eu = X.unit * coef.head(X.n_unit_cols());
    Eigen::VectorXd eta = offset;
    if (X.n_row_cols() > 0) eta.noalias() += X.row * coef.tail(X.n_row_cols());
    for (Index i = 0; i < X.n_units(); ++i) {
        double shift = eu(i);
        if (pen.has_groups()) shift += b(X.group[static_cast<std::size_t>(i)]);
        eta.segment(i * n, n).array() += shift;
    }
    return eta;
}

double penalty_value(const Penalty& pen, const Eigen::VectorXd& coef, const Eigen::VectorXd& b) {
    double v = (pen.diag.array() * coef.array().square()).sum();
    if (pen.has_groups()) v += pen.group_precision * b.squaredNorm();
    return v;
}

struct LogLik {
    double loglik = 0.0;
    double deviance = 0.0;

    LogLik& operator+=(const LogLik& o) {
        loglik += o.loglik;
        deviance += o.deviance;
        return *this;
    }
};

LogLik poisson_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    return chunked_sum(y.size(), kChunkRows, LogLik{}, [&](Index b, Index e) {
        LogLik acc;
        for (Index r = b; r < e; ++r) {
            const double mu = std::exp(eta(r));
            const double yr = y(r);
            acc.loglik += yr * eta(r) - mu - (yr > 0.0 ? std::lgamma(yr + 1.0) : 0.0);
            acc.deviance += 2.0 * ((yr > 0.0 ? yr * std::log(yr) : 0.0) - yr * eta(r) - yr + mu);
        }
        return acc;
    });
}

}  // namespace

Eigen::VectorXd ModelMatrix::linear_predictor(const Eigen::VectorXd& coef) const {
    Penalty none;
    return compute_eta(*this, Eigen::VectorXd::Zero(n_rows()), none, coef, {});
}

namespace {

// Gradient and negative Hessian of the penalized log-likelihood at eta.
struct Curvature {
    Eigen::VectorXd grad;    // q
    Eigen::MatrixXd hess;    // q x q (coefficients only)
    Eigen::VectorXd grad_b;  // groups
    Eigen::VectorXd diag_b;  // groups: d^2/db^2 block (diagonal)
    Eigen::MatrixXd cross;   // groups x q
};

Curvature curvature(const ModelMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& eta, const Penalty& pen,
                    const Eigen::VectorXd& coef, const Eigen::VectorXd& b) {
    const Index n = X.rows_per_unit;
    const Index N = X.n_units();
    const Index pu = X.n_unit_cols();
    const Index pr = X.n_row_cols();
    const Index q = pu + pr;

    Eigen::VectorXd mu = eta.array().exp();
    Eigen::VectorXd resid = y - mu;
    Eigen::VectorXd wsum(N), rsum(N);
    Eigen::MatrixXd ws(N, pr);
    const Index units_per_chunk = std::max<Index>(1, kChunkRows / n);
    parallel_chunks(N, units_per_chunk, [&](Index, Index ub, Index ue) {
        for (Index i = ub; i < ue; ++i) {
            wsum(i) = mu.segment(i * n, n).sum();
            rsum(i) = resid.segment(i * n, n).sum();
            if (pr > 0) ws.row(i).noalias() = mu.segment(i * n, n).transpose() * X.row.middleRows(i * n, n);
        }
    });

    Curvature c;
    c.grad.resize(q);
    c.hess.resize(q, q);
    c.grad.head(pu).noalias() = X.unit.transpose() * rsum;
    c.hess.topLeftCorner(pu, pu).noalias() = X.unit.transpose() * wsum.asDiagonal() * X.unit;
    if (pr > 0) {
        c.grad.tail(pr).noalias() = X.row.transpose() * resid;
        c.hess.topRightCorner(pu, pr).noalias() = X.unit.transpose() * ws;
        c.hess.bottomLeftCorner(pr, pu) = c.hess.topRightCorner(pu, pr).transpose();
        const Eigen::MatrixXd wr = mu.asDiagonal() * X.row;
        c.hess.bottomRightCorner(pr, pr).noalias() = X.row.transpose() * wr;
    }
    c.grad.array() -= pen.diag.array() * coef.array();
    c.hess.diagonal() += pen.diag;

    if (pen.has_groups()) {
        const Index G = X.n_groups;
        c.grad_b = Eigen::VectorXd::Zero(G);
        c.diag_b = Eigen::VectorXd::Zero(G);
        c.cross = Eigen::MatrixXd::Zero(G, q);
        for (Index i = 0; i < N; ++i) {
            const Index s = X.group[static_cast<std::size_t>(i)];
            c.grad_b(s) += rsum(i);
            c.diag_b(s) += wsum(i);
            c.cross.row(s).head(pu) += wsum(i) * X.unit.row(i);
            if (pr > 0) c.cross.row(s).tail(pr) += ws.row(i);
        }
        c.grad_b -= pen.group_precision * b;
        c.diag_b.array() += pen.group_precision;
    }
    return c;
}

std::string weakest_column(const ModelMatrix& X, const Eigen::MatrixXd& A) {
    const Index q = A.rows();
    for (Index j = 0; j < q; ++j) {
        if (!(A(j, j) > 0.0)) return X.names.empty() ? std::to_string(j) : X.names[static_cast<std::size_t>(j)];
    }
    const Eigen::VectorXd s = A.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = s.asDiagonal() * A * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled);
    Index j = 0;
    es.eigenvectors().col(0).cwiseAbs().maxCoeff(&j);
    return X.names.empty() ? std::to_string(j) : X.names[static_cast<std::size_t>(j)];
}

struct Reduced {
    Eigen::MatrixXd A;  // Schur complement
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_det = 0.0;
};

Reduced reduce(const ModelMatrix& X, const Curvature& c, const Penalty& pen) {
    Reduced r;
    r.A = c.hess;
    if (pen.has_groups()) {
        const Eigen::VectorXd inv = c.diag_b.cwiseInverse();
        r.A.noalias() -= c.cross.transpose() * inv.asDiagonal() * c.cross;
    }
    r.llt.compute(r.A);
    bool ok = r.llt.info() == Eigen::Success;
    if (ok) {
        const Eigen::VectorXd ld = r.llt.matrixLLT().diagonal();
        for (Index j = 0; j < ld.size(); ++j) {
            if (!(ld(j) * ld(j) > 1e-13 * r.A(j, j))) ok = false;
        }
        r.log_det = 2.0 * ld.array().log().sum();
    }
    if (!ok) {
        throw NumericalError("penalized information is rank deficient; null direction dominated by '" +
                             weakest_column(X, r.A) + "'");
    }
    if (pen.has_groups()) r.log_det += c.diag_b.array().log().sum();
    return r;
}

}  // namespace

double penalized_loglik(const ModelMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                        const Penalty& pen, const Eigen::VectorXd& coef, const Eigen::VectorXd& b) {
    check_shapes(X, y, offset, pen);
    const Eigen::VectorXd eta = compute_eta(X, offset, pen, coef, b);
    return poisson_loglik(y, eta).loglik - 0.5 * penalty_value(pen, coef, b);
}

Eigen::VectorXd penalized_score(const ModelMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                                const Penalty& pen, const Eigen::VectorXd& coef, const Eigen::VectorXd& b) {
    check_shapes(X, y, offset, pen);
    const Eigen::VectorXd eta = compute_eta(X, offset, pen, coef, b);
    const Curvature c = curvature(X, y, eta, pen, coef, b);
    Eigen::VectorXd out(c.grad.size() + c.grad_b.size());
    out << c.grad, c.grad_b;
    return out;
}

WorkingState pirls(const ModelMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset, const Penalty& pen,
                   const Eigen::VectorXd& init, const Eigen::VectorXd& init_b, const PirlsOptions& opts) {
    check_shapes(X, y, offset, pen);
    if (init.size() != X.n_coef()) throw ValidationError("initial coefficient vector has the wrong length");

    WorkingState s;
    s.coef = init;
    if (pen.has_groups()) {
        s.group_effects = init_b.size() == X.n_groups ? init_b : Eigen::VectorXd::Zero(X.n_groups);
    }

    auto evaluate = [&](const Eigen::VectorXd& coef, const Eigen::VectorXd& b, Eigen::VectorXd& eta, LogLik& ll,
                        double& pv) {
        eta = compute_eta(X, offset, pen, coef, b);
        ll = poisson_loglik(y, eta);
        pv = penalty_value(pen, coef, b);
        return ll.loglik - 0.5 * pv;
    };

    LogLik ll;
    double pv = 0.0;
    double lp = evaluate(s.coef, s.group_effects, s.eta, ll, pv);
    if (!std::isfinite(lp)) throw NumericalError("PIRLS: non-finite likelihood at the starting values");

    int polish_left = -1;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Curvature c = curvature(X, y, s.eta, pen, s.coef, s.group_effects);
        const Reduced red = reduce(X, c, pen);
        Eigen::VectorXd rhs = c.grad;
        if (pen.has_groups()) rhs.noalias() -= c.cross.transpose() * c.grad_b.cwiseQuotient(c.diag_b);
        const Eigen::VectorXd step = red.llt.solve(rhs);
        Eigen::VectorXd step_b;
        if (pen.has_groups()) step_b = (c.grad_b - c.cross * step).cwiseQuotient(c.diag_b);

        double scale = 1.0;
        bool accepted = false;
        Eigen::VectorXd coef_new, b_new, eta_new;
        LogLik ll_new;
        double pv_new = 0.0, lp_new = 0.0;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            coef_new = s.coef + scale * step;
            if (pen.has_groups()) b_new = s.group_effects + scale * step_b;
            lp_new = evaluate(coef_new, b_new, eta_new, ll_new, pv_new);
            if (std::isfinite(lp_new) && lp_new >= lp - 1e-12 * std::abs(lp)) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        s.iterations = it + 1;
        if (!accepted) {
            if (!std::isfinite(lp_new)) {
                throw NumericalError("PIRLS diverged: likelihood not finite after " +
                                     std::to_string(opts.max_halvings) + " step halvings");
            }
            // No ascent direction left at working precision.
            s.converged = true;
            break;
        }
        const double old_dev = ll.deviance + pv;
        s.coef = std::move(coef_new);
        s.group_effects = std::move(b_new);
        s.eta = std::move(eta_new);
        ll = ll_new;
        pv = pv_new;
        lp = lp_new;
        const double new_dev = ll.deviance + pv;

        if (polish_left > 0) {
            if (--polish_left == 0) {
                s.converged = true;
                break;
            }
            continue;
        }
        if (std::abs(new_dev - old_dev) < opts.rel_tol * (std::abs(new_dev) + 0.1)) {
            polish_left = opts.polish_steps;
            if (polish_left == 0) {
                s.converged = true;
                break;
            }
        }
    }

    s.loglik = ll.loglik;
    s.deviance = ll.deviance;
    s.penalty = pv;
    const Curvature c = curvature(X, y, s.eta, pen, s.coef, s.group_effects);
    const Reduced red = reduce(X, c, pen);
    s.information = red.A;
    s.covariance = red.llt.solve(Eigen::MatrixXd::Identity(red.A.rows(), red.A.cols()));
    s.log_det_v = red.log_det;
    return s;
}

double reml_criterion(const ModelMatrix& X, const WorkingState& state, const Penalty& pen) {
    double log_det_p = 0.0;
    Index n_unpenalized = 0;
    for (Index j = 0; j < pen.diag.size(); ++j) {
        if (pen.diag(j) > 0.0) log_det_p += std::log(pen.diag(j));
        else ++n_unpenalized;
    }
    if (pen.has_groups()) log_det_p += static_cast<double>(X.n_groups) * std::log(pen.group_precision);
    if (!std::isfinite(state.log_det_v)) throw NumericalError("REML: penalized information is not positive definite");
    return state.loglik - 0.5 * state.penalty + 0.5 * log_det_p - 0.5 * state.log_det_v +
           0.5 * static_cast<double>(n_unpenalized) * std::log(2.0 * std::numbers::pi);
}

}  // namespace survgam
