#include "survgam/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "survgam/error.hpp"

namespace survgam {

Maximum1D maximize_1d(const std::function<double(double)>& f, const Maximize1DOptions& opts) {
    Maximum1D best;
    int evals = 0;
    auto eval = [&](double x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    };
    auto out_of_budget = [&] {
        if (evals >= opts.max_evaluations) {
            throw NumericalError("1-D optimization did not converge in " + std::to_string(opts.max_evaluations) +
                                 " evaluations; best x=" + std::to_string(best.x) +
                                 " value=" + std::to_string(best.value));
        }
    };

    // Coarse scan.
    std::vector<double> grid;
    for (double x = opts.lower; x < opts.upper - 1e-12; x += opts.grid_step) grid.push_back(x);
    grid.push_back(opts.upper);
    std::vector<double> vals;
    vals.reserve(grid.size());
    for (double x : grid) vals.push_back(eval(x));
    std::size_t ibest = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (vals[i] > vals[ibest]) ibest = i;
    }
    best.x = grid[ibest];
    best.value = vals[ibest];
    if (!std::isfinite(best.value)) throw NumericalError("1-D optimization: objective is not finite anywhere");

    // Golden section inside the bracket around the best grid point.
    double a = grid[ibest == 0 ? 0 : ibest - 1];
    double b = grid[std::min(ibest + 1, grid.size() - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > opts.width) {
        out_of_budget();
        if (fc >= fd) {  // ties keep the lower half
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    auto consider = [&](double x, double v) {
        if (v > best.value || (v == best.value && x < best.x)) {
            best.x = x;
            best.value = v;
        }
    };
    consider(c, fc);
    consider(d, fd);

    // Newton polish on central differences.
    const double h = opts.fd_step;
    double x = best.x;
    double fx = best.value;
    bool polished = false;
    for (int step = 0; step < opts.newton_steps; ++step) {
        if (evals + 2 > opts.max_evaluations) break;
        const double xl = std::max(opts.lower, x - h);
        const double xu = std::min(opts.upper, x + h);
        const double fl = eval(xl);
        const double fu = eval(xu);
        const double g = (fu - fl) / (xu - xl);
        if (std::abs(g) < opts.gradient_tol) {
            polished = true;
            break;
        }
        if (xl == opts.lower && g < 0.0) break;
        if (xu == opts.upper && g > 0.0) break;
        const double curv = (fu - 2.0 * fx + fl) / (h * h);
        double dx = curv < 0.0 ? -g / curv : std::copysign(opts.width, g);
        dx = std::clamp(dx, -4.0 * opts.width - 4.0 * h, 4.0 * opts.width + 4.0 * h);
        bool accepted = false;
        for (int half = 0; half < 4 && evals < opts.max_evaluations; ++half) {
            const double xn = std::clamp(x + dx, opts.lower, opts.upper);
            const double fn = eval(xn);
            if (fn >= fx) {
                x = xn;
                fx = fn;
                accepted = true;
                break;
            }
            dx *= 0.5;
        }
        if (!accepted) break;
    }
    (void)polished;
    best.x = x;
    best.value = fx;
    best.evaluations = evals;
    best.converged = true;
    best.at_lower = best.x - opts.lower <= opts.width;
    best.at_upper = opts.upper - best.x <= opts.width;
    return best;
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd start,
                             const NelderMeadOptions& opts) {
    const Index n = start.size();
    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), start);
    for (Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += opts.initial_step;
    std::vector<double> fv(simplex.size());
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = eval(simplex[i]);

    std::vector<std::size_t> order(simplex.size());
    bool converged = false;
    while (evals < opts.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t lo = order.front(), hi = order.back(), nh = order[order.size() - 2];
        double xspread = 0.0;
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            xspread = std::max(xspread, (simplex[i] - simplex[lo]).cwiseAbs().maxCoeff());
        }
        if (std::abs(fv[hi] - fv[lo]) <= opts.f_tol && xspread <= opts.x_tol) {
            converged = true;
            break;
        }
        if (std::abs(fv[hi] - fv[lo]) <= opts.f_tol * 1e-6 && fv[lo] <= opts.f_tol) {
            converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i != hi) centroid += simplex[i];
        }
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - simplex[hi]);
        const double fr = eval(xr);
        if (fr < fv[lo]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[hi]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[hi] = xe;
                fv[hi] = fe;
            } else {
                simplex[hi] = xr;
                fv[hi] = fr;
            }
        } else if (fr < fv[nh]) {
            simplex[hi] = xr;
            fv[hi] = fr;
        } else {
            const bool outside = fr < fv[hi];
            const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                               : Eigen::VectorXd(centroid + 0.5 * (simplex[hi] - centroid));
            const double fc = eval(xc);
            if (fc < (outside ? fr : fv[hi])) {
                simplex[hi] = xc;
                fv[hi] = fc;
            } else {
                for (std::size_t i = 0; i < simplex.size(); ++i) {
                    if (i == lo) continue;
                    simplex[i] = simplex[lo] + 0.5 * (simplex[i] - simplex[lo]);
                    fv[i] = eval(simplex[i]);
                }
            }
        }
    }
    std::size_t lo = 0;
    for (std::size_t i = 1; i < simplex.size(); ++i) {
        if (fv[i] < fv[lo]) lo = i;
    }
    return {simplex[lo], fv[lo], evals, converged};
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h) {
    Eigen::VectorXd g(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                           double h) {
    const Index n = x.size();
    Eigen::MatrixXd H(n, n);
    const double f0 = f(x);
    for (Index i = 0; i < n; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
        for (Index j = 0; j < i; ++j) {
            Eigen::VectorXd a = x, b = x, c = x, d = x;
            a(i) += h; a(j) += h;
            b(i) += h; b(j) -= h;
            c(i) -= h; c(j) += h;
            d(i) -= h; d(j) -= h;
            H(i, j) = H(j, i) = (f(a) - f(b) - f(c) + f(d)) / (4.0 * h * h);
        }
    }
    return H;
}

}  // namespace survgam
