#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace fsnn::opt {

// Sum-of-squares objective f(x) = |r(x)|^2 over a box.
struct LeastSquaresProblem {
    std::size_t dimension = 0;
    std::size_t residual_count = 0;
    // Fills r; returns false when the point cannot be evaluated.
    std::function<bool(std::span<const double> x, std::span<double> r)> residuals;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct TracePoint {
    std::size_t evaluation = 0;
    double best = 0.0;
};

struct MinimizeOptions {
    std::size_t budget = 1000;
    // Starting trust-region radius / finite-difference scale.
    double initial_radius = 0.5;
    double final_radius = 1e-6;
    // Stop once f_best drops below this.
    double target_value = 0.0;
    // Value assigned to points whose residuals cannot be evaluated.
    double penalty = 1e18;
    bool record_trace = true;
};

struct MinimizeResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<TracePoint> trace;
};

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Budgeted evaluation with best-so-far bookkeeping. Every optimizer goes
// through this, so the reported point is always the best one evaluated.
class Evaluator {
public:
    Evaluator(const LeastSquaresProblem& problem, const MinimizeOptions& opts) : problem_(problem), opts_(opts) {
        best_.x.assign(problem.dimension, 0.0);
    }

    bool exhausted() const { return used_ >= opts_.budget; }
    std::size_t used() const { return used_; }
    std::size_t remaining() const { return opts_.budget - std::min(opts_.budget, used_); }
    bool target_reached() const { return best_.value <= opts_.target_value; }

    // Returns nullopt when the budget is spent. A failed evaluation yields
    // the penalty value and a zero residual vector.
    std::optional<double> evaluate(const Vec& x, Vec& r) {
        if (exhausted())
            return std::nullopt;
        ++used_;
        r.resize(static_cast<Eigen::Index>(problem_.residual_count));
        bool ok = problem_.residuals({x.data(), static_cast<std::size_t>(x.size())},
                                     {r.data(), static_cast<std::size_t>(r.size())});
        double value = opts_.penalty;
        if (ok) {
            value = r.squaredNorm();
            if (!std::isfinite(value)) {
                ok = false;
                value = opts_.penalty;
            }
        }
        if (!ok)
            r.setZero();
        if (value < best_.value || best_.evaluations == 0) {
            best_.value = value;
            best_.x.assign(x.data(), x.data() + x.size());
        }
        best_.evaluations = used_;
        if (opts_.record_trace)
            best_.trace.push_back({used_, best_.value});
        last_ok_ = ok;
        return value;
    }

    bool last_ok() const { return last_ok_; }

    MinimizeResult finish(bool converged) {
        best_.converged = converged && !exhausted();
        return best_;
    }

private:
    const LeastSquaresProblem& problem_;
    const MinimizeOptions& opts_;
    MinimizeResult best_;
    std::size_t used_ = 0;
    bool last_ok_ = true;
};

class Minimizer {
public:
    virtual ~Minimizer() = default;
    virtual std::string name() const = 0;
    virtual MinimizeResult minimize(const LeastSquaresProblem& problem, std::span<const double> x0,
                                    const MinimizeOptions& opts) const = 0;
};

namespace detail {

inline void check_problem(const LeastSquaresProblem& p, std::span<const double> x0) {
    if (p.dimension == 0 || p.residual_count == 0)
        throw ConfigError("minimize: empty problem");
    if (x0.size() != p.dimension || p.lower.size() != p.dimension || p.upper.size() != p.dimension)
        throw ConfigError("minimize: start point or bounds have the wrong dimension");
    for (std::size_t i = 0; i < p.dimension; ++i)
        if (!(p.lower[i] < p.upper[i]))
            throw ConfigError("minimize: every lower bound must be below its upper bound");
}

inline Vec clamp(const Vec& x, const Vec& lo, const Vec& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

inline Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

// Approximately minimizes g's + 0.5 s'Hs subject to |s| <= radius and
// lo <= s <= hi (componentwise, lo <= 0 <= hi) by truncated conjugate
// gradients with an active set: a variable that reaches its bound is fixed
// there and CG restarts on the remaining ones.
template <typename HessVec>
Vec truncated_cg_box(const Vec& g, HessVec&& hess, double radius, const Vec& lo, const Vec& hi,
                     std::size_t max_iterations) {
    const Eigen::Index n = g.size();
    Vec s = Vec::Zero(n);
    std::vector<char> fixed(static_cast<std::size_t>(n), 0);
    // Variables sitting on a bound with the gradient pushing outward.
    for (Eigen::Index i = 0; i < n; ++i)
        if ((hi[i] <= 0.0 && g[i] < 0.0) || (lo[i] >= 0.0 && g[i] > 0.0))
            fixed[static_cast<std::size_t>(i)] = 1;
    auto mask = [&](Vec& v) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (fixed[static_cast<std::size_t>(i)])
                v[i] = 0.0;
    };

    std::size_t iterations = 0;
    while (iterations < max_iterations) {
        Vec grad = g + hess(s);
        mask(grad);
        Vec dir = -grad;
        double rr = grad.squaredNorm();
        if (rr <= 1e-30 * std::max(1.0, g.squaredNorm()))
            return s;
        bool restart = false;
        while (iterations < max_iterations) {
            ++iterations;
            Vec hd = hess(dir);
            mask(hd);
            const double curv = dir.dot(hd);
            // Largest step along dir that stays inside the ball.
            const double sd = s.dot(dir), dd = dir.squaredNorm(), ss = s.squaredNorm();
            const double disc = std::max(0.0, sd * sd + dd * (radius * radius - ss));
            const double to_ball = (std::sqrt(disc) - sd) / dd;
            // Largest step inside the box, and the variable that limits it.
            double to_box = std::numeric_limits<double>::infinity();
            Eigen::Index blocking = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (dir[i] > 0.0 && (hi[i] - s[i]) / dir[i] < to_box) {
                    to_box = (hi[i] - s[i]) / dir[i];
                    blocking = i;
                } else if (dir[i] < 0.0 && (lo[i] - s[i]) / dir[i] < to_box) {
                    to_box = (lo[i] - s[i]) / dir[i];
                    blocking = i;
                }
            }
            const double alpha_cg = curv > 0.0 ? rr / curv : std::numeric_limits<double>::infinity();
            const double alpha = std::min({alpha_cg, to_ball, to_box});
            s += alpha * dir;
            if (alpha == to_ball && alpha <= to_box)
                return s;
            if (alpha == to_box) {
                fixed[static_cast<std::size_t>(blocking)] = 1;
                s[blocking] = dir[blocking] > 0.0 ? hi[blocking] : lo[blocking];
                restart = true;
                break;
            }
            grad += alpha * hd;
            mask(grad);
            const double rr_new = grad.squaredNorm();
            if (rr_new <= 1e-20 * std::max(1.0, g.squaredNorm()))
                return s;
            dir = -grad + (rr_new / rr) * dir;
            rr = rr_new;
        }
        if (!restart)
            break;
    }
    return s;
}

} // namespace detail

// Derivative-free trust-region method for least squares. Each residual is
// modelled by linear interpolation over n + 1 points, which gives the
// quadratic Gauss-Newton model |r + J s|^2 of the payoff. One new point
// per iteration replaces an old one (least-Lagrange-value rule), the
// interpolation system is kept as an explicit inverse with rank-one
// updates, and the radius follows a two-level (delta, rho) schedule.
class TrustRegionInterpolation final : public Minimizer {
public:
    std::string name() const override { return "trust-region-dfo"; }

    MinimizeResult minimize(const LeastSquaresProblem& problem, std::span<const double> x0_span,
                            const MinimizeOptions& opts) const override {
        detail::check_problem(problem, x0_span);
        Evaluator ev(problem, opts);
        const auto n = static_cast<Eigen::Index>(problem.dimension);
        const auto m = static_cast<Eigen::Index>(problem.residual_count);
        const Vec lower = detail::to_vec(problem.lower);
        const Vec upper = detail::to_vec(problem.upper);
        const Vec x0 = detail::clamp(Eigen::Map<const Vec>(x0_span.data(), n), lower, upper);

        // Interpolation set, stored as offsets from a base point.
        Vec base = x0;
        Mat offsets(n + 1, n);             // row i: y_i - base
        Mat values(n + 1, m);              // row i: r(y_i)
        Vec fvals(n + 1);
        Vec r(m);

        auto first = ev.evaluate(x0, r);
        if (!first)
            return ev.finish(false);
        offsets.row(0).setZero();
        values.row(0) = r.transpose();
        fvals[0] = *first;

        double rho = opts.initial_radius;
        for (Eigen::Index i = 0; i < n; ++i) {
            // Step inward when the start sits on the upper bound.
            double step = x0[i] + rho <= upper[i] ? rho : -rho;
            if (x0[i] + step < lower[i])
                step = (upper[i] - x0[i] > x0[i] - lower[i]) ? upper[i] - x0[i] : lower[i] - x0[i];
            Vec y = x0;
            y[i] += step;
            auto f = ev.evaluate(y, r);
            if (!f)
                return ev.finish(false);
            offsets.row(i + 1).setZero();
            offsets(i + 1, i) = step;
            values.row(i + 1) = r.transpose();
            fvals[i + 1] = *f;
        }

        Mat w(n + 1, n + 1);
        Mat winv, coeffs;  // coeffs = winv * values: row 0 constant, rows 1.. J^T
        Mat hess;          // J^T J
        auto rebuild = [&] {
            w.col(0).setOnes();
            w.rightCols(n) = offsets;
            winv = w.partialPivLu().inverse();
            coeffs = winv * values;
            const auto jt = coeffs.bottomRows(n);
            hess = jt * jt.transpose();
        };
        rebuild();

        Eigen::Index kopt = 0;
        fvals.minCoeff(&kopt);
        double delta = rho;
        std::size_t since_rebuild = 0;
        bool converged = false;

        auto model_residual_at = [&](const Vec& offset) -> Vec {
            return coeffs.row(0).transpose() + coeffs.bottomRows(n).transpose() * offset;
        };

        // Replaces point t with (offset, residual, value); updates the
        // inverse, the model coefficients and J^T J by rank-one terms.
        auto replace = [&](Eigen::Index t, const Vec& offset, const Vec& res, double fval) {
            Vec row(n + 1);
            row[0] = 1.0;
            row.tail(n) = offset;
            const Vec u = row - w.row(t).transpose();
            const Vec winv_t = winv.col(t);
            const Vec ut_winv = u.transpose() * winv;
            const double denom = 1.0 + ut_winv[t];
            winv.noalias() -= (winv_t / denom) * ut_winv.transpose();
            w.row(t) = row.transpose();

            const Vec delta_r = res - model_residual_at(offset);
            const Vec lag = winv.col(t);
            // J^T gains lag.tail(n) * delta_r^T.
            const Vec jt_dr = coeffs.bottomRows(n) * delta_r;
            const Vec ell = lag.tail(n);
            hess.noalias() += ell * jt_dr.transpose() + jt_dr * ell.transpose() + delta_r.squaredNorm() * ell * ell.transpose();
            coeffs.noalias() += lag * delta_r.transpose();

            offsets.row(t) = offset.transpose();
            values.row(t) = res.transpose();
            fvals[t] = fval;
            if (++since_rebuild >= static_cast<std::size_t>(n)) {
                rebuild();
                since_rebuild = 0;
            }
        };

        auto lagrange_values = [&](const Vec& offset) -> Vec {
            Vec row(n + 1);
            row[0] = 1.0;
            row.tail(n) = offset;
            return winv.transpose() * row;
        };

        auto choose_replacement = [&](const Vec& offset) -> Eigen::Index {
            const Vec lag = lagrange_values(offset);
            Eigen::Index best = -1;
            double best_score = -1.0;
            for (Eigen::Index i = 0; i <= n; ++i) {
                if (i == kopt)
                    continue;
                const double dist2 = (offsets.row(i) - offsets.row(kopt)).squaredNorm();
                const double score = std::abs(lag[i]) * std::max(1.0, dist2 / (delta * delta));
                if (score > best_score) {
                    best_score = score;
                    best = i;
                }
            }
            return best;
        };

        // Moves the point farthest from the incumbent to where its
        // Lagrange polynomial is largest inside the trust region.
        auto improve_geometry = [&](double radius) -> bool {
            Eigen::Index far = -1;
            double far_d = 0.0;
            for (Eigen::Index i = 0; i <= n; ++i) {
                if (i == kopt)
                    continue;
                const double d = (offsets.row(i) - offsets.row(kopt)).norm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < 0 || far_d <= 2.0 * radius)
                return false;
            const Vec grad = winv.col(far).tail(n);
            const double gn = grad.norm();
            const Vec xk = base + offsets.row(kopt).transpose();
            Vec cand_plus = detail::clamp(xk + (radius / std::max(gn, 1e-300)) * grad, lower, upper);
            Vec cand_minus = detail::clamp(xk - (radius / std::max(gn, 1e-300)) * grad, lower, upper);
            const double lp = std::abs(lagrange_values(cand_plus - base)[far]);
            const double lm = std::abs(lagrange_values(cand_minus - base)[far]);
            const Vec y = lp >= lm ? cand_plus : cand_minus;
            if (std::max(lp, lm) < 1e-10)
                return false;
            Vec res(m);
            auto f = ev.evaluate(y, res);
            if (!f)
                return false;
            replace(far, y - base, res, *f);
            if (*f < fvals[kopt])
                kopt = far;
            return true;
        };

        while (!ev.exhausted() && !ev.target_reached()) {
            // Keep offsets small relative to the radius.
            const Vec xk_off = offsets.row(kopt).transpose();
            if (xk_off.squaredNorm() > 1e3 * delta * delta) {
                base += xk_off;
                offsets.rowwise() -= xk_off.transpose();
                rebuild();
                since_rebuild = 0;
                continue;
            }

            const Vec xk = base + xk_off;
            const Vec rk = values.row(kopt).transpose();
            const auto jt = coeffs.bottomRows(n);
            const Vec g = jt * rk;
            const Vec step_lo = lower - xk;
            const Vec step_hi = upper - xk;
            const Vec s = detail::truncated_cg_box(
                g, [&](const Vec& v) -> Vec { return hess * v; }, delta, step_lo, step_hi,
                static_cast<std::size_t>(std::min<Eigen::Index>(n, 200)));
            const double snorm = s.norm();
            const double predicted = -(2.0 * g.dot(s) + s.dot(hess * s));

            if (snorm < 0.5 * rho || !(predicted > 0.0)) {
                // Step too short to be informative: fix geometry or shrink.
                if (improve_geometry(rho))
                    continue;
                if (rho <= opts.final_radius) {
                    converged = true;
                    break;
                }
                rho = std::max(opts.final_radius, 0.1 * rho);
                delta = std::max(0.5 * delta, rho);
                continue;
            }

            const Vec y = detail::clamp(xk + s, lower, upper);
            Vec res(m);
            auto fnew = ev.evaluate(y, res);
            if (!fnew)
                break;
            const double actual = fvals[kopt] - *fnew;
            const double ratio = actual / predicted;

            if (ratio < 0.1)
                delta = std::max(rho, 0.5 * std::min(delta, snorm));
            else if (ratio > 0.7)
                delta = std::max(delta, 2.0 * snorm);
            else
                delta = std::max(rho, std::max(0.5 * delta, snorm));

            const Eigen::Index t = choose_replacement(y - base);
            if (t >= 0)
                replace(t, y - base, res, *fnew);
            if (t >= 0 && *fnew < fvals[kopt])
                kopt = t;

            if (ratio < 0.1 && !improve_geometry(delta) && delta <= rho) {
                if (rho <= opts.final_radius) {
                    converged = true;
                    break;
                }
                rho = std::max(opts.final_radius, 0.1 * rho);
                delta = std::max(0.5 * delta, rho);
            }
        }
        return ev.finish(converged || ev.target_reached());
    }
};

// Levenberg-Marquardt with a forward-difference Jacobian (backward at the
// upper bound). Costs n evaluations per Jacobian.
class FiniteDifferenceLevenbergMarquardt final : public Minimizer {
public:
    std::string name() const override { return "fd-levenberg-marquardt"; }

    MinimizeResult minimize(const LeastSquaresProblem& problem, std::span<const double> x0_span,
                            const MinimizeOptions& opts) const override {
        detail::check_problem(problem, x0_span);
        Evaluator ev(problem, opts);
        const auto n = static_cast<Eigen::Index>(problem.dimension);
        const auto m = static_cast<Eigen::Index>(problem.residual_count);
        const Vec lower = detail::to_vec(problem.lower);
        const Vec upper = detail::to_vec(problem.upper);
        Vec x = detail::clamp(Eigen::Map<const Vec>(x0_span.data(), n), lower, upper);

        Vec r(m);
        auto f0 = ev.evaluate(x, r);
        if (!f0)
            return ev.finish(false);
        double f = *f0;
        double lambda = 1e-2;
        Mat jac(m, n);
        Vec rp(m);
        bool converged = false;

        while (!ev.exhausted() && !ev.target_reached()) {
            for (Eigen::Index j = 0; j < n; ++j) {
                double h = 1e-7 * std::max(1.0, std::abs(x[j]));
                if (x[j] + h > upper[j])
                    h = -h;
                Vec xp = x;
                xp[j] += h;
                if (!ev.evaluate(xp, rp))
                    return ev.finish(false);
                jac.col(j) = ev.last_ok() ? Vec((rp - r) / h) : Vec::Zero(m);
            }
            const Mat a = jac.transpose() * jac;
            const Vec g = jac.transpose() * r;
            if (g.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, f)) {
                converged = true;
                break;
            }

            bool improved = false;
            for (int attempt = 0; attempt < 12 && !ev.exhausted(); ++attempt) {
                Mat b = a;
                b.diagonal().array() += lambda * (1.0 + a.diagonal().array());
                const Vec step = b.ldlt().solve(-g);
                const Vec xn = detail::clamp(x + step, lower, upper);
                if ((xn - x).norm() <= opts.final_radius * (1.0 + x.norm())) {
                    converged = true;
                    break;
                }
                auto fn = ev.evaluate(xn, rp);
                if (!fn)
                    break;
                if (*fn < f) {
                    const double rel = (f - *fn) / std::max(f, 1e-300);
                    x = xn;
                    r = rp;
                    f = *fn;
                    lambda = std::max(lambda / 3.0, 1e-12);
                    improved = true;
                    if (rel < 1e-12)
                        converged = true;
                    break;
                }
                lambda *= 4.0;
            }
            if (converged || !improved)
                break;
        }
        return ev.finish(converged || ev.target_reached());
    }
};

// Projected steepest descent on a forward-difference gradient with
// backtracking (Armijo) line search.
class FiniteDifferenceGradientDescent final : public Minimizer {
public:
    std::string name() const override { return "fd-gradient-descent"; }

    MinimizeResult minimize(const LeastSquaresProblem& problem, std::span<const double> x0_span,
                            const MinimizeOptions& opts) const override {
        detail::check_problem(problem, x0_span);
        Evaluator ev(problem, opts);
        const auto n = static_cast<Eigen::Index>(problem.dimension);
        const auto m = static_cast<Eigen::Index>(problem.residual_count);
        const Vec lower = detail::to_vec(problem.lower);
        const Vec upper = detail::to_vec(problem.upper);
        Vec x = detail::clamp(Eigen::Map<const Vec>(x0_span.data(), n), lower, upper);

        Vec r(m), rp(m);
        auto f0 = ev.evaluate(x, r);
        if (!f0)
            return ev.finish(false);
        double f = *f0;
        double step = opts.initial_radius;
        bool converged = false;

        while (!ev.exhausted() && !ev.target_reached()) {
            Vec grad(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                double h = 1e-7 * std::max(1.0, std::abs(x[j]));
                if (x[j] + h > upper[j])
                    h = -h;
                Vec xp = x;
                xp[j] += h;
                auto fp = ev.evaluate(xp, rp);
                if (!fp)
                    return ev.finish(false);
                grad[j] = (*fp - f) / h;
            }
            const double gnorm = grad.norm();
            if (gnorm <= 1e-12 * std::max(1.0, f)) {
                converged = true;
                break;
            }
            const Vec dir = -grad / gnorm;
            bool accepted = false;
            while (!ev.exhausted()) {
                const Vec xn = detail::clamp(x + step * dir, lower, upper);
                const double moved = (xn - x).norm();
                if (moved <= opts.final_radius) {
                    converged = true;
                    break;
                }
                auto fn = ev.evaluate(xn, rp);
                if (!fn)
                    break;
                if (*fn <= f - 1e-4 * gnorm * moved) {
                    x = xn;
                    f = *fn;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted)
                break;
        }
        return ev.finish(converged || ev.target_reached());
    }
};

inline const std::vector<std::string>& minimizer_names() {
    static const std::vector<std::string> names = {"trust-region-dfo", "fd-levenberg-marquardt",
                                                   "fd-gradient-descent"};
    return names;
}

inline std::unique_ptr<Minimizer> make_minimizer(const std::string& name) {
    if (name == "trust-region-dfo")
        return std::make_unique<TrustRegionInterpolation>();
    if (name == "fd-levenberg-marquardt")
        return std::make_unique<FiniteDifferenceLevenbergMarquardt>();
    if (name == "fd-gradient-descent")
        return std::make_unique<FiniteDifferenceGradientDescent>();
    throw ConfigError("unknown optimizer '" + name + "'");
}

} // namespace fsnn::opt
