#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swiptrelay/core.hpp"

// Self-contained numerical solvers: a log-barrier interior-point method for
// concave quadratic objectives over chained disk constraints, and dual
// ascent (projected subgradient or ellipsoid) for Lagrangian dual problems.

namespace swiptrelay {

/// One concave quadratic term over a slot increment:
///   value(dx, dy) = r0 - mu*(dx^2 + dy^2) - gx*dx - gy*dy,  mu >= 0.
struct ConcaveSlotQuad {
    double r0 = 0.0;
    double mu = 0.0;
    double gx = 0.0;
    double gy = 0.0;

    double value(double dx, double dy) const {
        return r0 - mu * (dx * dx + dy * dy) - gx * dx - gy * dy;
    }
};

/// Per-slot objective: a single quadratic, or the pointwise minimum of
/// several (handled through an epigraph variable inside the solver).
struct SlotObjective {
    std::vector<ConcaveSlotQuad> branches;

    double value(double dx, double dy) const {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& b : branches) v = std::min(v, b.value(dx, dy));
        return v;
    }
};

inline double objective_value(const std::vector<SlotObjective>& obj,
                              const std::vector<Vec2>& increments) {
    double sum = 0.0;
    for (std::size_t n = 0; n < obj.size(); ++n)
        sum += obj[n].value(increments[n].x, increments[n].y);
    return sum;
}

/// Mobility constraints on per-slot increments around an anchoring
/// trajectory: start link, consecutive links, end link, all of radius V,
/// plus a per-slot trust disk |increment_n| <= V.
struct DiskChainConstraintSet {
    Vec2 start;                 // fixed start anchor
    Vec2 end;                   // fixed end anchor
    std::vector<Vec2> anchors;  // current trajectory points q_1..q_N
    double radius = 0.0;        // V

    std::size_t size() const { return anchors.size(); }

    /// Worst squared-length violation over all links and trust disks.
    double max_violation(const std::vector<Vec2>& inc) const {
        const double v2 = radius * radius;
        auto at = [&](std::size_t i) { return anchors[i] + inc[i]; };
        double worst = norm2(at(0) - start) - v2;
        for (std::size_t i = 0; i + 1 < size(); ++i)
            worst = std::max(worst, norm2(at(i + 1) - at(i)) - v2);
        worst = std::max(worst, norm2(end - at(size() - 1)) - v2);
        for (std::size_t i = 0; i < size(); ++i)
            worst = std::max(worst, norm2(inc[i]) - v2);
        return worst;
    }
};

struct SolverReport {
    double objective = 0.0;
    int iterations = 0;             // total Newton steps
    double max_violation = 0.0;     // over all constraints, <= 0 when feasible
    bool success = false;
    std::string reason;
    std::vector<double> stage_objectives;  // objective after each barrier stage
};

struct QcqpOptions {
    double barrier_t0 = 1.0;
    double barrier_mult = 10.0;
    double newton_tol = 1e-9;
    double gap_tol = 1e-8;  // stop when constraint_count / t < gap_tol
    int max_newton_per_stage = 80;
    int max_stages = 60;
};

namespace detail {

// Internal flattened form of the QCQP. Variable layout: increments
// (dx_1, dy_1, ..., dx_N, dy_N) followed by one epigraph variable per
// slot whose objective has more than one branch.
struct QcqpWork {
    const std::vector<SlotObjective>& obj;
    const DiskChainConstraintSet& cons;
    std::vector<int> epi_index;  // slot -> epigraph var index or -1
    int dim = 0;

    explicit QcqpWork(const std::vector<SlotObjective>& o, const DiskChainConstraintSet& c)
        : obj(o), cons(c) {
        const int n = static_cast<int>(c.size());
        epi_index.assign(n, -1);
        dim = 2 * n;
        for (int i = 0; i < n; ++i) {
            if (obj[i].branches.size() > 1) epi_index[i] = dim++;
        }
    }

    // Objective to MAXIMIZE as a function of the flat variable vector.
    double objective(const Eigen::VectorXd& z) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < cons.size(); ++i) {
            if (epi_index[i] >= 0)
                sum += z[epi_index[i]];
            else
                sum += obj[i].branches[0].value(z[2 * i], z[2 * i + 1]);
        }
        return sum;
    }

    // -objective gradient/Hessian contribution (the minimized function).
    void neg_obj_derivatives(const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                             std::vector<Eigen::Triplet<double>>& hess) const {
        for (std::size_t i = 0; i < cons.size(); ++i) {
            if (epi_index[i] >= 0) {
                grad[epi_index[i]] += -1.0;
            } else {
                const auto& b = obj[i].branches[0];
                const int ix = static_cast<int>(2 * i), iy = ix + 1;
                grad[ix] += 2.0 * b.mu * z[ix] + b.gx;
                grad[iy] += 2.0 * b.mu * z[iy] + b.gy;
                hess.emplace_back(ix, ix, 2.0 * b.mu);
                hess.emplace_back(iy, iy, 2.0 * b.mu);
            }
        }
    }

    // Evaluates every inequality constraint g(z) <= 0; when derivatives are
    // requested, accumulates the barrier terms for -sum log(-g).
    template <typename Visit>
    void visit_constraints(const Eigen::VectorXd& z, Visit&& visit) const {
        const double v2 = cons.radius * cons.radius;
        const int n = static_cast<int>(cons.size());
        auto px = [&](int i) { return cons.anchors[i].x + z[2 * i]; };
        auto py = [&](int i) { return cons.anchors[i].y + z[2 * i + 1]; };

        // chain links: (a, b) with variable indices (ia, ib); -1 marks an anchor
        auto link = [&](double ax, double ay, int ia, double bx, double by, int ib) {
            const double dx = bx - ax, dy = by - ay;
            const double g = dx * dx + dy * dy - v2;
            // gradient: d/d(b) = 2*(dx,dy), d/d(a) = -2*(dx,dy)
            visit(g, [&](Eigen::VectorXd& gr, double w) {
                if (ib >= 0) { gr[2 * ib] += w * 2.0 * dx; gr[2 * ib + 1] += w * 2.0 * dy; }
                if (ia >= 0) { gr[2 * ia] -= w * 2.0 * dx; gr[2 * ia + 1] -= w * 2.0 * dy; }
            }, [&](std::vector<Eigen::Triplet<double>>& h, double w) {
                // constant Hessian 2*I on the involved coordinates
                for (int c = 0; c < 2; ++c) {
                    if (ib >= 0) h.emplace_back(2 * ib + c, 2 * ib + c, 2.0 * w);
                    if (ia >= 0) h.emplace_back(2 * ia + c, 2 * ia + c, 2.0 * w);
                    if (ia >= 0 && ib >= 0) {
                        h.emplace_back(2 * ia + c, 2 * ib + c, -2.0 * w);
                        h.emplace_back(2 * ib + c, 2 * ia + c, -2.0 * w);
                    }
                }
            });
        };

        link(cons.start.x, cons.start.y, -1, px(0), py(0), 0);
        for (int i = 0; i + 1 < n; ++i) link(px(i), py(i), i, px(i + 1), py(i + 1), i + 1);
        link(px(n - 1), py(n - 1), n - 1, cons.end.x, cons.end.y, -1);

        for (int i = 0; i < n; ++i) {  // trust disks on raw increments
            const double dx = z[2 * i], dy = z[2 * i + 1];
            const double g = dx * dx + dy * dy - v2;
            visit(g, [&](Eigen::VectorXd& gr, double w) {
                gr[2 * i] += w * 2.0 * dx;
                gr[2 * i + 1] += w * 2.0 * dy;
            }, [&](std::vector<Eigen::Triplet<double>>& h, double w) {
                h.emplace_back(2 * i, 2 * i, 2.0 * w);
                h.emplace_back(2 * i + 1, 2 * i + 1, 2.0 * w);
            });
        }

        for (int i = 0; i < n; ++i) {  // epigraph: t_i <= branch value
            if (epi_index[i] < 0) continue;
            const int it = epi_index[i];
            const double dx = z[2 * i], dy = z[2 * i + 1];
            for (const auto& b : obj[i].branches) {
                const double g = z[it] - b.value(dx, dy);
                visit(g, [&](Eigen::VectorXd& gr, double w) {
                    gr[it] += w;
                    gr[2 * i] += w * (2.0 * b.mu * dx + b.gx);
                    gr[2 * i + 1] += w * (2.0 * b.mu * dy + b.gy);
                }, [&](std::vector<Eigen::Triplet<double>>& h, double w) {
                    h.emplace_back(2 * i, 2 * i, 2.0 * b.mu * w);
                    h.emplace_back(2 * i + 1, 2 * i + 1, 2.0 * b.mu * w);
                });
            }
        }
    }

    int constraint_count() const {
        int m = static_cast<int>(cons.size()) * 2 + 1;  // links + trust disks
        for (std::size_t i = 0; i < cons.size(); ++i)
            if (epi_index[i] >= 0) m += static_cast<int>(obj[i].branches.size());
        return m;
    }

    double worst_constraint(const Eigen::VectorXd& z) const {
        double worst = -std::numeric_limits<double>::infinity();
        visit_constraints(z, [&](double g, auto&&, auto&&) { worst = std::max(worst, g); });
        return worst;
    }

    // Barrier-augmented function value: t * (-objective) - sum log(-g).
    double barrier_value(const Eigen::VectorXd& z, double t) const {
        double phi = 0.0;
        bool ok = true;
        visit_constraints(z, [&](double g, auto&&, auto&&) {
            if (g >= 0.0) ok = false;
            else phi -= std::log(-g);
        });
        if (!ok) return std::numeric_limits<double>::infinity();
        return -t * objective(z) + phi;
    }

    void barrier_derivatives(const Eigen::VectorXd& z, double t, Eigen::VectorXd& grad,
                             Eigen::SparseMatrix<double>& hess) const {
        grad.setZero(dim);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(dim) * 16);

        neg_obj_derivatives(z, grad, trip);
        grad *= t;
        for (auto& tr : trip)
            tr = Eigen::Triplet<double>(tr.row(), tr.col(), tr.value() * t);

        // barrier: sum over constraints of [grad g / (-g)] and
        // [grad g grad g^T / g^2 + hess g / (-g)]
        Eigen::VectorXd cg = Eigen::VectorXd::Zero(dim);
        std::vector<int> nz;
        visit_constraints(z, [&](double g, auto&& add_grad, auto&& add_hess) {
            const double inv = 1.0 / (-g);
            cg.setZero();
            add_grad(cg, 1.0);
            nz.clear();
            for (int r = 0; r < dim; ++r)
                if (cg[r] != 0.0) nz.push_back(r);
            for (int r : nz) grad[r] += inv * cg[r];
            add_hess(trip, inv);
            for (int r : nz)
                for (int c : nz) trip.emplace_back(r, c, inv * inv * cg[r] * cg[c]);
        });
        hess.resize(dim, dim);
        hess.setFromTriplets(trip.begin(), trip.end());
    }
};

}  // namespace detail

/// Strictly feasible starting increments: blend the anchoring trajectory a
/// small step toward the evenly spaced straight chain between the anchors
/// (whose links are strictly shorter than V for any validated scenario).
inline std::vector<Vec2> interior_start(const DiskChainConstraintSet& cons, double blend = 1e-2) {
    const std::size_t n = cons.size();
    std::vector<Vec2> inc(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1) / static_cast<double>(n + 1);
        const Vec2 straight = cons.start + t * (cons.end - cons.start);
        inc[i] = blend * (straight - cons.anchors[i]);
    }
    return inc;
}

/// Maximizes sum of per-slot concave quadratics (or min-of-quadratics) over
/// the disk-chain constraints via a feasible-start log-barrier method.
/// Requires the zero increment to be feasible (the anchors themselves).
inline std::pair<std::vector<Vec2>, SolverReport> solve_concave_qcqp(
    const std::vector<SlotObjective>& objective, const DiskChainConstraintSet& cons,
    const QcqpOptions& opts = {}) {
    const std::size_t n = cons.size();
    if (objective.size() != n) throw std::invalid_argument("objective/constraint size mismatch");
    for (const auto& so : objective)
        if (so.branches.empty()) throw std::invalid_argument("slot objective has no branches");

    detail::QcqpWork work(objective, cons);
    SolverReport rep;

    // start: blend toward the interior chain, then set epigraph vars with slack
    Eigen::VectorXd z = Eigen::VectorXd::Zero(work.dim);
    {
        std::vector<Vec2> inc = interior_start(cons);
        double blend = 1.0;
        auto load = [&](double scale) {
            for (std::size_t i = 0; i < n; ++i) {
                z[2 * i] = scale * inc[i].x;
                z[2 * i + 1] = scale * inc[i].y;
            }
        };
        load(blend);
        // shrink if numerically tight (degenerate geometry)
        for (int tries = 0; tries < 60; ++tries) {
            bool strict = true;
            double worst = -1.0;
            const double v2 = cons.radius * cons.radius;
            std::vector<Vec2> pts(n);
            for (std::size_t i = 0; i < n; ++i)
                pts[i] = cons.anchors[i] + Vec2{z[2 * i], z[2 * i + 1]};
            worst = std::max(worst, norm2(pts[0] - cons.start) - v2);
            for (std::size_t i = 0; i + 1 < n; ++i)
                worst = std::max(worst, norm2(pts[i + 1] - pts[i]) - v2);
            worst = std::max(worst, norm2(cons.end - pts[n - 1]) - v2);
            for (std::size_t i = 0; i < n; ++i)
                worst = std::max(worst, norm2(Vec2{z[2 * i], z[2 * i + 1]}) - v2);
            strict = worst < -1e-12 * std::max(1.0, v2);
            if (strict) break;
            blend *= 0.5;
            load(blend);
            if (tries == 59) {
                rep.reason = "no strictly feasible start";
                return {std::vector<Vec2>(n), rep};
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (work.epi_index[i] < 0) continue;
            const double v = objective[i].value(z[2 * i], z[2 * i + 1]);
            z[work.epi_index[i]] = v - std::max(1e-6, 1e-3 * std::abs(v));
        }
    }

    const int m = work.constraint_count();
    double t = opts.barrier_t0;
    Eigen::VectorXd grad(work.dim);
    Eigen::SparseMatrix<double> hess(work.dim, work.dim);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol;

    for (int stage = 0; stage < opts.max_stages; ++stage) {
        for (int it = 0; it < opts.max_newton_per_stage; ++it) {
            work.barrier_derivatives(z, t, grad, hess);
            chol.compute(hess);
            if (chol.info() != Eigen::Success) {
                rep.reason = "barrier Hessian factorization failed";
                rep.max_violation = work.worst_constraint(z);
                std::vector<Vec2> inc(n);
                for (std::size_t i = 0; i < n; ++i) inc[i] = {z[2 * i], z[2 * i + 1]};
                rep.objective = work.objective(z);
                return {inc, rep};
            }
            Eigen::VectorXd step = chol.solve(-grad);
            const double decrement2 = -grad.dot(step);
            ++rep.iterations;
            if (decrement2 * 0.5 < opts.newton_tol) break;

            // backtracking line search keeping strict feasibility
            const double f0 = work.barrier_value(z, t);
            double alpha = 1.0;
            for (int ls = 0; ls < 60; ++ls) {
                const double f1 = work.barrier_value(z + alpha * step, t);
                if (f1 <= f0 + 0.25 * alpha * grad.dot(step)) break;
                alpha *= 0.5;
                if (ls == 59) alpha = 0.0;
            }
            if (alpha == 0.0) break;
            z += alpha * step;
        }
        rep.stage_objectives.push_back(work.objective(z));
        if (static_cast<double>(m) / t < opts.gap_tol) {
            rep.success = true;
            rep.reason = "duality gap below tolerance";
            break;
        }
        t *= opts.barrier_mult;
        if (stage == opts.max_stages - 1) rep.reason = "barrier stage cap reached";
    }

    rep.objective = work.objective(z);
    rep.max_violation = work.worst_constraint(z);
    if (rep.max_violation > 1e-6) {
        rep.success = false;
        rep.reason = "constraint violation above tolerance";
    }
    std::vector<Vec2> inc(n);
    for (std::size_t i = 0; i < n; ++i) inc[i] = {z[2 * i], z[2 * i + 1]};
    return {inc, rep};
}

// ---------------------------------------------------------------------------
// Dual ascent
// ---------------------------------------------------------------------------

/// Inner evaluation at fixed duals: the dual function value and one
/// subgradient. The caller keeps whatever primal state it wants.
struct InnerEval {
    double dual_value = 0.0;
    std::vector<double> subgradient;
};

enum class DualScheme { Subgradient, Ellipsoid };

struct DualAscentOptions {
    DualScheme scheme = DualScheme::Subgradient;
    double step0 = 0.5;          // s_k = step0 / sqrt(k), scaled by |d|
    double tol = 1e-6;           // running-best improvement tolerance
    int patience = 100;          // iterations without improvement before stop
    int max_iter = 5000;
    double ellipsoid_radius = 10.0;
};

struct DualAscentReport {
    double best_value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::string reason;
};

/// Minimizes a convex dual function over a box via projected subgradient
/// with diminishing steps, or via the ellipsoid method (bisection when
/// one-dimensional). Returns the best iterate found.
template <typename Eval>
inline std::pair<std::vector<double>, DualAscentReport> dual_ascent(
    Eval&& evaluate, std::vector<double> init, const std::vector<double>& lo,
    const std::vector<double>& hi, const DualAscentOptions& opts = {}) {
    const std::size_t dim = init.size();
    if (lo.size() != dim || hi.size() != dim) throw std::invalid_argument("dual box size mismatch");
    auto project = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < dim; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    };
    project(init);

    DualAscentReport rep;
    std::vector<double> best = init;
    auto consider = [&](const std::vector<double>& x, double value) {
        if (value < rep.best_value) {
            rep.best_value = value;
            best = x;
            return true;
        }
        return false;
    };

    if (opts.scheme == DualScheme::Subgradient) {
        std::vector<double> x = init;
        int since_improve = 0;
        double improve_mark = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= opts.max_iter; ++k) {
            const InnerEval ev = evaluate(x);
            ++rep.iterations;
            consider(x, ev.dual_value);
            if (rep.best_value < improve_mark - opts.tol) {
                improve_mark = rep.best_value;
                since_improve = 0;
            } else if (++since_improve >= opts.patience) {
                rep.converged = true;
                rep.reason = "no best-value improvement within patience window";
                break;
            }
            double nrm = 0.0;
            for (double d : ev.subgradient) nrm += d * d;
            nrm = std::sqrt(nrm);
            if (nrm < 1e-15) {
                rep.converged = true;
                rep.reason = "zero subgradient";
                break;
            }
            const double step = opts.step0 / (nrm * std::sqrt(static_cast<double>(k)));
            for (std::size_t i = 0; i < dim; ++i) x[i] -= step * ev.subgradient[i];
            project(x);
        }
        if (!rep.converged) rep.reason = "iteration cap reached";
        return {best, rep};
    }

    // Ellipsoid scheme. One dimension degenerates to bisection on the box
    // intersected with the initial ball.
    if (dim == 1) {
        double a = std::max(lo[0], init[0] - opts.ellipsoid_radius);
        double b = std::min(hi[0], init[0] + opts.ellipsoid_radius);
        for (int k = 0; k < opts.max_iter && (b - a) > opts.tol * 1e-3; ++k) {
            const double mid = 0.5 * (a + b);
            const InnerEval ev = evaluate({mid});
            ++rep.iterations;
            consider({mid}, ev.dual_value);
            if (ev.subgradient[0] > 0.0)
                b = mid;
            else
                a = mid;
        }
        rep.converged = true;
        rep.reason = "interval collapsed";
        return {best, rep};
    }

    const auto nd = static_cast<double>(dim);
    Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(init.data(), static_cast<long>(dim));
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(static_cast<long>(dim), static_cast<long>(dim)) *
                        (opts.ellipsoid_radius * opts.ellipsoid_radius);
    for (int k = 0; k < opts.max_iter; ++k) {
        Eigen::VectorXd d(static_cast<long>(dim));
        bool feasibility_cut = false;
        for (std::size_t i = 0; i < dim; ++i) {
            if (x[static_cast<long>(i)] < lo[i]) {
                d.setZero();
                d[static_cast<long>(i)] = -1.0;
                feasibility_cut = true;
                break;
            }
            if (x[static_cast<long>(i)] > hi[i]) {
                d.setZero();
                d[static_cast<long>(i)] = 1.0;
                feasibility_cut = true;
                break;
            }
        }
        if (!feasibility_cut) {
            std::vector<double> xv(x.data(), x.data() + dim);
            const InnerEval ev = evaluate(xv);
            ++rep.iterations;
            consider(xv, ev.dual_value);
            for (std::size_t i = 0; i < dim; ++i) d[static_cast<long>(i)] = ev.subgradient[i];
            if (d.norm() < 1e-15) {
                rep.converged = true;
                rep.reason = "zero subgradient";
                break;
            }
        }
        const double dpd = d.dot(P * d);
        if (dpd <= 0.0 || std::sqrt(dpd) < opts.tol * 1e-3) {
            rep.converged = true;
            rep.reason = "ellipsoid collapsed";
            break;
        }
        const Eigen::VectorXd pd = P * d / std::sqrt(dpd);
        x -= pd / (nd + 1.0);
        P = (nd * nd / (nd * nd - 1.0)) *
            (P - (2.0 / (nd + 1.0)) * (pd * pd.transpose()));
        P = 0.5 * (P + P.transpose());
    }
    if (!rep.converged) rep.reason = "iteration cap reached";
    return {best, rep};
}

}  // namespace swiptrelay
