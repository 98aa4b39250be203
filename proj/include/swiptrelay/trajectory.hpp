#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "swiptrelay/core.hpp"
#include "swiptrelay/solvers.hpp"

// Fixed-profile trajectory optimization by successive convex approximation:
// each relay rate is lower-bounded by a concave quadratic in the per-slot
// position increment (tight at zero increment), and the bound is maximized
// over the mobility disk chain. Repeating from the updated trajectory yields
// a nondecreasing true throughput.

namespace swiptrelay {

/// Per-slot data of the relayed-rate under-estimator
///   r(q + inc) >= rate - mu*|inc|^2 - delta*inc.x - eta*inc.y.
/// x_term and phi are the shared denominator and tangent slope of the
/// underlying convex 1/distance^2 composition; mu, delta, eta carry the
/// rate scale (the 1/2 prefactor and the logarithm base).
struct AfBoundCoefficients {
    std::vector<double> x_term;
    std::vector<double> phi;
    std::vector<double> mu;
    std::vector<double> delta;
    std::vector<double> eta;
    std::vector<double> rate;  // current per-slot rate, the expansion anchor

    std::size_t size() const { return mu.size(); }
};

/// Same shape per branch: decode (source side, index 1) and forward
/// (destination side, index 2) get independent quadratic under-estimators.
struct DfBoundCoefficients {
    std::vector<double> mu1, delta1, eta1, rate1;
    std::vector<double> mu2, delta2, eta2, rate2;

    std::size_t size() const { return mu1.size(); }
};

namespace detail {

inline void require_profile_match(const Trajectory& traj, const Profile& prof) {
    if (prof.power.size() != traj.size() || prof.rho.size() != traj.size())
        throw std::invalid_argument("profile/trajectory length mismatch");
}

}  // namespace detail

/// Coefficients of the amplify-and-forward rate bound at the current
/// trajectory. The relayed term is convex in the two squared link
/// distances, so its tangent plane at the current point under-estimates it;
/// expanding the squared distances in the increment gives the quadratic.
inline AfBoundCoefficients af_bound_coefficients(const Scenario& s, const Trajectory& traj,
                                                 const Profile& prof) {
    detail::require_profile_match(traj, prof);
    const std::size_t n = traj.size();
    const double omega = 1.0 + s.ps * s.gamma;
    const double scale = 0.5 * s.inv_ln_base();  // rates are 0.5*log_base(...)
    AfBoundCoefficients k;
    k.x_term.reserve(n);
    k.phi.reserve(n);
    k.mu.reserve(n);
    k.delta.reserve(n);
    k.eta.reserve(n);
    k.rate.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SlotGeometry g = slot_geometry(s, traj[i]);
        const double r1 = s.ps * s.gamma0 * detail::rho_fraction(prof.rho[i], s.rel_noise);
        const double r2 = prof.power[i] * s.gamma0;
        const double a1 = g.d2_sr, a2 = g.d2_rd;
        const double x = a1 * a2 + r1 * a2 + r2 * a1;
        // exact zero when either dial is off: the relayed term vanishes
        const double phi = 1.0 / x - 1.0 / (x + r1 * r2 / omega);
        k.x_term.push_back(x);
        k.phi.push_back(phi);
        k.mu.push_back(scale * phi * (a1 + a2 + r1 + r2));
        k.delta.push_back(2.0 * scale * phi *
                          ((a2 + r2) * (traj[i].x - s.source.x) +
                           (a1 + r1) * (traj[i].x - s.dest.x)));
        k.eta.push_back(2.0 * scale * phi *
                        ((a2 + r2) * (traj[i].y - s.source.y) +
                         (a1 + r1) * (traj[i].y - s.dest.y)));
        k.rate.push_back(af_rate(s, g, prof.power[i], prof.rho[i]));
    }
    return k;
}

/// Coefficients of the decode-and-forward branch bounds. Each branch rate is
/// log(1 + c/u) in one squared link distance u, convex in u, so the tangent
/// at the current distance under-estimates it.
inline DfBoundCoefficients df_bound_coefficients(const Scenario& s, const Trajectory& traj,
                                                 const Profile& prof) {
    detail::require_profile_match(traj, prof);
    const std::size_t n = traj.size();
    const double scale = 0.5 * s.inv_ln_base();
    DfBoundCoefficients k;
    for (std::size_t i = 0; i < n; ++i) {
        const SlotGeometry g = slot_geometry(s, traj[i]);
        const double c1 = s.ps * s.gamma0 * detail::rho_fraction(prof.rho[i], s.rel_noise);
        const double c2 = prof.power[i] * s.gamma0;
        const double mu1 = scale * c1 / (g.d2_sr * (c1 + g.d2_sr));
        const double mu2 =
            scale * c2 / (g.d2_rd * (c2 + (1.0 + s.ps * s.gamma) * g.d2_rd));
        k.mu1.push_back(mu1);
        k.delta1.push_back(2.0 * mu1 * (traj[i].x - s.source.x));
        k.eta1.push_back(2.0 * mu1 * (traj[i].y - s.source.y));
        k.rate1.push_back(df_branch_decode(s, g, prof.rho[i]));
        k.mu2.push_back(mu2);
        k.delta2.push_back(2.0 * mu2 * (traj[i].x - s.dest.x));
        k.eta2.push_back(2.0 * mu2 * (traj[i].y - s.dest.y));
        k.rate2.push_back(df_branch_forward(s, g, prof.power[i]));
    }
    return k;
}

struct BoundValue {
    std::vector<double> per_slot;
    double total = 0.0;
};

/// Evaluates the quadratic under-estimator at an increment.
inline BoundValue lower_bound_value(const AfBoundCoefficients& k,
                                    const std::vector<Vec2>& inc) {
    if (inc.size() != k.size()) throw std::invalid_argument("increment length mismatch");
    BoundValue b;
    b.per_slot.reserve(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double q = inc[i].x * inc[i].x + inc[i].y * inc[i].y;
        const double v = k.rate[i] - k.mu[i] * q - k.delta[i] * inc[i].x - k.eta[i] * inc[i].y;
        b.per_slot.push_back(v);
        b.total += v;
    }
    return b;
}

/// Decode-and-forward bound: the minimum of the two branch bounds per slot.
inline BoundValue lower_bound_value(const DfBoundCoefficients& k,
                                    const std::vector<Vec2>& inc) {
    if (inc.size() != k.size()) throw std::invalid_argument("increment length mismatch");
    BoundValue b;
    b.per_slot.reserve(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double q = inc[i].x * inc[i].x + inc[i].y * inc[i].y;
        const double v1 =
            k.rate1[i] - k.mu1[i] * q - k.delta1[i] * inc[i].x - k.eta1[i] * inc[i].y;
        const double v2 =
            k.rate2[i] - k.mu2[i] * q - k.delta2[i] * inc[i].x - k.eta2[i] * inc[i].y;
        const double v = std::min(v1, v2);
        b.per_slot.push_back(v);
        b.total += v;
    }
    return b;
}

/// One round of the inner approximation: concave per-slot quadratics (the
/// decode-and-forward slots carry two branches, handled by the solver
/// through an epigraph variable) over the mobility disk chain anchored at
/// the current trajectory.
struct IncrementalProblem {
    std::vector<SlotObjective> objective;
    DiskChainConstraintSet constraints;
    Protocol protocol = Protocol::AF;
};

namespace detail {

inline DiskChainConstraintSet increment_constraints(const Scenario& s, const Trajectory& traj) {
    const TrajectoryCheck chk = validate_trajectory(s, traj);
    if (!chk.feasible)
        throw std::invalid_argument("current trajectory is infeasible, worst violation " +
                                    std::to_string(chk.max_violation));
    DiskChainConstraintSet cons;
    cons.start = s.start;
    cons.end = s.end;
    cons.anchors = traj;
    cons.radius = s.max_step;
    return cons;
}

}  // namespace detail

inline IncrementalProblem build_incremental_problem(const Scenario& s, const Trajectory& traj,
                                                    const AfBoundCoefficients& k) {
    IncrementalProblem prob;
    prob.protocol = Protocol::AF;
    prob.constraints = detail::increment_constraints(s, traj);
    prob.objective.resize(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        prob.objective[i].branches = {{k.rate[i], k.mu[i], k.delta[i], k.eta[i]}};
    return prob;
}

inline IncrementalProblem build_incremental_problem(const Scenario& s, const Trajectory& traj,
                                                    const DfBoundCoefficients& k) {
    IncrementalProblem prob;
    prob.protocol = Protocol::DF;
    prob.constraints = detail::increment_constraints(s, traj);
    prob.objective.resize(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        prob.objective[i].branches = {{k.rate1[i], k.mu1[i], k.delta1[i], k.eta1[i]},
                                      {k.rate2[i], k.mu2[i], k.delta2[i], k.eta2[i]}};
    return prob;
}

inline IncrementalProblem build_incremental_problem(const Scenario& s, const Trajectory& traj,
                                                    const Profile& prof, Protocol proto) {
    return proto == Protocol::DF
               ? build_incremental_problem(s, traj, df_bound_coefficients(s, traj, prof))
               : build_incremental_problem(s, traj, af_bound_coefficients(s, traj, prof));
}

struct TrajectoryOptOptions {
    double rel_tol = 1e-3;    // stop when the bound gain drops below 0.1% of the bound
    double abs_floor = 1e-9;  // and below this absolute gain
    int max_iter = 200;
    QcqpOptions qcqp;
    bool record_iterates = false;
};

struct TrajectoryOptResult {
    Trajectory trajectory;
    std::vector<double> throughput_trace;  // true throughput of each accepted iterate
    std::vector<double> bound_trace;       // maximized bound value per round
    std::vector<Trajectory> iterates;      // filled when record_iterates is set
    int iterations = 0;
    bool converged = false;
    std::string reason;
};

/// Maximizes throughput over the trajectory with the profile held fixed:
/// builds the concave quadratic under-estimators at the current trajectory,
/// maximizes them over the disk chain, moves there, repeats. Each accepted
/// move cannot decrease the true throughput because the bound is tight at
/// zero increment and global below the rate.
inline TrajectoryOptResult optimize_trajectory(const Scenario& s, const Profile& prof,
                                               const Trajectory& init, Protocol proto,
                                               const TrajectoryOptOptions& opts = {}) {
    detail::require_profile_match(init, prof);
    const TrajectoryCheck chk = validate_trajectory(s, init);
    if (!chk.feasible)
        throw std::invalid_argument("initial trajectory is infeasible, worst violation " +
                                    std::to_string(chk.max_violation));

    TrajectoryOptResult result;
    result.trajectory = init;
    double current = total_throughput(s, init, prof, proto);
    result.throughput_trace.push_back(current);
    if (opts.record_iterates) result.iterates.push_back(init);

    const std::vector<Vec2> zero(init.size(), Vec2{0.0, 0.0});
    for (int round = 0; round < opts.max_iter; ++round) {
        const IncrementalProblem prob =
            build_incremental_problem(s, result.trajectory, prof, proto);
        auto [inc, rep] = solve_concave_qcqp(prob.objective, prob.constraints, opts.qcqp);
        if (!rep.success)
            throw std::runtime_error("incremental trajectory solve failed: " + rep.reason);

        const double anchor = objective_value(prob.objective, zero);
        const double bound = objective_value(prob.objective, inc);
        result.bound_trace.push_back(bound);
        ++result.iterations;

        const double gain = bound - anchor;
        if (gain <= std::max(opts.abs_floor, opts.rel_tol * std::abs(anchor))) {
            result.converged = true;
            result.reason = "bound improvement below tolerance";
            break;
        }

        Trajectory next = result.trajectory;
        for (std::size_t i = 0; i < next.size(); ++i) next[i] = next[i] + inc[i];
        const double next_true = total_throughput(s, next, prof, proto);
        if (!validate_trajectory(s, next).feasible || next_true < current - 1e-12) {
            // the bound guarantees ascent, so this only catches solver slop
            result.converged = true;
            result.reason = "no feasible ascent step";
            break;
        }
        result.trajectory = std::move(next);
        current = next_true;
        result.throughput_trace.push_back(current);
        if (opts.record_iterates) result.iterates.push_back(result.trajectory);
    }
    if (result.reason.empty()) result.reason = "iteration cap reached";
    return result;
}

}  // namespace swiptrelay
