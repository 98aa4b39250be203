#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "swiptrelay/core.hpp"
#include "swiptrelay/profile.hpp"

// Reference strategies and trajectory initializations: a greedy profile that
// spends each slot's harvest immediately, a static hover strategy, and the
// straight-line / semicircle starting trajectories.

namespace swiptrelay {

inline constexpr double kPi = 3.14159265358979323846;

enum class Strategy { Optimal, Greedy, Static };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Optimal: return "optimal";
        case Strategy::Greedy: return "greedy";
        default: return "static";
    }
}

struct StrategyResult {
    Strategy strategy = Strategy::Optimal;
    Protocol protocol = Protocol::AF;
    Trajectory trajectory;
    Profile profile;
    double throughput = 0.0;
    Vec2 hover{0.0, 0.0};  // meaningful for the static strategy only
};

/// Greedy profile: every slot immediately spends all harvested energy,
/// p_n = (1 + Ps*gamma0/d2_sr) * delta * (1 - rho_n), and rho_n maximizes
/// the resulting instantaneous rate. The spend equality reuses the harvest
/// expression verbatim so the causality residuals cancel exactly.
inline Profile greedy_profile(const Scenario& s, const Trajectory& traj, Protocol proto,
                              double rho_tol = 1e-6) {
    Profile prof;
    prof.power.reserve(traj.size());
    prof.rho.reserve(traj.size());
    for (const Vec2& xy : traj) {
        const SlotGeometry g = slot_geometry(s, xy);
        // unimodal in rho: the harvested budget trades decode quality
        // against relay power along a single concave-composed line
        const auto best = detail::golden_max(
            [&](double rho) { return slot_rate(s, g, harvested_energy(s, g, rho), rho, proto); },
            0.0, 1.0, rho_tol);
        prof.rho.push_back(best.x);
        prof.power.push_back(harvested_energy(s, g, best.x));
    }
    return prof;
}

/// Static baseline: hover at one point for the whole horizon and run the
/// full profile optimization there. The hover chain has zero-length steps,
/// so it is always flyable even though it ignores the endpoint anchors.
inline StrategyResult static_strategy(const Scenario& s, Protocol proto,
                                      Vec2 hover = Vec2{0.0, 1.0},
                                      const ProfileOptOptions& popts = {}) {
    StrategyResult out;
    out.strategy = Strategy::Static;
    out.protocol = proto;
    out.hover = hover;
    out.trajectory.assign(static_cast<std::size_t>(s.num_slots), hover);
    const ProfileOptResult r = optimize_profile(s, out.trajectory, proto, popts);
    out.profile = r.profile;
    out.throughput = r.throughput;
    return out;
}

/// N points evenly spaced strictly inside the start-end segment, so the two
/// anchor links and all steps share the same length segment/(N+1).
inline Trajectory straight_line_init(const Scenario& s) {
    const Vec2 span = s.end - s.start;
    const double step = std::sqrt(norm2(span)) / (s.num_slots + 1.0);
    if (step > s.max_step + kFeasibilityTol)
        throw std::invalid_argument("straight-line initialization exceeds per-slot reach: step " +
                                    std::to_string(step));
    Trajectory t(static_cast<std::size_t>(s.num_slots));
    for (int i = 0; i < s.num_slots; ++i) {
        const double f = (i + 1.0) / (s.num_slots + 1.0);
        t[i] = s.start + Vec2{f * span.x, f * span.y};
    }
    return t;
}

/// N points evenly spaced along the semicircle whose diameter is the
/// start-end segment, endpoints included. The arc bulges toward the side of
/// the start-end line containing the source (the harvest-rich side); the
/// flip flag selects the mirror arc.
inline Trajectory semicircle_init(const Scenario& s, bool flip = false) {
    const Vec2 center{0.5 * (s.start.x + s.end.x), 0.5 * (s.start.y + s.end.y)};
    const Vec2 u = s.start - center;  // radius vector to the first point
    const double radius = std::sqrt(norm2(u));
    if (radius == 0.0) throw std::invalid_argument("start and end coincide");

    // unit normal to the diameter, oriented toward the source's side
    Vec2 v{-u.y / radius, u.x / radius};
    const Vec2 span = s.end - s.start;
    const double source_side =
        span.x * (s.source.y - s.start.y) - span.y * (s.source.x - s.start.x);
    const double v_side = span.x * v.y - span.y * v.x;
    if (source_side != 0.0 && source_side * v_side < 0.0) v = Vec2{-v.x, -v.y};
    if (flip) v = Vec2{-v.x, -v.y};

    const int n = s.num_slots;
    Trajectory t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double angle = n == 1 ? 0.5 * kPi : kPi * i / (n - 1.0);
        t[i] = center + Vec2{std::cos(angle) * u.x + std::sin(angle) * radius * v.x,
                             std::cos(angle) * u.y + std::sin(angle) * radius * v.y};
    }

    const TrajectoryCheck chk = validate_trajectory(s, t);
    if (!chk.feasible)
        throw std::invalid_argument("semicircle initialization exceeds per-slot reach: worst " +
                                    std::to_string(chk.max_violation));
    return t;
}

}  // namespace swiptrelay
