#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Physical model of a SWIPT-powered UAV relay link: scenario constants,
// slot geometry, AF/DF cooperative rates, harvested energy, and the
// feasibility checks (energy causality, mobility chain) shared by the
// optimizers.

namespace swiptrelay {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 v) { return dot(v, v); }
inline double norm(Vec2 v) { return std::sqrt(norm2(v)); }

enum class Protocol { AF, DF };

inline std::string to_string(Protocol p) { return p == Protocol::AF ? "af" : "df"; }

/// All scenario constants. Defaults are the desk-scale setup used for the
/// reference experiments: source/destination on the ground plane, UAV
/// crossing between fixed start/end points at fixed altitude.
struct Scenario {
    Vec2 source{0.0, 0.0};
    Vec2 dest{2.0, 0.0};
    Vec2 start{0.0, 1.0};
    Vec2 end{2.0, -1.0};
    double altitude = 0.3;     // H > 0
    double max_step = 0.2;     // V, max travel distance per slot
    int num_slots = 50;        // N
    double ps = 1.0;           // source transmit power
    double gamma0 = 1.0;       // reference SNR of the relay links
    double gamma = 0.01;       // reference SNR of the direct link
    double noise = 1.0;        // channel noise power (the delta in the harvest term)
    double rel_noise = 2.0;    // a, signal-processing noise relative to channel noise
    double log_base = 2.0;     // rate logarithm base; 2 gives bits/s/Hz

    // 1 / ln(base); rates are 0.5 * ln(arg) * inv_ln_base.
    double inv_ln_base() const { return 1.0 / std::log(log_base); }
};

/// Throws std::invalid_argument when a scenario violates its constraints
/// (positivity, and V*N covering the start-to-end distance).
inline void validate_scenario(const Scenario& s) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("scenario: " + what); };
    if (!(s.altitude > 0.0)) fail("altitude_H must be > 0");
    if (!(s.max_step > 0.0)) fail("max_step_V must be > 0");
    if (s.num_slots < 1) fail("num_slots_N must be >= 1");
    if (!(s.ps > 0.0)) fail("ps must be > 0");
    if (!(s.gamma0 > 0.0)) fail("gamma0 must be > 0");
    if (!(s.gamma >= 0.0)) fail("gamma must be >= 0");
    if (!(s.noise > 0.0)) fail("delta_noise must be > 0");
    if (!(s.rel_noise >= 0.0)) fail("a_rel_noise must be >= 0");
    if (!(s.log_base > 1.0)) fail("log_base must be > 1");
    const double reach = s.max_step * static_cast<double>(s.num_slots);
    if (reach < norm(s.end - s.start) - 1e-12)
        fail("max_step_V * num_slots_N does not cover the start-to-end distance");
}

/// Per-slot UAV planar positions; length must equal Scenario::num_slots.
using Trajectory = std::vector<Vec2>;

/// Per-slot relay power p_n >= 0 and power-splitting ratio rho_n in [0,1].
struct Profile {
    std::vector<double> power;
    std::vector<double> rho;
};

struct SlotGeometry {
    double d2_sr = 0.0;  // squared source-to-UAV distance (incl. altitude)
    double d2_rd = 0.0;  // squared UAV-to-destination distance
};

inline SlotGeometry slot_geometry(const Scenario& s, Vec2 xy) {
    const double h2 = s.altitude * s.altitude;
    return {norm2(xy - s.source) + h2, norm2(xy - s.dest) + h2};
}

namespace detail {

// Fraction of received power reaching the information path after the
// splitter noise: rho/(rho+a). Zero signal at rho = 0 even when a = 0.
inline double rho_fraction(double rho, double a) {
    return rho == 0.0 ? 0.0 : rho / (rho + a);
}

inline void check_power_rho(double p, double rho) {
    if (!(p >= 0.0)) throw std::domain_error("relay power must be >= 0");
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("splitting ratio must be in [0,1]");
}

// log(1+x) argument of the AF rate, before the configured-base log.
inline double af_rate_arg(const Scenario& s, const SlotGeometry& g, double p, double rho) {
    const double frac = rho_fraction(rho, s.rel_noise);
    const double num = s.ps * s.gamma0 * s.gamma0 * p * frac / (g.d2_sr * g.d2_rd);
    const double den = 1.0 + s.ps * s.gamma0 * frac / g.d2_sr + p * s.gamma0 / g.d2_rd;
    return 1.0 + s.ps * s.gamma + num / den;
}

struct ScalarMax {
    double x = 0.0;
    double value = 0.0;
};

// Golden-section maximization of a unimodal function on [lo, hi].
template <typename F>
inline ScalarMax golden_max(F&& f, double lo, double hi, double xtol = 1e-10) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > xtol) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        }
    }
    ScalarMax m;
    m.x = 0.5 * (a + b);
    m.value = f(m.x);
    // the endpoints are not golden probe points; cover exact-boundary maxima
    const double flo = f(lo), fhi = f(hi);
    if (flo > m.value) m = {lo, flo};
    if (fhi > m.value) m = {hi, fhi};
    return m;
}

}  // namespace detail

/// Amplify-and-forward per-slot cooperative rate.
inline double af_rate(const Scenario& s, const SlotGeometry& g, double p, double rho) {
    detail::check_power_rho(p, rho);
    return 0.5 * std::log(detail::af_rate_arg(s, g, p, rho)) * s.inv_ln_base();
}

/// The two decode-and-forward branch rates: decoding at the UAV and
/// forwarding to the destination. The DF rate is their minimum.
inline double df_branch_decode(const Scenario& s, const SlotGeometry& g, double rho) {
    const double frac = detail::rho_fraction(rho, s.rel_noise);
    return 0.5 * std::log(1.0 + s.ps * s.gamma0 * frac / g.d2_sr) * s.inv_ln_base();
}

inline double df_branch_forward(const Scenario& s, const SlotGeometry& g, double p) {
    return 0.5 * std::log(1.0 + s.ps * s.gamma + p * s.gamma0 / g.d2_rd) * s.inv_ln_base();
}

/// Decode-and-forward per-slot cooperative rate.
inline double df_rate(const Scenario& s, const SlotGeometry& g, double p, double rho) {
    detail::check_power_rho(p, rho);
    return std::min(df_branch_decode(s, g, rho), df_branch_forward(s, g, p));
}

inline double slot_rate(const Scenario& s, const SlotGeometry& g, double p, double rho, Protocol proto) {
    return proto == Protocol::AF ? af_rate(s, g, p, rho) : df_rate(s, g, p, rho);
}

/// Energy harvested within one slot: (1 + Ps*gamma0/d2_sr) * delta * (1-rho).
/// Channel noise contributes, hence the additive 1.
inline double harvested_energy(const Scenario& s, const SlotGeometry& g, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("splitting ratio must be in [0,1]");
    return (1.0 + s.ps * s.gamma0 / g.d2_sr) * s.noise * (1.0 - rho);
}

/// residual_n = sum_{i<=n} harvested_i - sum_{i<=n} p_i.
/// The profile is causally feasible iff every residual >= 0.
inline std::vector<double> causality_residuals(const Scenario& s, const Trajectory& traj,
                                               const Profile& prof) {
    const std::size_t n = traj.size();
    if (prof.power.size() != n || prof.rho.size() != n)
        throw std::invalid_argument("profile/trajectory length mismatch");
    std::vector<double> res(n);
    double cum_harvest = 0.0;
    double cum_power = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cum_harvest += harvested_energy(s, slot_geometry(s, traj[i]), prof.rho[i]);
        cum_power += prof.power[i];
        res[i] = cum_harvest - cum_power;
    }
    return res;
}

inline constexpr double kFeasibilityTol = 1e-9;

inline bool causally_feasible(const Scenario& s, const Trajectory& traj, const Profile& prof,
                              double tol = kFeasibilityTol) {
    for (double r : causality_residuals(s, traj, prof))
        if (r < -tol) return false;
    return true;
}

/// Sum of per-slot rates along the trajectory.
inline double total_throughput(const Scenario& s, const Trajectory& traj, const Profile& prof,
                               Protocol proto) {
    const std::size_t n = traj.size();
    if (prof.power.size() != n || prof.rho.size() != n)
        throw std::invalid_argument("profile/trajectory length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sum += slot_rate(s, slot_geometry(s, traj[i]), prof.power[i], prof.rho[i], proto);
    return sum;
}

struct TrajectoryCheck {
    bool feasible = false;
    double max_violation = 0.0;  // max over links of squared length minus V^2
};

/// Checks the mobility chain: start-to-first, consecutive, and last-to-end
/// squared step lengths against V^2. A slack of -1e-9 still counts feasible.
inline TrajectoryCheck validate_trajectory(const Scenario& s, const Trajectory& traj) {
    if (traj.size() != static_cast<std::size_t>(s.num_slots))
        return {false, std::numeric_limits<double>::infinity()};
    const double v2 = s.max_step * s.max_step;
    double worst = norm2(traj.front() - s.start) - v2;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i)
        worst = std::max(worst, norm2(traj[i + 1] - traj[i]) - v2);
    worst = std::max(worst, norm2(s.end - traj.back()) - v2);
    return {worst <= kFeasibilityTol, worst};
}

}  // namespace swiptrelay
