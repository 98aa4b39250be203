#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "swiptrelay/core.hpp"
#include "swiptrelay/solvers.hpp"

// Fixed-trajectory profile optimization by Lagrangian dual decomposition.
// Multipliers lambda_n price the cumulative energy-causality constraints;
// their suffix sums alpha_n price each slot's power. The per-slot inner
// problems have closed-form stationary points; the dual is minimized by
// projected subgradient (default) or the ellipsoid method.

namespace swiptrelay {

struct DualState {
    std::vector<double> lambda;  // one per slot, >= 0
    std::vector<double> theta;   // one per slot in [0,1]; empty for AF

    // alpha_n = sum of lambda from n to the end; nonincreasing in n.
    std::vector<double> alphas() const {
        std::vector<double> a(lambda.size());
        double suffix = 0.0;
        for (std::size_t i = lambda.size(); i-- > 0;) {
            suffix += lambda[i];
            a[i] = suffix;
        }
        return a;
    }
};

// ---------------------------------------------------------------------------
// AF per-slot subproblem: maximize r(p, rho) + alpha*(E(rho) - p)
// ---------------------------------------------------------------------------

/// Intermediate coefficients for the closed-form stationary points of the
/// AF slot subproblem. b* give the power candidate at fixed rho, c* the
/// ratio candidate at fixed p. b5 and c5 absorb the rate's logarithm base,
/// so the formulas remain exact for any configured base.
struct AfSlotCoefficients {
    double b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0;
    double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
    bool degenerate = false;  // alpha == 0: no finite stationary point
};

inline AfSlotCoefficients af_coefficients(const Scenario& s, const SlotGeometry& g,
                                          double p_fixed, double rho_fixed, double alpha) {
    AfSlotCoefficients k;
    const double lnb = std::log(s.log_base);
    const double frac = detail::rho_fraction(rho_fixed, s.rel_noise);

    k.b1 = 1.0 + s.ps * s.gamma + s.ps * s.gamma0 * frac / g.d2_sr;
    k.b2 = s.gamma0 / g.d2_rd;
    k.b3 = 1.0 + s.ps * s.gamma0 * frac / g.d2_sr;
    k.b4 = s.ps * s.gamma0 * frac / g.d2_sr * k.b3;
    k.b5 = alpha * lnb;

    k.c2 = 1.0 + s.ps * s.gamma0 / g.d2_sr + p_fixed * s.gamma0 / g.d2_rd;
    const double relayed = s.ps * p_fixed * s.gamma0 * s.gamma0 / (k.c2 * g.d2_sr * g.d2_rd);
    k.c1 = 1.0 + s.ps * s.gamma + relayed;
    k.c3 = (1.0 + p_fixed * s.gamma0 / g.d2_rd) * s.rel_noise;
    k.c4 = relayed * k.c3;  // exact zero at p = 0, unlike subtracting from c1
    k.c5 = alpha * lnb * (1.0 + s.ps * s.gamma0 / g.d2_sr) * s.noise;

    k.degenerate = !(alpha > 0.0);
    return k;
}

/// Positive root of the power quadratic; +infinity when the energy price is
/// zero (the objective is then nondecreasing in p without bound).
inline double af_candidate_power(const AfSlotCoefficients& k) {
    if (k.degenerate) return std::numeric_limits<double>::infinity();
    if (k.b4 <= 0.0) return -k.b3 / k.b2;  // rho = 0: rate flat in p, price wins
    const double root = k.b4 + std::sqrt(k.b4 * k.b4 + 2.0 * k.b1 * k.b2 * k.b4 / k.b5);
    return root / (2.0 * k.b1 * k.b2) - k.b3 / k.b2;
}

inline double af_candidate_rho(const AfSlotCoefficients& k) {
    if (k.degenerate) return std::numeric_limits<double>::infinity();
    if (k.c4 <= 0.0) return -k.c3 / k.c2;  // p = 0: rate flat in rho
    const double root = k.c4 + std::sqrt(k.c4 * k.c4 + 2.0 * k.c1 * k.c2 * k.c4 / k.c5);
    return root / (2.0 * k.c1 * k.c2) - k.c3 / k.c2;
}

/// Per-slot Lagrangian contribution for AF.
inline double af_slot_objective(const Scenario& s, const SlotGeometry& g, double alpha, double p,
                                double rho) {
    return af_rate(s, g, p, rho) + alpha * (harvested_energy(s, g, rho) - p);
}

struct SlotSolution {
    double p = 0.0;
    double rho = 0.0;
    double objective = 0.0;
    int iterations = 0;
    std::vector<double> trace;  // objective after each alternation round
};

/// Maximizes the AF slot subproblem by closed-form coordinate ascent.
/// The surface is concave along each axis but has a saddle near the idle
/// corner, so the alternation runs from several starts (idle corner, a few
/// splitting ratios including the rho = 1 edge) and keeps the best.
inline SlotSolution af_slot_solve(const Scenario& s, const SlotGeometry& g, double alpha,
                                  double p_cap, double tol = 1e-6, int max_rounds = 100,
                                  bool rho_first = false) {
    SlotSolution best;
    best.objective = -std::numeric_limits<double>::infinity();

    auto update_p = [&](double rho) {
        const double pc = af_candidate_power(af_coefficients(s, g, 0.0, rho, alpha));
        return std::clamp(pc, 0.0, p_cap);
    };
    auto update_rho = [&](double p) {
        const double rc = af_candidate_rho(af_coefficients(s, g, p, 0.0, alpha));
        if (rc >= 0.0 && rc <= 1.0) return rc;
        return af_slot_objective(s, g, alpha, p, 0.0) >= af_slot_objective(s, g, alpha, p, 1.0)
                   ? 0.0
                   : 1.0;
    };

    // idle corner: zero power, full harvest
    {
        SlotSolution corner;
        corner.p = 0.0;
        corner.rho = 0.0;
        corner.objective = af_slot_objective(s, g, alpha, 0.0, 0.0);
        corner.trace = {corner.objective};
        best = corner;
    }

    for (double rho0 : {0.25, 0.5, 0.75, 1.0}) {
        SlotSolution run;
        run.rho = rho0;
        run.p = rho_first ? 0.5 * p_cap : update_p(run.rho);
        if (rho_first) run.rho = update_rho(run.p);
        run.objective = af_slot_objective(s, g, alpha, run.p, run.rho);
        run.trace = {run.objective};
        for (int round = 0; round < max_rounds; ++round) {
            if (rho_first) {
                run.p = update_p(run.rho);
                run.rho = update_rho(run.p);
            } else {
                run.rho = update_rho(run.p);
                run.p = update_p(run.rho);
            }
            const double val = af_slot_objective(s, g, alpha, run.p, run.rho);
            run.trace.push_back(val);
            ++run.iterations;
            const double gain = val - run.objective;
            run.objective = val;
            if (gain < tol) break;
        }
        if (run.objective > best.objective) best = run;
    }
    return best;
}

// ---------------------------------------------------------------------------
// DF per-slot subproblems: separable in p and rho given (alpha, theta)
// ---------------------------------------------------------------------------

/// Stationary point of (1-theta)*r_forward(p) - alpha*p. +infinity when the
/// price is zero while the forward branch still has weight.
inline double df_candidate_power(const Scenario& s, const SlotGeometry& g, double alpha,
                                 double theta) {
    if (theta >= 1.0) return -(1.0 + s.ps * s.gamma) * g.d2_rd / s.gamma0;
    if (!(alpha > 0.0)) return std::numeric_limits<double>::infinity();
    const double abar = alpha * std::log(s.log_base);
    return (1.0 - theta) / (2.0 * abar) - (1.0 + s.ps * s.gamma) * g.d2_rd / s.gamma0;
}

/// Stationary point of alpha*E(rho) + theta*r_decode(rho). +infinity when
/// harvesting is free (alpha = 0) but the decode branch has weight.
inline double df_candidate_rho(const Scenario& s, const SlotGeometry& g, double alpha,
                               double theta) {
    if (theta <= 0.0) return -s.rel_noise;  // pure harvest: pushed to rho = 0
    if (!(alpha > 0.0)) return std::numeric_limits<double>::infinity();
    const double abar = alpha * std::log(s.log_base);
    const double cap_k = s.ps * s.gamma0 / g.d2_sr;
    const double gq = abar * s.noise * s.rel_noise * cap_k / theta;
    const double denom = (2.0 * abar * s.noise / theta) * (1.0 + cap_k);
    return (gq + std::sqrt(gq * gq + 2.0 * gq)) / denom - s.rel_noise;
}

/// Power-side DF slot term (1-theta)*r_forward - alpha*p.
inline double df_slot_objective_p(const Scenario& s, const SlotGeometry& g, double alpha,
                                  double theta, double p) {
    return (1.0 - theta) * df_branch_forward(s, g, p) - alpha * p;
}

/// Ratio-side DF slot term alpha*E(rho) + theta*r_decode.
inline double df_slot_objective_rho(const Scenario& s, const SlotGeometry& g, double alpha,
                                    double theta, double rho) {
    return alpha * harvested_energy(s, g, rho) + theta * df_branch_decode(s, g, rho);
}

inline SlotSolution df_slot_solve(const Scenario& s, const SlotGeometry& g, double alpha,
                                  double theta, double p_cap) {
    SlotSolution sol;
    sol.p = std::clamp(df_candidate_power(s, g, alpha, theta), 0.0, p_cap);
    const double rc = df_candidate_rho(s, g, alpha, theta);
    if (rc >= 0.0 && rc <= 1.0) {
        sol.rho = rc;
    } else {
        sol.rho = df_slot_objective_rho(s, g, alpha, theta, 0.0) >=
                          df_slot_objective_rho(s, g, alpha, theta, 1.0)
                      ? 0.0
                      : 1.0;
    }
    sol.iterations = 1;
    sol.objective = df_slot_objective_p(s, g, alpha, theta, sol.p) +
                    df_slot_objective_rho(s, g, alpha, theta, sol.rho);
    sol.trace = {sol.objective};
    return sol;
}

// ---------------------------------------------------------------------------
// Dual function machinery
// ---------------------------------------------------------------------------

/// Subgradient of the dual function at the inner-optimal profile. First N
/// components are the cumulative energy residuals; for DF, N more follow
/// with the per-slot decode-minus-forward rate difference.
inline std::vector<double> dual_subgradient(const Scenario& s, const Trajectory& traj,
                                            const Profile& prof, const DualState& duals,
                                            Protocol proto) {
    std::vector<double> d = causality_residuals(s, traj, prof);
    if (proto == Protocol::DF) {
        if (duals.theta.size() != traj.size())
            throw std::invalid_argument("theta/slot count mismatch");
        for (std::size_t n = 0; n < traj.size(); ++n) {
            const SlotGeometry g = slot_geometry(s, traj[n]);
            d.push_back(df_branch_decode(s, g, prof.rho[n]) -
                        df_branch_forward(s, g, prof.power[n]));
        }
    }
    return d;
}

struct ProfileOptOptions {
    DualScheme scheme = DualScheme::Subgradient;
    double tol = 1e-6;        // dual best-value improvement tolerance
    int max_iter = 5000;      // dual iterations
    int patience = 150;       // dual iterations without improvement before stop
    double step0 = 0.5;
    double ellipsoid_radius = 10.0;
    int inner_rounds = 100;   // AF alternation cap per slot
    double inner_tol = 1e-6;
    int polish_sweeps = 4;    // primal coordinate passes after the dual run
    int polish_iters = 800;   // power-reallocation dual iterations per sweep
    bool record_trace = false;
    const DualState* warm_start = nullptr;
};

struct ProfileOptResult {
    Profile profile;
    DualState duals;
    double throughput = 0.0;  // of the returned (feasible) profile
    double dual_value = 0.0;  // best dual value: an upper bound on throughput
    DualAscentReport report;
    std::vector<double> dual_trace;    // per-iteration dual values
    std::vector<double> primal_trace;  // per-iteration restored primal values
};

namespace detail {

// Clamp powers forward in time so every cumulative residual is nonnegative:
// the earliest violating slot is scaled down first.
inline Profile restore_causality(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                                 Profile prof) {
    double cum_e = 0.0, cum_p = 0.0;
    for (std::size_t n = 0; n < prof.power.size(); ++n) {
        cum_e += harvested_energy(s, geoms[n], prof.rho[n]);
        const double room = std::max(0.0, cum_e - cum_p);
        prof.power[n] = std::min(prof.power[n], room);
        cum_p += prof.power[n];
    }
    return prof;
}

inline double profile_value(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                            const Profile& prof, Protocol proto) {
    double total = 0.0;
    for (std::size_t n = 0; n < geoms.size(); ++n)
        total += slot_rate(s, geoms[n], prof.power[n], prof.rho[n], proto);
    return total;
}

// One in-place coordinate pass over the splitting ratios: each rho_n is
// re-optimized by golden section over the interval that keeps every later
// cumulative residual nonnegative (raising rho_n shrinks that slot's
// harvest). The slot rate is concave in rho, so the search is exact.
inline void rho_refine_pass(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                            Protocol proto, Profile& prof) {
    const std::size_t n = geoms.size();
    std::vector<double> res(n);
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cum += harvested_energy(s, geoms[i], prof.rho[i]) - prof.power[i];
        res[i] = cum;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double slack = std::numeric_limits<double>::infinity();
        for (std::size_t m = i; m < n; ++m) slack = std::min(slack, res[m]);
        if (!(slack >= 0.0)) continue;  // numerical debt: leave this slot alone
        const double h0 = harvested_energy(s, geoms[i], 0.0);
        const double hi = std::min(1.0, prof.rho[i] + slack / h0);
        auto f = [&](double rho) { return slot_rate(s, geoms[i], prof.power[i], rho, proto); };
        const ScalarMax best = golden_max(f, 0.0, hi, 1e-12);
        if (best.value > f(prof.rho[i])) {
            const double delta_e = h0 * (prof.rho[i] - best.x);
            prof.rho[i] = best.x;
            for (std::size_t m = i; m < n; ++m) res[m] += delta_e;
        }
    }
}

// Best slot rate on the line p + h0*rho = budget. Spending the full budget
// is weakly optimal because the rate is nondecreasing in both dials. The
// line is scanned coarsely first (the AF surface need not be unimodal
// along it) and the best sample refined by golden section.
inline ScalarMax slot_line_max(const Scenario& s, const SlotGeometry& g, Protocol proto,
                               double budget, double h0) {
    constexpr int kSamples = 65;
    budget = std::max(0.0, budget);
    const double rho_hi = std::clamp(budget / h0, 0.0, 1.0);
    auto f = [&](double rho) {
        return slot_rate(s, g, std::max(0.0, budget - h0 * rho), rho, proto);
    };
    ScalarMax best{0.0, f(0.0)};
    for (int k = 1; k < kSamples; ++k) {
        const double rho = rho_hi * k / (kSamples - 1.0);
        const double val = f(rho);
        if (val > best.value) best = {rho, val};
    }
    const double step = rho_hi / (kSamples - 1.0);
    const ScalarMax refined =
        golden_max(f, std::max(0.0, best.x - step), std::min(rho_hi, best.x + step), 1e-12);
    return refined.value > best.value ? refined : best;
}

// One in-place pass rebalancing each slot's (power, ratio) pair along its
// own budget line p + h0*rho = const. Such moves leave every cumulative
// residual unchanged, so they are always feasible; for DF they track the
// decode/forward balance diagonal that single-coordinate moves cannot
// follow.
inline void budget_line_pass(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                             Protocol proto, Profile& prof) {
    for (std::size_t i = 0; i < geoms.size(); ++i) {
        const double h0 = harvested_energy(s, geoms[i], 0.0);
        const double budget = prof.power[i] + h0 * prof.rho[i];
        const ScalarMax best = slot_line_max(s, geoms[i], proto, budget, h0);
        if (best.value > slot_rate(s, geoms[i], prof.power[i], prof.rho[i], proto)) {
            prof.rho[i] = best.x;
            prof.power[i] = std::max(0.0, budget - h0 * best.x);
        }
    }
}

// One in-place backward pass spending each slot's suffix residual slack on
// its own budget line (both dials move together). Walking from the last
// slot backward means no later slot is starved by the spend: a slot only
// consumes slack that no successor claimed.
inline void slack_spend_pass(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                             Protocol proto, Profile& prof) {
    const std::size_t n = geoms.size();
    std::vector<double> res(n);
    double cum = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        cum += harvested_energy(s, geoms[m], prof.rho[m]) - prof.power[m];
        res[m] = cum;
    }
    for (std::size_t i = n; i-- > 0;) {
        double slack = std::numeric_limits<double>::infinity();
        for (std::size_t m = i; m < n; ++m) slack = std::min(slack, res[m]);
        if (!(slack > 0.0)) continue;
        const double h0 = harvested_energy(s, geoms[i], 0.0);
        const double budget = prof.power[i] + h0 * prof.rho[i] + slack;
        const ScalarMax best = slot_line_max(s, geoms[i], proto, budget, h0);
        if (best.value > slot_rate(s, geoms[i], prof.power[i], prof.rho[i], proto)) {
            prof.rho[i] = best.x;
            prof.power[i] = std::max(0.0, budget - h0 * best.x);
            for (std::size_t m = i; m < n; ++m) res[m] -= slack;
        }
    }
}

// Myopic forward pass: every slot greedily maximizes its own rate over the
// entire budget available to it (carried residual plus its own maximum
// harvest) and spends it all. Used as a basin-exploration seed: it
// activates early slots that the dual solution may have left idle.
inline Profile myopic_profile(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                              Protocol proto) {
    Profile prof;
    prof.power.resize(geoms.size());
    prof.rho.resize(geoms.size());
    double carried = 0.0;
    for (std::size_t i = 0; i < geoms.size(); ++i) {
        const double h0 = harvested_energy(s, geoms[i], 0.0);
        const ScalarMax best = slot_line_max(s, geoms[i], proto, carried + h0, h0);
        prof.rho[i] = best.x;
        prof.power[i] = std::max(0.0, carried + h0 * (1.0 - best.x));
        carried = 0.0;
    }
    return prof;
}

// One in-place pass over ordered slot pairs (i, j) transferring whole
// budget x = p + h0*rho between the slots, re-optimizing each slot's
// internal (power, ratio) split for every probe. This four-dial move can
// activate a slot that is pinned at the idle corner, which no one- or
// two-dial move can do (the rate is flat in rho at zero power). The
// transfer objective need not be unimodal, so the line is scanned coarsely
// and the best sample refined. All pairs are visited for short horizons,
// adjacent pairs otherwise (repeated sweeps let transfers propagate).
inline void budget_transfer_pass(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                                 Protocol proto, Profile& prof) {
    const std::size_t n = geoms.size();
    if (n < 2) return;
    constexpr int kSamples = 33;
    constexpr std::size_t kAllPairsLimit = 12;
    std::vector<double> res(n);
    double cum = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        cum += harvested_energy(s, geoms[m], prof.rho[m]) - prof.power[m];
        res[m] = cum;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h0i = harvested_energy(s, geoms[i], 0.0);
        const std::size_t j_end = n <= kAllPairsLimit ? n : i + 2;
        for (std::size_t j = i + 1; j < j_end; ++j) {
            double slack = std::numeric_limits<double>::infinity();
            for (std::size_t m = i; m < j; ++m) slack = std::min(slack, res[m]);
            if (!(slack >= 0.0)) continue;
            const double h0j = harvested_energy(s, geoms[j], 0.0);
            const double xi = prof.power[i] + h0i * prof.rho[i];
            const double xj = prof.power[j] + h0j * prof.rho[j];
            const double t_lo = -std::min(xj, slack);
            const double t_hi = xi;
            if (t_hi - t_lo < 1e-14) continue;
            auto value = [&](double t) {
                return slot_line_max(s, geoms[i], proto, xi - t, h0i).value +
                       slot_line_max(s, geoms[j], proto, xj + t, h0j).value;
            };
            double best_t = 0.0;
            double best_val = value(0.0);
            for (int k = 0; k < kSamples; ++k) {
                const double t = t_lo + (t_hi - t_lo) * k / (kSamples - 1.0);
                const double val = value(t);
                if (val > best_val) {
                    best_val = val;
                    best_t = t;
                }
            }
            const double step = (t_hi - t_lo) / (kSamples - 1.0);
            const detail::ScalarMax refined = golden_max(
                value, std::max(t_lo, best_t - step), std::min(t_hi, best_t + step), 1e-12);
            if (refined.value > best_val) {
                best_val = refined.value;
                best_t = refined.x;
            }
            if (best_t != 0.0 && best_val > value(0.0)) {
                const ScalarMax si = slot_line_max(s, geoms[i], proto, xi - best_t, h0i);
                const ScalarMax sj = slot_line_max(s, geoms[j], proto, xj + best_t, h0j);
                prof.rho[i] = si.x;
                prof.power[i] = std::max(0.0, xi - best_t - h0i * si.x);
                prof.rho[j] = sj.x;
                prof.power[j] = std::max(0.0, xj + best_t - h0j * sj.x);
                for (std::size_t m = i; m < j; ++m) res[m] += best_t;
            }
        }
    }
}

// One in-place pass over ordered slot pairs (i, j), i < j, trading energy
// between the slots' dials in each of three ways: slot i ratio vs slot j
// power, ratio vs ratio, and slot i power vs slot j ratio. Every move
// keeps the residuals at and after j unchanged and shifts the ones in
// between by the transferred energy, so feasibility reduces to the
// residual slack between the slots. Each line objective is a sum of two
// terms that vary in a single variable each, so per-axis concavity makes
// the golden-section search exact.
inline void pair_transfer_pass(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                               Protocol proto, Profile& prof) {
    const std::size_t n = geoms.size();
    if (n < 2) return;
    std::vector<double> res(n);
    double cum = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        cum += harvested_energy(s, geoms[m], prof.rho[m]) - prof.power[m];
        res[m] = cum;
    }
    // shared by all moves: transferring energy e from slot i to slot j
    // adds e to the residuals in [i, j)
    auto try_move = [&](std::size_t i, std::size_t j, double lo, double hi, double energy_rate,
                        auto&& apply, auto&& value) {
        if (hi - lo < 1e-14) return;
        const detail::ScalarMax best = golden_max(value, lo, hi, 1e-12);
        if (best.value > value(0.0)) {
            apply(best.x);
            for (std::size_t m = i; m < j; ++m) res[m] += energy_rate * best.x;
        }
    };
    // recomputed before every move: an accepted move changes the window
    auto window_slack = [&](std::size_t i, std::size_t j) {
        double slack = std::numeric_limits<double>::infinity();
        for (std::size_t m = i; m < j; ++m) slack = std::min(slack, res[m]);
        return slack;
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h0i = harvested_energy(s, geoms[i], 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double h0j = harvested_energy(s, geoms[j], 0.0);

            // lower rho_i by t, spend the h0i*t harvest surplus on p_j
            double slack = window_slack(i, j);
            if (!(slack >= 0.0)) continue;
            try_move(
                i, j, -std::min({1.0 - prof.rho[i], prof.power[j] / h0i, slack / h0i}),
                prof.rho[i], h0i,
                [&](double t) {
                    prof.rho[i] -= t;
                    prof.power[j] = std::max(0.0, prof.power[j] + h0i * t);
                },
                [&](double t) {
                    return slot_rate(s, geoms[i], prof.power[i], prof.rho[i] - t, proto) +
                           slot_rate(s, geoms[j], std::max(0.0, prof.power[j] + h0i * t),
                                     prof.rho[j], proto);
                });

            // lower rho_i by t, raise rho_j by h0i*t/h0j
            slack = window_slack(i, j);
            if (!(slack >= 0.0)) continue;
            {
                const double kappa = h0i / h0j;
                try_move(
                    i, j,
                    std::max({prof.rho[i] - 1.0, -prof.rho[j] / kappa, -slack / h0i}),
                    std::min(prof.rho[i], (1.0 - prof.rho[j]) / kappa), h0i,
                    [&](double t) {
                        prof.rho[i] = std::clamp(prof.rho[i] - t, 0.0, 1.0);
                        prof.rho[j] = std::clamp(prof.rho[j] + kappa * t, 0.0, 1.0);
                    },
                    [&](double t) {
                        return slot_rate(s, geoms[i], prof.power[i],
                                         std::clamp(prof.rho[i] - t, 0.0, 1.0), proto) +
                               slot_rate(s, geoms[j], prof.power[j],
                                         std::clamp(prof.rho[j] + kappa * t, 0.0, 1.0), proto);
                    });
            }

            // lower p_i by h0j*u, raise rho_j by u
            slack = window_slack(i, j);
            if (!(slack >= 0.0)) continue;
            try_move(
                i, j, std::max(-prof.rho[j], -slack / h0j),
                std::min(1.0 - prof.rho[j], prof.power[i] / h0j), h0j,
                [&](double u) {
                    prof.power[i] = std::max(0.0, prof.power[i] - h0j * u);
                    prof.rho[j] = std::clamp(prof.rho[j] + u, 0.0, 1.0);
                },
                [&](double u) {
                    return slot_rate(s, geoms[i], std::max(0.0, prof.power[i] - h0j * u),
                                     prof.rho[i], proto) +
                           slot_rate(s, geoms[j], prof.power[j],
                                     std::clamp(prof.rho[j] + u, 0.0, 1.0), proto);
                });
        }
    }
}

// Re-allocates powers at frozen splitting ratios: maximize the sum of slot
// rates over the causality polytope. Each rate is concave and nondecreasing
// in its own power (DF rates are flat past the decode rate, so those slots
// are boxed there), giving a dual with essentially unique inner maximizers;
// projected subgradient with best-feasible tracking then recovers the
// optimum reliably.
inline Profile power_reallocate(const Scenario& s, const std::vector<SlotGeometry>& geoms,
                                Protocol proto, const Profile& start, double p_cap,
                                int max_iter) {
    const std::size_t n = geoms.size();
    std::vector<double> energy(n), box(n);
    for (std::size_t i = 0; i < n; ++i) {
        energy[i] = harvested_energy(s, geoms[i], start.rho[i]);
        if (proto == Protocol::DF) {
            // power beyond the decode-forward balance point is wasted
            const double frac = rho_fraction(start.rho[i], s.rel_noise);
            const double balance =
                s.ps * (s.gamma0 * frac / geoms[i].d2_sr - s.gamma) * geoms[i].d2_rd / s.gamma0;
            box[i] = std::clamp(balance, 0.0, p_cap);
        } else {
            box[i] = start.rho[i] > 0.0 ? p_cap : 0.0;  // rate flat in p at rho = 0
        }
    }

    Profile best = start;
    double best_value = profile_value(s, geoms, start, proto);

    auto evaluate = [&](const std::vector<double>& lambda) {
        double alpha_suffix = 0.0;
        std::vector<double> alpha(n);
        for (std::size_t i = n; i-- > 0;) {
            alpha_suffix += lambda[i];
            alpha[i] = alpha_suffix;
        }
        Profile prof = start;
        double dual_value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double p;
            if (proto == Protocol::DF) {
                p = std::clamp(df_candidate_power(s, geoms[i], alpha[i], 0.0), 0.0, box[i]);
            } else {
                const auto k = af_coefficients(s, geoms[i], 0.0, start.rho[i], alpha[i]);
                p = std::clamp(af_candidate_power(k), 0.0, box[i]);
            }
            prof.power[i] = p;
            dual_value += slot_rate(s, geoms[i], p, start.rho[i], proto) + alpha[i] * (energy[i] - p);
        }
        InnerEval ev;
        ev.dual_value = dual_value;
        double cum = 0.0;
        ev.subgradient.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            cum += energy[i] - prof.power[i];
            ev.subgradient[i] = cum;
        }
        const Profile feasible = restore_causality(s, geoms, std::move(prof));
        const double value = profile_value(s, geoms, feasible, proto);
        if (value > best_value) {
            best_value = value;
            best = feasible;
        }
        return ev;
    };

    DualAscentOptions ao;
    ao.max_iter = max_iter;
    ao.patience = std::max(50, max_iter / 4);
    std::vector<double> init(n, 1.0 / static_cast<double>(n));
    const std::vector<double> lo(n, 0.0), hi(n, std::numeric_limits<double>::infinity());
    dual_ascent(evaluate, std::move(init), lo, hi, ao);
    return best;
}

}  // namespace detail

/// Maximizes total throughput over (power, rho) profiles on a fixed
/// trajectory subject to energy causality, via dual decomposition. Returns
/// the best causally feasible profile seen plus the dual certificate.
inline ProfileOptResult optimize_profile(const Scenario& s, const Trajectory& traj, Protocol proto,
                                         const ProfileOptOptions& opts = {}) {
    const std::size_t n = traj.size();
    if (n != static_cast<std::size_t>(s.num_slots))
        throw std::invalid_argument("trajectory length does not match the scenario");
    const double v2 = s.max_step * s.max_step;
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (norm2(traj[i + 1] - traj[i]) - v2 > kFeasibilityTol)
            throw std::invalid_argument("trajectory step exceeds the mobility limit");

    std::vector<SlotGeometry> geoms(n);
    double p_cap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        geoms[i] = slot_geometry(s, traj[i]);
        p_cap += harvested_energy(s, geoms[i], 0.0);
    }

    const bool df = proto == Protocol::DF;
    const std::size_t dim = df ? 2 * n : n;
    std::vector<double> init(dim), lo(dim, 0.0), hi(dim);
    for (std::size_t i = 0; i < n; ++i) {
        init[i] = 1.0 / static_cast<double>(n);
        hi[i] = std::numeric_limits<double>::infinity();
    }
    if (df)
        for (std::size_t i = 0; i < n; ++i) {
            init[n + i] = 0.5;
            hi[n + i] = 1.0;
        }
    if (opts.warm_start && opts.warm_start->lambda.size() == n &&
        (!df || opts.warm_start->theta.size() == n)) {
        for (std::size_t i = 0; i < n; ++i) init[i] = opts.warm_start->lambda[i];
        if (df)
            for (std::size_t i = 0; i < n; ++i)
                init[n + i] = std::clamp(opts.warm_start->theta[i], 0.0, 1.0);
    }

    ProfileOptResult result;
    result.throughput = -std::numeric_limits<double>::infinity();

    auto consider = [&](const Profile& candidate) {
        double cum = 0.0, worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cum += harvested_energy(s, geoms[i], candidate.rho[i]) - candidate.power[i];
            worst = std::min(worst, cum);
        }
        // passes preserve feasibility by construction; restore as a backstop
        if (worst < -1e-12) {
            const Profile restored = detail::restore_causality(s, geoms, candidate);
            const double value = detail::profile_value(s, geoms, restored, proto);
            if (value > result.throughput) {
                result.throughput = value;
                result.profile = restored;
            }
            return value;
        }
        const double value = detail::profile_value(s, geoms, candidate, proto);
        if (value > result.throughput) {
            result.throughput = value;
            result.profile = candidate;
        }
        return value;
    };

    // linearly weighted running average of the inner profiles; for DF the
    // primal is concave, so this ergodic sequence approaches the optimum
    // even though individual inner solutions jump between extreme points
    Profile average;
    average.power.assign(n, 0.0);
    average.rho.assign(n, 0.0);
    double weight_sum = 0.0;
    std::size_t iter_count = 0;

    auto evaluate = [&](const std::vector<double>& x) {
        DualState duals;
        duals.lambda.assign(x.begin(), x.begin() + static_cast<long>(n));
        if (df) duals.theta.assign(x.begin() + static_cast<long>(n), x.end());
        const std::vector<double> alpha = duals.alphas();

        Profile prof;
        prof.power.resize(n);
        prof.rho.resize(n);
        double dual_value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const SlotSolution sol =
                df ? df_slot_solve(s, geoms[i], alpha[i], duals.theta[i], p_cap)
                   : af_slot_solve(s, geoms[i], alpha[i], p_cap, opts.inner_tol,
                                   opts.inner_rounds);
            prof.power[i] = sol.p;
            prof.rho[i] = sol.rho;
            dual_value += sol.objective;
        }

        InnerEval ev;
        ev.dual_value = dual_value;
        ev.subgradient = dual_subgradient(s, traj, prof, duals, proto);

        const double w = static_cast<double>(++iter_count);
        weight_sum += w;
        for (std::size_t i = 0; i < n; ++i) {
            average.power[i] += (prof.power[i] - average.power[i]) * (w / weight_sum);
            average.rho[i] += (prof.rho[i] - average.rho[i]) * (w / weight_sum);
        }

        const double primal = consider(detail::restore_causality(s, geoms, std::move(prof)));
        consider(detail::restore_causality(s, geoms, average));
        if (opts.record_trace) {
            result.dual_trace.push_back(dual_value);
            result.primal_trace.push_back(primal);
        }
        return ev;
    };

    DualAscentOptions ao;
    ao.scheme = opts.scheme;
    ao.tol = opts.tol;
    ao.max_iter = opts.max_iter;
    ao.patience = opts.patience;
    ao.step0 = opts.step0;
    ao.ellipsoid_radius = opts.ellipsoid_radius;
    auto [best_duals, rep] = dual_ascent(evaluate, init, lo, hi, ao);

    // primal polish: seed with the myopic forward profile (a different
    // activation basin than the dual projection tends to reach), then
    // alternate per-slot budget rebalancing, slack spending, exact power
    // re-allocation at frozen ratios, per-slot ratio refinement, and
    // cross-slot budget transfers, keeping only improvements
    consider(detail::myopic_profile(s, geoms, proto));
    for (int sweep = 0; sweep < opts.polish_sweeps; ++sweep) {
        const double before = result.throughput;
        Profile rebalanced = result.profile;
        detail::budget_line_pass(s, geoms, proto, rebalanced);
        consider(rebalanced);
        Profile spent = result.profile;
        detail::slack_spend_pass(s, geoms, proto, spent);
        consider(spent);
        consider(detail::power_reallocate(s, geoms, proto, result.profile, p_cap,
                                          opts.polish_iters));
        Profile refined = result.profile;
        detail::rho_refine_pass(s, geoms, proto, refined);
        consider(refined);
        Profile traded = result.profile;
        detail::pair_transfer_pass(s, geoms, proto, traded);
        consider(traded);
        Profile shifted = result.profile;
        detail::budget_transfer_pass(s, geoms, proto, shifted);
        consider(shifted);
        if (result.throughput - before < 1e-12) break;
    }

    result.duals.lambda.assign(best_duals.begin(), best_duals.begin() + static_cast<long>(n));
    if (df) result.duals.theta.assign(best_duals.begin() + static_cast<long>(n), best_duals.end());
    result.dual_value = rep.best_value;
    result.report = rep;
    return result;
}

}  // namespace swiptrelay
