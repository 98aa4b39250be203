#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "swiptrelay/trajectory.hpp"

using namespace swiptrelay;

namespace {

Scenario base_scenario() {
    Scenario s;
    validate_scenario(s);
    return s;
}

struct RandomSlots {
    Scenario s;
    Trajectory traj;
    Profile prof;
};

RandomSlots random_slots(std::mt19937_64& rng, int n, double p_lo = 0.0, double rho_lo = 0.0) {
    std::uniform_real_distribution<double> ux(-0.5, 2.5), uy(-1.5, 1.5);
    std::uniform_real_distribution<double> up(p_lo, 2.0), ur(rho_lo, 1.0);
    RandomSlots r;
    r.s = base_scenario();
    r.s.num_slots = n;
    r.traj.resize(n);
    for (int i = 0; i < n; ++i) {
        r.traj[i] = {ux(rng), uy(rng)};
        r.prof.power.push_back(up(rng));
        r.prof.rho.push_back(ur(rng));
    }
    return r;
}

Trajectory straight_line(const Scenario& s) {
    Trajectory t(s.num_slots);
    for (int i = 0; i < s.num_slots; ++i) {
        const double f = (i + 1.0) / (s.num_slots + 1.0);
        t[i] = s.start + Vec2{f * (s.end.x - s.start.x), f * (s.end.y - s.start.y)};
    }
    return t;
}

Profile harvest_spend_profile(const Scenario& s, const Trajectory& t, double rho) {
    Profile p;
    for (const Vec2& xy : t) {
        p.rho.push_back(rho);
        p.power.push_back(harvested_energy(s, slot_geometry(s, xy), rho));
    }
    return p;
}

}  // namespace

TEST_CASE("relayed-rate bound coefficients collapse when a dial is off") {
    const Scenario s = base_scenario();
    Trajectory traj{{0.7, 0.2}, {1.1, -0.3}};
    Profile prof;

    SECTION("zero power") {
        prof.power = {0.0, 0.0};
        prof.rho = {0.6, 0.3};
        const auto k = af_bound_coefficients(s, traj, prof);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(k.phi[i] == 0.0);
            CHECK(k.mu[i] == 0.0);
            CHECK(k.delta[i] == 0.0);
            CHECK(k.eta[i] == 0.0);
        }
        const auto kd = df_bound_coefficients(s, traj, prof);
        CHECK(kd.mu2[0] == 0.0);
        CHECK(kd.mu2[1] == 0.0);
    }
    SECTION("zero splitting ratio") {
        prof.power = {0.8, 0.5};
        prof.rho = {0.0, 0.0};
        const auto k = af_bound_coefficients(s, traj, prof);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(k.phi[i] == 0.0);
            CHECK(k.mu[i] == 0.0);
            CHECK(k.delta[i] == 0.0);
            CHECK(k.eta[i] == 0.0);
        }
        const auto kd = df_bound_coefficients(s, traj, prof);
        CHECK(kd.mu1[0] == 0.0);
        CHECK(kd.mu1[1] == 0.0);
    }
    SECTION("both dials on keeps the curvature strictly positive") {
        prof.power = {0.8, 0.5};
        prof.rho = {0.6, 0.3};
        const auto k = af_bound_coefficients(s, traj, prof);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(k.phi[i] > 0.0);
            CHECK(k.mu[i] > 0.0);
        }
        const auto kd = df_bound_coefficients(s, traj, prof);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(kd.mu1[i] > 0.0);
            CHECK(kd.mu2[i] > 0.0);
        }
    }
}

TEST_CASE("a slot directly over the source has a centered decode bound") {
    const Scenario s = base_scenario();
    Trajectory traj{{s.source.x, s.source.y}, {1.0, 0.5}};
    Profile prof;
    prof.power = {0.4, 0.4};
    prof.rho = {0.5, 0.5};
    const auto k = df_bound_coefficients(s, traj, prof);
    CHECK(k.delta1[0] == 0.0);
    CHECK(k.eta1[0] == 0.0);
    CHECK(k.mu1[0] > 0.0);
}

TEST_CASE("bound coefficients match an independent re-evaluation") {
    std::mt19937_64 rng(401);
    for (int t = 0; t < 100; ++t) {
        const auto [s, traj, prof] = random_slots(rng, 3, 0.05, 0.05);
        const double half = 0.5 / std::log(s.log_base);
        const auto ka = af_bound_coefficients(s, traj, prof);
        const auto kd = df_bound_coefficients(s, traj, prof);
        for (int i = 0; i < 3; ++i) {
            const double h2 = s.altitude * s.altitude;
            const double dsr2 = h2 + (traj[i].x - s.source.x) * (traj[i].x - s.source.x) +
                                (traj[i].y - s.source.y) * (traj[i].y - s.source.y);
            const double drd2 = h2 + (traj[i].x - s.dest.x) * (traj[i].x - s.dest.x) +
                                (traj[i].y - s.dest.y) * (traj[i].y - s.dest.y);
            const double r1 = s.ps * s.gamma0 * prof.rho[i] / (prof.rho[i] + s.rel_noise);
            const double r2 = prof.power[i] * s.gamma0;
            const double x = dsr2 * drd2 + r1 * drd2 + r2 * dsr2;
            const double phi = 1.0 / x - 1.0 / (x + r1 * r2 / (1.0 + s.ps * s.gamma));
            CHECK(ka.x_term[i] == Catch::Approx(x).epsilon(1e-14));
            CHECK(ka.phi[i] == Catch::Approx(phi).epsilon(1e-12));
            CHECK(ka.mu[i] ==
                  Catch::Approx(half * phi * (dsr2 + drd2 + r1 + r2)).epsilon(1e-12));
            CHECK(ka.delta[i] ==
                  Catch::Approx(2.0 * half * phi *
                                ((drd2 + r2) * (traj[i].x - s.source.x) +
                                 (dsr2 + r1) * (traj[i].x - s.dest.x)))
                      .epsilon(1e-12)
                      .margin(1e-15));
            CHECK(ka.eta[i] ==
                  Catch::Approx(2.0 * half * phi *
                                ((drd2 + r2) * (traj[i].y - s.source.y) +
                                 (dsr2 + r1) * (traj[i].y - s.dest.y)))
                      .epsilon(1e-12)
                      .margin(1e-15));

            const double m1 = half * r1 / (dsr2 * (r1 + dsr2));
            const double m2 = half * r2 / (drd2 * (r2 + (1.0 + s.ps * s.gamma) * drd2));
            CHECK(kd.mu1[i] == Catch::Approx(m1).epsilon(1e-13));
            CHECK(kd.mu2[i] == Catch::Approx(m2).epsilon(1e-13));
            CHECK(kd.delta1[i] ==
                  Catch::Approx(2.0 * m1 * (traj[i].x - s.source.x)).epsilon(1e-12).margin(1e-15));
            CHECK(kd.eta1[i] ==
                  Catch::Approx(2.0 * m1 * (traj[i].y - s.source.y)).epsilon(1e-12).margin(1e-15));
            CHECK(kd.delta2[i] ==
                  Catch::Approx(2.0 * m2 * (traj[i].x - s.dest.x)).epsilon(1e-12).margin(1e-15));
            CHECK(kd.eta2[i] ==
                  Catch::Approx(2.0 * m2 * (traj[i].y - s.dest.y)).epsilon(1e-12).margin(1e-15));
        }
    }
}

TEST_CASE("the bound is tight at zero increment") {
    std::mt19937_64 rng(402);
    for (int t = 0; t < 50; ++t) {
        const auto [s, traj, prof] = random_slots(rng, 3);
        const std::vector<Vec2> zero(3, Vec2{0.0, 0.0});
        const auto ba = lower_bound_value(af_bound_coefficients(s, traj, prof), zero);
        const auto bd = lower_bound_value(df_bound_coefficients(s, traj, prof), zero);
        for (int i = 0; i < 3; ++i) {
            const SlotGeometry g = slot_geometry(s, traj[i]);
            CHECK(ba.per_slot[i] ==
                  Catch::Approx(af_rate(s, g, prof.power[i], prof.rho[i])).margin(1e-12));
            CHECK(bd.per_slot[i] ==
                  Catch::Approx(df_rate(s, g, prof.power[i], prof.rho[i])).margin(1e-12));
        }
    }
}

TEST_CASE("the bound never exceeds the true rate") {
    std::mt19937_64 rng(403);
    std::uniform_real_distribution<double> ud(-0.3, 0.3);
    for (int t = 0; t < 1000; ++t) {
        const auto [s, traj, prof] = random_slots(rng, 3);
        const auto ka = af_bound_coefficients(s, traj, prof);
        const auto kd = df_bound_coefficients(s, traj, prof);
        std::vector<Vec2> inc(3);
        for (Vec2& v : inc) v = {ud(rng), ud(rng)};
        const auto ba = lower_bound_value(ka, inc);
        const auto bd = lower_bound_value(kd, inc);
        for (int i = 0; i < 3; ++i) {
            const SlotGeometry g = slot_geometry(s, traj[i] + inc[i]);
            const double q = inc[i].x * inc[i].x + inc[i].y * inc[i].y;
            CHECK(af_rate(s, g, prof.power[i], prof.rho[i]) >= ba.per_slot[i] - 1e-9);
            // each branch dominates its own bound even before the minimum
            const double b1 = kd.rate1[i] - kd.mu1[i] * q - kd.delta1[i] * inc[i].x -
                              kd.eta1[i] * inc[i].y;
            const double b2 = kd.rate2[i] - kd.mu2[i] * q - kd.delta2[i] * inc[i].x -
                              kd.eta2[i] * inc[i].y;
            CHECK(df_branch_decode(s, g, prof.rho[i]) >= b1 - 1e-9);
            CHECK(df_branch_forward(s, g, prof.power[i]) >= b2 - 1e-9);
            CHECK(df_rate(s, g, prof.power[i], prof.rho[i]) >= bd.per_slot[i] - 1e-9);
        }
    }
}

TEST_CASE("a powered-off slot has a bound constant in the increment") {
    const Scenario s = base_scenario();
    Trajectory traj{{0.9, 0.1}};
    Profile prof;
    prof.power = {0.0};
    prof.rho = {0.7};
    const auto k = af_bound_coefficients(s, traj, prof);
    const auto at_zero = lower_bound_value(k, {{0.0, 0.0}}).total;
    for (const Vec2 inc : {Vec2{0.2, -0.1}, Vec2{-0.15, 0.05}, Vec2{0.0, 0.19}})
        CHECK(lower_bound_value(k, {inc}).total == at_zero);
}

TEST_CASE("the underlying link composition is convex in the squared distances") {
    // f(z1, z2) = log(w + (r1 r2 / ((A1+z1)(A2+z2))) / (1 + r1/(A1+z1) + r2/(A2+z2)))
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> uc(0.1, 3.0), ua(0.2, 3.0), uf(-0.45, 0.9);
    for (int t = 0; t < 200; ++t) {
        const double w = uc(rng), r1 = uc(rng), r2 = uc(rng);
        const double a1 = ua(rng), a2 = ua(rng);
        auto f = [&](double z1, double z2) {
            const double u1 = a1 + z1, u2 = a2 + z2;
            return std::log(w + (r1 * r2 / (u1 * u2)) / (1.0 + r1 / u1 + r2 / u2));
        };
        const double z1 = uf(rng) * a1, z2 = uf(rng) * a2;
        const double h1 = 1e-4 * a1, h2 = 1e-4 * a2;
        const double fxx =
            (f(z1 + h1, z2) - 2.0 * f(z1, z2) + f(z1 - h1, z2)) / (h1 * h1);
        const double fyy =
            (f(z1, z2 + h2) - 2.0 * f(z1, z2) + f(z1, z2 - h2)) / (h2 * h2);
        const double fxy = (f(z1 + h1, z2 + h2) - f(z1 + h1, z2 - h2) -
                            f(z1 - h1, z2 + h2) + f(z1 - h1, z2 - h2)) /
                           (4.0 * h1 * h2);
        const double tr = fxx + fyy;
        const double disc = std::sqrt((fxx - fyy) * (fxx - fyy) + 4.0 * fxy * fxy);
        CHECK(0.5 * (tr - disc) >= -1e-6);  // smaller eigenvalue
    }
}

TEST_CASE("the incremental problem anchors at the current trajectory") {
    std::mt19937_64 rng(405);
    Scenario s = base_scenario();
    s.num_slots = 4;
    s.start = {0.0, 0.5};
    s.end = {0.3, 0.4};
    Trajectory traj = straight_line(s);
    const Profile prof = harvest_spend_profile(s, traj, 0.5);

    SECTION("zero increment is feasible and evaluates to the current rates") {
        for (Protocol proto : {Protocol::AF, Protocol::DF}) {
            const auto prob = build_incremental_problem(s, traj, prof, proto);
            const std::vector<Vec2> zero(4, Vec2{0.0, 0.0});
            CHECK(prob.constraints.max_violation(zero) <= 0.0);
            CHECK(objective_value(prob.objective, zero) ==
                  Catch::Approx(total_throughput(s, traj, prof, proto)).margin(1e-12));
            const std::size_t branches = proto == Protocol::DF ? 2 : 1;
            for (const auto& slot : prob.objective)
                CHECK(slot.branches.size() == branches);
        }
    }
    SECTION("an infeasible current trajectory is rejected") {
        Trajectory broken = traj;
        broken[1].x += 10.0;
        CHECK_THROWS_AS(build_incremental_problem(s, broken, prof, Protocol::AF),
                        std::invalid_argument);
    }
    SECTION("a single-slot chain still carries its two anchor links") {
        Scenario one = base_scenario();
        one.num_slots = 1;
        one.start = {0.0, 0.1};
        one.end = {0.1, 0.0};
        Trajectory t1{{0.05, 0.05}};
        Profile p1;
        p1.power = {0.3};
        p1.rho = {0.5};
        const auto prob = build_incremental_problem(one, t1, p1, Protocol::AF);
        CHECK(prob.constraints.size() == 1);
        CHECK(prob.constraints.max_violation({{0.0, 0.0}}) <= 0.0);
    }
}

TEST_CASE("an already stationary trajectory is returned unchanged") {
    Scenario s = base_scenario();
    s.num_slots = 6;
    s.start = {0.0, 0.5};
    s.end = {0.3, 0.4};
    const Trajectory init = straight_line(s);
    Profile prof;  // no relay power anywhere: the rate no longer depends on position
    prof.power.assign(6, 0.0);
    prof.rho.assign(6, 0.0);
    for (Protocol proto : {Protocol::AF, Protocol::DF}) {
        const auto r = optimize_trajectory(s, prof, init, proto);
        CHECK(r.iterations == 1);
        CHECK(r.converged);
        REQUIRE(r.trajectory.size() == init.size());
        for (std::size_t i = 0; i < init.size(); ++i) {
            CHECK(r.trajectory[i].x == init[i].x);
            CHECK(r.trajectory[i].y == init[i].y);
        }
    }
}

TEST_CASE("successive approximation improves the straight-line start") {
    const Scenario s = base_scenario();
    const Trajectory init = straight_line(s);
    const Profile prof = harvest_spend_profile(s, init, 0.5);
    for (Protocol proto : {Protocol::AF, Protocol::DF}) {
        TrajectoryOptOptions o;
        o.record_iterates = true;
        const auto r = optimize_trajectory(s, prof, init, proto, o);
        CHECK(r.converged);
        CHECK(r.iterations <= 20);
        CHECK(r.throughput_trace.back() > r.throughput_trace.front());
        for (std::size_t i = 0; i + 1 < r.throughput_trace.size(); ++i)
            CHECK(r.throughput_trace[i + 1] >= r.throughput_trace[i] - 1e-9);
        for (const Trajectory& it : r.iterates) CHECK(validate_trajectory(s, it).feasible);
        CHECK(validate_trajectory(s, r.trajectory).feasible);
        CHECK(r.bound_trace.size() == static_cast<std::size_t>(r.iterations));
    }
}

TEST_CASE("trajectory optimization rejects bad inputs") {
    Scenario s = base_scenario();
    s.num_slots = 4;
    s.start = {0.0, 0.5};
    s.end = {0.3, 0.4};
    const Trajectory init = straight_line(s);
    const Profile prof = harvest_spend_profile(s, init, 0.5);

    SECTION("infeasible initial trajectory") {
        Trajectory broken = init;
        broken[2].y -= 5.0;
        CHECK_THROWS_AS(optimize_trajectory(s, prof, broken, Protocol::AF),
                        std::invalid_argument);
    }
    SECTION("profile length mismatch") {
        Profile wrong = prof;
        wrong.power.pop_back();
        CHECK_THROWS_AS(optimize_trajectory(s, wrong, init, Protocol::AF),
                        std::invalid_argument);
    }
}
