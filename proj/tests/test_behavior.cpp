#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"

using namespace tpsim;
using namespace tpsim::behavior;
using Catch::Approx;

namespace {

// Independent reference for the simultaneous choice: walk all 2^4 accept /
// reject outcomes, split each outcome's probability evenly over what it accepted.
std::array<double, 5> brute_force_choice(const Marginals& p) {
    std::array<double, 5> out{}; // 4 strategies + lost
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) {
                    const int accepted[4] = {a, b, c, d};
                    double prob = 1.0;
                    int count = 0;
                    for (int x = 0; x < 4; ++x) {
                        prob *= accepted[x] ? p[x] : 1.0 - p[x];
                        count += accepted[x];
                    }
                    if (count == 0) out[4] += prob;
                    for (int x = 0; x < 4; ++x)
                        if (accepted[x]) out[x] += prob / count;
                }
    return out;
}

// Sum over dwell T >= 1 of P[shift >= offset + T] * P[tau = T], truncated.
double epsilon_series(double offset, double median, int mean_dwell, int terms = 10000) {
    const double p = 1.0 / mean_dwell;
    double s = 0.0;
    for (int T = 1; T <= terms; ++T)
        s += std::exp(-ln2 * (offset + T) / median) * std::pow(1.0 - p, T - 1) * p;
    return s;
}

FleetMix bologna() { return builtin_bologna_defaults().fleet; }

} // namespace

TEST_CASE("acceptance probability") {
    CHECK(acceptance_probability(5, 5) == Approx(0.5).epsilon(1e-15));
    CHECK(acceptance_probability(0, 3) == 1.0);
    CHECK(acceptance_probability(10, 5) == Approx(0.25).epsilon(1e-15));
    CHECK(acceptance_probability(0, 0) == 1.0);
    CHECK(acceptance_probability(1, 0) == 0.0);
}

TEST_CASE("rigidity probabilities") {
    PolicyParams policy{{96, 216}, 0.0, std::vector<double>(7, 5.0)};
    auto r = rigidity_probabilities(policy, bologna(), 5.0);
    for (double p : r.by_class) CHECK(p == Approx(0.5));
    CHECK(r.overall == Approx(0.5));

    policy.fee_by_class = {10, 10, 10, 10, 5, 5, 5};
    r = rigidity_probabilities(policy, bologna(), 5.0);
    double brute = 0.0;
    for (std::size_t l = 0; l < 7; ++l) brute += bologna().class_shares[l] * std::exp(-ln2 * policy.fee_by_class[l] / 5.0);
    CHECK(r.overall == Approx(brute).epsilon(1e-14));
    CHECK(r.overall == Approx(0.46025).epsilon(1e-12));

    policy.fee_by_class.assign(7, 0.0);
    CHECK(rigidity_probabilities(policy, bologna(), 5.0).overall == Approx(1.0));
}

TEST_CASE("rigidity is monotone in fee and cost median") {
    PolicyParams policy{{96, 216}, 0.0, std::vector<double>(7, 0.0)};
    double previous = 2.0;
    for (int fee = 0; fee <= 20; ++fee) {
        policy.fee_by_class.assign(7, fee * 0.5);
        const auto r = rigidity_probabilities(policy, bologna(), 5.5);
        CHECK(r.overall <= previous);
        previous = r.overall;
    }
    policy.fee_by_class.assign(7, 5.0);
    previous = -1.0;
    for (double m = 0.5; m <= 20.0; m += 0.5) {
        const auto r = rigidity_probabilities(policy, bologna(), m);
        CHECK(r.overall >= previous);
        previous = r.overall;
    }
}

TEST_CASE("postponement probability") {
    const Window w{96, 216};
    CHECK(postponement_probability(216, w, 12) == 1.0);
    CHECK(postponement_probability(204, w, 12) == Approx(0.5));
    CHECK(postponement_probability(200, w, 0) == 0.0);
    CHECK(postponement_probability(216, w, 0) == 1.0);
    CHECK_THROWS_AS(postponement_probability(95, w, 12), std::out_of_range);
}

TEST_CASE("anticipation dwell correction") {
    // Mean dwell of one interval collapses the correction to a one-interval shift.
    CHECK(dwell_correction(12, 1) == Approx(std::exp(-ln2 / 12)).epsilon(1e-15));
    CHECK(dwell_correction(0, 4) == 0.0);
    CHECK_THROWS_AS(dwell_correction(12, 0), std::invalid_argument);

    const Window w{96, 216};
    CHECK(anticipation_probability(96, w, 0, 4) == 0.0);
    for (int t = w.start; t <= w.end; ++t) {
        const double mirrored = acceptance_probability(t - w.start, 12);
        CHECK(anticipation_probability(t, w, 12, 4) <= mirrored);
    }
}

TEST_CASE("anticipation matches the truncated dwell series") {
    struct Frozen {
        int dwell;
        double median;
        double epsilon;
    };
    // Series sums at zero offset, 10^4 terms, computed independently.
    const Frozen frozen[] = {
        {1, 1, 0.5},  {1, 12, 0.9438743126816935}, {1, 36, 0.980930087668915},
        {4, 1, 0.2},  {4, 12, 0.8078507730222039}, {4, 36, 0.9278481396309473},
        {12, 1, 0.0769230769230769}, {12, 12, 0.583581359000867}, {12, 36, 0.810840795861837},
    };
    const Window w{50, 150};
    for (const auto& f : frozen) {
        INFO("dwell " << f.dwell << " median " << f.median);
        CHECK(std::abs(dwell_correction(f.median, f.dwell) - f.epsilon) <= 1e-9);
        for (int offset : {0, 1, 5, 20, 100}) {
            const double closed = anticipation_probability(w.start + offset, w, f.median, f.dwell);
            CHECK(std::abs(closed - epsilon_series(offset, f.median, f.dwell)) <= 1e-9);
        }
    }
}

TEST_CASE("mode shift logit") {
    ZoneTable single;
    single.rows = {{"z", 1.0, 1.0, 0.0, 0.0, 0.0, 0.0}};
    const LogitCoefficients beta{-1.24, 4.5, -1.45, -0.30, -0.034};
    auto m = mode_shift_probabilities(single, beta, true);
    CHECK(m.by_zone[0] == Approx(0.22443598573092652).epsilon(1e-14));
    CHECK(m.overall_inflow == m.by_zone[0]);

    m = mode_shift_probabilities(fixtures::synthetic_zones(), beta, false);
    for (double p : m.by_zone) CHECK(p == 0.0);
    CHECK(m.overall_inflow == 0.0);
    CHECK(m.overall_starting == 0.0);

    // Two equally weighted zones whose utilities give 0.2 and 0.4.
    ZoneTable two;
    const double u1 = std::log(0.2 / 0.8), u2 = std::log(0.4 / 0.6);
    two.rows = {{"a", 0.5, 0.5, 0, 0, 0, 0}, {"b", 0.5, 0.5, 0, 0, 0, 0}};
    two.rows[1].frequency = 1.0;
    m = mode_shift_probabilities(two, LogitCoefficients{u1, u2 - u1, 0, 0, 0}, true);
    CHECK(m.by_zone[0] == Approx(0.2));
    CHECK(m.by_zone[1] == Approx(0.4));
    CHECK(m.overall_inflow == Approx(0.3));

    auto no_starting = fixtures::synthetic_zones();
    for (auto& r : no_starting.rows) r.weight_starting.reset();
    m = mode_shift_probabilities(no_starting, beta, true);
    CHECK(m.starting_fallback);
    CHECK(m.overall_starting == m.overall_inflow);
}

TEST_CASE("simultaneous choice examples") {
    auto r = strategy_shares(Marginals{1, 0, 0, 0}, 0.0);
    CHECK(r.rigid == 1.0);
    CHECK(r.anticipate + r.postpone + r.mode_shift + r.lost == 0.0);

    r = strategy_shares(Marginals{1, 1, 1, 1}, 0.0);
    CHECK(r.rigid == Approx(0.25));
    CHECK(r.anticipate == Approx(0.25));
    CHECK(r.postpone == Approx(0.25));
    CHECK(r.mode_shift == Approx(0.25));
    CHECK(r.lost == 0.0);

    r = strategy_shares(Marginals{0.5, 0.5, 0.5, 0.5}, 0.2);
    for (double x : {r.rigid, r.anticipate, r.postpone, r.mode_shift}) CHECK(x == Approx(0.1875).epsilon(1e-14));
    CHECK(r.lost == Approx(0.05).epsilon(1e-14));
    CHECK(r.exempt == 0.2);
}

TEST_CASE("simultaneous choice equals brute-force enumeration") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const Marginals p{u(rng), u(rng), u(rng), u(rng)};
        const double fe = u(rng);
        const auto row = strategy_shares(p, fe);
        const auto ref = brute_force_choice(p);
        CHECK(std::abs(row.rigid - (1 - fe) * ref[0]) <= 1e-12);
        CHECK(std::abs(row.anticipate - (1 - fe) * ref[1]) <= 1e-12);
        CHECK(std::abs(row.postpone - (1 - fe) * ref[2]) <= 1e-12);
        CHECK(std::abs(row.mode_shift - (1 - fe) * ref[3]) <= 1e-12);
        CHECK(std::abs(row.lost - (1 - fe) * ref[4]) <= 1e-12);
        CHECK(std::abs(row.total() - 1.0) <= 1e-9);
    }
}

TEST_CASE("share series closes inside the window and is inert outside") {
    const auto c = fixtures::default_scenario();
    const auto curves = acceptance_curves(c, nominal_draw(c.behavior), Stream::inflow);
    const auto s = strategy_share_series(curves, c.policy, c.grid);
    for (int t = 0; t < c.grid.n_intervals; ++t) {
        const auto& r = s.rows[t];
        if (c.policy.window.contains(t)) {
            CHECK(std::abs(r.total() - 1.0) <= 1e-9);
        } else {
            CHECK(r == StrategyRow{});
        }
    }
    CHECK(curves.p_rigid_overall ==
          Approx(std::inner_product(c.fleet.class_shares.begin(), c.fleet.class_shares.end(),
                                    curves.p_rigid_by_class.begin(), 0.0))
              .epsilon(1e-12));
    CHECK_THROWS_AS(strategy_shares(10, curves, c.policy), std::out_of_range);
}

TEST_CASE("redistribution bins") {
    // Median one interval: the first post-policy interval holds half the mass.
    CHECK(redistribution_bin_mass(1, 1.0) * 100.0 == Approx(50.0));
    CHECK(redistribution_bin_mass(1, 0.0) == 1.0);
    CHECK(redistribution_bin_mass(2, 0.0) == 0.0);
    double tail = 0.0;
    for (int k = 1; k <= 60; ++k) tail += redistribution_bin_mass(k, 18.0);
    CHECK(tail == Approx(0.9007874342519875).epsilon(1e-13));
}

TEST_CASE("time shift plan conserves shifted vehicles") {
    const int n = 288;
    StrategyShares shares;
    shares.window = {60, 227}; // leaves 60 intervals after t_e
    shares.rows.assign(n, StrategyRow{});
    std::vector<double> demand(n, 0.0);
    // TN_p = 1000 from a single interval.
    shares.rows[100] = StrategyRow{0.0, 0.0, 0.0, 0.5, 0.0, 0.5};
    demand[100] = 2000.0;
    auto plan = time_shift_plan(demand, shares, 18.0, 18.0);
    CHECK(plan.total_postponing == 1000.0);
    CHECK(plan.total_anticipating == 0.0);
    CHECK(plan.postpone_mass == Approx(0.9007874342519875).epsilon(1e-13));
    CHECK(sum(plan.redistributed_postponed) == Approx(1000.0).epsilon(1e-12));
    for (double x : plan.redistributed_anticipated) CHECK(x == 0.0);
    for (int t = 0; t <= shares.window.end; ++t) CHECK(plan.redistributed_postponed[t] == 0.0);
    for (int t = shares.window.end + 2; t < n; ++t)
        CHECK(plan.redistributed_postponed[t] <= plan.redistributed_postponed[t - 1]);
}

TEST_CASE("time shift mass on random scenarios") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> start(1, 150), len(0, 120);
    std::uniform_real_distribution<double> med(0.0, 40.0);
    auto c = fixtures::default_scenario();
    for (int i = 0; i < 50; ++i) {
        c.policy.window.start = start(rng);
        c.policy.window.end = std::min(c.policy.window.start + len(rng), 286);
        BehaviorDraw d{5.5, med(rng), med(rng), med(rng), med(rng)};
        const auto demand = support::random_profile(rng, 288);
        const auto r = respond(demand, c, d, Stream::inflow);
        CHECK(std::abs(sum(r.plan.redistributed_anticipated) - r.plan.total_anticipating) <=
              1e-6 * std::max(1.0, r.plan.total_anticipating));
        CHECK(std::abs(sum(r.plan.redistributed_postponed) - r.plan.total_postponing) <=
              1e-6 * std::max(1.0, r.plan.total_postponing));
        for (int t = c.policy.window.start; t < 288; ++t) CHECK(r.plan.redistributed_anticipated[t] == 0.0);
        for (int t = 0; t <= c.policy.window.end; ++t) CHECK(r.plan.redistributed_postponed[t] == 0.0);
        for (int t = 1; t < c.policy.window.start; ++t)
            CHECK(r.plan.redistributed_anticipated[t - 1] <= r.plan.redistributed_anticipated[t] + 1e-12);
        const double before = sum(demand);
        const double after = sum(r.modified) + r.mode_shifted + r.lost;
        CHECK(std::abs(before - after) <= 1e-6 * before);
    }
}

TEST_CASE("shifting with no room left in the day is an error") {
    const int n = 288;
    StrategyShares shares;
    shares.window = {100, n - 1};
    shares.rows.assign(n, StrategyRow{});
    shares.rows[150] = StrategyRow{0.0, 0.5, 0.0, 0.5, 0.0, 0.0};
    std::vector<double> demand(n, 10.0);
    CHECK_THROWS_AS(time_shift_plan(demand, shares, 18, 18), ModelError);

    shares.window = {0, 100};
    shares.rows.assign(n, StrategyRow{});
    shares.rows[50] = StrategyRow{0.0, 0.5, 0.5, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(time_shift_plan(demand, shares, 18, 18), ModelError);

    shares.rows[50] = StrategyRow{0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    CHECK_NOTHROW(time_shift_plan(demand, shares, 18, 18));
}

TEST_CASE("modified demand") {
    auto c = fixtures::default_scenario();
    const auto demand = fixtures::synthetic_two_peak_demand();
    const auto draw = nominal_draw(c.behavior);

    SECTION("full exemption leaves demand untouched") {
        c.policy.exempt_fraction = 1.0;
        const auto r = respond(demand.inflow, c, draw, Stream::inflow);
        CHECK(r.modified == demand.inflow);
        CHECK(r.time_shifted == 0.0);
        CHECK(r.mode_shifted == 0.0);
        CHECK(r.lost == 0.0);
    }
    SECTION("inside the window only exempt and rigid travelers remain") {
        const auto r = respond(demand.inflow, c, draw, Stream::inflow);
        for (int t = c.policy.window.start; t <= c.policy.window.end; ++t)
            CHECK(r.modified[t] == Approx((r.shares.rows[t].exempt + r.shares.rows[t].rigid) * demand.inflow[t]));
        for (int t = 0; t < c.grid.n_intervals; ++t)
            if (!c.policy.window.contains(t)) CHECK(r.modified[t] >= demand.inflow[t]);
        CHECK(r.modified[c.policy.window.start - 1] > demand.inflow[c.policy.window.start - 1]);
        CHECK(r.modified[c.policy.window.end + 1] > demand.inflow[c.policy.window.end + 1]);
    }
    SECTION("streams use their own zone weights") {
        const auto in = respond(demand.inflow, c, draw, Stream::inflow);
        const auto st = respond(demand.starting, c, draw, Stream::starting);
        CHECK(in.curves.p_modeshift_overall != st.curves.p_modeshift_overall);
        const auto k = behavior_kpis(in, st);
        CHECK(k.mode_shifted() == Approx(in.mode_shifted + st.mode_shifted));
    }
    SECTION("zero demand gives zero counts") {
        const std::vector<double> zero(288, 0.0);
        const auto r = respond(zero, c, draw, Stream::inflow);
        CHECK(r.time_shifted == 0.0);
        CHECK(r.mode_shifted == 0.0);
        CHECK(r.lost == 0.0);
    }
}

TEST_CASE("zero shift medians only shift from the boundary intervals") {
    const auto c = support::bundled("b2");
    const auto curves = acceptance_curves(c, nominal_draw(c.behavior), Stream::inflow);
    for (int t = c.policy.window.start; t <= c.policy.window.end; ++t) {
        CHECK(curves.p_anticipate[t] == 0.0);
        CHECK(curves.p_postpone[t] == (t == c.policy.window.end ? 1.0 : 0.0));
    }
    const auto r = respond(support::bundled_demand().inflow, c, nominal_draw(c.behavior), Stream::inflow);
    CHECK(r.time_shifted > 0.0);
}
