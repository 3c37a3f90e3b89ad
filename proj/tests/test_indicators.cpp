#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace tpsim;
using Catch::Approx;

TEST_CASE("kpi rows") {
    const KpiRow r{200.0, 150.0};
    CHECK(r.delta() == -50.0);
    CHECK(*r.relative() == -0.25);
    CHECK_FALSE((KpiRow{0.0, 10.0}).relative().has_value());
    KpiBlock k;
    k.lost = {0.0, 3.0};
    CHECK(k.at("lost").value == 3.0);
    CHECK_THROWS_AS(k.at("nope"), std::out_of_range);
}

TEST_CASE("kpis follow their definitions") {
    const auto c = fixtures::default_scenario();
    const auto r = run_single(c, fixtures::synthetic_two_peak_demand());
    CHECK(r.kpis.daily_inflow.baseline == Approx(sum(r.baseline.inflow)));
    CHECK(r.kpis.daily_inflow.value == Approx(sum(r.modified.inflow)));
    double peak = 0.0, policy_peak = 0.0;
    for (int t = 0; t < 288; ++t) {
        peak = std::max(peak, r.modified.traffic.values[t]);
        if (c.policy.window.contains(t)) policy_peak = std::max(policy_peak, r.modified.traffic.values[t]);
    }
    CHECK(r.kpis.max_traffic_day.value == peak);
    CHECK(r.kpis.max_traffic_policy_hours.value == policy_peak);
    CHECK(r.kpis.daily_emissions.value == Approx(sum(r.modified.emissions.total)));
    CHECK(r.kpis.time_shifted.value == Approx(r.behavior.time_shifted()));
    CHECK(r.kpis.mode_shifted.value == Approx(r.behavior.mode_shifted()));
    CHECK(r.kpis.lost.value == Approx(r.behavior.lost()));
    CHECK(r.kpis.daily_revenue.value == r.revenue);
    CHECK(r.revenue > 0.0);
}

TEST_CASE("A1 signs on the two-peak fixture") {
    const auto c = support::bundled("a1");
    const auto d = support::bundled_demand();
    const auto r = run_single(c, d);
    CHECK(r.kpis.daily_inflow.delta() < 0.0);
    CHECK(r.kpis.max_traffic_policy_hours.delta() < 0.0);
    CHECK(r.kpis.daily_emissions.delta() < 0.0);
    CHECK(r.modified.inflow[c.policy.window.start - 1] > d.inflow[c.policy.window.start - 1]);
    CHECK(r.modified.inflow[c.policy.window.end + 1] > d.inflow[c.policy.window.end + 1]);
}

TEST_CASE("null policy leaves every KPI unchanged") {
    auto c = fixtures::default_scenario();
    c.policy.exempt_fraction = 1.0;
    const auto r = run_single(c, fixtures::synthetic_two_peak_demand());
    for (const auto* row : r.kpis.rows()) CHECK(row->delta() == 0.0);
    CHECK(r.modified.inflow == r.baseline.inflow);
    CHECK(r.modified.traffic.values == r.baseline.traffic.values);
    CHECK(r.modified.emissions.total == r.baseline.emissions.total);
}

TEST_CASE("revenue") {
    auto c = fixtures::default_scenario();
    const auto d = fixtures::synthetic_two_peak_demand();
    c.policy.fee_by_class.assign(7, 0.0);
    CHECK(run_single(c, d).revenue == 0.0);

    c = fixtures::default_scenario();
    c.policy.exempt_fraction = 1.0;
    CHECK(run_single(c, d).revenue == 0.0);

    // Hand evaluation with a single class and only rigidity available.
    c = fixtures::default_scenario();
    c.fleet = FleetMix{{1.0}, {0.1}, 2.5};
    c.policy.fee_by_class = {4.0};
    c.behavior.anticipate_median = Parameter::point(0);
    c.behavior.postpone_median = Parameter::point(0);
    c.behavior.mode_shift_enabled = false;
    c.policy.window = {100, 110};
    const auto r = run_single(c, d);
    const double p = std::exp(-std::numbers::ln2 * 4.0 / 5.5);
    double expected = 0.0;
    for (int t = 100; t <= 110; ++t) {
        // At t_e postponement is accepted with certainty and splits the rigid travelers.
        const double rigid = t == 110 ? p / 2 : p;
        expected += 4.0 * rigid * (d.inflow[t] + d.starting[t]);
    }
    CHECK(r.revenue == Approx(expected).epsilon(1e-12));
}

TEST_CASE("mode shifted is zero when mode shift is off") {
    const auto r = run_single(support::bundled("b3"), support::bundled_demand());
    CHECK(r.kpis.mode_shifted.value == 0.0);
    CHECK(r.kpis.mode_shifted.delta() == 0.0);
}

TEST_CASE("scenario comparison") {
    const auto d = support::bundled_demand();
    const auto a1 = run_single(support::bundled("a1"), d);
    const auto a2 = run_single(support::bundled("a2"), d);
    const auto t = compare_scenarios({{"A1", a1.kpis}, {"A2", a2.kpis}});
    CHECK(t.names == std::vector<std::string>{"A1", "A2"});
    CHECK(t.difference("daily_inflow", 0, 1) < 0.0);
    CHECK(a2.kpis.daily_inflow.delta() < a1.kpis.daily_inflow.delta());

    const auto same = compare_scenarios({{"x", a1.kpis}, {"y", a1.kpis}});
    for (auto k : KpiBlock::names) CHECK(same.difference(k, 0, 1) == 0.0);

    CHECK_THROWS_AS(compare_scenarios({{"A1", a1.kpis}}), ValidationError);
    CHECK_THROWS_AS(compare_scenarios({{"A1", a1.kpis}, {"A1", a2.kpis}}), ValidationError);
}

TEST_CASE("afternoon window cuts more policy-hours traffic on an afternoon-heavy day") {
    const auto d = support::bundled_demand();
    const auto a3 = run_single(support::bundled("a3"), d);
    const auto a4 = run_single(support::bundled("a4"), d);
    CHECK(a4.kpis.max_traffic_policy_hours.delta() < a3.kpis.max_traffic_policy_hours.delta());
}
