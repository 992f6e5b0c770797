#include <doctest.h>

#include <cmath>
#include <random>

#include "campusflow/demand.hpp"
#include "campusflow/errors.hpp"
#include "support/fixtures.hpp"

using namespace campusflow;
using demand::DemandProfile;

namespace {

DemandProfile profile(std::initializer_list<demand::RateSegment> segs) {
    DemandProfile p;
    p.segments = segs;
    return p;
}

}  // namespace

TEST_CASE("cumulative_demand") {
    const auto p = profile({{0.0, 10.0, 0.5}});
    CHECK(demand::cumulative_demand(p, 10.0) == doctest::Approx(5.0));
    CHECK(demand::cumulative_demand(p, 0.0) == doctest::Approx(0.0));

    const auto gapped = profile({{0.0, 2.0, 1.0}, {4.0, 6.0, 1.0}});
    CHECK(demand::cumulative_demand(gapped, 5.0) == doctest::Approx(3.0));
    const auto late = profile({{5.0, 10.0, 1.0}});
    CHECK(demand::cumulative_demand(late, 3.0) == doctest::Approx(0.0));
}

TEST_CASE("departure_times crossings") {
    CHECK(demand::departure_times(profile({{0.0, 10.0, 0.5}})) ==
          std::vector<double>{2.0, 4.0, 6.0, 8.0, 10.0});
    CHECK(demand::departure_times(profile({{0.0, 2.0, 1.0}, {2.0, 4.0, 0.0}, {4.0, 6.0, 1.0}})) ==
          std::vector<double>{1.0, 2.0, 5.0, 6.0});
    CHECK(demand::departure_times(profile({{0.0, 100.0, 0.0}})).empty());
}

TEST_CASE("departure_times match the cumulative count") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        std::mt19937_64 rng(seed);
        DemandProfile p;
        double t = static_cast<double>(rng() % 50);
        const int n = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < n; ++i) {
            const double len = 10.0 + static_cast<double>(rng() % 200);
            const double rate = static_cast<double>(rng() % 40) / 100.0;
            p.segments.push_back({t, t + len, rate});
            t += len + static_cast<double>(rng() % 30);
        }
        demand::validate_profile(p);
        const auto times = demand::departure_times(p);
        const double total = demand::cumulative_demand(p, t + 1.0);
        REQUIRE(times.size() == static_cast<std::size_t>(std::floor(total + 1e-9)));
        for (std::size_t k = 0; k < times.size(); ++k)
            REQUIRE(demand::cumulative_demand(p, times[k]) ==
                    doctest::Approx(static_cast<double>(k + 1)).epsilon(1e-9));
        for (std::size_t k = 1; k < times.size(); ++k) REQUIRE(times[k] >= times[k - 1]);
    }
}

TEST_CASE("validate_profile rejects malformed segments") {
    CHECK_THROWS_AS(demand::validate_profile(profile({{5.0, 5.0, 0.1}})), InputError);
    CHECK_THROWS_AS(demand::validate_profile(profile({{0.0, 10.0, -0.1}})), InputError);
    CHECK_THROWS_AS(demand::validate_profile(profile({{0.0, 10.0, 0.1}, {5.0, 15.0, 0.1}})),
                    InputError);
}

TEST_CASE("poisson_departures determinism and zero rate") {
    CHECK(demand::poisson_departures(profile({{0.0, 100.0, 0.0}}), 7).empty());
    const auto p = profile({{0.0, 500.0, 0.2}});
    CHECK(demand::poisson_departures(p, 42) == demand::poisson_departures(p, 42));
    CHECK(demand::poisson_departures(p, 42) != demand::poisson_departures(p, 43));
}

TEST_CASE("poisson_departures count lies in the statistical band") {
    // mean 5000; the asserted band is far wider than 4 sigma
    const auto p = profile({{0.0, 10000.0, 0.5}});
    const auto times = demand::poisson_departures(p, 12345);
    CHECK(times.size() >= 4400);
    CHECK(times.size() <= 5600);
    for (std::size_t i = 1; i < times.size(); ++i) REQUIRE(times[i] >= times[i - 1]);
}

TEST_CASE("build_trips composes departures and routes") {
    const auto fix = fixtures::capacity_fixture();
    demand::ODPair od;
    od.origin = 1;
    od.destination = 2;
    od.profile = profile({{0.0, 10.0, 0.5}});
    const auto trips = demand::build_trips(fix.net, {od}, std::nullopt);
    REQUIRE(trips.size() == 5);
    for (std::size_t i = 0; i < trips.size(); ++i) {
        CHECK(trips[i].vehicle_id == static_cast<demand::VehicleId>(i + 1));
        CHECK(trips[i].departure_s == doctest::Approx(2.0 * static_cast<double>(i + 1)));
        CHECK(trips[i].route == std::vector<netgraph::LinkId>{1});
    }
}

TEST_CASE("build_trips rejects unroutable pairs") {
    const auto fix = fixtures::capacity_fixture();
    demand::ODPair od;
    od.origin = 2;
    od.destination = 1;  // no reverse link
    od.profile = profile({{0.0, 10.0, 0.5}});
    CHECK_THROWS_WITH_AS(demand::build_trips(fix.net, {od}, std::nullopt),
                         doctest::Contains("unroutable"), InputError);
}

TEST_CASE("build_trips breaks departure ties by OD declaration order") {
    // two opposite links so both ODs are routable
    auto net = fixtures::make_net({fixtures::LinkSpec{1, 1, 2}, fixtures::LinkSpec{2, 2, 1}}, {});
    demand::ODPair first;
    first.origin = 2;
    first.destination = 1;
    first.profile = profile({{0.0, 10.0, 0.5}});
    demand::ODPair second;
    second.origin = 1;
    second.destination = 2;
    second.profile = profile({{0.0, 10.0, 0.5}});
    const auto trips = demand::build_trips(net, {first, second}, std::nullopt);
    REQUIRE(trips.size() == 10);
    // equal departure times alternate in declaration order
    CHECK(trips[0].origin == 2);
    CHECK(trips[1].origin == 1);
    CHECK(trips[0].departure_s == trips[1].departure_s);
    for (std::size_t i = 1; i < trips.size(); ++i) {
        const bool ordered = trips[i - 1].departure_s < trips[i].departure_s ||
                             (trips[i - 1].departure_s == trips[i].departure_s &&
                              trips[i - 1].vehicle_id < trips[i].vehicle_id);
        REQUIRE(ordered);
    }
}
