#include <doctest.h>

#include <map>

#include "hrl/taxi.hpp"
#include "helpers.hpp"

using namespace hrl;
using namespace hrl::taxi;

namespace {

TaxiConfig deterministic_config() {
    TaxiConfig cfg;
    cfg.slip = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("state space has 500 states and the corner indices are fixed") {
    auto space = make_state_space(TaxiConfig{});
    CHECK(space.size() == 500);
    CHECK(encode({0, 0, 0, 0}, space) == 0);
    CHECK(encode({3, 4, 4, 4}, space) == 499);
    TaxiState s{2, 4, 1, 3};
    CHECK(decode(encode(s, space), space) == s);
}

TEST_CASE("deterministic moves follow the compass, y growing northward") {
    TaxiEnv env(deterministic_config());
    Rng rng = make_rng(0);
    TaxiState s{0, 0, 2, 2};
    CHECK(env.step_state(s, kNorth, rng).s_next == TaxiState{0, 0, 2, 3});
    CHECK(env.step_state(s, kSouth, rng).s_next == TaxiState{0, 0, 2, 1});
    CHECK(env.step_state(s, kEast, rng).s_next == TaxiState{0, 0, 3, 2});
    CHECK(env.step_state(s, kWest, rng).s_next == TaxiState{0, 0, 1, 2});
    CHECK(env.step_state(s, kNorth, rng).r == doctest::Approx(-1.0));
}

TEST_CASE("grid edges and walls block movement in place") {
    TaxiEnv env(deterministic_config());
    Rng rng = make_rng(0);
    // Border: can't leave the grid.
    CHECK(env.step_state({0, 0, 0, 4}, kNorth, rng).s_next == TaxiState{0, 0, 0, 4});
    CHECK(env.step_state({0, 0, 4, 0}, kEast, rng).s_next == TaxiState{0, 0, 4, 0});
    // The wall right of R blocks east from (1,4) and west from (2,3).
    CHECK(env.step_state({0, 0, 1, 4}, kEast, rng).s_next == TaxiState{0, 0, 1, 4});
    CHECK(env.step_state({0, 0, 2, 3}, kWest, rng).s_next == TaxiState{0, 0, 2, 3});
    // The lower walls: east from (0,0) and east from (2,1) are blocked.
    CHECK(env.step_state({0, 0, 0, 0}, kEast, rng).s_next == TaxiState{0, 0, 0, 0});
    CHECK(env.step_state({0, 0, 2, 1}, kEast, rng).s_next == TaxiState{0, 0, 2, 1});
    // But north along the same columns is fine.
    CHECK(env.step_state({0, 0, 1, 4}, kSouth, rng).s_next == TaxiState{0, 0, 1, 3});
}

TEST_CASE("pickup succeeds only at the passenger's landmark") {
    TaxiEnv env(deterministic_config());
    Rng rng = make_rng(0);
    // Passenger waits at Y=(0,0); taxi is there.
    auto ok = env.step_state({1, 3, 0, 0}, kPickup, rng);
    CHECK(ok.s_next == TaxiState{1, kInTaxi, 0, 0});
    CHECK(ok.r == doctest::Approx(-1.0));
    CHECK_FALSE(ok.terminal);
    // Wrong cell: state unchanged, penalty applied.
    auto bad = env.step_state({1, 3, 2, 2}, kPickup, rng);
    CHECK(bad.s_next == TaxiState{1, 3, 2, 2});
    CHECK(bad.r == doctest::Approx(-10.0));
    // Passenger already aboard: another pickup is illegal.
    CHECK(env.step_state({1, kInTaxi, 0, 0}, kPickup, rng).r == doctest::Approx(-10.0));
}

TEST_CASE("putdown at the destination ends the episode with +20") {
    TaxiEnv env(deterministic_config());
    Rng rng = make_rng(0);
    // Destination G=(4,4), passenger aboard, taxi at G.
    auto done = env.step_state({1, kInTaxi, 4, 4}, kPutdown, rng);
    CHECK(done.r == doctest::Approx(20.0));
    CHECK(done.terminal);
    // Putdown away from the destination, or without the passenger, is illegal.
    CHECK(env.step_state({1, kInTaxi, 0, 0}, kPutdown, rng).r == doctest::Approx(-10.0));
    CHECK_FALSE(env.step_state({1, kInTaxi, 0, 0}, kPutdown, rng).terminal);
    CHECK(env.step_state({1, 0, 4, 4}, kPutdown, rng).r == doctest::Approx(-10.0));
}

TEST_CASE("slip splits 0.2 uniformly across the three other directions") {
    TaxiEnv env{};  // default slip 0.2, all-other mode
    auto model = env.true_model();
    auto& space = env.states();
    std::int64_t s = encode({0, 0, 2, 2}, space);
    std::map<std::int64_t, double> expected{
        {encode({0, 0, 2, 3}, space), 0.8},        // intended north
        {encode({0, 0, 2, 1}, space), 0.2 / 3.0},  // south
        {encode({0, 0, 3, 2}, space), 0.2 / 3.0},  // east
        {encode({0, 0, 1, 2}, space), 0.2 / 3.0},  // west
    };
    auto& out = model.at(s, kNorth);
    REQUIRE(out.size() == 4);
    for (const auto& o : out) {
        REQUIRE(expected.count(o.next) == 1);
        CHECK(o.prob == doctest::Approx(expected[o.next]).epsilon(1e-12));
        CHECK(o.reward == doctest::Approx(-1.0));
    }
}

TEST_CASE("perpendicular slip mode never moves backwards") {
    TaxiConfig cfg;
    cfg.slip_mode = SlipMode::kPerpendicular;
    TaxiEnv env(cfg);
    auto model = env.true_model();
    auto& space = env.states();
    std::int64_t s = encode({0, 0, 2, 2}, space);
    for (const auto& o : model.at(s, kNorth)) {
        CHECK(o.next != encode({0, 0, 2, 1}, space));
        if (o.next == encode({0, 0, 2, 3}, space))
            CHECK(o.prob == doctest::Approx(0.8));
        else
            CHECK(o.prob == doctest::Approx(0.1));
    }
}

TEST_CASE("analytic model passes its own consistency checks") {
    TaxiEnv env{};
    auto model = env.true_model();
    CHECK_NOTHROW(model.validate());
    double total = 0.0;
    for (std::int64_t s = 0; s < model.n_states; ++s) total += model.initial_dist[s];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampled transitions match the analytic model distribution") {
    TaxiEnv env{};
    auto model = env.true_model();
    auto& space = env.states();
    Rng rng = make_rng(42);
    // One stochastic and one deterministic action, sampled against the model.
    for (int a : {kNorth, kPickup}) {
        std::int64_t s = encode({2, 1, 3, 2}, space);
        std::map<std::int64_t, int> counts;
        const int n = 6000;
        for (int i = 0; i < n; ++i) ++counts[env.step(s, a, rng).s_next];
        double chi2 = 0.0;
        int dof = -1;
        for (const auto& o : model.at(s, a)) {
            double exp_count = o.prob * n;
            double diff = counts[o.next] - exp_count;
            chi2 += diff * diff / exp_count;
            counts.erase(o.next);
            ++dof;
        }
        CHECK(counts.empty());  // nothing sampled outside the model's support
        if (dof > 0) CHECK(chi2 < hrl_test::chi_square_critical_99(dof));
    }
}

TEST_CASE("initial states are uniform and exclude passenger-at-destination") {
    TaxiEnv env{};
    Rng rng = make_rng(7);
    std::map<std::int64_t, int> counts;
    const int n = 30000;
    for (int i = 0; i < n; ++i) {
        TaxiState s = env.initial_state(rng);
        CHECK(s.pass != kInTaxi);
        CHECK(s.pass != s.dest);
        ++counts[encode(s, env.states())];
    }
    // 4 destinations x 3 passenger spots x 25 cells = 300 equally likely states.
    CHECK(counts.size() == 300);
    double chi2 = 0.0;
    for (const auto& [s, c] : counts) {
        CHECK(env.initial_probability(decode(s, env.states())) == doctest::Approx(1.0 / 300));
        double diff = c - n / 300.0;
        chi2 += diff * diff / (n / 300.0);
    }
    CHECK(chi2 < hrl_test::chi_square_critical_99(299));
}

TEST_CASE("coincident start flag widens the support to 400 states") {
    TaxiConfig cfg;
    cfg.allow_passenger_at_destination = true;
    TaxiEnv env(cfg);
    double total = 0.0;
    int support = 0;
    auto model = env.true_model();
    for (std::int64_t s = 0; s < model.n_states; ++s) {
        total += model.initial_dist[s];
        if (model.initial_dist[s] > 0) ++support;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(support == 400);
    CHECK(env.initial_probability({2, 2, 1, 1}) == doctest::Approx(1.0 / 400));
}

TEST_CASE("optimal values of hand-solvable states") {
    TaxiEnv env(deterministic_config());
    auto q = value_iteration(env.true_model(), 1e-10);
    auto& space = env.states();
    // Passenger aboard, taxi on the destination: putdown pays 20 now.
    CHECK(q.at(encode({0, kInTaxi, 0, 4}, space), kPutdown) == doctest::Approx(20.0));
    // Taxi at R=(0,4) with the passenger, destination G=(4,4): pickup, then
    // the double wall right of R forces a drop to y=2, so the shortest drive
    // is 8 moves (e.g. ESS EEE NN), then putdown. 10 actions total.
    double expect = 0.0;
    double discount = 1.0;
    for (int i = 0; i < 9; ++i) {  // pickup + 8 moves, each -1
        expect += discount * -1.0;
        discount *= 0.99;
    }
    expect += discount * 20.0;
    CHECK(q.state_value(encode({1, 0, 0, 4}, space)) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("config validation rejects malformed grids") {
    TaxiConfig cfg;
    cfg.landmarks[1] = {9, 9};
    CHECK_THROWS_AS(TaxiEnv{cfg}, ContractError);
    cfg = TaxiConfig{};
    cfg.slip = 1.0;
    CHECK_THROWS_AS(TaxiEnv{cfg}, ContractError);
    cfg = TaxiConfig{};
    cfg.landmarks = {{0, 0}, {0, 0}, {1, 1}, {2, 2}};
    CHECK_THROWS_AS(TaxiEnv{cfg}, ContractError);
}
