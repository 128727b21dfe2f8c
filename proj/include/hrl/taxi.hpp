#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "hrl/env.hpp"
#include "hrl/state_space.hpp"
#include "hrl/tabular_model.hpp"

namespace hrl::taxi {

enum Action : int { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3, kPickup = 4, kPutdown = 5 };

enum class SlipMode {
    kAllOther,       // slip goes to one of the three other directions, uniformly
    kPerpendicular,  // slip goes to one of the two perpendicular directions
};

struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

/// 5x5 passenger-delivery grid world. y grows northward, y=0 is the bottom
/// row. Landmark ids: 0=R(0,4), 1=G(4,4), 2=B(3,0), 3=Y(0,0).
struct TaxiConfig {
    int width = 5;
    int height = 5;
    std::vector<Cell> landmarks = {{0, 4}, {4, 4}, {3, 0}, {0, 0}};
    // Blocked cell-to-cell edges, symmetric. The three standard short walls.
    std::vector<std::pair<Cell, Cell>> walls = {
        {{1, 4}, {2, 4}}, {{1, 3}, {2, 3}},  // upper wall right of R
        {{0, 0}, {1, 0}}, {{0, 1}, {1, 1}},  // lower wall right of Y
        {{2, 0}, {3, 0}}, {{2, 1}, {3, 1}},  // lower wall left of B
    };
    double slip = 0.2;
    SlipMode slip_mode = SlipMode::kAllOther;
    double step_reward = -1.0;
    double illegal_reward = -10.0;
    double success_reward = 20.0;
    double gamma = 0.99;
    int episode_cap = 500;
    // Start distribution: passenger landmark never equals the destination
    // landmark, matching the canonical domain. Both states remain in the
    // state space either way.
    bool allow_passenger_at_destination = false;

    void validate() const {
        if (width <= 0 || height <= 0) throw ContractError("TaxiConfig: empty grid");
        if (landmarks.size() != 4) throw ContractError("TaxiConfig: need 4 landmarks");
        std::set<Cell> distinct(landmarks.begin(), landmarks.end());
        if (width * height >= 4 && distinct.size() != 4)
            throw ContractError("TaxiConfig: landmarks must be distinct");
        for (const auto& lm : landmarks)
            if (lm.x < 0 || lm.x >= width || lm.y < 0 || lm.y >= height)
                throw ContractError("TaxiConfig: landmark outside grid");
        if (slip < 0.0 || slip >= 1.0) throw ContractError("TaxiConfig: slip outside [0,1)");
        if (gamma <= 0.0 || gamma > 1.0) throw ContractError("TaxiConfig: gamma outside (0,1]");
        if (episode_cap <= 0) throw ContractError("TaxiConfig: episode cap must be positive");
    }
};

/// State variables in flat-index order: [dest, pass, x, y]; pass==4 means the
/// passenger rides in the taxi.
struct TaxiState {
    int dest = 0;
    int pass = 0;
    int x = 0;
    int y = 0;
    auto operator<=>(const TaxiState&) const = default;
};

inline constexpr int kInTaxi = 4;

inline StateSpace make_state_space(const TaxiConfig& cfg) {
    return StateSpace({{"dest", 4}, {"pass", 5}, {"x", cfg.width}, {"y", cfg.height}});
}

inline ActionSpace make_action_space() {
    return ActionSpace{{"north", "south", "east", "west", "pickup", "putdown"}};
}

inline std::int64_t encode(const TaxiState& s, const StateSpace& space) {
    std::array<int, 4> v{s.dest, s.pass, s.x, s.y};
    return space.encode(v);
}

inline TaxiState decode(std::int64_t index, const StateSpace& space) {
    auto v = space.decode(index);
    return {v[0], v[1], v[2], v[3]};
}

class TaxiEnv final : public Env {
  public:
    explicit TaxiEnv(TaxiConfig cfg = {})
        : cfg_(std::move(cfg)), space_(make_state_space(cfg_)), actions_(make_action_space()) {
        cfg_.validate();
        for (const auto& [a, b] : cfg_.walls) {
            blocked_.insert(edge_key(a, b));
            blocked_.insert(edge_key(b, a));
        }
    }

    const TaxiConfig& config() const { return cfg_; }
    const StateSpace& states() const override { return space_; }
    const ActionSpace& actions() const override { return actions_; }

    bool at_landmark(const TaxiState& s, int landmark) const {
        const Cell& lm = cfg_.landmarks[landmark];
        return s.x == lm.x && s.y == lm.y;
    }

    TaxiState initial_state(Rng& rng) const {
        std::uniform_int_distribution<int> d4(0, 3);
        std::uniform_int_distribution<int> dx(0, cfg_.width - 1);
        std::uniform_int_distribution<int> dy(0, cfg_.height - 1);
        TaxiState s;
        s.dest = d4(rng);
        s.pass = d4(rng);
        if (!cfg_.allow_passenger_at_destination)
            while (cfg_.landmarks[s.pass] == cfg_.landmarks[s.dest]) s.pass = d4(rng);
        s.x = dx(rng);
        s.y = dy(rng);
        return s;
    }

    std::int64_t reset(Rng& rng) const override { return encode(initial_state(rng), space_); }

    struct TaxiStep {
        TaxiState s_next;
        double r = 0.0;
        bool terminal = false;
    };

    TaxiStep step_state(const TaxiState& s, int a, Rng& rng) const {
        if (a < 0 || a >= actions_.size()) throw ContractError("TaxiEnv: invalid action");
        if (a == kPickup || a == kPutdown) return apply_manipulation(s, a);
        return {move(s, sample_direction(a, rng)), cfg_.step_reward, false};
    }

    StepResult step(std::int64_t s, int a, Rng& rng) const override {
        auto out = step_state(decode(s, space_), a, rng);
        return {encode(out.s_next, space_), out.r, out.terminal};
    }

    /// Analytic one-step model matching step() exactly. Successful deliveries
    /// are terminal-marked transitions; all 500 states stay live.
    TabularModel true_model() const {
        TabularModel model(space_.size(), actions_.size(), cfg_.gamma);
        for (std::int64_t si = 0; si < space_.size(); ++si) {
            TaxiState s = decode(si, space_);
            for (int a = 0; a < actions_.size(); ++a) {
                auto& out = model.at(si, a);
                if (a == kPickup || a == kPutdown) {
                    auto r = apply_manipulation(s, a);
                    out.push_back({encode(r.s_next, space_), 1.0, r.r, r.terminal});
                    continue;
                }
                for (const auto& [dir, prob] : direction_distribution(a)) {
                    std::int64_t next = encode(move(s, dir), space_);
                    bool merged = false;
                    for (auto& o : out)
                        if (o.next == next) {
                            o.prob += prob;
                            merged = true;
                            break;
                        }
                    if (!merged) out.push_back({next, prob, cfg_.step_reward, false});
                }
            }
        }
        for (std::int64_t si = 0; si < space_.size(); ++si)
            model.initial_dist[si] = initial_probability(decode(si, space_));
        return model;
    }

    double initial_probability(const TaxiState& s) const {
        if (s.pass >= 4) return 0.0;
        if (!cfg_.allow_passenger_at_destination &&
            cfg_.landmarks[s.pass] == cfg_.landmarks[s.dest])
            return 0.0;
        int pass_choices = 4;
        if (!cfg_.allow_passenger_at_destination) {
            pass_choices = 0;
            for (int p = 0; p < 4; ++p)
                if (!(cfg_.landmarks[p] == cfg_.landmarks[s.dest])) ++pass_choices;
        }
        return 1.0 / (4.0 * pass_choices * cfg_.width * cfg_.height);
    }

  private:
    static std::int64_t edge_key(const Cell& a, const Cell& b) {
        return ((static_cast<std::int64_t>(a.x) * 256 + a.y) * 256 + b.x) * 256 + b.y;
    }

    std::vector<std::pair<int, double>> direction_distribution(int a) const {
        std::vector<std::pair<int, double>> dist;
        dist.emplace_back(a, 1.0 - cfg_.slip);
        if (cfg_.slip > 0.0) {
            auto others = slip_directions(a);
            for (int d : others) dist.emplace_back(d, cfg_.slip / others.size());
        }
        return dist;
    }

    std::vector<int> slip_directions(int a) const {
        if (cfg_.slip_mode == SlipMode::kPerpendicular)
            return (a == kNorth || a == kSouth) ? std::vector<int>{kEast, kWest}
                                                : std::vector<int>{kNorth, kSouth};
        std::vector<int> others;
        for (int d = 0; d < 4; ++d)
            if (d != a) others.push_back(d);
        return others;
    }

    int sample_direction(int a, Rng& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) >= cfg_.slip) return a;
        auto others = slip_directions(a);
        std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
        return others[pick(rng)];
    }

    TaxiState move(const TaxiState& s, int dir) const {
        static constexpr int dx[4] = {0, 0, 1, -1};
        static constexpr int dy[4] = {1, -1, 0, 0};
        Cell from{s.x, s.y};
        Cell to{s.x + dx[dir], s.y + dy[dir]};
        if (to.x < 0 || to.x >= cfg_.width || to.y < 0 || to.y >= cfg_.height) return s;
        if (blocked_.contains(edge_key(from, to))) return s;
        TaxiState next = s;
        next.x = to.x;
        next.y = to.y;
        return next;
    }

    TaxiStep apply_manipulation(const TaxiState& s, int a) const {
        if (a == kPickup) {
            if (s.pass < 4 && at_landmark(s, s.pass)) {
                TaxiState next = s;
                next.pass = kInTaxi;
                return {next, cfg_.step_reward, false};
            }
            return {s, cfg_.illegal_reward, false};
        }
        if (s.pass == kInTaxi && at_landmark(s, s.dest))
            return {s, cfg_.success_reward, true};
        return {s, cfg_.illegal_reward, false};
    }

    TaxiConfig cfg_;
    StateSpace space_;
    ActionSpace actions_;
    std::set<std::int64_t> blocked_;
};

}  // namespace hrl::taxi
