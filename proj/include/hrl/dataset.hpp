#pragma once

#include <cstdint>
#include <vector>

#include "hrl/state_space.hpp"

namespace hrl {

/// One flat transition collected by the behavior policy.
struct Experience {
    std::int64_t s = 0;
    int a = 0;
    double r = 0.0;
    std::int64_t s_next = 0;
    bool terminal = false;  // episode ended in the environment at s_next
};

/// A fixed batch of flat transitions plus the spaces they index into.
struct Dataset {
    StateSpace states;
    ActionSpace actions;
    std::vector<Experience> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }

    void validate() const {
        actions.validate();
        for (const auto& e : items) {
            if (e.s < 0 || e.s >= states.size() || e.s_next < 0 || e.s_next >= states.size())
                throw ContractError("Dataset: state index out of range");
            if (e.a < 0 || e.a >= actions.size())
                throw ContractError("Dataset: action index out of range");
        }
    }

    /// First n experiences, sharing the same spaces. Used for sample-size curves.
    Dataset prefix(std::size_t n) const {
        if (n > items.size()) throw ContractError("Dataset: prefix longer than the dataset");
        Dataset d{states, actions, {}};
        d.items.assign(items.begin(), items.begin() + n);
        return d;
    }
};

}  // namespace hrl
