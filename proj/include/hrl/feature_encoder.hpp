#pragma once

#include <cstdint>
#include <vector>

#include "hrl/state_space.hpp"

namespace hrl {

/// Turns a factored state into a real feature vector: categorical variables
/// become one-hot blocks, ordinal variables stay scalar.
class FeatureEncoder {
  public:
    enum class Kind { kCategorical, kOrdinal };

    FeatureEncoder() = default;

    FeatureEncoder(const StateSpace& space, std::vector<Kind> kinds)
        : space_(space), kinds_(std::move(kinds)) {
        if (kinds_.size() != space.num_variables())
            throw ContractError("FeatureEncoder: one kind per variable required");
        dim_ = 0;
        for (std::size_t i = 0; i < kinds_.size(); ++i)
            dim_ += kinds_[i] == Kind::kCategorical ? space.variables()[i].cardinality : 1;
    }

    /// All variables scalar; injective for any factored space.
    static FeatureEncoder all_ordinal(const StateSpace& space) {
        return FeatureEncoder(space, std::vector<Kind>(space.num_variables(), Kind::kOrdinal));
    }

    int dimension() const { return dim_; }

    std::vector<double> encode(std::int64_t state) const {
        auto values = space_.decode(state);
        std::vector<double> x;
        x.reserve(dim_);
        for (std::size_t i = 0; i < kinds_.size(); ++i) {
            if (kinds_[i] == Kind::kCategorical) {
                for (int v = 0; v < space_.variables()[i].cardinality; ++v)
                    x.push_back(v == values[i] ? 1.0 : 0.0);
            } else {
                x.push_back(static_cast<double>(values[i]));
            }
        }
        return x;
    }

    /// Dense per-state cache; enumerable spaces here are small.
    std::vector<std::vector<double>> encode_all() const {
        std::vector<std::vector<double>> table(space_.size());
        for (std::int64_t s = 0; s < space_.size(); ++s) table[s] = encode(s);
        return table;
    }

  private:
    StateSpace space_;
    std::vector<Kind> kinds_;
    int dim_ = 0;
};

namespace taxi {

/// [dest, pass] one-hot, [x, y] scalar: 4 + 5 + 2 = 11 dimensions.
inline FeatureEncoder make_encoder(const StateSpace& space) {
    using Kind = FeatureEncoder::Kind;
    return FeatureEncoder(space, {Kind::kCategorical, Kind::kCategorical, Kind::kOrdinal,
                                  Kind::kOrdinal});
}

}  // namespace taxi
}  // namespace hrl
