#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "hrl/common.hpp"

namespace hrl {

/// Supervised regression backend for the fitted learners. Implementations
/// must be deterministic given their seed.
class Regressor {
  public:
    virtual ~Regressor() = default;
    virtual void fit(const std::vector<std::vector<double>>& inputs,
                     const std::vector<double>& targets) = 0;
    virtual double predict(std::span<const double> input) const = 0;
    virtual nlohmann::json to_json() const = 0;
};

using RegressorFactory = std::function<std::unique_ptr<Regressor>(std::uint64_t seed)>;

/// Exact lookup table keyed by the full feature vector: mean target per
/// distinct input, zero for unseen inputs. The mean is accumulated with the
/// same count-decayed incremental update as the tabular sweep, so a fitted
/// sweep through this regressor reproduces the tabular sweep bit for bit.
class MemorizingRegressor final : public Regressor {
  public:
    void fit(const std::vector<std::vector<double>>& inputs,
             const std::vector<double>& targets) override {
        if (inputs.size() != targets.size())
            throw ContractError("MemorizingRegressor: size mismatch");
        if (inputs.empty()) throw ContractError("MemorizingRegressor: empty training set");
        table_.clear();
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto& cell = table_[inputs[i]];
            double alpha = 1.0 / (1.0 + cell.second);
            cell.first = (1.0 - alpha) * cell.first + alpha * targets[i];
            cell.second += 1;
        }
    }

    double predict(std::span<const double> input) const override {
        auto it = table_.find(std::vector<double>(input.begin(), input.end()));
        if (it == table_.end()) return 0.0;
        return it->second.first;
    }

    nlohmann::json to_json() const override {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& [x, cell] : table_)
            entries.push_back({{"x", x}, {"value", cell.first}, {"count", cell.second}});
        return {{"type", "table"}, {"entries", entries}};
    }

    static std::unique_ptr<MemorizingRegressor> from_json(const nlohmann::json& j) {
        auto r = std::make_unique<MemorizingRegressor>();
        for (const auto& e : j.at("entries"))
            r->table_[e.at("x").get<std::vector<double>>()] = {
                e.at("value").get<double>(), e.at("count").get<std::int64_t>()};
        return r;
    }

    static RegressorFactory factory() {
        return [](std::uint64_t) { return std::make_unique<MemorizingRegressor>(); };
    }

  private:
    std::map<std::vector<double>, std::pair<double, std::int64_t>> table_;
};

}  // namespace hrl
