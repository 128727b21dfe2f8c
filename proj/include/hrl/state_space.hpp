#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hrl/common.hpp"

namespace hrl {

struct Variable {
    std::string name;
    int cardinality = 0;
};

/// Factored state space: an ordered list of discrete variables.
/// Flat indices are row-major with the last variable varying fastest.
class StateSpace {
  public:
    StateSpace() = default;

    explicit StateSpace(std::vector<Variable> vars) : vars_(std::move(vars)) {
        if (vars_.empty()) throw ContractError("StateSpace: no variables");
        strides_.resize(vars_.size());
        std::int64_t stride = 1;
        for (int i = static_cast<int>(vars_.size()) - 1; i >= 0; --i) {
            if (vars_[i].cardinality <= 0)
                throw ContractError("StateSpace: non-positive cardinality for " + vars_[i].name);
            strides_[i] = stride;
            stride *= vars_[i].cardinality;
        }
        size_ = stride;
    }

    const std::vector<Variable>& variables() const { return vars_; }
    std::size_t num_variables() const { return vars_.size(); }
    std::int64_t size() const { return size_; }

    int variable_index(const std::string& name) const {
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i].name == name) return static_cast<int>(i);
        throw ContractError("StateSpace: unknown variable " + name);
    }

    std::int64_t encode(std::span<const int> values) const {
        if (values.size() != vars_.size())
            throw ContractError("encode: wrong number of variables");
        std::int64_t idx = 0;
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (values[i] < 0 || values[i] >= vars_[i].cardinality)
                throw ContractError("encode: " + vars_[i].name + " out of range");
            idx += values[i] * strides_[i];
        }
        return idx;
    }

    std::vector<int> decode(std::int64_t index) const {
        if (index < 0 || index >= size_) throw ContractError("decode: index out of range");
        std::vector<int> values(vars_.size());
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            values[i] = static_cast<int>(index / strides_[i]);
            index %= strides_[i];
        }
        return values;
    }

    bool operator==(const StateSpace& other) const {
        if (vars_.size() != other.vars_.size()) return false;
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i].name != other.vars_[i].name ||
                vars_[i].cardinality != other.vars_[i].cardinality)
                return false;
        return true;
    }

  private:
    std::vector<Variable> vars_;
    std::vector<std::int64_t> strides_;
    std::int64_t size_ = 0;
};

/// Projection of a StateSpace onto an ordered subset of its variables.
/// Two states differing only in unmasked variables share an abstract index.
/// An empty mask means no abstraction: the identity over the full space.
class Abstraction {
  public:
    Abstraction() = default;

    Abstraction(const StateSpace& space, const std::vector<std::string>& mask_names)
        : full_size_(space.size()) {
        table_.resize(full_size_);
        if (mask_names.empty()) {
            abstract_space_ = space;
            for (std::int64_t s = 0; s < full_size_; ++s) table_[s] = s;
            return;
        }
        std::vector<Variable> masked;
        for (const auto& name : mask_names) {
            int vi = space.variable_index(name);
            var_indices_.push_back(vi);
            masked.push_back(space.variables()[vi]);
        }
        abstract_space_ = StateSpace(std::move(masked));
        // Precomputed projection table; state counts here are small.
        std::vector<int> proj(var_indices_.size());
        for (std::int64_t s = 0; s < full_size_; ++s) {
            auto values = space.decode(s);
            for (std::size_t i = 0; i < var_indices_.size(); ++i)
                proj[i] = values[var_indices_[i]];
            table_[s] = abstract_space_.encode(proj);
        }
    }

    std::int64_t operator()(std::int64_t full_state) const { return table_[full_state]; }
    std::int64_t size() const { return abstract_space_.size(); }
    const StateSpace& abstract_space() const { return abstract_space_; }
    const std::vector<int>& variable_indices() const { return var_indices_; }

  private:
    std::int64_t full_size_ = 0;
    StateSpace abstract_space_;
    std::vector<int> var_indices_;
    std::vector<std::int64_t> table_;
};

struct ActionSpace {
    std::vector<std::string> actions;

    int size() const { return static_cast<int>(actions.size()); }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < actions.size(); ++i)
            if (actions[i] == name) return static_cast<int>(i);
        throw ContractError("ActionSpace: unknown action " + name);
    }

    void validate() const {
        if (actions.empty()) throw ContractError("ActionSpace: empty");
        for (std::size_t i = 0; i < actions.size(); ++i)
            for (std::size_t j = i + 1; j < actions.size(); ++j)
                if (actions[i] == actions[j])
                    throw ContractError("ActionSpace: duplicate action " + actions[i]);
    }
};

}  // namespace hrl
