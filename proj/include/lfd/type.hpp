#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "lfd/error.hpp"

namespace lfd {

using VarId = std::uint32_t;
using Elem = std::uint32_t;

/// Ordered tuple of variables, repetitions allowed.
using VarTuple = std::vector<VarId>;
/// Set of variables, kept sorted by the type's variable order.
using VarSet = std::vector<VarId>;

inline VarSet make_var_set(VarTuple vars)
{
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    return vars;
}

inline VarSet set_union(const VarSet& a, const VarSet& b)
{
    VarSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline bool set_contains(const VarSet& set, VarId v)
{
    return std::binary_search(set.begin(), set.end(), v);
}

struct RelationSymbol {
    std::string name;
    std::size_t arity = 1;

    bool operator==(const RelationSymbol&) const = default;
};

/// A relational vocabulary together with an ordered, finite, nonempty variable list.
/// The variable order fixes how assignments are encoded as tuples.
class FiniteType {
public:
    FiniteType() = default;

    FiniteType(std::vector<RelationSymbol> relations, std::vector<std::string> variables)
        : relations_(std::move(relations)), variables_(std::move(variables))
    {
        if (variables_.empty())
            throw ValidationError("type needs at least one variable");
        std::unordered_set<std::string> seen;
        for (const auto& v : variables_)
            if (!seen.insert(v).second)
                throw ValidationError("duplicate variable '" + v + "'");
        seen.clear();
        for (const auto& r : relations_) {
            if (r.arity == 0)
                throw ValidationError("relation '" + r.name + "' needs arity >= 1");
            if (!seen.insert(r.name).second)
                throw ValidationError("duplicate relation '" + r.name + "'");
        }
    }

    const std::vector<RelationSymbol>& relations() const noexcept { return relations_; }
    const std::vector<std::string>& variables() const noexcept { return variables_; }
    std::size_t num_vars() const noexcept { return variables_.size(); }
    std::size_t num_relations() const noexcept { return relations_.size(); }
    const std::string& var_name(VarId v) const { return variables_.at(v); }
    const RelationSymbol& relation(std::size_t r) const { return relations_.at(r); }

    std::optional<VarId> variable_index(const std::string& name) const
    {
        auto it = std::find(variables_.begin(), variables_.end(), name);
        if (it == variables_.end())
            return std::nullopt;
        return static_cast<VarId>(it - variables_.begin());
    }

    std::optional<std::size_t> relation_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < relations_.size(); ++i)
            if (relations_[i].name == name)
                return i;
        return std::nullopt;
    }

    VarSet all_vars() const
    {
        VarSet out(variables_.size());
        for (VarId i = 0; i < out.size(); ++i)
            out[i] = i;
        return out;
    }

    bool operator==(const FiniteType&) const = default;

private:
    std::vector<RelationSymbol> relations_;
    std::vector<std::string> variables_;
};

/// All subsets of {0..n-1}, as sorted VarSets, in bitmask order.
inline std::vector<VarSet> all_subsets(std::size_t n)
{
    std::vector<VarSet> out;
    out.reserve(std::size_t{1} << n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        VarSet s;
        for (VarId i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i))
                s.push_back(i);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace lfd
