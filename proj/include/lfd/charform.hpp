#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "lfd/bisim.hpp"
#include "lfd/error.hpp"
#include "lfd/formula.hpp"
#include "lfd/model.hpp"

namespace lfd {

namespace detail {

/// Builds formulas as a DAG: structurally equal nodes are shared, and conjunctions and
/// disjunctions are flattened, sorted by node id and deduplicated.
class FormulaBuilder {
public:
    Formula atom(const Formula& f) { return intern(f); }

    Formula quantifier(Kind kind, const VarSet& xs, const Formula& body)
    {
        Formula b = intern(body);
        auto key = std::make_tuple(static_cast<int>(kind), xs, id(b));
        auto it = quantifiers_.find(key);
        if (it != quantifiers_.end())
            return it->second;
        Formula f = kind == Kind::Box ? box(xs, b) : diamond(xs, b);
        ids_.emplace(f.get(), next_++);
        quantifiers_.emplace(key, f);
        return f;
    }

    Formula junction(Kind kind, std::vector<Formula> parts)
    {
        for (auto& p : parts)
            p = intern(p);
        std::sort(parts.begin(), parts.end(), [&](const Formula& a, const Formula& b) { return id(a) < id(b); });
        parts.erase(std::unique(parts.begin(), parts.end(),
                                [&](const Formula& a, const Formula& b) { return a.get() == b.get(); }),
                    parts.end());
        if (parts.empty())
            throw std::logic_error("empty junction");
        Formula out = parts.front();
        for (std::size_t i = 1; i < parts.size(); ++i) {
            auto key = std::make_tuple(static_cast<int>(kind), id(out), id(parts[i]));
            auto it = binaries_.find(key);
            if (it != binaries_.end()) {
                out = it->second;
                continue;
            }
            Formula f = kind == Kind::And ? conj(out, parts[i]) : disj(out, parts[i]);
            ids_.emplace(f.get(), next_++);
            binaries_.emplace(key, f);
            out = f;
        }
        return out;
    }

private:
    std::size_t id(const Formula& f) const { return ids_.at(f.get()); }

    Formula intern(const Formula& f)
    {
        if (ids_.count(f.get()))
            return f;
        const Node& n = *f;
        if (!is_atom(n.kind))
            throw std::logic_error("FormulaBuilder: foreign compound formula");
        auto key = std::make_tuple(static_cast<int>(n.kind), n.relation, n.lhs, n.rhs, n.set, n.target);
        auto it = atoms_.find(key);
        if (it != atoms_.end())
            return it->second;
        ids_.emplace(f.get(), next_++);
        atoms_.emplace(key, f);
        return f;
    }

    std::size_t next_ = 0;
    std::unordered_map<const Node*, std::size_t> ids_;
    std::map<std::tuple<int, std::size_t, VarTuple, VarTuple, VarSet, VarId>, Formula> atoms_;
    std::map<std::tuple<int, VarSet, std::size_t>, Formula> quantifiers_;
    std::map<std::tuple<int, std::size_t, std::size_t>, Formula> binaries_;
};

inline Formula dual_atom(const Formula& f)
{
    Node copy = *f;
    switch (copy.kind) {
    case Kind::Rel: copy.kind = Kind::NegRel; break;
    case Kind::NegRel: copy.kind = Kind::Rel; break;
    case Kind::Eq: copy.kind = Kind::Neq; break;
    case Kind::Neq: copy.kind = Kind::Eq; break;
    case Kind::Dep: copy.kind = Kind::Anon; break;
    case Kind::Anon: copy.kind = Kind::Dep; break;
    case Kind::Incl: copy.kind = Kind::Excl; break;
    case Kind::Excl: copy.kind = Kind::Incl; break;
    case Kind::Ind: copy.kind = Kind::NInd; break;
    case Kind::NInd: copy.kind = Kind::Ind; break;
    default: throw std::logic_error("dual_atom: not an atom");
    }
    return make(std::move(copy));
}

} // namespace detail

/// Characteristic formulas chi^k_t for every row t of one model, sharing one DAG.
class CharacteristicFormulas {
public:
    CharacteristicFormulas(const DependenceModel& m, const OmegaProfile& omega) : m_(m)
    {
        if (!omega.is_negation_closed())
            throw ValidationError("characteristic formulas need a negation-closed omega, got " + omega.to_string());
        atoms_ = canonical_atoms(m.type(), omega);
        if (atoms_.empty())
            throw ValidationError("no atoms available to describe a point");
        table_ = atom_table(m, atoms_);
    }

    const Formula& at(std::size_t row, std::size_t k)
    {
        if (row >= m_.team_size())
            throw ValidationError("assignment outside team");
        while (levels_.size() <= k)
            build_next();
        return levels_[k][row];
    }

private:
    void build_next()
    {
        const std::size_t rows = m_.team_size();
        std::vector<Formula> level(rows);
        if (levels_.empty()) {
            for (std::size_t t = 0; t < rows; ++t) {
                std::vector<Formula> parts;
                for (std::size_t a = 0; a < atoms_.size(); ++a)
                    parts.push_back(b_.atom(table_[t][a] ? atoms_[a] : detail::dual_atom(atoms_[a])));
                level[t] = b_.junction(Kind::And, std::move(parts));
            }
            levels_.push_back(std::move(level));
            return;
        }
        const auto& prev = levels_.back();
        auto subsets = all_subsets(m_.type().num_vars());
        for (std::size_t s = 0; s < rows; ++s) {
            const Assignment& sa = m_.row(s);
            std::vector<Formula> parts;
            for (const auto& xs : subsets) {
                std::vector<Formula> options;
                for (std::size_t t = 0; t < rows; ++t)
                    if (agree_on(m_.row(t), sa, xs))
                        options.push_back(prev[t]);
                parts.push_back(b_.quantifier(Kind::Box, xs, b_.junction(Kind::Or, std::move(options))));
            }
            // E_X chi_t for X = comvar(t, s) implies it for every smaller X.
            for (std::size_t t = 0; t < rows; ++t)
                parts.push_back(b_.quantifier(Kind::Diamond, comvar(m_.row(t), sa), prev[t]));
            level[s] = b_.junction(Kind::And, std::move(parts));
        }
        levels_.push_back(std::move(level));
    }

    const DependenceModel& m_;
    std::vector<Formula> atoms_;
    std::vector<std::vector<bool>> table_;
    detail::FormulaBuilder b_;
    std::vector<std::vector<Formula>> levels_;
};

/// chi^k_s: true at a point of a model of the same type exactly when that point is
/// k-bisimilar to s.
inline Formula char_formula(const DependenceModel& m, const Assignment& s, std::size_t k, const OmegaProfile& omega)
{
    auto row = m.row_of(s);
    if (!row)
        throw ValidationError("assignment outside team");
    CharacteristicFormulas cf(m, omega);
    return cf.at(*row, k);
}

/// Number of distinct nodes of a formula DAG.
inline std::size_t dag_size(const Formula& f)
{
    std::unordered_set<const Node*> seen;
    std::vector<const Node*> stack{f.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second)
            continue;
        if (n->left)
            stack.push_back(n->left.get());
        if (n->right)
            stack.push_back(n->right.get());
    }
    return seen.size();
}

} // namespace lfd
