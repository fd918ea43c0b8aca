#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lfd/error.hpp"
#include "lfd/formula.hpp"
#include "lfd/model.hpp"

namespace lfd {

struct CheckStats {
    std::size_t atom_evaluations = 0;
    std::size_t quantifier_expansions = 0;
    std::size_t memo_hits = 0;
};

struct CheckResult {
    bool value = false;
    CheckStats stats;
};

/// s =_X t.
inline bool agree_on(const Assignment& s, const Assignment& t, const VarSet& xs)
{
    for (VarId x : xs)
        if (s[x] != t[x])
            return false;
    return true;
}

/// s(xs) = t(ys), componentwise.
inline bool tuples_match(const Assignment& s, const VarTuple& xs, const Assignment& t, const VarTuple& ys)
{
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (s[xs[i]] != t[ys[i]])
            return false;
    return true;
}

namespace detail {

inline bool dependence_at(const std::vector<Assignment>& team, const Assignment& s, const VarSet& on, VarId y)
{
    for (const auto& t : team)
        if (agree_on(s, t, on) && t[y] != s[y])
            return false;
    return true;
}

inline bool inclusion_at(const std::vector<Assignment>& team, const Assignment& s, const VarTuple& xs,
                         const VarTuple& ys)
{
    for (const auto& t : team)
        if (tuples_match(s, xs, t, ys))
            return true;
    return false;
}

inline bool independence_at(const std::vector<Assignment>& team, const Assignment& s, const VarTuple& xs,
                            const VarTuple& ys)
{
    for (const auto& t : team) {
        bool found = false;
        for (const auto& u : team)
            if (tuples_match(u, xs, s, xs) && tuples_match(u, ys, t, ys)) {
                found = true;
                break;
            }
        if (!found)
            return false;
    }
    return true;
}

inline bool atom_at(const Node& n, const DependenceModel& m, const Assignment& s)
{
    const auto& team = m.team();
    switch (n.kind) {
    case Kind::Rel:
    case Kind::NegRel: {
        Tuple t;
        t.reserve(n.lhs.size());
        for (VarId x : n.lhs)
            t.push_back(s[x]);
        return m.structure().holds(n.relation, t) == (n.kind == Kind::Rel);
    }
    case Kind::Eq: return s[n.lhs[0]] == s[n.rhs[0]];
    case Kind::Neq: return s[n.lhs[0]] != s[n.rhs[0]];
    case Kind::Dep: return dependence_at(team, s, n.set, n.target);
    case Kind::Anon: return !dependence_at(team, s, n.set, n.target);
    case Kind::Incl: return inclusion_at(team, s, n.lhs, n.rhs);
    case Kind::Excl: return !inclusion_at(team, s, n.lhs, n.rhs);
    case Kind::Ind: return independence_at(team, s, n.lhs, n.rhs);
    case Kind::NInd: return !independence_at(team, s, n.lhs, n.rhs);
    default: throw std::logic_error("atom_at: not an atom");
    }
}

} // namespace detail

/// Truth of an atom (relational literal, (in)equality or local atom) at s relative to the team.
inline bool eval_local_atom(const Formula& beta, const DependenceModel& m, const Assignment& s)
{
    if (!is_atom(beta.kind()))
        throw ValidationError("eval_local_atom expects an atom");
    validate(beta, m.type());
    if (!m.row_of(s))
        throw ValidationError("assignment outside team");
    return detail::atom_at(*beta, m, s);
}

/// Memoized evaluator for one model. Quantifiers expand to the conjunction (D) or disjunction (E)
/// over the team rows that agree with the current row on the quantifier's variables. The memo is
/// keyed by subformula node and row, and survives across calls on the same checker.
class ModelChecker {
public:
    explicit ModelChecker(const DependenceModel& m) : m_(m) {}

    bool holds(const Formula& f, std::size_t row)
    {
        if (row >= m_.team_size())
            throw ValidationError("assignment outside team");
        if (prepared_.insert(f.get()).second) {
            validate(f, m_.type());
            require_not_free(f);
        }
        return eval(f, row);
    }

    bool holds(const Formula& f, const Assignment& s)
    {
        auto row = m_.row_of(s);
        if (!row)
            throw ValidationError("assignment outside team");
        return holds(f, *row);
    }

    const CheckStats& stats() const noexcept { return stats_; }
    const DependenceModel& model() const noexcept { return m_; }

    /// Rows agreeing with `row` on `xs` (including `row` itself), in team order.
    const std::vector<std::uint32_t>& agreement_class(const VarSet& xs, std::size_t row)
    {
        auto it = classes_.find(xs);
        if (it == classes_.end()) {
            Partition p;
            std::map<Tuple, std::uint32_t> ids;
            p.class_of.resize(m_.team_size());
            for (std::size_t i = 0; i < m_.team_size(); ++i) {
                Tuple key;
                for (VarId x : xs)
                    key.push_back(m_.row(i)[x]);
                auto [pos, fresh] = ids.emplace(key, static_cast<std::uint32_t>(p.members.size()));
                if (fresh)
                    p.members.emplace_back();
                p.class_of[i] = pos->second;
                p.members[pos->second].push_back(static_cast<std::uint32_t>(i));
            }
            it = classes_.emplace(xs, std::move(p)).first;
        }
        return it->second.members[it->second.class_of[row]];
    }

private:
    struct Partition {
        std::vector<std::uint32_t> class_of;
        std::vector<std::vector<std::uint32_t>> members;
    };

    bool eval(const Formula& f, std::size_t row)
    {
        const Node& n = *f;
        if (is_atom(n.kind)) {
            ++stats_.atom_evaluations;
            return detail::atom_at(n, m_, m_.row(row));
        }
        auto& slot = memo_[f.get()];
        if (slot.empty())
            slot.assign(m_.team_size(), -1);
        if (slot[row] >= 0) {
            ++stats_.memo_hits;
            return slot[row] != 0;
        }
        bool value = false;
        switch (n.kind) {
        case Kind::And: value = eval(n.left, row) && eval(n.right, row); break;
        case Kind::Or: value = eval(n.left, row) || eval(n.right, row); break;
        case Kind::Box:
        case Kind::Diamond: {
            ++stats_.quantifier_expansions;
            bool universal = n.kind == Kind::Box;
            value = universal;
            // Copy: evaluating the body may add partitions and move the stored vectors.
            std::vector<std::uint32_t> rows = agreement_class(n.set, row);
            for (std::uint32_t t : rows)
                if (eval(n.left, t) != universal) {
                    value = !universal;
                    break;
                }
            break;
        }
        default: throw ValidationError("formula contains negation sugar; convert with to_nnf first");
        }
        // Re-lookup: recursive calls may have rehashed the memo.
        memo_[f.get()][row] = value ? 1 : 0;
        return value;
    }

    const DependenceModel& m_;
    CheckStats stats_;
    std::unordered_map<const Node*, std::vector<std::int8_t>> memo_;
    std::unordered_set<const Node*> prepared_;
    std::map<VarSet, Partition> classes_;
};

/// (M,T) |=_s phi for a Not-free formula.
inline CheckResult check(const Formula& f, const DependenceModel& m, const Assignment& s)
{
    ModelChecker mc(m);
    bool v = mc.holds(f, s);
    return {v, mc.stats()};
}

/// Truth value at every team row, in team order, sharing one memo.
inline std::vector<bool> check_all(const Formula& f, const DependenceModel& m)
{
    ModelChecker mc(m);
    std::vector<bool> out;
    out.reserve(m.team_size());
    for (std::size_t i = 0; i < m.team_size(); ++i)
        out.push_back(mc.holds(f, i));
    return out;
}

/// The team rows at which an atom holds.
inline std::set<Assignment> extension(const Formula& beta, const DependenceModel& m)
{
    if (!is_atom(beta.kind()))
        throw ValidationError("extension expects an atom");
    validate(beta, m.type());
    std::set<Assignment> out;
    for (const auto& s : m.team())
        if (detail::atom_at(*beta, m, s))
            out.insert(s);
    return out;
}

// ---------------------------------------------------------------------------
// Global atoms
// ---------------------------------------------------------------------------

enum class GlobalKind : std::uint8_t { Dependence, Inclusion, Exclusion, Anonymity, Independence };

/// dep(xs; y), incl(xs; ys), excl(xs; ys), anon(xs; y), indep(xs; ys).
struct GlobalAtom {
    GlobalKind kind = GlobalKind::Dependence;
    VarTuple lhs;
    VarTuple rhs;  // Inclusion / Exclusion / Independence
    VarId target = 0; // Dependence / Anonymity
};

/// The local atom whose universal closure the global atom is.
inline Formula local_variant(const GlobalAtom& a)
{
    switch (a.kind) {
    case GlobalKind::Dependence: return dep(a.lhs, a.target);
    case GlobalKind::Anonymity: return anon(a.lhs, a.target);
    case GlobalKind::Inclusion: return incl(a.lhs, a.rhs);
    case GlobalKind::Exclusion: return excl(a.lhs, a.rhs);
    case GlobalKind::Independence: return ind(a.lhs, a.rhs);
    }
    throw std::logic_error("local_variant: bad kind");
}

namespace detail {

inline bool global_atom_direct(const GlobalAtom& a, const DependenceModel& m)
{
    const auto& team = m.team();
    switch (a.kind) {
    case GlobalKind::Dependence:
        for (const auto& s : team)
            for (const auto& t : team)
                if (tuples_match(s, a.lhs, t, a.lhs) && s[a.target] != t[a.target])
                    return false;
        return true;
    case GlobalKind::Anonymity:
        for (const auto& s : team) {
            bool witness = false;
            for (const auto& t : team)
                if (tuples_match(s, a.lhs, t, a.lhs) && s[a.target] != t[a.target]) {
                    witness = true;
                    break;
                }
            if (!witness)
                return false;
        }
        return true;
    case GlobalKind::Inclusion: {
        auto ys = project(m, a.rhs);
        for (const auto& t : project(m, a.lhs))
            if (!ys.count(t))
                return false;
        return true;
    }
    case GlobalKind::Exclusion: {
        auto ys = project(m, a.rhs);
        for (const auto& t : project(m, a.lhs))
            if (ys.count(t))
                return false;
        return true;
    }
    case GlobalKind::Independence: {
        auto xs = project(m, a.lhs);
        auto ys = project(m, a.rhs);
        VarTuple both = a.lhs;
        both.insert(both.end(), a.rhs.begin(), a.rhs.end());
        auto joint = project(m, both);
        for (const auto& x : xs)
            for (const auto& y : ys) {
                Tuple xy = x;
                xy.insert(xy.end(), y.begin(), y.end());
                if (!joint.count(xy))
                    return false;
            }
        return true;
    }
    }
    throw std::logic_error("global_atom_direct: bad kind");
}

} // namespace detail

/// M |=_T alpha, evaluated from the team-level definition and cross-checked against A[] beta.
inline bool check_global_atom(const GlobalAtom& a, const DependenceModel& m)
{
    Formula beta = local_variant(a);
    validate(beta, m.type());
    bool direct = detail::global_atom_direct(a, m);
    bool via_box = check(global_box(beta), m, m.row(0)).value;
    if (direct != via_box)
        throw std::logic_error("global atom: direct evaluation disagrees with the universal closure");
    return direct;
}

} // namespace lfd
