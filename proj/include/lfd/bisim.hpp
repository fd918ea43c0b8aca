#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lfd/checker.hpp"
#include "lfd/error.hpp"
#include "lfd/formula.hpp"
#include "lfd/model.hpp"
#include "lfd/syntax.hpp"

namespace lfd {

/// comvar(s, t): the variables on which s and t agree.
inline VarSet comvar(const Assignment& s, const Assignment& t)
{
    VarSet out;
    for (VarId x = 0; x < s.size(); ++x)
        if (s[x] == t[x])
            out.push_back(x);
    return out;
}

inline constexpr std::size_t kMaxCanonicalAtoms = 100'000;

/// A finite family of positive atoms such that two points agree on every L[omega] atom exactly
/// when they agree on each member:
///   R xs for every relation and every argument tuple over the variables;
///   D_X y for y outside X (with D or its dual);
///   x = y for x before y (with = or its dual);
///   xs in ys for every nonempty set of (x_k, y_k) pairs (with in or its dual);
///   Ind_xs ys for nonempty variable sets, the shorter tuple padded by repetition (with Ind or its dual).
inline std::vector<Formula> canonical_atoms(const FiniteType& type, const OmegaProfile& omega)
{
    const std::size_t n = type.num_vars();
    std::vector<Formula> out;
    auto guard = [&](std::size_t more) {
        if (out.size() + more > kMaxCanonicalAtoms)
            throw SizeLimitError("canonical atom family exceeds " + std::to_string(kMaxCanonicalAtoms) + " atoms");
    };

    for (std::size_t r = 0; r < type.relations().size(); ++r) {
        std::size_t arity = type.relation(r).arity;
        std::size_t count = 1;
        for (std::size_t i = 0; i < arity; ++i) {
            guard(count * n);
            count *= n;
        }
        VarTuple args(arity, 0);
        for (std::size_t k = 0; k < count; ++k) {
            out.push_back(rel(r, args));
            for (std::size_t i = arity; i-- > 0;) {
                if (++args[i] < n)
                    break;
                args[i] = 0;
            }
        }
    }

    auto enabled = [&](AtomKind k) { return omega.contains(k) || omega.contains(dual(k)); };
    if (n >= 8 * sizeof(std::size_t) - 1)
        throw SizeLimitError("too many variables for the canonical atom family");
    auto subsets = all_subsets(n);

    if (enabled(AtomKind::Dependence)) {
        guard(subsets.size() * n);
        for (const auto& xs : subsets)
            for (VarId y = 0; y < n; ++y)
                if (!set_contains(xs, y))
                    out.push_back(dep(xs, y));
    }
    if (enabled(AtomKind::Equality))
        for (VarId x = 0; x < n; ++x)
            for (VarId y = x + 1; y < n; ++y)
                out.push_back(eq(x, y));
    if (enabled(AtomKind::Inclusion)) {
        std::size_t pairs = n * n;
        if (pairs >= 20)
            throw SizeLimitError("inclusion atom family too large for " + std::to_string(n) + " variables");
        guard((std::size_t{1} << pairs) - 1);
        for (std::size_t mask = 1; mask < (std::size_t{1} << pairs); ++mask) {
            VarTuple xs, ys;
            for (std::size_t p = 0; p < pairs; ++p)
                if (mask >> p & 1) {
                    xs.push_back(static_cast<VarId>(p / n));
                    ys.push_back(static_cast<VarId>(p % n));
                }
            out.push_back(incl(xs, ys));
        }
    }
    if (enabled(AtomKind::Independence)) {
        guard(subsets.size() * subsets.size());
        for (const auto& xs : subsets)
            for (const auto& ys : subsets) {
                if (xs.empty() || ys.empty())
                    continue;
                VarTuple a = xs, b = ys;
                while (a.size() < b.size())
                    a.push_back(a.back());
                while (b.size() < a.size())
                    b.push_back(b.back());
                out.push_back(ind(a, b));
            }
    }
    return out;
}

/// Truth of every atom at every row: result[row][atom].
inline std::vector<std::vector<bool>> atom_table(const DependenceModel& m, const std::vector<Formula>& atoms)
{
    std::vector<std::vector<bool>> out(m.team_size(), std::vector<bool>(atoms.size()));
    for (std::size_t i = 0; i < m.team_size(); ++i)
        for (std::size_t a = 0; a < atoms.size(); ++a)
            out[i][a] = detail::atom_at(*atoms[a], m, m.row(i));
    return out;
}

/// A relation between the rows of two teams, produced at some refinement stage.
class BisimRelation {
public:
    BisimRelation() = default;
    BisimRelation(std::size_t left, std::size_t right) : left_(left), right_(right), bits_(left * right, false) {}

    std::size_t left_size() const noexcept { return left_; }
    std::size_t right_size() const noexcept { return right_; }

    bool contains(std::size_t i, std::size_t j) const { return bits_[i * right_ + j]; }
    void set(std::size_t i, std::size_t j, bool v = true) { bits_[i * right_ + j] = v; }

    /// Pairs in lexicographic order.
    std::vector<std::pair<std::size_t, std::size_t>> pairs() const
    {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t i = 0; i < left_; ++i)
            for (std::size_t j = 0; j < right_; ++j)
                if (contains(i, j))
                    out.emplace_back(i, j);
        return out;
    }

    std::size_t size() const
    {
        std::size_t c = 0;
        for (bool b : bits_)
            c += b;
        return c;
    }

    bool subset_of(const BisimRelation& o) const
    {
        for (std::size_t k = 0; k < bits_.size(); ++k)
            if (bits_[k] && !o.bits_[k])
                return false;
        return true;
    }

    /// Equality of the pair sets; the stage label is ignored.
    bool operator==(const BisimRelation& o) const
    {
        return left_ == o.left_ && right_ == o.right_ && bits_ == o.bits_;
    }

    std::size_t stage = 0;

private:
    std::size_t left_ = 0;
    std::size_t right_ = 0;
    std::vector<bool> bits_;
};

/// Why a pair is not (or no longer) related.
struct FailureWitness {
    enum class Reason { AtomDisagreement, ForthFailure, BackFailure };

    std::size_t left = 0;  // s
    std::size_t right = 0; // s'
    Reason reason = Reason::AtomDisagreement;
    Formula atom;          // AtomDisagreement
    std::size_t row = 0;   // Forth: t in the left team; Back: t' in the right team
    VarSet agree;          // X = comvar of that row with its point
    std::size_t stage = 0; // the pair was removed when building this stage
};

namespace detail {

inline void require_same_type(const DependenceModel& a, const DependenceModel& b)
{
    if (!(a.type() == b.type()))
        throw ValidationError("bisimulation needs models of the same type");
}

/// Forth condition of (s, s') against Z, checking only the maximal agreement set. Returns the
/// first failing left row t.
inline std::optional<std::size_t> forth_failure(const BisimRelation& z, const DependenceModel& left,
                                                const DependenceModel& right, std::size_t s, std::size_t sp)
{
    for (std::size_t t = 0; t < left.team_size(); ++t) {
        VarSet xs = comvar(left.row(t), left.row(s));
        bool found = false;
        for (std::size_t tp = 0; tp < right.team_size() && !found; ++tp)
            found = z.contains(t, tp) && agree_on(right.row(tp), right.row(sp), xs);
        if (!found)
            return t;
    }
    return std::nullopt;
}

inline std::optional<std::size_t> back_failure(const BisimRelation& z, const DependenceModel& left,
                                               const DependenceModel& right, std::size_t s, std::size_t sp)
{
    for (std::size_t tp = 0; tp < right.team_size(); ++tp) {
        VarSet xs = comvar(right.row(tp), right.row(sp));
        bool found = false;
        for (std::size_t t = 0; t < left.team_size() && !found; ++t)
            found = z.contains(t, tp) && agree_on(left.row(t), left.row(s), xs);
        if (!found)
            return tp;
    }
    return std::nullopt;
}

inline std::optional<FailureWitness> pair_failure(const BisimRelation& z, const DependenceModel& left,
                                                  const DependenceModel& right, std::size_t s, std::size_t sp)
{
    if (auto t = forth_failure(z, left, right, s, sp)) {
        FailureWitness w;
        w.left = s;
        w.right = sp;
        w.reason = FailureWitness::Reason::ForthFailure;
        w.row = *t;
        w.agree = comvar(left.row(*t), left.row(s));
        return w;
    }
    if (auto tp = back_failure(z, left, right, s, sp)) {
        FailureWitness w;
        w.left = s;
        w.right = sp;
        w.reason = FailureWitness::Reason::BackFailure;
        w.row = *tp;
        w.agree = comvar(right.row(*tp), right.row(sp));
        return w;
    }
    return std::nullopt;
}

} // namespace detail

/// Stage 0: pairs agreeing on every canonical atom.
inline BisimRelation atom_agreement(const DependenceModel& left, const DependenceModel& right,
                                    const OmegaProfile& omega)
{
    detail::require_same_type(left, right);
    auto atoms = canonical_atoms(left.type(), omega);
    auto lt = atom_table(left, atoms);
    auto rt = atom_table(right, atoms);
    BisimRelation z(left.team_size(), right.team_size());
    for (std::size_t i = 0; i < left.team_size(); ++i)
        for (std::size_t j = 0; j < right.team_size(); ++j)
            z.set(i, j, lt[i] == rt[j]);
    return z;
}

/// One back-and-forth refinement. Pairs of Z are kept when every row on either side has a
/// Z-partner agreeing with the other point on the row's full agreement set.
inline BisimRelation refine_step(const BisimRelation& z, const DependenceModel& left, const DependenceModel& right,
                                 std::vector<FailureWitness>* removed = nullptr)
{
    BisimRelation out(z.left_size(), z.right_size());
    out.stage = z.stage + 1;
    for (std::size_t s = 0; s < z.left_size(); ++s)
        for (std::size_t sp = 0; sp < z.right_size(); ++sp) {
            if (!z.contains(s, sp))
                continue;
            auto failure = detail::pair_failure(z, left, right, s, sp);
            if (!failure) {
                out.set(s, sp);
            } else if (removed) {
                failure->stage = out.stage;
                removed->push_back(*failure);
            }
        }
    return out;
}

struct BisimResult {
    bool related = false;
    BisimRelation relation;
    /// The stage of the relation: the requested depth, or without one the first stable step.
    std::size_t stage = 0;
    /// Whether refinement was seen to stabilise.
    bool fixpoint = false;
    std::optional<FailureWitness> witness;
};

/// Refines atom agreement `depth` times, or until stable when no depth is given, and reports
/// whether (s, s') survives. Stage k relates exactly the k-bisimilar pairs.
inline BisimResult bisimilarity(const DependenceModel& left, std::size_t s, const DependenceModel& right,
                                std::size_t sp, const OmegaProfile& omega,
                                std::optional<std::size_t> depth = std::nullopt)
{
    if (s >= left.team_size() || sp >= right.team_size())
        throw ValidationError("assignment outside team");
    detail::require_same_type(left, right);
    auto atoms = canonical_atoms(left.type(), omega);
    auto lt = atom_table(left, atoms);
    auto rt = atom_table(right, atoms);
    BisimRelation z(left.team_size(), right.team_size());
    for (std::size_t i = 0; i < left.team_size(); ++i)
        for (std::size_t j = 0; j < right.team_size(); ++j)
            z.set(i, j, lt[i] == rt[j]);

    BisimResult out;
    if (!z.contains(s, sp)) {
        FailureWitness w;
        w.left = s;
        w.right = sp;
        for (std::size_t a = 0; a < atoms.size(); ++a)
            if (lt[s][a] != rt[sp][a]) {
                w.atom = atoms[a];
                break;
            }
        out.witness = w;
    }

    bool stable = false;
    while (!depth || z.stage < *depth) {
        std::vector<FailureWitness> removed;
        BisimRelation next = refine_step(z, left, right, &removed);
        for (const auto& w : removed)
            if (w.left == s && w.right == sp)
                out.witness = w;
        stable = next == z;
        z = std::move(next);
        if (stable)
            break;
    }
    if (depth)
        z.stage = *depth;
    out.related = z.contains(s, sp);
    out.stage = z.stage;
    out.fixpoint = stable;
    out.relation = std::move(z);
    return out;
}

/// Re-evaluates a witness against the models; true when the recorded failure is reproduced.
inline bool replay_witness(const FailureWitness& w, const DependenceModel& left, const DependenceModel& right,
                           const OmegaProfile& omega)
{
    if (w.reason == FailureWitness::Reason::AtomDisagreement)
        return w.atom && detail::atom_at(*w.atom, left, left.row(w.left)) !=
                             detail::atom_at(*w.atom, right, right.row(w.right));
    BisimResult prev = bisimilarity(left, w.left, right, w.right, omega, w.stage - 1);
    const BisimRelation& z = prev.relation;
    if (w.reason == FailureWitness::Reason::ForthFailure) {
        if (w.agree != comvar(left.row(w.row), left.row(w.left)))
            return false;
        for (std::size_t tp = 0; tp < right.team_size(); ++tp)
            if (z.contains(w.row, tp) && agree_on(right.row(tp), right.row(w.right), w.agree))
                return false;
        return true;
    }
    if (w.agree != comvar(right.row(w.row), right.row(w.right)))
        return false;
    for (std::size_t t = 0; t < left.team_size(); ++t)
        if (z.contains(t, w.row) && agree_on(left.row(t), left.row(w.left), w.agree))
            return false;
    return true;
}

struct BisimulationCheck {
    bool valid = false;
    std::optional<FailureWitness> witness;
};

/// Whether an explicit relation is an L[omega]-bisimulation: every pair agrees on the atoms and
/// satisfies back and forth with respect to the relation itself.
inline BisimulationCheck check_is_bisimulation(const BisimRelation& z, const DependenceModel& left,
                                               const DependenceModel& right, const OmegaProfile& omega)
{
    detail::require_same_type(left, right);
    if (z.left_size() != left.team_size() || z.right_size() != right.team_size())
        throw ValidationError("relation does not match the team sizes");
    auto atoms = canonical_atoms(left.type(), omega);
    auto lt = atom_table(left, atoms);
    auto rt = atom_table(right, atoms);
    for (auto [s, sp] : z.pairs()) {
        if (lt[s] != rt[sp]) {
            FailureWitness w;
            w.left = s;
            w.right = sp;
            for (std::size_t a = 0; a < atoms.size(); ++a)
                if (lt[s][a] != rt[sp][a]) {
                    w.atom = atoms[a];
                    break;
                }
            return {false, w};
        }
        if (auto w = detail::pair_failure(z, left, right, s, sp))
            return {false, w};
    }
    return {true, std::nullopt};
}

inline std::string describe_witness(const FailureWitness& w, const DependenceModel& left,
                                    const DependenceModel& right)
{
    std::string pair = "(" + left.format_assignment(left.row(w.left)) + ") ~ (" +
                       right.format_assignment(right.row(w.right)) + ")";
    auto vars = [&](const VarSet& xs) {
        std::string out = "{";
        for (std::size_t i = 0; i < xs.size(); ++i)
            out += (i ? " " : "") + left.type().var_name(xs[i]);
        return out + "}";
    };
    switch (w.reason) {
    case FailureWitness::Reason::AtomDisagreement:
        return pair + " fails at stage 0: atom " + print_formula(w.atom, left.type()) + " disagrees";
    case FailureWitness::Reason::ForthFailure:
        return pair + " fails at stage " + std::to_string(w.stage) + ": forth, left row (" +
               left.format_assignment(left.row(w.row)) + ") with X = " + vars(w.agree) + " has no partner";
    case FailureWitness::Reason::BackFailure:
        return pair + " fails at stage " + std::to_string(w.stage) + ": back, right row (" +
               right.format_assignment(right.row(w.row)) + ") with X = " + vars(w.agree) + " has no partner";
    }
    return pair;
}

} // namespace lfd
