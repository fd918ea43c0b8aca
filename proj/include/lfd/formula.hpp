#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "lfd/error.hpp"
#include "lfd/type.hpp"

namespace lfd {

// Node kinds of L[Omega] formulas. `Not` is surface sugar only: it is removed by
// to_nnf and every semantic module rejects it.
enum class Kind : std::uint8_t {
    Rel,     // R(x...)
    NegRel,  // !R(x...)
    Eq,      // x = y
    Neq,     // x != y
    Dep,     // D[X] y
    Anon,    // Y[X] y
    Incl,    // in(x... ; y...)
    Excl,    // notin(x... ; y...)
    Ind,     // Ind[x...](y...)
    NInd,    // nInd[x...](y...)
    And,
    Or,
    Box,     // A[X] / D_X quantifier: all team rows agreeing on X
    Diamond, // E[X]: some team row agreeing on X
    Not,
};

/// The local atom families that a logic L[Omega] may enable.
enum class AtomKind : std::uint8_t {
    Dependence,
    Anonymity,
    Equality,
    Inequality,
    Inclusion,
    Exclusion,
    Independence,
    NonIndependence,
};

inline constexpr std::size_t kAtomKinds = 8;

inline AtomKind dual(AtomKind k)
{
    switch (k) {
    case AtomKind::Dependence: return AtomKind::Anonymity;
    case AtomKind::Anonymity: return AtomKind::Dependence;
    case AtomKind::Equality: return AtomKind::Inequality;
    case AtomKind::Inequality: return AtomKind::Equality;
    case AtomKind::Inclusion: return AtomKind::Exclusion;
    case AtomKind::Exclusion: return AtomKind::Inclusion;
    case AtomKind::Independence: return AtomKind::NonIndependence;
    case AtomKind::NonIndependence: return AtomKind::Independence;
    }
    return k;
}

inline std::string_view atom_kind_name(AtomKind k)
{
    static constexpr std::array<std::string_view, kAtomKinds> names{
        "D", "Y", "=", "!=", "in", "notin", "Ind", "nInd"};
    return names[static_cast<std::size_t>(k)];
}

/// A set of enabled atom kinds.
class OmegaProfile {
public:
    OmegaProfile() = default;
    OmegaProfile(std::initializer_list<AtomKind> kinds)
    {
        for (auto k : kinds)
            insert(k);
    }

    static OmegaProfile all()
    {
        OmegaProfile p;
        p.bits_.set();
        return p;
    }

    /// Parses a comma- or space-separated list such as "D,Y,=,!=".
    static OmegaProfile parse(std::string_view text)
    {
        OmegaProfile p;
        std::string tok;
        auto flush = [&] {
            if (tok.empty())
                return;
            bool found = false;
            for (std::size_t i = 0; i < kAtomKinds; ++i) {
                if (atom_kind_name(static_cast<AtomKind>(i)) == tok) {
                    p.insert(static_cast<AtomKind>(i));
                    found = true;
                }
            }
            if (tok == "all") {
                p = all();
                found = true;
            }
            if (!found)
                throw ParseError("unknown atom kind '" + tok + "' in omega profile", 0);
            tok.clear();
        };
        for (char c : text) {
            if (c == ',' || c == ' ')
                flush();
            else
                tok.push_back(c);
        }
        flush();
        return p;
    }

    void insert(AtomKind k) { bits_.set(static_cast<std::size_t>(k)); }
    bool contains(AtomKind k) const { return bits_.test(static_cast<std::size_t>(k)); }
    bool empty() const { return bits_.none(); }

    /// True when, for every dual pair it touches, it contains both members.
    bool is_negation_closed() const
    {
        for (std::size_t i = 0; i < kAtomKinds; ++i) {
            auto k = static_cast<AtomKind>(i);
            if (contains(k) && !contains(dual(k)))
                return false;
        }
        return true;
    }

    OmegaProfile negation_closure() const
    {
        OmegaProfile p = *this;
        for (std::size_t i = 0; i < kAtomKinds; ++i) {
            auto k = static_cast<AtomKind>(i);
            if (contains(k))
                p.insert(dual(k));
        }
        return p;
    }

    std::string to_string() const
    {
        std::string out;
        for (std::size_t i = 0; i < kAtomKinds; ++i) {
            if (!bits_.test(i))
                continue;
            if (!out.empty())
                out += ',';
            out += atom_kind_name(static_cast<AtomKind>(i));
        }
        return out;
    }

    bool operator==(const OmegaProfile&) const = default;

private:
    std::bitset<kAtomKinds> bits_;
};

struct Node;

/// Immutable, shareable formula handle. Subformulas may be shared, so a formula is a DAG;
/// node identity is stable and used as a memo key by the checker.
class Formula {
public:
    Formula() = default;
    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    const Node& operator*() const { return *node_; }
    const Node* operator->() const { return node_.get(); }
    const Node* get() const { return node_.get(); }
    explicit operator bool() const { return static_cast<bool>(node_); }

    Kind kind() const;

private:
    std::shared_ptr<const Node> node_;
};

struct Node {
    Kind kind = Kind::Rel;
    std::size_t relation = 0; // Rel / NegRel
    VarTuple lhs;             // Rel args; Eq/Neq left; Incl/Excl/Ind/NInd first tuple
    VarTuple rhs;             // Eq/Neq right; Incl/Excl/Ind/NInd second tuple
    VarSet set;               // Dep/Anon determining set; Box/Diamond agreement set
    VarId target = 0;         // Dep/Anon dependent variable
    Formula left;             // And/Or first child; Box/Diamond/Not body
    Formula right;            // And/Or second child
};

inline Kind Formula::kind() const { return node_->kind; }

inline bool is_atom(Kind k)
{
    return k != Kind::And && k != Kind::Or && k != Kind::Box && k != Kind::Diamond && k != Kind::Not;
}

inline bool is_relational(Kind k) { return k == Kind::Rel || k == Kind::NegRel; }

inline bool is_local_atom(Kind k) { return is_atom(k) && !is_relational(k); }

inline bool is_quantifier(Kind k) { return k == Kind::Box || k == Kind::Diamond; }

/// The Omega kind of a local atom node.
inline AtomKind atom_kind(Kind k)
{
    switch (k) {
    case Kind::Dep: return AtomKind::Dependence;
    case Kind::Anon: return AtomKind::Anonymity;
    case Kind::Eq: return AtomKind::Equality;
    case Kind::Neq: return AtomKind::Inequality;
    case Kind::Incl: return AtomKind::Inclusion;
    case Kind::Excl: return AtomKind::Exclusion;
    case Kind::Ind: return AtomKind::Independence;
    case Kind::NInd: return AtomKind::NonIndependence;
    default: throw std::logic_error("atom_kind: not a local atom");
    }
}

namespace detail {

inline Formula make(Node n) { return Formula(std::make_shared<const Node>(std::move(n))); }

inline void require_tuple_pair(const VarTuple& a, const VarTuple& b, const char* what)
{
    if (a.empty() || b.empty())
        throw ValidationError(std::string(what) + ": tuples must be nonempty");
    if (a.size() != b.size())
        throw ValidationError(std::string(what) + ": tuple lengths differ");
}

} // namespace detail

inline Formula rel(std::size_t relation, VarTuple args)
{
    Node n;
    n.kind = Kind::Rel;
    n.relation = relation;
    n.lhs = std::move(args);
    return detail::make(std::move(n));
}

inline Formula neg_rel(std::size_t relation, VarTuple args)
{
    Node n;
    n.kind = Kind::NegRel;
    n.relation = relation;
    n.lhs = std::move(args);
    return detail::make(std::move(n));
}

namespace detail {

inline Formula pair_atom(Kind kind, VarTuple xs, VarTuple ys)
{
    Node n;
    n.kind = kind;
    n.lhs = std::move(xs);
    n.rhs = std::move(ys);
    return make(std::move(n));
}

inline Formula set_node(Kind kind, VarTuple set, VarId target, Formula body)
{
    Node n;
    n.kind = kind;
    n.set = make_var_set(std::move(set));
    n.target = target;
    n.left = std::move(body);
    return make(std::move(n));
}

inline Formula binary(Kind kind, Formula a, Formula b)
{
    Node n;
    n.kind = kind;
    n.left = std::move(a);
    n.right = std::move(b);
    return make(std::move(n));
}

} // namespace detail

inline Formula eq(VarId x, VarId y) { return detail::pair_atom(Kind::Eq, {x}, {y}); }
inline Formula neq(VarId x, VarId y) { return detail::pair_atom(Kind::Neq, {x}, {y}); }

inline Formula dep(VarTuple on, VarId y) { return detail::set_node(Kind::Dep, std::move(on), y, {}); }
inline Formula anon(VarTuple on, VarId y) { return detail::set_node(Kind::Anon, std::move(on), y, {}); }

inline Formula incl(VarTuple xs, VarTuple ys)
{
    detail::require_tuple_pair(xs, ys, "inclusion atom");
    return detail::pair_atom(Kind::Incl, std::move(xs), std::move(ys));
}

inline Formula excl(VarTuple xs, VarTuple ys)
{
    detail::require_tuple_pair(xs, ys, "exclusion atom");
    return detail::pair_atom(Kind::Excl, std::move(xs), std::move(ys));
}

inline Formula ind(VarTuple xs, VarTuple ys)
{
    detail::require_tuple_pair(xs, ys, "independence atom");
    return detail::pair_atom(Kind::Ind, std::move(xs), std::move(ys));
}

inline Formula nind(VarTuple xs, VarTuple ys)
{
    detail::require_tuple_pair(xs, ys, "independence atom");
    return detail::pair_atom(Kind::NInd, std::move(xs), std::move(ys));
}

inline Formula conj(Formula a, Formula b) { return detail::binary(Kind::And, std::move(a), std::move(b)); }
inline Formula disj(Formula a, Formula b) { return detail::binary(Kind::Or, std::move(a), std::move(b)); }

inline Formula box(VarTuple agree, Formula body) { return detail::set_node(Kind::Box, std::move(agree), 0, std::move(body)); }

inline Formula diamond(VarTuple agree, Formula body)
{
    return detail::set_node(Kind::Diamond, std::move(agree), 0, std::move(body));
}

/// The global modality: box over the empty agreement set.
inline Formula global_box(Formula body) { return box({}, std::move(body)); }
inline Formula global_diamond(Formula body) { return diamond({}, std::move(body)); }

inline Formula negation(Formula body)
{
    Node n;
    n.kind = Kind::Not;
    n.left = std::move(body);
    return detail::make(std::move(n));
}

/// Left-deep conjunction of a nonempty list.
inline Formula conj_all(const std::vector<Formula>& parts)
{
    if (parts.empty())
        throw std::logic_error("conj_all: empty list");
    Formula out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i)
        out = conj(out, parts[i]);
    return out;
}

inline Formula disj_all(const std::vector<Formula>& parts)
{
    if (parts.empty())
        throw std::logic_error("disj_all: empty list");
    Formula out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i)
        out = disj(out, parts[i]);
    return out;
}

/// Structural equality.
inline bool operator==(const Formula& a, const Formula& b)
{
    if (a.get() == b.get())
        return true;
    if (!a || !b)
        return false;
    const Node& x = *a;
    const Node& y = *b;
    if (x.kind != y.kind || x.relation != y.relation || x.lhs != y.lhs || x.rhs != y.rhs || x.set != y.set
        || x.target != y.target)
        return false;
    return x.left == y.left && x.right == y.right;
}

/// Checks variable ranges, relation indices, arities and tuple shapes against a type.
/// Shared subformulas are visited once.
inline void validate(const Formula& f, const FiniteType& type)
{
    auto check_vars = [&](const std::vector<VarId>& vs) {
        for (auto v : vs)
            if (v >= type.num_vars())
                throw ValidationError("variable index out of range");
    };
    std::vector<const Node*> stack{f.get()};
    std::unordered_set<const Node*> seen{f.get()};
    while (!stack.empty()) {
        const Node& n = *stack.back();
        stack.pop_back();
        check_vars(n.lhs);
        check_vars(n.rhs);
        check_vars(n.set);
        switch (n.kind) {
        case Kind::Rel:
        case Kind::NegRel:
            if (n.relation >= type.relations().size())
                throw ValidationError("unknown relation index");
            if (type.relation(n.relation).arity != n.lhs.size())
                throw ValidationError("arity mismatch for relation '" + type.relation(n.relation).name + "'");
            break;
        case Kind::Dep:
        case Kind::Anon:
            check_vars({n.target});
            break;
        case Kind::Incl:
        case Kind::Excl:
        case Kind::Ind:
        case Kind::NInd:
            detail::require_tuple_pair(n.lhs, n.rhs, "tuple atom");
            break;
        case Kind::Eq:
        case Kind::Neq:
            if (n.lhs.size() != 1 || n.rhs.size() != 1)
                throw ValidationError("equality atom takes two variables");
            break;
        default:
            break;
        }
        for (const Formula* child : {&n.left, &n.right})
            if (*child && seen.insert(child->get()).second)
                stack.push_back(child->get());
    }
}

/// Throws if a Not node occurs anywhere. Shared subformulas are visited once.
inline void require_not_free(const Formula& f)
{
    std::vector<const Node*> stack{f.get()};
    std::unordered_set<const Node*> seen{f.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->kind == Kind::Not)
            throw ValidationError("formula contains negation sugar; convert with to_nnf first");
        for (const Formula* child : {&n->left, &n->right})
            if (*child && seen.insert(child->get()).second)
                stack.push_back(child->get());
    }
}

} // namespace lfd
