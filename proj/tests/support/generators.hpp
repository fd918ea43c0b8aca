#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lfd/fo.hpp"
#include "lfd/formula.hpp"
#include "lfd/model.hpp"
#include "lfd/reduce.hpp"

namespace lfd::testing {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

inline std::size_t pick_between(Rng& rng, std::size_t lo, std::size_t hi)
{
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

struct Bounds {
    std::size_t max_universe = 3;
    std::size_t max_vars = 3;
    std::size_t max_team = 6;
};

/// Type with variables x, y, z (first n) and relations P/1 and R/2.
inline FiniteType small_type(std::size_t n)
{
    static const std::vector<std::string> names{"x", "y", "z", "w"};
    return FiniteType({{"P", 1}, {"R", 2}}, std::vector<std::string>(names.begin(), names.begin() + n));
}

inline Structure random_structure(Rng& rng, const FiniteType& type, std::size_t universe)
{
    std::vector<std::string> tokens;
    for (std::size_t e = 0; e < universe; ++e)
        tokens.push_back(std::to_string(e));
    std::vector<std::set<Tuple>> rels;
    for (std::size_t r = 0; r < type.num_relations(); ++r) {
        std::set<Tuple> tuples;
        for (const auto& t : all_assignments(universe, type.relation(r).arity, kDefaultMaxTeam))
            if (coin(rng))
                tuples.insert(t);
        rels.push_back(std::move(tuples));
    }
    return Structure(std::move(tokens), std::move(rels));
}

inline std::vector<Assignment> random_team(Rng& rng, std::size_t universe, std::size_t n, std::size_t max_team)
{
    std::vector<Assignment> all = all_assignments(universe, n, kDefaultMaxTeam);
    std::shuffle(all.begin(), all.end(), rng);
    std::size_t size = pick_between(rng, 1, std::min(max_team, all.size()));
    all.resize(size);
    return all;
}

inline DependenceModel random_model(Rng& rng, const FiniteType& type, std::size_t universe, std::size_t max_team)
{
    Structure s = random_structure(rng, type, universe);
    return DependenceModel(type, std::move(s), random_team(rng, universe, type.num_vars(), max_team));
}

inline DependenceModel random_model(Rng& rng, const Bounds& b = {})
{
    FiniteType type = small_type(pick_between(rng, 1, b.max_vars));
    return random_model(rng, type, pick_between(rng, 1, b.max_universe), b.max_team);
}

/// Two random models of one type, for bisimulation tests.
inline std::pair<DependenceModel, DependenceModel> random_pair(Rng& rng, const Bounds& b = {})
{
    FiniteType type = small_type(pick_between(rng, 1, b.max_vars));
    DependenceModel a = random_model(rng, type, pick_between(rng, 1, b.max_universe), b.max_team);
    DependenceModel c = random_model(rng, type, pick_between(rng, 1, b.max_universe), b.max_team);
    return {std::move(a), std::move(c)};
}

inline VarTuple random_tuple(Rng& rng, std::size_t n, std::size_t len)
{
    VarTuple out;
    for (std::size_t i = 0; i < len; ++i)
        out.push_back(static_cast<VarId>(pick(rng, n)));
    return out;
}

inline VarTuple random_set(Rng& rng, std::size_t n)
{
    VarTuple out;
    for (VarId v = 0; v < n; ++v)
        if (coin(rng))
            out.push_back(v);
    return out;
}

/// Random Not-free atom whose kind is enabled in `omega` (relational literals always allowed).
inline Formula random_atom(Rng& rng, const FiniteType& type, const OmegaProfile& omega)
{
    std::vector<AtomKind> kinds;
    for (std::size_t k = 0; k < kAtomKinds; ++k)
        if (omega.contains(static_cast<AtomKind>(k)))
            kinds.push_back(static_cast<AtomKind>(k));
    const std::size_t n = type.num_vars();
    if (kinds.empty() || coin(rng, 0.3)) {
        std::size_t r = pick(rng, type.num_relations());
        VarTuple args = random_tuple(rng, n, type.relation(r).arity);
        return coin(rng) ? rel(r, args) : neg_rel(r, args);
    }
    AtomKind k = kinds[pick(rng, kinds.size())];
    std::size_t len = pick_between(rng, 1, 2);
    VarId a = static_cast<VarId>(pick(rng, n)), b = static_cast<VarId>(pick(rng, n));
    switch (k) {
    case AtomKind::Dependence: return dep(random_set(rng, n), a);
    case AtomKind::Anonymity: return anon(random_set(rng, n), a);
    case AtomKind::Equality: return eq(a, b);
    case AtomKind::Inequality: return neq(a, b);
    case AtomKind::Inclusion: return incl(random_tuple(rng, n, len), random_tuple(rng, n, len));
    case AtomKind::Exclusion: return excl(random_tuple(rng, n, len), random_tuple(rng, n, len));
    case AtomKind::Independence: return ind(random_tuple(rng, n, len), random_tuple(rng, n, len));
    case AtomKind::NonIndependence: return nind(random_tuple(rng, n, len), random_tuple(rng, n, len));
    }
    throw std::logic_error("unreachable");
}

/// Random Not-free formula with quantifier rank at most `qr`.
inline Formula random_formula(Rng& rng, const FiniteType& type, std::size_t qr, const OmegaProfile& omega,
                              std::size_t size = 6)
{
    if (size <= 1 || coin(rng, 0.25))
        return random_atom(rng, type, omega);
    std::size_t choice = pick(rng, qr > 0 ? 4 : 2);
    if (choice < 2) {
        std::size_t left = pick_between(rng, 1, size - 1);
        Formula a = random_formula(rng, type, qr, omega, left);
        Formula b = random_formula(rng, type, qr, omega, size - left);
        return choice == 0 ? conj(a, b) : disj(a, b);
    }
    VarTuple xs = random_set(rng, type.num_vars());
    Formula body = random_formula(rng, type, qr - 1, omega, size - 1);
    return choice == 2 ? box(xs, body) : diamond(xs, body);
}

/// Random formula that may contain Not nodes anywhere.
inline Formula random_sugared_formula(Rng& rng, const FiniteType& type, std::size_t qr, const OmegaProfile& omega,
                                      std::size_t size = 6)
{
    Formula f;
    if (size <= 1 || coin(rng, 0.25)) {
        f = random_atom(rng, type, omega);
    } else {
        std::size_t choice = pick(rng, qr > 0 ? 4 : 2);
        if (choice < 2) {
            std::size_t left = pick_between(rng, 1, size - 1);
            Formula a = random_sugared_formula(rng, type, qr, omega, left);
            Formula b = random_sugared_formula(rng, type, qr, omega, size - left);
            f = choice == 0 ? conj(a, b) : disj(a, b);
        } else {
            VarTuple xs = random_set(rng, type.num_vars());
            Formula body = random_sugared_formula(rng, type, qr - 1, omega, size - 1);
            f = choice == 2 ? box(xs, body) : diamond(xs, body);
        }
    }
    return coin(rng, 0.3) ? negation(f) : f;
}

/// Random equality-free relational FO formula over the type's variables, quantifier depth at most `depth`.
inline FOFormula random_relational_fo(Rng& rng, const FiniteType& type, std::size_t depth, std::size_t size = 6)
{
    const std::size_t n = type.num_vars();
    if (size <= 1 || coin(rng, 0.2)) {
        std::size_t r = pick(rng, type.num_relations());
        std::vector<FOTerm> terms;
        for (VarId v : random_tuple(rng, n, type.relation(r).arity))
            terms.push_back(var_term(type.var_name(v)));
        FOFormula a = fo::atom(type.relation(r).name, terms);
        return coin(rng, 0.3) ? fo::negate(a) : a;
    }
    std::size_t choice = pick(rng, depth > 0 ? 5 : 3);
    if (choice < 3) {
        std::size_t left = pick_between(rng, 1, size - 1);
        FOFormula a = random_relational_fo(rng, type, depth, left);
        FOFormula b = random_relational_fo(rng, type, depth, size - left);
        if (choice == 0)
            return fo::conj({a, b});
        if (choice == 1)
            return fo::disj({a, b});
        return fo::negate(fo::conj({a, b}));
    }
    std::string v = type.var_name(static_cast<VarId>(pick(rng, n)));
    FOFormula body = random_relational_fo(rng, type, depth - 1, size - 1);
    return choice == 3 ? fo::exists({v}, body) : fo::forall({v}, body);
}

/// Closes an FO formula over the type's variables universally.
inline FOFormula close_universally(const FOFormula& f)
{
    auto free = fo_free_variables(f);
    return fo::forall(std::vector<std::string>(free.begin(), free.end()), f);
}

struct KahrFixture {
    KahrSentence psi;
    Structure a;
    std::vector<Elem> f;
};

inline std::string random_kahr_literal(Rng& rng)
{
    static const std::vector<std::string> vars{"x", "y", "z"};
    std::string lit;
    if (coin(rng))
        lit = "E(" + vars[pick(rng, 3)] + "," + vars[pick(rng, 3)] + ")";
    else
        lit = "P(" + vars[pick(rng, 3)] + ")";
    return coin(rng, 0.3) ? "!" + lit : lit;
}

inline std::string random_kahr_matrix(Rng& rng)
{
    std::size_t clauses = pick_between(rng, 1, 2);
    std::string out;
    for (std::size_t c = 0; c < clauses; ++c) {
        std::size_t lits = pick_between(rng, 1, 2);
        std::string clause;
        for (std::size_t l = 0; l < lits; ++l)
            clause += (l ? " | " : "") + random_kahr_literal(rng);
        out += (c ? " & " : "") + (lits > 1 ? "(" + clause + ")" : clause);
    }
    return out;
}

/// Random (psi, A, f) with A |= matrix(a, f a, b) for all a, b, or nothing after `tries` attempts.
inline std::optional<KahrFixture> random_kahr_fixture(Rng& rng, std::size_t max_universe, std::size_t tries = 200)
{
    for (std::size_t i = 0; i < tries; ++i) {
        KahrSentence psi = make_kahr("E", {"P"}, random_kahr_matrix(rng));
        FiniteType type = kahr_type(psi);
        std::size_t size = pick_between(rng, 1, max_universe);
        std::vector<std::string> tokens;
        for (std::size_t e = 0; e < size; ++e)
            tokens.push_back(std::to_string(e));
        std::set<Tuple> e_rel, p_rel;
        for (Elem a = 0; a < size; ++a) {
            if (coin(rng))
                p_rel.insert({a});
            for (Elem b = 0; b < size; ++b)
                if (coin(rng, 0.6))
                    e_rel.insert({a, b});
        }
        std::vector<std::set<Tuple>> rels(type.num_relations());
        rels[*type.relation_index("E")] = e_rel;
        rels[*type.relation_index("P")] = p_rel;
        Structure a(tokens, rels);
        std::vector<Elem> f(size);
        for (auto& v : f)
            v = static_cast<Elem>(pick(rng, size));
        if (skolem_holds(psi, a, f))
            return KahrFixture{psi, a, f};
    }
    return std::nullopt;
}

} // namespace lfd::testing
