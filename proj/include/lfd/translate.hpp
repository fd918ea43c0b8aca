#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lfd/error.hpp"
#include "lfd/fo.hpp"
#include "lfd/formula.hpp"
#include "lfd/model.hpp"

namespace lfd {

// ---------------------------------------------------------------------------
// The team as a predicate
// ---------------------------------------------------------------------------

/// Name of the team predicate: "T", primed until it differs from every relation of the type.
inline std::string team_predicate_name(const FiniteType& type)
{
    std::string name = "T";
    while (type.relation_index(name))
        name += "'";
    return name;
}

/// The structure over tau plus the team predicate; with `name_elements` every token is a constant.
inline FOStructure expand(const DependenceModel& m, bool name_elements = false)
{
    FOStructure out = to_fo_structure(m.type(), m.structure(), name_elements);
    out.add_relation(team_predicate_name(m.type()), m.type().num_vars(), m.team());
    return out;
}

namespace detail {

/// Fresh first-order variable names that never clash with the type's variable names.
class FreshNames {
public:
    explicit FreshNames(const FiniteType& type) : taken_(type.variables().begin(), type.variables().end()) {}

    std::string make(const std::string& base)
    {
        std::string name = "_" + base;
        while (taken_.count(name))
            name += "'";
        taken_.insert(name);
        return name;
    }

    /// One fresh name per variable of the type, tagged with `tag`.
    std::vector<std::string> copy(const FiniteType& type, const std::string& tag)
    {
        std::vector<std::string> out;
        for (const auto& v : type.variables())
            out.push_back(make(tag + v));
        return out;
    }

private:
    std::set<std::string> taken_;
};

inline std::vector<FOTerm> terms_of(const std::vector<std::string>& names)
{
    std::vector<FOTerm> out;
    for (const auto& n : names)
        out.push_back(var_term(n));
    return out;
}

inline std::vector<FOTerm> var_terms(const VarTuple& xs, const FiniteType& type)
{
    std::vector<FOTerm> out;
    for (VarId x : xs)
        out.push_back(var_term(type.var_name(x)));
    return out;
}

class StandardTranslator {
public:
    StandardTranslator(const FiniteType& type) : type_(type), fresh_(type), team_(team_predicate_name(type)) {}

    FOFormula run(const Formula& f)
    {
        require_not_free(f);
        return go(f);
    }

private:
    FOFormula team_atom(const std::vector<std::string>& names) { return fo::atom(team_, terms_of(names)); }

    const std::string& v(VarId x) const { return type_.var_name(x); }

    FOFormula inclusion(const Node& n)
    {
        auto z = fresh_.copy(type_, "z");
        std::vector<FOFormula> parts{team_atom(z)};
        for (std::size_t k = 0; k < n.lhs.size(); ++k)
            parts.push_back(fo::equal(var_term(z[n.rhs[k]]), var_term(v(n.lhs[k]))));
        return fo::exists(z, fo::conj(std::move(parts)));
    }

    FOFormula dependence(const Node& n)
    {
        auto z = fresh_.copy(type_, "z");
        auto w = fresh_.copy(type_, "w");
        std::vector<std::string> zb, wb;
        for (VarId x = 0; x < type_.num_vars(); ++x) {
            if (set_contains(n.set, x)) {
                z[x] = v(x);
                w[x] = v(x);
            } else {
                zb.push_back(z[x]);
                wb.push_back(w[x]);
            }
        }
        std::vector<std::string> bound = zb;
        bound.insert(bound.end(), wb.begin(), wb.end());
        return fo::forall(bound, fo::implies(fo::conj({team_atom(z), team_atom(w)}),
                                             fo::equal(var_term(z[n.target]), var_term(w[n.target]))));
    }

    FOFormula independence(const Node& n)
    {
        auto z = fresh_.copy(type_, "z");
        auto w = fresh_.copy(type_, "w");
        std::vector<FOFormula> parts{team_atom(w)};
        for (std::size_t k = 0; k < n.lhs.size(); ++k)
            parts.push_back(fo::equal(var_term(w[n.lhs[k]]), var_term(v(n.lhs[k]))));
        for (std::size_t k = 0; k < n.rhs.size(); ++k)
            parts.push_back(fo::equal(var_term(w[n.rhs[k]]), var_term(z[n.rhs[k]])));
        return fo::forall(z, fo::implies(team_atom(z), fo::exists(w, fo::conj(std::move(parts)))));
    }

    FOFormula go(const Formula& f)
    {
        const Node& n = *f;
        switch (n.kind) {
        case Kind::Rel: return fo::atom(type_.relation(n.relation).name, var_terms(n.lhs, type_));
        case Kind::NegRel: return fo::negate(fo::atom(type_.relation(n.relation).name, var_terms(n.lhs, type_)));
        case Kind::Eq: return fo::equal(var_term(v(n.lhs[0])), var_term(v(n.rhs[0])));
        case Kind::Neq: return fo::negate(fo::equal(var_term(v(n.lhs[0])), var_term(v(n.rhs[0]))));
        case Kind::Dep: return dependence(n);
        case Kind::Anon: return fo::negate(dependence(n));
        case Kind::Incl: return inclusion(n);
        case Kind::Excl: return fo::negate(inclusion(n));
        case Kind::Ind: return independence(n);
        case Kind::NInd: return fo::negate(independence(n));
        case Kind::And: return fo::conj({go(n.left), go(n.right)});
        case Kind::Or: return fo::disj({go(n.left), go(n.right)});
        case Kind::Box:
        case Kind::Diamond: {
            std::vector<std::string> bound;
            for (VarId x = 0; x < type_.num_vars(); ++x)
                if (!set_contains(n.set, x))
                    bound.push_back(v(x));
            FOFormula guard = team_atom(type_.variables());
            FOFormula body = go(n.left);
            if (n.kind == Kind::Box)
                return fo::forall(bound, fo::implies(guard, body));
            return fo::exists(bound, fo::conj({guard, body}));
        }
        case Kind::Not: break;
        }
        throw ValidationError("formula contains negation sugar; convert with to_nnf first");
    }

    const FiniteType& type_;
    FreshNames fresh_;
    std::string team_;
};

} // namespace detail

/// phi* over tau plus the team predicate, with free variables among the type's variable names:
/// (M,T) |=_s phi iff (M,T) |= phi*(s).
inline FOFormula standard_translation(const Formula& f, const FiniteType& type)
{
    validate(f, type);
    return detail::StandardTranslator(type).run(f);
}

/// T-guarded translation of an inclusion or exclusion atom.
inline FOFormula guarded_translation(const Formula& beta, const FiniteType& type)
{
    const Node& n = *beta;
    if (n.kind != Kind::Incl && n.kind != Kind::Excl)
        throw ValidationError("guarded translation applies to inclusion and exclusion atoms only");
    validate(beta, type);
    detail::FreshNames fresh(type);
    auto z = fresh.copy(type, "z");
    std::vector<bool> fixed(type.num_vars(), false);
    std::vector<FOFormula> eqs;
    for (std::size_t k = 0; k < n.rhs.size(); ++k) {
        VarId y = n.rhs[k];
        FOTerm x = var_term(type.var_name(n.lhs[k]));
        if (fixed[y]) {
            eqs.push_back(fo::equal(var_term(z[y]), x));
            continue;
        }
        fixed[y] = true;
        z[y] = x.name;
    }
    std::vector<std::string> bound;
    for (VarId x = 0; x < type.num_vars(); ++x)
        if (!fixed[x])
            bound.push_back(z[x]);
    FOFormula guard = fo::atom(team_predicate_name(type), detail::terms_of(z));
    if (n.kind == Kind::Incl) {
        std::vector<FOFormula> parts{guard};
        parts.insert(parts.end(), eqs.begin(), eqs.end());
        return fo::exists(bound, fo::conj(std::move(parts)));
    }
    FOFormula consequent = eqs.empty() ? fo::falsity() : fo::negate(fo::conj(std::move(eqs)));
    return fo::forall(bound, fo::implies(guard, consequent));
}

/// theta_X(left, right) = T(left) & T(right) & left_i = right_i for i in X.
struct Theta {
    FOFormula formula;
    std::vector<std::string> left;
    std::vector<std::string> right;
};

inline Theta build_theta(const VarSet& xs, const FiniteType& type)
{
    detail::FreshNames fresh(type);
    Theta out;
    out.left = fresh.copy(type, "l");
    out.right = fresh.copy(type, "r");
    std::string t = team_predicate_name(type);
    std::vector<FOFormula> parts{fo::atom(t, detail::terms_of(out.left)), fo::atom(t, detail::terms_of(out.right))};
    for (VarId x : xs) {
        if (x >= type.num_vars())
            throw ValidationError("variable index out of range");
        parts.push_back(fo::equal(var_term(out.left[x]), var_term(out.right[x])));
    }
    out.formula = fo::conj(std::move(parts));
    return out;
}

// ---------------------------------------------------------------------------
// Modal view
// ---------------------------------------------------------------------------

/// Names of the modal vocabulary: one equivalence per variable and one monadic predicate per
/// (relation, argument tuple) pair occurring in a formula.
struct ModalVocabulary {
    std::vector<std::string> sim;
    std::map<std::pair<std::size_t, VarTuple>, std::string> predicate;
};

inline ModalVocabulary modal_vocabulary(const Formula& f, const FiniteType& type)
{
    ModalVocabulary out;
    std::set<std::string> taken;
    auto unique = [&](std::string name) {
        while (!taken.insert(name).second)
            name += "'";
        return name;
    };
    for (const auto& v : type.variables())
        out.sim.push_back(unique("sim_" + v));
    std::vector<const Node*> stack{f.get()};
    std::set<const Node*> seen{f.get()};
    std::set<std::pair<std::size_t, VarTuple>> pairs;
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (is_relational(n->kind))
            pairs.insert({n->relation, n->lhs});
        for (const Formula* c : {&n->left, &n->right})
            if (*c && seen.insert(c->get()).second)
                stack.push_back(c->get());
    }
    for (const auto& p : pairs) {
        std::string name = type.relation(p.first).name;
        for (VarId x : p.second)
            name += "_" + type.var_name(x);
        out.predicate[p] = unique(name);
    }
    return out;
}

namespace detail {

class ModalTranslator {
public:
    ModalTranslator(const FiniteType& type, ModalVocabulary vocab) : type_(type), vocab_(std::move(vocab)) {}

    FOFormula go(const Formula& f, const std::string& s)
    {
        const Node& n = *f;
        switch (n.kind) {
        case Kind::Rel:
        case Kind::NegRel: {
            FOFormula a = fo::atom(vocab_.predicate.at({n.relation, n.lhs}), {var_term(s)});
            return n.kind == Kind::Rel ? a : fo::negate(a);
        }
        case Kind::Dep: return dependence(n, s);
        case Kind::Anon: return fo::negate(dependence(n, s));
        case Kind::Ind: return independence(n, s);
        case Kind::NInd: return fo::negate(independence(n, s));
        case Kind::And: return fo::conj({go(n.left, s), go(n.right, s)});
        case Kind::Or: return fo::disj({go(n.left, s), go(n.right, s)});
        case Kind::Box:
        case Kind::Diamond: {
            std::string t = next();
            std::vector<FOFormula> guard;
            for (VarId x : n.set)
                guard.push_back(sim(x, t, s));
            FOFormula body = go(n.left, t);
            if (n.kind == Kind::Box)
                return fo::forall({t}, guard.empty() ? body : fo::implies(fo::conj(std::move(guard)), body));
            guard.push_back(body);
            return fo::exists({t}, fo::conj(std::move(guard)));
        }
        case Kind::Eq:
        case Kind::Neq:
        case Kind::Incl:
        case Kind::Excl:
            throw ValidationError(std::string("not in modal fragment: ") + std::string(atom_kind_name(atom_kind(n.kind))));
        case Kind::Not: break;
        }
        throw ValidationError("formula contains negation sugar; convert with to_nnf first");
    }

private:
    std::string next() { return "t" + std::to_string(++counter_); }

    FOFormula sim(VarId x, const std::string& a, const std::string& b)
    {
        return fo::atom(vocab_.sim[x], {var_term(a), var_term(b)});
    }

    FOFormula dependence(const Node& n, const std::string& s)
    {
        std::string t = next();
        std::vector<FOFormula> guard;
        for (VarId x : n.set)
            guard.push_back(sim(x, t, s));
        FOFormula body = sim(n.target, t, s);
        return fo::forall({t}, guard.empty() ? body : fo::implies(fo::conj(std::move(guard)), body));
    }

    FOFormula independence(const Node& n, const std::string& s)
    {
        std::string t = next();
        std::string u = next();
        std::vector<FOFormula> parts;
        for (VarId x : n.lhs)
            parts.push_back(sim(x, s, u));
        for (VarId y : n.rhs)
            parts.push_back(sim(y, u, t));
        return fo::forall({t}, fo::exists({u}, fo::conj(std::move(parts))));
    }

    const FiniteType& type_;
    ModalVocabulary vocab_;
    int counter_ = 0;
};

} // namespace detail

/// tr^s(phi): a formula with the single free variable `state` over the modal vocabulary of phi.
inline FOFormula modal_translation(const Formula& f, const FiniteType& type, const std::string& state = "s")
{
    validate(f, type);
    require_not_free(f);
    return detail::ModalTranslator(type, modal_vocabulary(f, type)).go(f, state);
}

/// The team as universe (element i is row i), the monadic predicates of the formula's relational
/// atoms and the equivalences sim_x.
struct StandardRelationalModel {
    FOStructure structure;
    ModalVocabulary vocabulary;
};

inline StandardRelationalModel build_standard_relational_model(const DependenceModel& m, const Formula& f)
{
    validate(f, m.type());
    ModalVocabulary vocab = modal_vocabulary(f, m.type());
    std::vector<std::string> universe;
    for (std::size_t i = 0; i < m.team_size(); ++i)
        universe.push_back(std::to_string(i));
    FOStructure out(universe);
    const auto& team = m.team();
    for (VarId x = 0; x < m.type().num_vars(); ++x) {
        std::set<Tuple> pairs;
        for (Elem i = 0; i < team.size(); ++i)
            for (Elem j = 0; j < team.size(); ++j)
                if (team[i][x] == team[j][x])
                    pairs.insert({i, j});
        out.add_relation(vocab.sim[x], 2, pairs);
    }
    for (const auto& [key, name] : vocab.predicate) {
        std::set<Tuple> rows;
        for (Elem i = 0; i < team.size(); ++i) {
            Tuple t;
            for (VarId x : key.second)
                t.push_back(team[i][x]);
            if (m.structure().holds(key.first, t))
                rows.insert({i});
        }
        out.add_relation(name, 1, rows);
    }
    return {std::move(out), std::move(vocab)};
}

} // namespace lfd
