#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lfd/checker.hpp"
#include "lfd/error.hpp"
#include "lfd/fo.hpp"
#include "lfd/formula.hpp"
#include "lfd/model.hpp"
#include "lfd/syntax.hpp"

namespace lfd {

// ---------------------------------------------------------------------------
// Kahr-class sentences: forall x exists y forall z matrix(x, y, z)
// ---------------------------------------------------------------------------

/// A sentence with one binary relation, any number of monadic ones and an equality-free
/// quantifier-free matrix over x, y, z.
struct KahrSentence {
    std::string binary;
    std::vector<std::string> monadic;
    /// Over the four-variable type (x, y, z, v); only x, y, z occur. Not-free.
    Formula matrix;
};

/// The type of the reduction: the sentence's relations over the variables x, y, z, v.
inline FiniteType kahr_type(const std::string& binary, const std::vector<std::string>& monadic)
{
    std::vector<RelationSymbol> rels{{binary, 2}};
    for (const auto& m : monadic)
        rels.push_back({m, 1});
    return FiniteType(rels, {"x", "y", "z", "v"});
}

inline FiniteType kahr_type(const KahrSentence& psi) { return kahr_type(psi.binary, psi.monadic); }

inline KahrSentence make_kahr(std::string binary, std::vector<std::string> monadic, std::string_view matrix)
{
    FiniteType type = kahr_type(binary, monadic);
    Formula parsed = parse_formula(matrix, type);
    std::vector<const Node*> stack{parsed.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->kind == Kind::Eq || n->kind == Kind::Neq)
            throw ValidationError("equality is not allowed in a Kahr matrix");
        if (is_quantifier(n->kind) || is_local_atom(n->kind))
            throw ValidationError("a Kahr matrix is a boolean combination of relational literals");
        for (VarId x : n->lhs)
            if (x == 3)
                throw ValidationError("a Kahr matrix may only use the variables x, y, z");
        if (n->left)
            stack.push_back(n->left.get());
        if (n->right)
            stack.push_back(n->right.get());
    }
    Formula f = to_nnf(parsed, OmegaProfile{});
    return {std::move(binary), std::move(monadic), f};
}

/// Three lines: `binary <Name>`, `monadic <Name>*`, `matrix <formula>`; `#` starts a comment.
inline KahrSentence parse_kahr(std::string_view text)
{
    std::optional<std::string> binary, matrix;
    std::optional<std::vector<std::string>> monadic;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        auto words = detail::split_words(line);
        if (words.empty())
            continue;
        if (words[0] == "binary") {
            if (binary || words.size() != 2)
                throw ParseError("expected one 'binary <Name>' line", lineno);
            binary = words[1];
        } else if (words[0] == "monadic") {
            if (monadic)
                throw ParseError("duplicate monadic line", lineno);
            monadic = std::vector<std::string>(words.begin() + 1, words.end());
        } else if (words[0] == "matrix") {
            if (matrix)
                throw ParseError("duplicate matrix line", lineno);
            matrix = line.substr(line.find("matrix") + 6);
        } else {
            throw ParseError("unknown directive '" + words[0] + "'", lineno);
        }
    }
    if (!binary)
        throw ParseError("missing binary line", lineno);
    if (!matrix)
        throw ParseError("missing matrix line", lineno);
    return make_kahr(*binary, monadic.value_or(std::vector<std::string>{}), *matrix);
}

/// The matrix as a first-order formula with free variables x, y, z.
inline FOFormula kahr_matrix_fo(const KahrSentence& psi)
{
    FiniteType type = kahr_type(psi);
    std::function<FOFormula(const Formula&)> go = [&](const Formula& f) -> FOFormula {
        const Node& n = *f;
        switch (n.kind) {
        case Kind::Rel:
        case Kind::NegRel: {
            std::vector<FOTerm> args;
            for (VarId x : n.lhs)
                args.push_back(var_term(type.var_name(x)));
            FOFormula a = fo::atom(type.relation(n.relation).name, args);
            return n.kind == Kind::Rel ? a : fo::negate(a);
        }
        case Kind::And: return fo::conj({go(n.left), go(n.right)});
        case Kind::Or: return fo::disj({go(n.left), go(n.right)});
        default: throw std::logic_error("kahr_matrix_fo: unexpected node");
        }
    };
    return go(psi.matrix);
}

/// forall x exists y forall z matrix.
inline FOFormula kahr_to_fo(const KahrSentence& psi)
{
    return fo::forall({"x"}, fo::exists({"y"}, fo::forall({"z"}, kahr_matrix_fo(psi))));
}

// ---------------------------------------------------------------------------
// The reductions
// ---------------------------------------------------------------------------

namespace kahr {
inline constexpr VarId x = 0, y = 1, z = 2, v = 3;
}

/// psi* = A[] matrix & dep(x; y) & theta_0 .. theta_5 with the copy rules as global inclusions.
inline Formula reduce_to_inclusion(const KahrSentence& psi)
{
    using namespace kahr;
    return conj_all({
        global_box(psi.matrix),
        global_box(dep({x}, y)),
        global_box(incl({x, x}, {x, z})),
        global_box(incl({y, y, v}, {y, z, v})),
        global_box(incl({x, z, x}, {x, z, v})),
        global_box(incl({y, z, y}, {y, z, v})),
        global_box(incl({z, z, v}, {x, z, v})),
        global_box(incl({v, z, v}, {x, z, v})),
    });
}

/// The same reduction with every copy rule written as A[] E[keep] (to = from).
inline Formula reduce_to_equality(const KahrSentence& psi)
{
    using namespace kahr;
    return conj_all({
        global_box(psi.matrix),
        global_box(dep({x}, y)),
        global_box(diamond({x}, eq(x, z))),
        global_box(diamond({y, v}, eq(y, z))),
        global_box(diamond({x, z}, eq(x, v))),
        global_box(diamond({y, z}, eq(y, v))),
        global_box(diamond({z, v}, eq(z, x))),
        global_box(diamond({z, v}, eq(v, x))),
    });
}

/// Counts of local atoms by kind, and the variables that occur.
struct AtomCensus {
    std::map<AtomKind, std::size_t> atoms;
    std::set<VarId> variables;
};

inline AtomCensus atom_census(const Formula& f)
{
    AtomCensus out;
    std::vector<const Node*> stack{f.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (is_local_atom(n->kind))
            ++out.atoms[atom_kind(n->kind)];
        for (const auto* vs : {&n->lhs, &n->rhs, &n->set})
            out.variables.insert(vs->begin(), vs->end());
        if (n->kind == Kind::Dep || n->kind == Kind::Anon)
            out.variables.insert(n->target);
        if (n->left)
            stack.push_back(n->left.get());
        if (n->right)
            stack.push_back(n->right.get());
    }
    return out;
}

/// Whether the matrix holds at (a, f a, b) for all a, b of the structure.
inline bool skolem_holds(const KahrSentence& psi, const Structure& a, const std::vector<Elem>& f)
{
    FiniteType type = kahr_type(psi);
    FOStructure fs = to_fo_structure(type, a, false);
    FOFormula matrix = fo::forall({"z"}, kahr_matrix_fo(psi));
    std::vector<std::string> names{"x", "y"};
    for (Elem e = 0; e < a.size(); ++e) {
        std::vector<Elem> vals{e, f.at(e)};
        if (!eval_fo(matrix, fs, names, vals))
            return false;
    }
    return true;
}

/// The dependence model with team {(a, f a, b, c) : a, b, c in A}.
inline DependenceModel witness_model(const KahrSentence& psi, const Structure& a, const std::vector<Elem>& f,
                                     std::size_t cap = kDefaultMaxTeam)
{
    if (f.size() != a.size())
        throw ValidationError("function table must have one entry per element");
    for (Elem e : f)
        if (e >= a.size())
            throw ValidationError("function table leaves the universe");
    if (!skolem_holds(psi, a, f))
        throw ValidationError("the function is not a Skolem function for the sentence");
    std::size_t n = a.size();
    if (n > 0 && n * n > cap / n)
        throw SizeLimitError("witness team exceeds the cap of " + std::to_string(cap));
    std::vector<Assignment> team;
    for (Elem x = 0; x < n; ++x)
        for (Elem b = 0; b < n; ++b)
            for (Elem c = 0; c < n; ++c)
                team.push_back({x, f[x], b, c});
    return DependenceModel(kahr_type(psi), a, std::move(team));
}

struct Extraction {
    /// The substructure on the orbit of the starting element under f.
    Structure structure;
    /// The orbit elements, as elements of the input model, in extracted order.
    std::vector<Elem> orbit;
    /// f restricted to the orbit, over the extracted structure's elements.
    std::vector<Elem> skolem;
};

/// Recovers a model of the sentence from a dependence model of psi*: f is the graph of (x, y),
/// the universe is the f-orbit of s(x) for the chosen start row.
inline Extraction extract_classical_model(const DependenceModel& m, const KahrSentence& psi, std::size_t start = 0)
{
    using namespace kahr;
    if (!(m.type() == kahr_type(psi)))
        throw ValidationError("model type does not match the sentence");
    if (start >= m.team_size())
        throw ValidationError("assignment outside team");
    if (!check_all(reduce_to_inclusion(psi), m)[0])
        throw ValidationError("the model does not satisfy the reduced formula");

    if (!check_global_atom({GlobalKind::Dependence, {x}, {}, y}, m))
        throw std::logic_error("extraction: dep(x; y) fails on a model of the reduced formula");
    std::map<Elem, Elem> f;
    for (const auto& row : m.team())
        f[row[x]] = row[y];

    std::vector<Elem> orbit;
    std::map<Elem, Elem> index;
    Elem cur = m.row(start)[x];
    while (!index.count(cur)) {
        index[cur] = static_cast<Elem>(orbit.size());
        orbit.push_back(cur);
        auto it = f.find(cur);
        if (it == f.end())
            throw std::logic_error("extraction: orbit leaves T(x)");
        cur = it->second;
    }

    auto xz = project(m, {x, z});
    for (Elem a : orbit)
        for (Elem b : orbit)
            if (!xz.count({a, b}))
                throw std::logic_error("extraction: A x A is not contained in T(x, z)");

    const Structure& s = m.structure();
    std::vector<std::string> universe;
    for (Elem e : orbit)
        universe.push_back(s.token(e));
    std::vector<std::set<Tuple>> interp(s.num_relations());
    for (std::size_t r = 0; r < s.num_relations(); ++r)
        for (const auto& t : s.tuples(r)) {
            Tuple u;
            for (Elem e : t) {
                auto it = index.find(e);
                if (it == index.end())
                    break;
                u.push_back(it->second);
            }
            if (u.size() == t.size())
                interp[r].insert(std::move(u));
        }
    Extraction out{Structure(std::move(universe), std::move(interp)), orbit, {}};
    for (Elem e : orbit)
        out.skolem.push_back(index.at(f.at(e)));

    FOStructure fs = to_fo_structure(kahr_type(psi), out.structure, false);
    if (!eval_fo(kahr_to_fo(psi), fs) || !skolem_holds(psi, out.structure, out.skolem))
        throw std::logic_error("extraction: the extracted structure does not satisfy the sentence");
    return out;
}

// ---------------------------------------------------------------------------
// Rewriting inequality and exclusion away on variable-distinguished models
// ---------------------------------------------------------------------------

/// Replaces each x != y and xs notin ys by the constant [xs != ys] (true iff the variable tuples
/// differ) and simplifies. A constant result is written D_V v0 (true) or Y_V v0 (false).
inline Formula rewrite_vd(const Formula& f, const FiniteType& type)
{
    validate(f, type);
    require_not_free(f);
    // Empty optional: a formula; otherwise the constant.
    struct Result {
        std::optional<bool> constant;
        Formula formula;
    };
    std::unordered_map<const Node*, Result> memo;
    std::function<Result(const Formula&)> go = [&](const Formula& g) -> Result {
        if (auto it = memo.find(g.get()); it != memo.end())
            return it->second;
        const Node& n = *g;
        Result r;
        switch (n.kind) {
        case Kind::Rel:
        case Kind::NegRel:
        case Kind::Dep:
        case Kind::Anon: r.formula = g; break;
        case Kind::Neq:
        case Kind::Excl: r.constant = n.lhs != n.rhs; break;
        case Kind::And:
        case Kind::Or: {
            bool is_and = n.kind == Kind::And;
            Result a = go(n.left), b = go(n.right);
            if (a.constant && *a.constant != is_and)
                r = a;
            else if (b.constant && *b.constant != is_and)
                r = b;
            else if (a.constant)
                r = b;
            else if (b.constant)
                r = a;
            else
                r.formula = is_and ? conj(a.formula, b.formula) : disj(a.formula, b.formula);
            break;
        }
        case Kind::Box:
        case Kind::Diamond: {
            Result body = go(n.left);
            if (body.constant)
                r = body;
            else
                r.formula = n.kind == Kind::Box ? box(n.set, body.formula) : diamond(n.set, body.formula);
            break;
        }
        default:
            throw ValidationError(std::string("rewrite_vd accepts D, Y, !=, notin and relational literals, got ") +
                                  (is_local_atom(n.kind) ? std::string(atom_kind_name(atom_kind(n.kind))) : "negation"));
        }
        memo.emplace(g.get(), r);
        return r;
    };
    Result r = go(f);
    if (!r.constant)
        return r.formula;
    return *r.constant ? dep(type.all_vars(), 0) : anon(type.all_vars(), 0);
}

} // namespace lfd
