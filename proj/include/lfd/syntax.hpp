#pragma once

#include <cctype>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lfd/error.hpp"
#include "lfd/formula.hpp"
#include "lfd/type.hpp"

namespace lfd {

// ---------------------------------------------------------------------------
// Parsing
//
//   phi  := disj ;  disj := conj ("|" conj)* ;  conj := unit ("&" unit)*
//   unit := "(" phi ")" | "not" unit | "E[" vars "]" unit | "A[" vars "]" unit | atom
//   atom := NAME "(" vars ")" | "!" NAME "(" vars ")" | VAR "=" VAR | VAR "!=" VAR
//         | "D[" vars "]" VAR | "Y[" vars "]" VAR
//         | "in(" vars ";" vars ")" | "notin(" vars ";" vars ")"
//         | "Ind[" vars "](" vars ")" | "nInd[" vars "](" vars ")"
//         | "dep(" vars ";" VAR ")" | "anon(" vars ";" VAR ")"
//         | "incl(" vars ";" vars ")" | "excl(" vars ";" vars ")" | "indep(" vars ";" vars ")"
//
// Variables in `vars` are separated by whitespace; commas are accepted too.
// The global keywords are desugared to A[] applied to the local atom.
// ---------------------------------------------------------------------------

namespace detail {

class FormulaParser {
public:
    FormulaParser(std::string_view text, const FiniteType& type) : text_(text), type_(type) {}

    Formula parse()
    {
        Formula f = parse_disj();
        skip_ws();
        if (pos_ != text_.size())
            fail("unexpected trailing input");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool peek(std::string_view tok)
    {
        skip_ws();
        return text_.substr(pos_, tok.size()) == tok;
    }

    bool accept(std::string_view tok)
    {
        if (!peek(tok))
            return false;
        pos_ += tok.size();
        return true;
    }

    void expect(std::string_view tok)
    {
        if (!accept(tok))
            fail("expected '" + std::string(tok) + "'");
    }

    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

    bool at_ident()
    {
        skip_ws();
        return pos_ < text_.size()
               && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_');
    }

    std::string ident()
    {
        if (!at_ident())
            fail("expected identifier");
        std::size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_]))
            ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    VarId variable()
    {
        std::size_t at = (skip_ws(), pos_);
        std::string name = ident();
        auto v = type_.variable_index(name);
        if (!v) {
            pos_ = at;
            fail("unknown variable '" + name + "'");
        }
        return *v;
    }

    VarTuple vars()
    {
        VarTuple out;
        while (at_ident()) {
            out.push_back(variable());
            accept(",");
        }
        return out;
    }

    Formula parse_disj()
    {
        Formula f = parse_conj();
        while (accept("|"))
            f = disj(f, parse_conj());
        return f;
    }

    Formula parse_conj()
    {
        Formula f = parse_unit();
        while (accept("&"))
            f = conj(f, parse_unit());
        return f;
    }

    Formula tuple_atom(Formula (*make)(VarTuple, VarTuple), std::size_t at)
    {
        VarTuple xs = vars();
        expect(";");
        VarTuple ys = vars();
        expect(")");
        if (xs.empty() || ys.empty() || xs.size() != ys.size()) {
            pos_ = at;
            fail(xs.empty() || ys.empty() ? "tuple atom needs nonempty tuples" : "tuple lengths differ");
        }
        return make(std::move(xs), std::move(ys));
    }

    Formula relation_atom(const std::string& name, bool negated, std::size_t at)
    {
        auto r = type_.relation_index(name);
        if (!r) {
            pos_ = at;
            fail("unknown relation '" + name + "'");
        }
        VarTuple args = vars();
        expect(")");
        if (args.size() != type_.relation(*r).arity) {
            pos_ = at;
            fail("arity mismatch for relation '" + name + "'");
        }
        return negated ? neg_rel(*r, std::move(args)) : rel(*r, std::move(args));
    }

    Formula parse_unit()
    {
        skip_ws();
        std::size_t at = pos_;
        if (accept("(")) {
            Formula f = parse_disj();
            expect(")");
            return f;
        }
        if (accept("!")) {
            std::string name = ident();
            expect("(");
            return relation_atom(name, true, at);
        }
        std::string name = ident();
        if (name == "not")
            return negation(parse_unit());
        if (accept("[")) {
            VarTuple set = vars();
            expect("]");
            if (name == "A")
                return box(set, parse_unit());
            if (name == "E")
                return diamond(set, parse_unit());
            if (name == "D")
                return dep(set, variable());
            if (name == "Y")
                return anon(set, variable());
            if (name == "Ind" || name == "nInd") {
                expect("(");
                VarTuple ys = vars();
                expect(")");
                if (set.empty() || ys.empty() || set.size() != ys.size()) {
                    pos_ = at;
                    fail(set.empty() || ys.empty() ? "independence atom needs nonempty tuples"
                                                   : "tuple lengths differ");
                }
                return name == "Ind" ? ind(set, ys) : nind(set, ys);
            }
            pos_ = at;
            fail("unknown quantifier or atom '" + name + "['");
        }
        if (accept("(")) {
            if (name == "in")
                return tuple_atom(&incl, at);
            if (name == "notin")
                return tuple_atom(&excl, at);
            if (name == "incl")
                return global_box(tuple_atom(&incl, at));
            if (name == "excl")
                return global_box(tuple_atom(&excl, at));
            if (name == "indep")
                return global_box(tuple_atom(&ind, at));
            if (name == "dep" || name == "anon") {
                VarTuple xs = vars();
                expect(";");
                VarId y = variable();
                expect(")");
                return global_box(name == "dep" ? dep(xs, y) : anon(xs, y));
            }
            return relation_atom(name, false, at);
        }
        auto x = type_.variable_index(name);
        if (!x) {
            pos_ = at;
            fail("unknown variable '" + name + "'");
        }
        if (accept("!=")) {
            return neq(*x, variable());
        }
        if (accept("="))
            return eq(*x, variable());
        fail("expected '=' or '!=' after variable");
    }

    std::string_view text_;
    const FiniteType& type_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Formula parse_formula(std::string_view text, const FiniteType& type)
{
    return detail::FormulaParser(text, type).parse();
}

/// A type read off formula text: every NAME( ... ) that is not a keyword is a relation whose
/// arity is its argument count, every other identifier outside keyword position is a variable.
/// Variables listed in `order` come first, the rest follow in order of appearance.
inline FiniteType infer_type(std::string_view text, const std::vector<std::string>& order = {})
{
    static const std::unordered_set<std::string> paren_keywords{"in",   "notin", "incl", "excl",
                                                                "indep", "dep",  "anon"};
    auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; };

    std::vector<std::string> vars = order;
    std::unordered_set<std::string> seen_vars(order.begin(), order.end());
    std::vector<RelationSymbol> rels;
    std::unordered_map<std::string, std::size_t> arity;

    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    };
    auto next_ident = [&]() -> std::string {
        std::size_t start = pos;
        while (pos < text.size() && is_ident_char(text[pos]))
            ++pos;
        return std::string(text.substr(start, pos - start));
    };
    auto add_var = [&](const std::string& v) {
        if (seen_vars.insert(v).second)
            vars.push_back(v);
    };

    while (pos < text.size()) {
        if (!is_ident_start(text[pos])) {
            ++pos;
            continue;
        }
        std::size_t at = pos;
        std::string name = next_ident();
        skip_ws();
        char next = pos < text.size() ? text[pos] : '\0';
        if (name == "not" || next == '[' || (next == '(' && paren_keywords.count(name)))
            continue;
        if (next == '(' && !paren_keywords.count(name)) {
            ++pos;
            std::size_t count = 0;
            while (true) {
                skip_ws();
                if (pos >= text.size())
                    throw ParseError("unterminated argument list", at);
                if (text[pos] == ')') {
                    ++pos;
                    break;
                }
                if (text[pos] == ',') {
                    ++pos;
                    continue;
                }
                if (!is_ident_start(text[pos]))
                    throw ParseError("unexpected character in argument list", pos);
                add_var(next_ident());
                ++count;
            }
            auto [it, fresh] = arity.emplace(name, count);
            if (fresh)
                rels.push_back({name, count});
            else if (it->second != count)
                throw ParseError("relation '" + name + "' used with different arities", at);
            continue;
        }
        add_var(name);
    }
    if (vars.empty())
        throw ParseError("formula mentions no variables", 0);
    return FiniteType(std::move(rels), std::move(vars));
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string join_vars(const std::vector<VarId>& vs, const FiniteType& type)
{
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i)
            out += ' ';
        out += type.var_name(vs[i]);
    }
    return out;
}

inline bool is_binary(Kind k) { return k == Kind::And || k == Kind::Or; }

inline void print_into(std::string& out, const Formula& f, const FiniteType& type);

inline void print_child(std::string& out, const Formula& child, bool parens, const FiniteType& type)
{
    if (parens)
        out += '(';
    print_into(out, child, type);
    if (parens)
        out += ')';
}

inline void print_into(std::string& out, const Formula& f, const FiniteType& type)
{
    const Node& n = *f;
    switch (n.kind) {
    case Kind::Rel:
    case Kind::NegRel:
        if (n.kind == Kind::NegRel)
            out += '!';
        out += type.relation(n.relation).name + "(" + join_vars(n.lhs, type) + ")";
        return;
    case Kind::Eq:
        out += type.var_name(n.lhs[0]) + " = " + type.var_name(n.rhs[0]);
        return;
    case Kind::Neq:
        out += type.var_name(n.lhs[0]) + " != " + type.var_name(n.rhs[0]);
        return;
    case Kind::Dep:
    case Kind::Anon:
        out += (n.kind == Kind::Dep ? "D[" : "Y[") + join_vars(n.set, type) + "] " + type.var_name(n.target);
        return;
    case Kind::Incl:
    case Kind::Excl:
        out += (n.kind == Kind::Incl ? "in(" : "notin(") + join_vars(n.lhs, type) + " ; " + join_vars(n.rhs, type)
               + ")";
        return;
    case Kind::Ind:
    case Kind::NInd:
        out += (n.kind == Kind::Ind ? "Ind[" : "nInd[") + join_vars(n.lhs, type) + "](" + join_vars(n.rhs, type)
               + ")";
        return;
    case Kind::And:
    case Kind::Or: {
        // Left-nested chains of the same connective print flat; everything else binary is bracketed.
        print_child(out, n.left, is_binary(n.left.kind()) && n.left.kind() != n.kind, type);
        out += n.kind == Kind::And ? " & " : " | ";
        print_child(out, n.right, is_binary(n.right.kind()), type);
        return;
    }
    case Kind::Box:
    case Kind::Diamond:
        out += (n.kind == Kind::Box ? "A[" : "E[") + join_vars(n.set, type) + "] ";
        print_child(out, n.left, is_binary(n.left.kind()), type);
        return;
    case Kind::Not:
        out += "not ";
        print_child(out, n.left, is_binary(n.left.kind()), type);
        return;
    }
}

} // namespace detail

inline std::string print_formula(const Formula& f, const FiniteType& type)
{
    std::string out;
    detail::print_into(out, f, type);
    return out;
}

// ---------------------------------------------------------------------------
// Free variables and quantifier rank
// ---------------------------------------------------------------------------

/// Free(phi). Dependence-style atoms and quantifiers expose only their agreement set;
/// Not is transparent.
inline VarSet free_vars(const Formula& f)
{
    const Node& n = *f;
    switch (n.kind) {
    case Kind::Rel:
    case Kind::NegRel:
        return make_var_set(n.lhs);
    case Kind::Eq:
    case Kind::Neq:
        return make_var_set({n.lhs[0], n.rhs[0]});
    case Kind::Dep:
    case Kind::Anon:
    case Kind::Box:
    case Kind::Diamond:
        return n.set;
    case Kind::Incl:
    case Kind::Excl:
    case Kind::Ind:
    case Kind::NInd:
        return make_var_set(n.lhs);
    case Kind::And:
    case Kind::Or:
        return set_union(free_vars(n.left), free_vars(n.right));
    case Kind::Not:
        return free_vars(n.left);
    }
    return {};
}

inline std::size_t quantifier_rank(const Formula& f)
{
    std::unordered_map<const Node*, std::size_t> memo;
    std::function<std::size_t(const Formula&)> rank = [&](const Formula& g) -> std::size_t {
        if (auto it = memo.find(g.get()); it != memo.end())
            return it->second;
        const Node& n = *g;
        std::size_t r = 0;
        if (n.kind == Kind::And || n.kind == Kind::Or)
            r = std::max(rank(n.left), rank(n.right));
        else if (is_quantifier(n.kind))
            r = rank(n.left) + 1;
        else if (n.kind == Kind::Not)
            r = rank(n.left);
        memo.emplace(g.get(), r);
        return r;
    };
    return rank(f);
}

/// The atom kinds occurring in a formula (Not is not interpreted).
inline OmegaProfile atom_kinds_of(const Formula& f)
{
    OmegaProfile out;
    std::unordered_set<const Node*> seen;
    std::vector<const Node*> stack{f.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second)
            continue;
        if (is_local_atom(n->kind))
            out.insert(atom_kind(n->kind));
        if (n->left)
            stack.push_back(n->left.get());
        if (n->right)
            stack.push_back(n->right.get());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Negation normal form
// ---------------------------------------------------------------------------

/// Pushes every Not down to the atoms, swapping each atom for its dual. The result is Not-free
/// and every local atom in it must belong to `omega`.
inline Formula to_nnf(const Formula& f, const OmegaProfile& omega)
{
    struct Key {
        const Node* node;
        bool negated;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const
        {
            return std::hash<const Node*>{}(k.node) * 2 + static_cast<std::size_t>(k.negated);
        }
    };
    std::unordered_map<Key, Formula, KeyHash> memo;

    auto require = [&](AtomKind k, bool from_negation) {
        if (omega.contains(k))
            return;
        throw ValidationError(std::string(from_negation ? "dual atom not in omega: " : "atom not in omega: ")
                              + std::string(atom_kind_name(k)));
    };

    std::function<Formula(const Formula&, bool)> go = [&](const Formula& g, bool negated) -> Formula {
        Key key{g.get(), negated};
        if (auto it = memo.find(key); it != memo.end())
            return it->second;
        const Node& n = *g;
        Formula out;
        auto atom = [&](Kind pos, Kind neg) {
            Kind k = negated ? (n.kind == pos ? neg : pos) : n.kind;
            if (is_local_atom(k))
                require(atom_kind(k), negated);
            if (k == n.kind)
                return g;
            Node copy = n;
            copy.kind = k;
            return detail::make(std::move(copy));
        };
        switch (n.kind) {
        case Kind::Rel: out = atom(Kind::Rel, Kind::NegRel); break;
        case Kind::NegRel: out = atom(Kind::NegRel, Kind::Rel); break;
        case Kind::Eq: out = atom(Kind::Eq, Kind::Neq); break;
        case Kind::Neq: out = atom(Kind::Neq, Kind::Eq); break;
        case Kind::Dep: out = atom(Kind::Dep, Kind::Anon); break;
        case Kind::Anon: out = atom(Kind::Anon, Kind::Dep); break;
        case Kind::Incl: out = atom(Kind::Incl, Kind::Excl); break;
        case Kind::Excl: out = atom(Kind::Excl, Kind::Incl); break;
        case Kind::Ind: out = atom(Kind::Ind, Kind::NInd); break;
        case Kind::NInd: out = atom(Kind::NInd, Kind::Ind); break;
        case Kind::And:
        case Kind::Or: {
            Formula l = go(n.left, negated);
            Formula r = go(n.right, negated);
            bool is_and = (n.kind == Kind::And) != negated;
            out = is_and ? conj(l, r) : disj(l, r);
            break;
        }
        case Kind::Box:
        case Kind::Diamond: {
            Formula body = go(n.left, negated);
            bool is_box = (n.kind == Kind::Box) != negated;
            out = is_box ? box(n.set, body) : diamond(n.set, body);
            break;
        }
        case Kind::Not:
            out = go(n.left, !negated);
            break;
        }
        memo.emplace(key, out);
        return out;
    };
    return go(f, false);
}

/// The smallest profile that lets to_nnf succeed on `f`.
inline OmegaProfile infer_omega(const Formula& f)
{
    return atom_kinds_of(to_nnf(f, OmegaProfile::all()));
}

} // namespace lfd
