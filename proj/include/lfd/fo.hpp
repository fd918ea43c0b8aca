#pragma once

#include <cctype>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lfd/error.hpp"
#include "lfd/type.hpp"

namespace lfd {

// First-order formulas over named relations, variables and element constants. This is the
// target language of the translations and the input language of the Tarski evaluator.

enum class FOKind : std::uint8_t { True, False, Atom, Equal, Not, And, Or, Implies, Exists, Forall };

struct FOTerm {
    std::string name;
    bool constant = false;

    bool operator==(const FOTerm&) const = default;
};

inline FOTerm var_term(std::string name) { return {std::move(name), false}; }
inline FOTerm const_term(std::string name) { return {std::move(name), true}; }

struct FONode;

class FOFormula {
public:
    FOFormula() = default;
    explicit FOFormula(std::shared_ptr<const FONode> n) : node_(std::move(n)) {}

    const FONode& operator*() const { return *node_; }
    const FONode* operator->() const { return node_.get(); }
    const FONode* get() const { return node_.get(); }
    explicit operator bool() const { return static_cast<bool>(node_); }

private:
    std::shared_ptr<const FONode> node_;
};

struct FONode {
    FOKind kind = FOKind::True;
    std::string relation;            // Atom
    std::vector<FOTerm> terms;       // Atom arguments; Equal operands
    std::vector<std::string> bound;  // Exists / Forall
    std::vector<FOFormula> children; // Not: 1; And/Or: any; Implies: 2; quantifiers: 1
};

namespace fo {

namespace detail {
inline FOFormula make(FONode n) { return FOFormula(std::make_shared<const FONode>(std::move(n))); }
} // namespace detail

inline FOFormula truth()
{
    FONode n;
    n.kind = FOKind::True;
    return detail::make(std::move(n));
}

inline FOFormula falsity()
{
    FONode n;
    n.kind = FOKind::False;
    return detail::make(std::move(n));
}

inline FOFormula atom(std::string relation, std::vector<FOTerm> terms)
{
    FONode n;
    n.kind = FOKind::Atom;
    n.relation = std::move(relation);
    n.terms = std::move(terms);
    return detail::make(std::move(n));
}

inline FOFormula equal(FOTerm a, FOTerm b)
{
    FONode n;
    n.kind = FOKind::Equal;
    n.terms = {std::move(a), std::move(b)};
    return detail::make(std::move(n));
}

inline FOFormula negate(FOFormula f)
{
    FONode n;
    n.kind = FOKind::Not;
    n.children = {std::move(f)};
    return detail::make(std::move(n));
}

/// Conjunction; a single conjunct is returned unchanged and an empty list is `true`.
inline FOFormula conj(std::vector<FOFormula> parts)
{
    if (parts.size() == 1)
        return parts.front();
    FONode n;
    n.kind = FOKind::And;
    n.children = std::move(parts);
    return detail::make(std::move(n));
}

/// Disjunction; a single disjunct is returned unchanged and an empty list is `false`.
inline FOFormula disj(std::vector<FOFormula> parts)
{
    if (parts.size() == 1)
        return parts.front();
    FONode n;
    n.kind = FOKind::Or;
    n.children = std::move(parts);
    return detail::make(std::move(n));
}

inline FOFormula implies(FOFormula a, FOFormula b)
{
    FONode n;
    n.kind = FOKind::Implies;
    n.children = {std::move(a), std::move(b)};
    return detail::make(std::move(n));
}

inline FOFormula quantify(FOKind kind, std::vector<std::string> vars, FOFormula body)
{
    if (vars.empty())
        return body;
    FONode n;
    n.kind = kind;
    n.bound = std::move(vars);
    n.children = {std::move(body)};
    return detail::make(std::move(n));
}

/// Existential quantification; with no variables the body is returned unchanged.
inline FOFormula exists(std::vector<std::string> vars, FOFormula body)
{
    return quantify(FOKind::Exists, std::move(vars), std::move(body));
}

inline FOFormula forall(std::vector<std::string> vars, FOFormula body)
{
    return quantify(FOKind::Forall, std::move(vars), std::move(body));
}

} // namespace fo

// ---------------------------------------------------------------------------
// Finite structures for FO evaluation
// ---------------------------------------------------------------------------

/// A finite structure with named relations and named constants.
class FOStructure {
public:
    FOStructure() = default;

    explicit FOStructure(std::vector<std::string> universe) : universe_(std::move(universe))
    {
        for (Elem e = 0; e < universe_.size(); ++e)
            index_.emplace(universe_[e], e);
    }

    std::size_t size() const noexcept { return universe_.size(); }
    const std::vector<std::string>& universe() const noexcept { return universe_; }

    template <class Tuples>
    void add_relation(std::string name, std::size_t arity, const Tuples& tuples)
    {
        Relation r;
        r.name = std::move(name);
        r.arity = arity;
        std::size_t cells = 1;
        bool dense = true;
        for (std::size_t i = 0; i < arity; ++i) {
            if (universe_.empty() || cells > (std::size_t{1} << 24) / universe_.size()) {
                dense = false;
                break;
            }
            cells *= universe_.size();
        }
        r.dense = dense;
        if (dense)
            r.bits.assign(cells, false);
        for (const auto& t : tuples) {
            if (t.size() != arity)
                throw ValidationError("tuple arity mismatch in relation '" + r.name + "'");
            if (dense)
                r.bits[encode(t.data(), arity)] = true;
            else
                r.tuples.emplace(t.begin(), t.end());
        }
        relation_index_[r.name] = relations_.size();
        relations_.push_back(std::move(r));
    }

    void add_constant(std::string name, Elem e) { constants_[std::move(name)] = e; }

    /// Makes every element token usable as a constant naming itself.
    void name_all_elements()
    {
        for (Elem e = 0; e < universe_.size(); ++e)
            constants_[universe_[e]] = e;
    }

    std::optional<std::size_t> relation_index(const std::string& name) const
    {
        auto it = relation_index_.find(name);
        if (it == relation_index_.end())
            return std::nullopt;
        return it->second;
    }

    std::size_t arity(std::size_t r) const { return relations_.at(r).arity; }

    std::optional<Elem> constant(const std::string& name) const
    {
        auto it = constants_.find(name);
        if (it == constants_.end())
            return std::nullopt;
        return it->second;
    }

    std::optional<Elem> element(const std::string& token) const
    {
        auto it = index_.find(token);
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    bool holds(std::size_t r, const Elem* tuple) const
    {
        const Relation& rel = relations_[r];
        if (rel.dense)
            return rel.bits[encode(tuple, rel.arity)];
        return rel.tuples.count(std::vector<Elem>(tuple, tuple + rel.arity)) > 0;
    }

private:
    struct Relation {
        std::string name;
        std::size_t arity = 0;
        bool dense = true;
        std::vector<bool> bits;
        std::set<std::vector<Elem>> tuples;
    };

    std::size_t encode(const Elem* tuple, std::size_t arity) const
    {
        std::size_t code = 0;
        for (std::size_t i = 0; i < arity; ++i)
            code = code * universe_.size() + tuple[i];
        return code;
    }

    std::vector<std::string> universe_;
    std::unordered_map<std::string, Elem> index_;
    std::vector<Relation> relations_;
    std::unordered_map<std::string, std::size_t> relation_index_;
    std::unordered_map<std::string, Elem> constants_;
};

// ---------------------------------------------------------------------------
// Tarski evaluation (exhaustive)
// ---------------------------------------------------------------------------

namespace detail {

class FOEvaluator {
public:
    FOEvaluator(const FOStructure& s, std::span<const std::string> names, std::span<const Elem> values)
        : s_(s)
    {
        if (names.size() != values.size())
            throw ValidationError("binding: names and values differ in length");
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (values[i] >= s.size())
                throw ValidationError("binding: element out of range");
            scope_[names[i]].push_back(static_cast<int>(env_.size()));
            env_.push_back(values[i]);
        }
    }

    bool run(const FOFormula& f)
    {
        int root = compile(f);
        return eval(root);
    }

private:
    struct CNode {
        FOKind kind;
        int relation = -1;
        std::vector<int> args; // slot index, or -(element + 1) for constants
        std::vector<int> bound;
        std::vector<int> kids;
    };

    int term_code(const FOTerm& t)
    {
        if (!t.constant) {
            auto it = scope_.find(t.name);
            if (it != scope_.end() && !it->second.empty())
                return it->second.back();
            throw ValidationError("unbound variable '" + t.name + "'");
        }
        auto e = s_.constant(t.name);
        if (!e)
            throw ValidationError("unknown constant '" + t.name + "'");
        return -static_cast<int>(*e) - 1;
    }

    int compile(const FOFormula& f)
    {
        const FONode& n = *f;
        CNode c{n.kind, -1, {}, {}, {}};
        switch (n.kind) {
        case FOKind::True:
        case FOKind::False:
            break;
        case FOKind::Atom: {
            auto r = s_.relation_index(n.relation);
            if (!r)
                throw ValidationError("unknown relation '" + n.relation + "'");
            if (s_.arity(*r) != n.terms.size())
                throw ValidationError("arity mismatch for relation '" + n.relation + "'");
            c.relation = static_cast<int>(*r);
            for (const auto& t : n.terms)
                c.args.push_back(term_code(t));
            break;
        }
        case FOKind::Equal:
            for (const auto& t : n.terms)
                c.args.push_back(term_code(t));
            break;
        case FOKind::Exists:
        case FOKind::Forall: {
            for (const auto& v : n.bound) {
                int slot = static_cast<int>(env_.size());
                env_.push_back(0);
                scope_[v].push_back(slot);
                c.bound.push_back(slot);
            }
            c.kids.push_back(compile(n.children.front()));
            for (const auto& v : n.bound)
                scope_[v].pop_back();
            break;
        }
        default:
            for (const auto& k : n.children)
                c.kids.push_back(compile(k));
        }
        nodes_.push_back(std::move(c));
        return static_cast<int>(nodes_.size() - 1);
    }

    Elem value(int code) const { return code >= 0 ? env_[code] : static_cast<Elem>(-code - 1); }

    bool quantified(const CNode& c, std::size_t depth)
    {
        if (depth == c.bound.size())
            return eval(c.kids[0]);
        bool existential = c.kind == FOKind::Exists;
        int slot = c.bound[depth];
        for (Elem e = 0; e < s_.size(); ++e) {
            env_[slot] = e;
            if (quantified(c, depth + 1) == existential)
                return existential;
        }
        return !existential;
    }

    bool eval(int i)
    {
        const CNode& c = nodes_[i];
        switch (c.kind) {
        case FOKind::True: return true;
        case FOKind::False: return false;
        case FOKind::Atom: {
            scratch_.resize(c.args.size());
            for (std::size_t k = 0; k < c.args.size(); ++k)
                scratch_[k] = value(c.args[k]);
            return s_.holds(c.relation, scratch_.data());
        }
        case FOKind::Equal: return value(c.args[0]) == value(c.args[1]);
        case FOKind::Not: return !eval(c.kids[0]);
        case FOKind::And:
            for (int k : c.kids)
                if (!eval(k))
                    return false;
            return true;
        case FOKind::Or:
            for (int k : c.kids)
                if (eval(k))
                    return true;
            return false;
        case FOKind::Implies: return !eval(c.kids[0]) || eval(c.kids[1]);
        case FOKind::Exists:
        case FOKind::Forall: return quantified(c, 0);
        }
        return false;
    }

    const FOStructure& s_;
    std::vector<Elem> env_;
    std::unordered_map<std::string, std::vector<int>> scope_;
    std::vector<CNode> nodes_;
    std::vector<Elem> scratch_;
};

} // namespace detail

/// Exact Tarski truth of `f` in `s` under the binding names[i] -> values[i].
inline bool eval_fo(const FOFormula& f, const FOStructure& s, std::span<const std::string> names,
                    std::span<const Elem> values)
{
    return detail::FOEvaluator(s, names, values).run(f);
}

inline bool eval_fo(const FOFormula& f, const FOStructure& s)
{
    return eval_fo(f, s, std::span<const std::string>{}, std::span<const Elem>{});
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

inline std::set<std::string> fo_free_variables(const FOFormula& f)
{
    const FONode& n = *f;
    std::set<std::string> out;
    switch (n.kind) {
    case FOKind::Atom:
    case FOKind::Equal:
        for (const auto& t : n.terms)
            if (!t.constant)
                out.insert(t.name);
        return out;
    case FOKind::Exists:
    case FOKind::Forall:
        out = fo_free_variables(n.children.front());
        for (const auto& v : n.bound)
            out.erase(v);
        return out;
    default:
        for (const auto& k : n.children) {
            auto sub = fo_free_variables(k);
            out.insert(sub.begin(), sub.end());
        }
        return out;
    }
}

/// The largest number of free variables of any subformula.
inline std::size_t max_free_variables(const FOFormula& f)
{
    std::size_t best = fo_free_variables(f).size();
    for (const auto& k : f->children)
        best = std::max(best, max_free_variables(k));
    return best;
}

// ---------------------------------------------------------------------------
// Text form
//
//   fo   := impl ;  impl := disj ("->" impl)? ;  disj := conj ("|" conj)* ;  conj := unit ("&" unit)*
//   unit := "(" fo ")" | "not" unit | ("exists" | "forall") NAME+ "." unit
//         | "true" | "false" | NAME "(" terms ")" | term "=" term | term "!=" term
//
// A term is a variable when it is bound by an enclosing quantifier or listed among the
// caller's free variables; any other term is an element constant.
// ---------------------------------------------------------------------------

namespace detail {

inline bool fo_binary(FOKind k) { return k == FOKind::And || k == FOKind::Or || k == FOKind::Implies; }

inline void fo_print_into(std::string& out, const FOFormula& f);

inline void fo_print_unit(std::string& out, const FOFormula& f)
{
    bool parens = fo_binary(f->kind);
    if (parens)
        out += '(';
    fo_print_into(out, f);
    if (parens)
        out += ')';
}

inline void fo_print_into(std::string& out, const FOFormula& f)
{
    const FONode& n = *f;
    switch (n.kind) {
    case FOKind::True: out += "true"; return;
    case FOKind::False: out += "false"; return;
    case FOKind::Atom:
        out += n.relation + "(";
        for (std::size_t i = 0; i < n.terms.size(); ++i)
            out += (i ? ", " : "") + n.terms[i].name;
        out += ")";
        return;
    case FOKind::Equal: out += n.terms[0].name + " = " + n.terms[1].name; return;
    case FOKind::Not: {
        const FONode& c = *n.children[0];
        if (c.kind == FOKind::Equal) {
            out += c.terms[0].name + " != " + c.terms[1].name;
            return;
        }
        out += "not ";
        fo_print_unit(out, n.children[0]);
        return;
    }
    case FOKind::And:
    case FOKind::Or:
        if (n.children.empty()) {
            out += n.kind == FOKind::And ? "true" : "false";
            return;
        }
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i)
                out += n.kind == FOKind::And ? " & " : " | ";
            fo_print_unit(out, n.children[i]);
        }
        return;
    case FOKind::Implies:
        fo_print_unit(out, n.children[0]);
        out += " -> ";
        fo_print_unit(out, n.children[1]);
        return;
    case FOKind::Exists:
    case FOKind::Forall:
        out += n.kind == FOKind::Exists ? "exists" : "forall";
        for (const auto& v : n.bound)
            out += " " + v;
        out += ". ";
        fo_print_unit(out, n.children[0]);
        return;
    }
}

class FOParser {
public:
    FOParser(std::string_view text, const std::vector<std::string>& free_vars) : text_(text)
    {
        for (const auto& v : free_vars)
            ++vars_[v];
    }

    FOFormula parse()
    {
        FOFormula f = impl();
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

    bool accept(std::string_view tok)
    {
        skip_ws();
        if (text_.substr(pos_, tok.size()) != tok)
            return false;
        pos_ += tok.size();
        return true;
    }

    void expect(std::string_view tok)
    {
        if (!accept(tok))
            fail("expected '" + std::string(tok) + "'");
    }

    static bool name_char(char c)
    {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == ':';
    }

    std::string name()
    {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && name_char(text_[pos_]))
            ++pos_;
        if (start == pos_)
            fail("expected name");
        return std::string(text_.substr(start, pos_ - start));
    }

    FOTerm term(const std::string& n) const
    {
        auto it = vars_.find(n);
        return (it != vars_.end() && it->second > 0) ? var_term(n) : const_term(n);
    }

    FOFormula impl()
    {
        FOFormula lhs = disjunction();
        if (accept("->"))
            return fo::implies(lhs, impl());
        return lhs;
    }

    FOFormula disjunction()
    {
        std::vector<FOFormula> parts{conjunction()};
        while (accept("|"))
            parts.push_back(conjunction());
        return fo::disj(std::move(parts));
    }

    FOFormula conjunction()
    {
        std::vector<FOFormula> parts{unit()};
        while (accept("&"))
            parts.push_back(unit());
        return fo::conj(std::move(parts));
    }

    FOFormula unit()
    {
        if (accept("(")) {
            FOFormula f = impl();
            expect(")");
            return f;
        }
        std::string n = name();
        if (n == "not")
            return fo::negate(unit());
        if (n == "true")
            return fo::truth();
        if (n == "false")
            return fo::falsity();
        if (n == "exists" || n == "forall") {
            std::vector<std::string> bound;
            while (!accept("."))
                bound.push_back(name());
            if (bound.empty())
                fail("quantifier without variables");
            for (const auto& b : bound)
                ++vars_[b];
            FOFormula body = unit();
            for (const auto& b : bound)
                --vars_[b];
            return n == "exists" ? fo::exists(bound, body) : fo::forall(bound, body);
        }
        if (accept("(")) {
            std::vector<FOTerm> args;
            skip_ws();
            while (!accept(")")) {
                args.push_back(term(name()));
                accept(",");
            }
            return fo::atom(n, std::move(args));
        }
        FOTerm lhs = term(n);
        if (accept("!="))
            return fo::negate(fo::equal(lhs, term(name())));
        expect("=");
        return fo::equal(lhs, term(name()));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::map<std::string, int> vars_;
};

} // namespace detail

inline std::string print_fo(const FOFormula& f)
{
    std::string out;
    detail::fo_print_into(out, f);
    return out;
}

/// Parses FO text; names in `free_vars` (and quantified names) are variables, the rest constants.
inline FOFormula parse_fo(std::string_view text, const std::vector<std::string>& free_vars)
{
    return detail::FOParser(text, free_vars).parse();
}

} // namespace lfd
