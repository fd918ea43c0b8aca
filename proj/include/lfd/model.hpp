#pragma once

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lfd/error.hpp"
#include "lfd/fo.hpp"
#include "lfd/type.hpp"

namespace lfd {

using Tuple = std::vector<Elem>;
/// Values of the type's variables, in variable order.
using Assignment = std::vector<Elem>;

inline constexpr std::size_t kDefaultMaxTeam = 1'000'000;

/// A finite structure: element tokens plus one tuple set per relation of the type.
class Structure {
public:
    Structure() = default;

    Structure(std::vector<std::string> universe, std::vector<std::set<Tuple>> relations)
        : universe_(std::move(universe)), relations_(std::move(relations))
    {
        if (universe_.empty())
            throw ValidationError("universe must be nonempty");
        for (Elem e = 0; e < universe_.size(); ++e)
            if (!index_.emplace(universe_[e], e).second)
                throw ValidationError("duplicate element token '" + universe_[e] + "'");
        for (const auto& rel : relations_)
            for (const auto& t : rel)
                for (Elem e : t)
                    if (e >= universe_.size())
                        throw ValidationError("relation tuple outside the universe");
    }

    std::size_t size() const noexcept { return universe_.size(); }
    const std::vector<std::string>& universe() const noexcept { return universe_; }
    const std::string& token(Elem e) const { return universe_.at(e); }

    std::optional<Elem> element(const std::string& token) const
    {
        auto it = index_.find(token);
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    std::size_t num_relations() const noexcept { return relations_.size(); }
    const std::set<Tuple>& tuples(std::size_t r) const { return relations_.at(r); }
    bool holds(std::size_t r, const Tuple& t) const { return relations_.at(r).count(t) > 0; }

    bool operator==(const Structure& o) const { return universe_ == o.universe_ && relations_ == o.relations_; }

private:
    std::vector<std::string> universe_;
    std::vector<std::set<Tuple>> relations_;
    std::unordered_map<std::string, Elem> index_;
};

inline void check_structure_fits(const Structure& s, const FiniteType& type)
{
    if (s.num_relations() != type.relations().size())
        throw ValidationError("structure does not match the type's relations");
    for (std::size_t r = 0; r < s.num_relations(); ++r)
        for (const auto& t : s.tuples(r))
            if (t.size() != type.relation(r).arity)
                throw ValidationError("tuple arity mismatch in relation '" + type.relation(r).name + "'");
}

/// A structure together with a nonempty team of distinct assignments.
class DependenceModel {
public:
    DependenceModel(FiniteType type, Structure structure, std::vector<Assignment> team)
        : type_(std::move(type)), structure_(std::move(structure)), team_(std::move(team))
    {
        check_structure_fits(structure_, type_);
        if (team_.empty())
            throw ValidationError("team must be nonempty");
        for (std::size_t i = 0; i < team_.size(); ++i) {
            const auto& row = team_[i];
            if (row.size() != type_.num_vars())
                throw ValidationError("team row length differs from the number of variables");
            for (Elem e : row)
                if (e >= structure_.size())
                    throw ValidationError("team row outside the universe");
            if (!rows_.emplace(row, i).second)
                throw ValidationError("duplicate team row");
        }
    }

    const FiniteType& type() const noexcept { return type_; }
    const Structure& structure() const noexcept { return structure_; }
    const std::vector<Assignment>& team() const noexcept { return team_; }
    std::size_t team_size() const noexcept { return team_.size(); }
    const Assignment& row(std::size_t i) const { return team_.at(i); }

    std::optional<std::size_t> row_of(const Assignment& s) const
    {
        auto it = rows_.find(s);
        if (it == rows_.end())
            return std::nullopt;
        return it->second;
    }

    /// Parses space-separated element tokens into an assignment (not necessarily in the team).
    Assignment parse_assignment(std::string_view text) const
    {
        std::istringstream in{std::string(text)};
        Assignment out;
        std::string tok;
        while (in >> tok) {
            auto e = structure_.element(tok);
            if (!e)
                throw ValidationError("unknown element token '" + tok + "'");
            out.push_back(*e);
        }
        if (out.size() != type_.num_vars())
            throw ValidationError("assignment length differs from the number of variables");
        return out;
    }

    std::string format_assignment(const Assignment& s) const
    {
        std::string out;
        for (std::size_t i = 0; i < s.size(); ++i)
            out += (i ? " " : "") + structure_.token(s[i]);
        return out;
    }

private:
    FiniteType type_;
    Structure structure_;
    std::vector<Assignment> team_;
    std::map<Assignment, std::size_t> rows_;
};

// ---------------------------------------------------------------------------
// .dm files
// ---------------------------------------------------------------------------

/// Contents of a .dm file; the team block may be absent when the team comes from an FO definition.
struct ModelFile {
    FiniteType type;
    Structure structure;
    std::optional<std::vector<Assignment>> team;
};

namespace detail {

inline std::vector<std::string> split_words(const std::string& line)
{
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string w;
    while (in >> w)
        out.push_back(w);
    return out;
}

} // namespace detail

inline ModelFile parse_model_file(std::string_view text)
{
    struct Block {
        std::string name;
        std::size_t arity = 0;
        std::size_t line = 0;
        std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    };

    std::optional<std::vector<std::string>> universe, vars;
    std::vector<Block> rels;
    std::optional<Block> team;
    Block* open = nullptr;

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
        if (open) {
            if (words.size() == 1 && words[0] == "end") {
                open = nullptr;
                continue;
            }
            open->rows.emplace_back(lineno, std::move(words));
            continue;
        }
        const std::string& head = words[0];
        std::vector<std::string> rest(words.begin() + 1, words.end());
        if (head == "universe") {
            if (universe)
                throw ParseError("duplicate universe line", lineno);
            universe = std::move(rest);
        } else if (head == "vars") {
            if (vars)
                throw ParseError("duplicate vars line", lineno);
            vars = std::move(rest);
        } else if (head == "rel") {
            if (rest.size() != 2)
                throw ParseError("expected 'rel <Name> <arity>'", lineno);
            Block b;
            b.name = rest[0];
            b.line = lineno;
            try {
                b.arity = std::stoul(rest[1]);
            } catch (const std::exception&) {
                throw ParseError("bad arity '" + rest[1] + "'", lineno);
            }
            rels.push_back(std::move(b));
            open = &rels.back();
        } else if (head == "team") {
            if (team)
                throw ParseError("duplicate team block", lineno);
            if (!rest.empty())
                throw ParseError("unexpected tokens after 'team'", lineno);
            team = Block{"team", 0, lineno, {}};
            open = &*team;
        } else {
            throw ParseError("unknown directive '" + head + "'", lineno);
        }
    }
    if (open)
        throw ParseError("block '" + open->name + "' not closed with 'end'", lineno);
    if (!universe)
        throw ParseError("missing universe line", lineno);
    if (!vars)
        throw ParseError("missing vars line", lineno);

    std::vector<RelationSymbol> symbols;
    for (const auto& b : rels)
        symbols.push_back({b.name, b.arity});
    FiniteType type;
    try {
        type = FiniteType(symbols, *vars);
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), 1);
    }

    std::unordered_map<std::string, Elem> index;
    for (Elem e = 0; e < universe->size(); ++e)
        index.emplace((*universe)[e], e);
    auto row_of = [&](const std::pair<std::size_t, std::vector<std::string>>& r, std::size_t width) {
        if (r.second.size() != width)
            throw ParseError("row has " + std::to_string(r.second.size()) + " tokens, expected " +
                                 std::to_string(width),
                             r.first);
        Tuple t;
        for (const auto& tok : r.second) {
            auto it = index.find(tok);
            if (it == index.end())
                throw ParseError("unknown element token '" + tok + "'", r.first);
            t.push_back(it->second);
        }
        return t;
    };

    std::vector<std::set<Tuple>> interp;
    for (const auto& b : rels) {
        std::set<Tuple> tuples;
        for (const auto& r : b.rows)
            tuples.insert(row_of(r, b.arity));
        interp.push_back(std::move(tuples));
    }
    ModelFile out{type, Structure(*universe, std::move(interp)), std::nullopt};
    if (team) {
        std::vector<Assignment> rows;
        std::set<Assignment> seen;
        for (const auto& r : team->rows) {
            Assignment a = row_of(r, type.num_vars());
            if (!seen.insert(a).second)
                throw ParseError("duplicate team row", r.first);
            rows.push_back(std::move(a));
        }
        if (rows.empty())
            throw ParseError("team block is empty", team->line);
        out.team = std::move(rows);
    }
    return out;
}

inline DependenceModel load_model(std::string_view text)
{
    ModelFile f = parse_model_file(text);
    if (!f.team)
        throw ParseError("missing team block", 0);
    return DependenceModel(std::move(f.type), std::move(f.structure), std::move(*f.team));
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline DependenceModel load_model_file(const std::string& path) { return load_model(read_text_file(path)); }

inline std::string print_structure(const FiniteType& type, const Structure& s)
{
    std::string out = "universe";
    for (const auto& tok : s.universe())
        out += " " + tok;
    out += "\nvars";
    for (const auto& v : type.variables())
        out += " " + v;
    out += "\n";
    for (std::size_t r = 0; r < type.relations().size(); ++r) {
        out += "rel " + type.relation(r).name + " " + std::to_string(type.relation(r).arity) + "\n";
        for (const auto& t : s.tuples(r)) {
            for (std::size_t i = 0; i < t.size(); ++i)
                out += (i ? " " : "  ") + s.token(t[i]);
            out += "\n";
        }
        out += "end\n";
    }
    return out;
}

inline std::string print_model(const DependenceModel& m)
{
    std::string out = print_structure(m.type(), m.structure()) + "team\n";
    for (const auto& row : m.team())
        out += "  " + m.format_assignment(row) + "\n";
    return out + "end\n";
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// T(xs) = { s(xs) : s in T }.
inline std::set<Tuple> project(const DependenceModel& m, const VarTuple& xs)
{
    std::set<Tuple> out;
    for (const auto& row : m.team()) {
        Tuple t;
        t.reserve(xs.size());
        for (VarId x : xs)
            t.push_back(row.at(x));
        out.insert(std::move(t));
    }
    return out;
}

/// All of M^n in lexicographic order.
inline std::vector<Assignment> all_assignments(std::size_t universe, std::size_t n, std::size_t cap)
{
    std::size_t count = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (count > cap / universe)
            throw SizeLimitError("assignment space exceeds the cap of " + std::to_string(cap));
        count *= universe;
    }
    std::vector<Assignment> out;
    out.reserve(count);
    Assignment a(n, 0);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(a);
        for (std::size_t i = n; i-- > 0;) {
            if (++a[i] < universe)
                break;
            a[i] = 0;
        }
    }
    return out;
}

inline DependenceModel full_team(const Structure& s, const FiniteType& type, std::size_t cap = kDefaultMaxTeam)
{
    return DependenceModel(type, s, all_assignments(s.size(), type.num_vars(), cap));
}

/// The variable-distinguished copy: universe M x V with s'(x) = (s(x), x). Row i of the
/// result corresponds to row i of the input.
inline DependenceModel variable_distinguished(const DependenceModel& m)
{
    const FiniteType& type = m.type();
    const Structure& s = m.structure();
    const std::size_t n = type.num_vars();
    auto tag = [n](Elem e, VarId x) { return static_cast<Elem>(e * n + x); };

    std::vector<std::string> universe;
    for (Elem e = 0; e < s.size(); ++e)
        for (VarId x = 0; x < n; ++x)
            universe.push_back("(" + s.token(e) + "," + type.var_name(x) + ")");

    std::vector<std::set<Tuple>> interp;
    for (std::size_t r = 0; r < type.relations().size(); ++r) {
        std::set<Tuple> tuples;
        std::size_t k = type.relation(r).arity;
        for (const auto& t : s.tuples(r)) {
            VarTuple tags(k, 0);
            while (true) {
                Tuple u(k);
                for (std::size_t i = 0; i < k; ++i)
                    u[i] = tag(t[i], tags[i]);
                tuples.insert(std::move(u));
                std::size_t i = k;
                while (i-- > 0) {
                    if (++tags[i] < n)
                        break;
                    tags[i] = 0;
                }
                if (i == static_cast<std::size_t>(-1))
                    break;
            }
        }
        interp.push_back(std::move(tuples));
    }

    std::vector<Assignment> team;
    for (const auto& row : m.team()) {
        Assignment a(n);
        for (VarId x = 0; x < n; ++x)
            a[x] = tag(row[x], x);
        team.push_back(std::move(a));
    }
    return DependenceModel(type, Structure(std::move(universe), std::move(interp)), std::move(team));
}

/// Whether T(x) and T(y) are disjoint for all distinct variables x, y.
inline bool is_variable_distinguished(const DependenceModel& m)
{
    std::vector<std::set<Elem>> cols(m.type().num_vars());
    for (const auto& row : m.team())
        for (VarId x = 0; x < row.size(); ++x)
            cols[x].insert(row[x]);
    std::map<Elem, VarId> owner;
    for (VarId x = 0; x < cols.size(); ++x)
        for (Elem e : cols[x])
            if (!owner.emplace(e, x).second)
                return false;
    return true;
}

/// Disjoint union; elements are tagged "L:" and "R:", left rows come first.
inline DependenceModel disjoint_union(const DependenceModel& a, const DependenceModel& b)
{
    if (!(a.type() == b.type()))
        throw ValidationError("disjoint union needs models of the same type");
    const Structure& sa = a.structure();
    const Structure& sb = b.structure();
    const Elem offset = static_cast<Elem>(sa.size());

    std::vector<std::string> universe;
    for (const auto& tok : sa.universe())
        universe.push_back("L:" + tok);
    for (const auto& tok : sb.universe())
        universe.push_back("R:" + tok);

    auto shift = [offset](Tuple t) {
        for (Elem& e : t)
            e += offset;
        return t;
    };
    std::vector<std::set<Tuple>> interp(a.type().relations().size());
    for (std::size_t r = 0; r < interp.size(); ++r) {
        interp[r] = sa.tuples(r);
        for (const auto& t : sb.tuples(r))
            interp[r].insert(shift(t));
    }
    std::vector<Assignment> team = a.team();
    for (const auto& row : b.team())
        team.push_back(shift(row));
    return DependenceModel(a.type(), Structure(std::move(universe), std::move(interp)), std::move(team));
}

/// The structure as an FO structure; with `name_elements` every token is also a constant.
inline FOStructure to_fo_structure(const FiniteType& type, const Structure& s, bool name_elements)
{
    FOStructure out(s.universe());
    for (std::size_t r = 0; r < type.relations().size(); ++r)
        out.add_relation(type.relation(r).name, type.relation(r).arity, s.tuples(r));
    if (name_elements)
        out.name_all_elements();
    return out;
}

struct MaterializedTeam {
    DependenceModel model;
    /// Largest number of free variables in any subformula of the team definition.
    std::size_t free_variable_bound;
};

/// The team { t in M^n : M_M |= phi_T(t) } defined by an FO formula over the type's variables.
inline MaterializedTeam materialize_fo_team(const Structure& s, const FiniteType& type, const FOFormula& phi_t,
                                            std::size_t cap = kDefaultMaxTeam)
{
    for (const auto& v : fo_free_variables(phi_t))
        if (!type.variable_index(v))
            throw ValidationError("team definition has free variable '" + v + "' outside the type");
    FOStructure fs = to_fo_structure(type, s, true);
    std::vector<Assignment> team;
    for (auto& a : all_assignments(s.size(), type.num_vars(), cap))
        if (eval_fo(phi_t, fs, type.variables(), a))
            team.push_back(std::move(a));
    if (team.empty())
        throw ValidationError("team definition yields an empty team");
    return {DependenceModel(type, s, std::move(team)), max_free_variables(phi_t)};
}

} // namespace lfd
