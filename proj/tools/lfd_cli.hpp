#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lfd/bisim.hpp"
#include "lfd/charform.hpp"
#include "lfd/checker.hpp"
#include "lfd/fo.hpp"
#include "lfd/model.hpp"
#include "lfd/reduce.hpp"
#include "lfd/syntax.hpp"
#include "lfd/translate.hpp"

namespace lfd::cli {

inline constexpr int kTrue = 0;
inline constexpr int kFalse = 1;
inline constexpr int kError = 2;

struct Options {
    std::string model, left, right, formula, at, at_left, at_right, depth, omega, team_fo, out, mode, target;
    std::string relation, vars, kahr;
    std::optional<std::size_t> bound;
    std::size_t max_team = kDefaultMaxTeam;
    std::size_t max_depth = 4;
    bool witness = false;
};

namespace detail {

inline std::string row_label(const DependenceModel& m, std::size_t row)
{
    return "(" + m.format_assignment(m.row(row)) + ")";
}

inline std::size_t point_of(const DependenceModel& m, const std::string& text, const char* flag)
{
    if (text.empty())
        throw ValidationError(std::string("missing ") + flag);
    auto row = m.row_of(m.parse_assignment(text));
    if (!row)
        throw ValidationError("assignment outside team: " + text);
    return *row;
}

inline FiniteType type_for(const Options& o, const std::optional<DependenceModel>& model)
{
    if (model)
        return model->type();
    std::vector<std::string> order;
    std::istringstream in(o.vars);
    for (std::string v; in >> v;)
        order.push_back(v);
    return infer_type(o.formula, order);
}

inline int cmd_check(const Options& o, std::ostream& out, std::ostream& err)
{
    if (o.model.empty() || o.formula.empty())
        throw ValidationError("check needs --model and --formula");
    std::optional<DependenceModel> model;
    std::optional<std::size_t> measured;
    if (!o.team_fo.empty()) {
        ModelFile f = parse_model_file(read_text_file(o.model));
        FOFormula phi_t = parse_fo(o.team_fo, f.type.variables());
        MaterializedTeam mt = materialize_fo_team(f.structure, f.type, phi_t, o.max_team);
        measured = mt.free_variable_bound;
        model.emplace(std::move(mt.model));
    } else {
        model.emplace(load_model_file(o.model));
    }
    const DependenceModel& m = *model;
    Formula parsed = parse_formula(o.formula, m.type());
    OmegaProfile omega = o.omega.empty() ? infer_omega(parsed) : OmegaProfile::parse(o.omega);
    Formula f = to_nnf(parsed, omega);

    if (measured) {
        out << "team size: " << m.team_size() << "\n";
        out << "free-variable bound: " << *measured;
        if (o.bound)
            out << " (limit " << *o.bound << ")";
        out << "\n";
        if (o.bound && *measured > *o.bound)
            err << "warning: the team definition has a subformula with " << *measured
                << " free variables, above the bound " << *o.bound << "\n";
    }

    ModelChecker mc(m);
    bool all = true;
    if (!o.at.empty()) {
        std::size_t row = point_of(m, o.at, "--at");
        all = mc.holds(f, row);
        out << (all ? "true" : "false") << "\n";
    } else {
        for (std::size_t i = 0; i < m.team_size(); ++i) {
            bool v = mc.holds(f, i);
            all = all && v;
            out << row_label(m, i) << " " << (v ? "true" : "false") << "\n";
        }
    }
    const CheckStats& s = mc.stats();
    out << "atom evaluations: " << s.atom_evaluations << "\n";
    out << "quantifier expansions: " << s.quantifier_expansions << "\n";
    out << "memo hits: " << s.memo_hits << "\n";
    return all ? kTrue : kFalse;
}

inline BisimRelation parse_relation(const std::string& text, std::size_t left, std::size_t right)
{
    BisimRelation z(left, right);
    std::string spec = text;
    std::replace(spec.begin(), spec.end(), ',', ' ');
    std::istringstream in(spec);
    for (std::string pair; in >> pair;) {
        auto colon = pair.find(':');
        if (colon == std::string::npos)
            throw ValidationError("relation pairs are written i:j, got '" + pair + "'");
        std::size_t i = std::stoul(pair.substr(0, colon));
        std::size_t j = std::stoul(pair.substr(colon + 1));
        if (i >= left || j >= right)
            throw ValidationError("relation pair outside the teams: " + pair);
        z.set(i, j);
    }
    return z;
}

inline int cmd_bisim(const Options& o, std::ostream& out)
{
    if (o.left.empty() || o.right.empty())
        throw ValidationError("bisim needs --left and --right");
    DependenceModel left = load_model_file(o.left);
    DependenceModel right = load_model_file(o.right);
    OmegaProfile omega = OmegaProfile::parse(o.omega.empty() ? "D,Y" : o.omega);
    std::size_t s = point_of(left, o.at_left, "--at-left");
    std::size_t sp = point_of(right, o.at_right, "--at-right");

    if (!o.relation.empty()) {
        BisimRelation z = parse_relation(o.relation, left.team_size(), right.team_size());
        BisimulationCheck c = check_is_bisimulation(z, left, right, omega);
        if (!c.valid) {
            out << "not a bisimulation\n";
            if (c.witness)
                out << "witness: " << describe_witness(*c.witness, left, right) << "\n";
            return kFalse;
        }
        if (!z.contains(s, sp)) {
            out << "valid but does not relate the points\n";
            return kFalse;
        }
        out << "valid bisimulation relating the points\n";
        return kTrue;
    }

    std::optional<std::size_t> depth;
    if (!o.depth.empty() && o.depth != "fix")
        depth = std::stoul(o.depth);
    BisimResult r = bisimilarity(left, s, right, sp, omega, depth);
    out << (r.related ? "bisimilar" : "not bisimilar") << " (stage " << r.stage << (r.fixpoint ? " fixpoint" : "")
        << ")\n";
    for (auto [i, j] : r.relation.pairs())
        out << i << " " << j << "\n";
    if (o.witness && r.witness)
        out << "witness: " << describe_witness(*r.witness, left, right) << "\n"
            << "replay: " << (replay_witness(*r.witness, left, right, omega) ? "reproduced" : "not reproduced")
            << "\n";
    return r.related ? kTrue : kFalse;
}

inline int cmd_charform(const Options& o, std::ostream& out)
{
    if (o.model.empty())
        throw ValidationError("charform needs --model");
    DependenceModel m = load_model_file(o.model);
    OmegaProfile omega = OmegaProfile::parse(o.omega.empty() ? "D,Y" : o.omega);
    std::size_t row = point_of(m, o.at, "--at");
    std::size_t k = o.depth.empty() ? 1 : std::stoul(o.depth);
    if (k > o.max_depth)
        throw ValidationError("depth " + std::to_string(k) + " exceeds --max-depth " + std::to_string(o.max_depth));
    out << print_formula(char_formula(m, m.row(row), k, omega), m.type()) << "\n";
    return kTrue;
}

inline int cmd_translate(const Options& o, std::ostream& out)
{
    if (o.formula.empty())
        throw ValidationError("translate needs --formula");
    std::optional<DependenceModel> model;
    if (!o.model.empty())
        model.emplace(load_model_file(o.model));
    FiniteType type = type_for(o, model);
    Formula parsed = parse_formula(o.formula, type);
    std::string mode = o.mode.empty() ? "standard" : o.mode;
    if (mode == "guarded") {
        out << print_fo(guarded_translation(parsed, type)) << "\n";
        return kTrue;
    }
    OmegaProfile omega = o.omega.empty() ? infer_omega(parsed) : OmegaProfile::parse(o.omega);
    Formula f = to_nnf(parsed, omega);
    if (mode == "standard")
        out << print_fo(standard_translation(f, type)) << "\n";
    else if (mode == "modal")
        out << print_fo(modal_translation(f, type)) << "\n";
    else
        throw ValidationError("unknown translation mode '" + mode + "'");
    return kTrue;
}

inline int cmd_reduce(const Options& o, std::ostream& out)
{
    if (o.kahr.empty())
        throw ValidationError("reduce needs a .kahr file");
    KahrSentence psi = parse_kahr(read_text_file(o.kahr));
    std::string target = o.target.empty() ? "incl" : o.target;
    Formula f;
    if (target == "incl")
        f = reduce_to_inclusion(psi);
    else if (target == "eq")
        f = reduce_to_equality(psi);
    else
        throw ValidationError("unknown reduction target '" + target + "'");
    out << print_formula(f, kahr_type(psi)) << "\n";
    return kTrue;
}

inline int cmd_vd(const Options& o, std::ostream& out)
{
    if (o.model.empty() && o.formula.empty())
        throw ValidationError("vd needs --model or --formula");
    std::optional<DependenceModel> model;
    if (!o.model.empty())
        model.emplace(load_model_file(o.model));
    if (!o.formula.empty()) {
        FiniteType type = type_for(o, model);
        Formula parsed = parse_formula(o.formula, type);
        out << print_formula(rewrite_vd(to_nnf(parsed, OmegaProfile::all()), type), type) << "\n";
    } else {
        out << print_model(variable_distinguished(*model));
    }
    return kTrue;
}

inline int cmd_union(const Options& o, std::ostream& out)
{
    if (o.left.empty() || o.right.empty())
        throw ValidationError("union needs --left and --right");
    out << print_model(disjoint_union(load_model_file(o.left), load_model_file(o.right)));
    return kTrue;
}

} // namespace detail

/// Runs the command line `args` (without the program name). Reports go to `out`, diagnostics to
/// `err`. Returns 0 (true / success), 1 (false) or 2 (error).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Localised team logics: model checking, translations, bisimulation and reductions", "lfd"};
    app.require_subcommand(1);

    auto add_model = [&](CLI::App* c) { c->add_option("--model", o.model, "dependence model (.dm)"); };
    auto add_formula = [&](CLI::App* c) { c->add_option("--formula", o.formula, "formula text"); };
    auto add_omega = [&](CLI::App* c) { c->add_option("--omega", o.omega, "atom profile, e.g. D,Y,=,!="); };
    auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "write the report to a file"); };

    CLI::App* check = app.add_subcommand("check", "model check a formula");
    add_model(check);
    add_formula(check);
    add_omega(check);
    add_out(check);
    check->add_option("--at", o.at, "assignment, as element tokens in variable order (default: every row)");
    check->add_option("--team-fo", o.team_fo, "FO definition of the team over the variables");
    check->add_option("--bound", o.bound, "free-variable bound for the team definition");
    check->add_option("--max-team", o.max_team, "cap on the number of enumerated assignments");

    CLI::App* bisim = app.add_subcommand("bisim", "bisimilarity of two pointed models");
    bisim->add_option("--left", o.left, "left model (.dm)");
    bisim->add_option("--right", o.right, "right model (.dm)");
    bisim->add_option("--at-left", o.at_left, "left point");
    bisim->add_option("--at-right", o.at_right, "right point");
    bisim->add_option("--depth", o.depth, "refinement depth k, or 'fix' (default)");
    bisim->add_option("--relation", o.relation, "check an explicit relation, pairs i:j of row indices");
    bisim->add_flag("--witness", o.witness, "explain why the points are not related");
    add_omega(bisim);
    add_out(bisim);

    CLI::App* charform = app.add_subcommand("charform", "characteristic formula of a point");
    add_model(charform);
    charform->add_option("--at", o.at, "point");
    charform->add_option("--depth", o.depth, "quantifier rank k (default 1)");
    charform->add_option("--max-depth", o.max_depth, "largest accepted k (default 4)");
    add_omega(charform);
    add_out(charform);

    CLI::App* translate = app.add_subcommand("translate", "translate into first-order logic");
    add_formula(translate);
    add_model(translate);
    translate->add_option("--mode", o.mode, "standard | modal | guarded");
    translate->add_option("--vars", o.vars, "variable order when no model is given");
    add_omega(translate);
    add_out(translate);

    CLI::App* reduce = app.add_subcommand("reduce", "reduce a Kahr-class sentence");
    reduce->add_option("kahr", o.kahr, "sentence file (.kahr)");
    reduce->add_option("--target", o.target, "incl | eq");
    add_out(reduce);

    CLI::App* vd = app.add_subcommand("vd", "variable-distinguished model, or rewrite a formula for one");
    add_model(vd);
    add_formula(vd);
    vd->add_option("--vars", o.vars, "variable order when no model is given");
    add_out(vd);

    CLI::App* uni = app.add_subcommand("union", "disjoint union of two models");
    uni->add_option("--left", o.left, "left model (.dm)");
    uni->add_option("--right", o.right, "right model (.dm)");
    add_out(uni);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kTrue : kError;
    }

    std::ostringstream report;
    int code = kError;
    try {
        if (*check)
            code = detail::cmd_check(o, report, err);
        else if (*bisim)
            code = detail::cmd_bisim(o, report);
        else if (*charform)
            code = detail::cmd_charform(o, report);
        else if (*translate)
            code = detail::cmd_translate(o, report);
        else if (*reduce)
            code = detail::cmd_reduce(o, report);
        else if (*vd)
            code = detail::cmd_vd(o, report);
        else if (*uni)
            code = detail::cmd_union(o, report);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kError;
    }

    if (o.out.empty()) {
        out << report.str();
    } else {
        std::ofstream file(o.out);
        if (!file) {
            err << "error: cannot write '" << o.out << "'\n";
            return kError;
        }
        file << report.str();
    }
    return code;
}

} // namespace lfd::cli
