#include <chrono>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lfd/bisim.hpp"
#include "lfd/charform.hpp"
#include "lfd/checker.hpp"
#include "lfd/fo.hpp"
#include "lfd/model.hpp"
#include "lfd/reduce.hpp"
#include "lfd/syntax.hpp"
#include "lfd/translate.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace lfd;
using namespace lfd::testing;

namespace {

const std::string kData = LFD_DATA_DIR;
const OmegaProfile kLfd{AtomKind::Dependence, AtomKind::Anonymity};
const OmegaProfile kLfdEq{AtomKind::Dependence, AtomKind::Anonymity, AtomKind::Equality, AtomKind::Inequality};

struct Outcome {
    bool pass = true;
    std::string summary;
    std::vector<std::string> notes;
};

// Counts cases and mismatches and remembers the first mismatch.
struct Tally {
    std::size_t cases = 0;
    std::size_t checks = 0;
    std::size_t failures = 0;
    std::string first;

    void expect(bool ok, const std::function<std::string()>& describe)
    {
        ++checks;
        if (ok)
            return;
        if (failures++ == 0)
            first = describe();
    }

    Outcome outcome(const std::string& what) const
    {
        Outcome o;
        o.pass = failures == 0 && checks > 0;
        o.summary = std::to_string(cases) + " " + what + ", " + std::to_string(checks) + " checks, " +
                    std::to_string(failures) + " mismatches";
        if (failures)
            o.notes.push_back("first mismatch: " + first);
        return o;
    }
};

std::string show(const DependenceModel& m, const Formula& f)
{
    return "formula " + print_formula(f, m.type()) + " on\n" + print_model(m);
}

bool at(const DependenceModel& m, const std::string& formula, const std::string& row)
{
    Formula f = to_nnf(parse_formula(formula, m.type()), OmegaProfile::all());
    return check(f, m, m.parse_assignment(row)).value;
}

BisimRelation full_relation(std::size_t a, std::size_t b)
{
    BisimRelation z(a, b);
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j)
            z.set(i, j);
    return z;
}

bool modal_at(const FOFormula& f, const DependenceModel& m, std::size_t row)
{
    FOStructure s = build_standard_relational_model(m, dep({}, 0)).structure;
    std::vector<std::string> names{"s"};
    std::vector<Elem> values{static_cast<Elem>(row)};
    return eval_fo(f, s, names, values);
}

Outcome local_dependence_fixtures()
{
    DependenceModel m = load_model_file(kData + "/ex_local_dep.dm");
    struct Case {
        std::string formula, row;
        bool expected;
    };
    const std::vector<Case> cases{{"D[y] x", "1 1 0", true},
                                  {"D[z] y", "1 2 1", true},
                                  {"D[z] y", "2 2 1", true},
                                  {"D[x] y", "1 1 0", false}};
    Tally t;
    for (const auto& c : cases) {
        ++t.cases;
        bool got = at(m, c.formula, c.row);
        t.expect(got == c.expected, [&] { return c.formula + " at (" + c.row + ") gave " + (got ? "true" : "false"); });
    }
    return t.outcome("fixtures");
}

// Criteria 2 and 3 share one population.
struct Population {
    std::vector<std::pair<DependenceModel, Formula>> items;
};

Population make_population()
{
    Rng rng(1001);
    Population p;
    for (int i = 0; i < 1200; ++i) {
        DependenceModel m = random_model(rng);
        Formula f = random_formula(rng, m.type(), pick_between(rng, 0, 3), OmegaProfile::all(), 7);
        p.items.emplace_back(std::move(m), std::move(f));
    }
    return p;
}

Outcome oracle_equivalence(const Population& p)
{
    Tally t;
    for (const auto& [m, f] : p.items) {
        ++t.cases;
        FOFormula star = standard_translation(f, m.type());
        FOStructure s = expand(m);
        auto values = check_all(f, m);
        for (std::size_t r = 0; r < m.team_size(); ++r) {
            bool fo = eval_fo(star, s, m.type().variables(), m.row(r));
            bool direct = naive_holds(f, m, m.row(r));
            t.expect(values[r] == fo && values[r] == direct, [&] {
                return "row " + std::to_string(r) + " check " + std::to_string(values[r]) + " fo " +
                       std::to_string(fo) + " direct " + std::to_string(direct) + ", " + show(m, f);
            });
        }
    }
    return t.outcome("pairs");
}

Outcome locality(const Population& p)
{
    Tally t;
    for (const auto& [m, f] : p.items) {
        ++t.cases;
        VarSet free = free_vars(f);
        auto values = check_all(f, m);
        for (std::size_t a = 0; a < m.team_size(); ++a)
            for (std::size_t b = 0; b < m.team_size(); ++b)
                if (agree_on(m.row(a), m.row(b), free))
                    t.expect(values[a] == values[b], [&] {
                        return "rows " + std::to_string(a) + " and " + std::to_string(b) + ", " + show(m, f);
                    });
    }
    return t.outcome("pairs");
}

Outcome variable_distinguished_transform()
{
    Rng rng(1004);
    Tally t;
    for (int i = 0; i < 250; ++i) {
        ++t.cases;
        DependenceModel m = random_model(rng);
        DependenceModel vd = variable_distinguished(m);
        t.expect(is_variable_distinguished(vd), [&] { return "not variable distinguished:\n" + print_model(vd); });
        t.expect(vd.team_size() == m.team_size(), [&] { return "team size changed:\n" + print_model(m); });
        for (int j = 0; j < 4; ++j) {
            Formula f = random_formula(rng, m.type(), pick_between(rng, 0, 3), kLfd, 7);
            auto src = check_all(f, m);
            auto dst = check_all(f, vd);
            for (std::size_t r = 0; r < m.team_size(); ++r)
                t.expect(src[r] == dst[r], [&] { return "row " + std::to_string(r) + ", " + show(m, f); });
        }
    }
    return t.outcome("models");
}

Outcome bisimulation_suite()
{
    Outcome o;
    std::vector<std::string> failed;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok)
            failed.push_back(what);
    };

    DependenceModel left = load_model_file(kData + "/ex_inc_left.dm");
    DependenceModel right = load_model_file(kData + "/ex_inc_right.dm");
    BisimRelation z = full_relation(left.team_size(), right.team_size());
    need(check_is_bisimulation(z, left, right, kLfdEq).valid, "inclusion example: full relation is not a bisimulation");
    BisimResult r = bisimilarity(left, 0, right, 0, kLfdEq);
    need(r.related && r.fixpoint, "inclusion example: points not bisimilar at fixpoint");
    GlobalAtom x_in_y{GlobalKind::Inclusion, {0}, {1}, 0};
    need(check_global_atom(x_in_y, left) && !check_global_atom(x_in_y, right),
         "inclusion example: global x in y does not separate the models");

    DependenceModel first = load_model_file(kData + "/notgf2_first.dm");
    DependenceModel second = load_model_file(kData + "/notgf2_second.dm");
    FOFormula phi = parse_fo("forall t. (sim_x(t, s) -> (sim_y(t, s) | sim_z(t, s)))", {"s"});
    need(modal_at(phi, first, 0) && !modal_at(phi, second, 0), "second-team example: phi does not separate s and s'");
    BisimResult stated = bisimilarity(first, 0, second, 0, kLfd);
    if (!stated.related) {
        failed.push_back("second-team example: the two teams as given are not {D,Y}-bisimilar at s, s'");
        if (stated.witness)
            o.notes.push_back("refinement witness: " + describe_witness(*stated.witness, first, second));
        o.notes.push_back("D[y] z holds at t2 = (" + first.format_assignment(first.row(2)) +
                          ") but fails at t2' = (" + second.format_assignment(second.row(3)) + ") and t2'' = (" +
                          second.format_assignment(second.row(4)) + ")");
    }

    DependenceModel fixed = load_model_file(kData + "/notgf2_second_fixed.dm");
    BisimResult repaired = bisimilarity(first, 0, fixed, 0, kLfd);
    bool separated = modal_at(phi, first, 0) && !modal_at(phi, fixed, 0);
    o.notes.push_back(std::string("supplementary: corrected second team ") +
                      (repaired.related && repaired.fixpoint ? "is" : "is NOT") + " {D,Y}-bisimilar at s and " +
                      (separated ? "phi separates the points" : "phi does NOT separate the points"));

    o.pass = failed.empty();
    o.summary = failed.empty() ? "inclusion example and second-team example reproduced"
                               : std::to_string(failed.size()) + " part(s) failed";
    for (const auto& f : failed)
        o.notes.insert(o.notes.begin(), "failed: " + f);
    return o;
}

Outcome ef_theorem()
{
    Rng rng(1006);
    const std::vector<OmegaProfile> profiles{kLfd, kLfdEq, OmegaProfile::all()};
    Tally t;
    for (int i = 0; i < 320; ++i) {
        ++t.cases;
        auto [a, b] = random_pair(rng);
        const OmegaProfile& omega = profiles[pick(rng, profiles.size())];
        std::size_t k = pick_between(rng, 0, 3);
        BisimResult r = bisimilarity(a, 0, b, 0, omega, k);
        for (int j = 0; j < 6; ++j) {
            Formula f = random_formula(rng, a.type(), pick_between(rng, 0, k), omega, 7);
            auto va = check_all(f, a);
            auto vb = check_all(f, b);
            for (auto [s, sp] : r.relation.pairs())
                t.expect(va[s] == vb[sp], [&, s = s, sp = sp] {
                    return "stage " + std::to_string(k) + " pair " + std::to_string(s) + "," + std::to_string(sp) +
                           " disagrees on " + print_formula(f, a.type());
                });
        }
        CharacteristicFormulas cf(a, omega);
        for (std::size_t s = 0; s < a.team_size(); ++s) {
            Formula chi = cf.at(s, k);
            auto values = check_all(chi, b);
            for (std::size_t sp = 0; sp < b.team_size(); ++sp)
                t.expect(values[sp] == r.relation.contains(s, sp), [&] {
                    return "characteristic formula of row " + std::to_string(s) + " at rank " + std::to_string(k) +
                           " vs row " + std::to_string(sp);
                });
        }
    }
    return t.outcome("model pairs");
}

Outcome maximal_x_reduction()
{
    Rng rng(1007);
    Tally t;
    for (int i = 0; i < 150; ++i) {
        ++t.cases;
        auto [a, b] = random_pair(rng, {3, 3, 5});
        BisimRelation z = atom_agreement(a, b, OmegaProfile::all());
        if (coin(rng, 0.3))
            for (std::size_t s = 0; s < a.team_size(); ++s)
                for (std::size_t sp = 0; sp < b.team_size(); ++sp)
                    z.set(s, sp, coin(rng, 0.7));
        for (int step = 0; step < 8; ++step) {
            BisimRelation next = refine_step(z, a, b);
            t.expect(pair_set(next) == naive_refine(pair_set(z), a, b),
                     [&] { return "step " + std::to_string(step) + " on\n" + print_model(a) + print_model(b); });
            if (next == z)
                break;
            z = next;
        }
    }
    return t.outcome("instances");
}

Outcome reduction_suite()
{
    Rng rng(1008);
    Tally t;
    for (int i = 0; i < 60 && t.cases < 30; ++i) {
        auto fx = random_kahr_fixture(rng, 3);
        if (!fx)
            continue;
        ++t.cases;
        const KahrSentence& psi = fx->psi;
        DependenceModel m = witness_model(psi, fx->a, fx->f);
        std::string label = "matrix " + print_formula(psi.matrix, kahr_type(psi));
        Formula inc = reduce_to_inclusion(psi);
        Formula eq = reduce_to_equality(psi);
        for (bool v : check_all(inc, m))
            t.expect(v, [&] { return label + ": witness model fails the inclusion reduction"; });
        for (bool v : check_all(eq, m))
            t.expect(v, [&] { return label + ": witness model fails the equality reduction"; });

        auto xz = project(m, {kahr::x, kahr::z});
        for (Elem p = 0; p < fx->a.size(); ++p)
            for (Elem q = 0; q < fx->a.size(); ++q)
                t.expect(xz.count({p, q}) == 1, [&] { return label + ": A x A not inside T(x, z)"; });

        for (std::size_t start = 0; start < m.team_size(); ++start) {
            Extraction e = extract_classical_model(m, psi, start);
            FOStructure s = to_fo_structure(kahr_type(psi), e.structure, false);
            t.expect(eval_fo(kahr_to_fo(psi), s) && skolem_holds(psi, e.structure, e.skolem),
                     [&] { return label + ": extraction from row " + std::to_string(start) + " is not a model"; });
        }

        for (auto [f, kind] : {std::pair{inc, AtomKind::Inclusion}, std::pair{eq, AtomKind::Equality}}) {
            AtomCensus c = atom_census(f);
            bool exact = c.variables.size() == 4 && c.atoms.size() == 2 && c.atoms.count(AtomKind::Dependence) &&
                         c.atoms.at(AtomKind::Dependence) == 1 && c.atoms.count(kind) && c.atoms.at(kind) == 6;
            t.expect(exact, [&] { return label + ": atom census differs"; });
        }
    }
    Outcome o = t.outcome("fixtures");
    if (t.cases < 20) {
        o.pass = false;
        o.notes.push_back("fewer than 20 fixtures were generated");
    }
    return o;
}

Outcome rewrite_suite()
{
    Rng rng(1009);
    OmegaProfile allowed{AtomKind::Dependence, AtomKind::Anonymity, AtomKind::Inequality, AtomKind::Exclusion};
    Tally t;
    for (int i = 0; i < 300; ++i) {
        ++t.cases;
        DependenceModel m = random_model(rng);
        DependenceModel vd = variable_distinguished(m);
        Formula f = random_formula(rng, m.type(), pick_between(rng, 0, 3), allowed, 7);
        Formula g = rewrite_vd(f, m.type());
        auto src = check_all(f, m);
        auto f_vd = check_all(f, vd);
        auto g_vd = check_all(g, vd);
        bool src_sat = false, g_sat = false;
        for (std::size_t r = 0; r < m.team_size(); ++r) {
            t.expect(f_vd[r] == g_vd[r], [&] { return "pointwise at row " + std::to_string(r) + ", " + show(m, f); });
            src_sat = src_sat || src[r];
            g_sat = g_sat || g_vd[r];
        }
        // A model of f yields a model of the rewrite on its vd copy, and a model of the rewrite on a
        // vd team is a model of f.
        if (src_sat)
            t.expect(g_sat, [&] { return "satisfiability lost, " + show(m, f); });
    }
    return t.outcome("fixtures");
}

Outcome full_team_correspondence()
{
    Rng rng(1010);
    Tally t;
    for (int i = 0; i < 1500; ++i) {
        ++t.cases;
        std::size_t n = pick_between(rng, 1, 3);
        FiniteType type = small_type(n);
        Structure s = random_structure(rng, type, pick_between(rng, 1, 3));
        DependenceModel m = full_team(s, type);
        FOFormula sentence = close_universally(random_relational_fo(rng, type, pick_between(rng, 0, 3)));
        bool tarski = eval_fo(sentence, to_fo_structure(type, s, false));
        Formula f = full_team_formula(sentence, type);
        for (bool v : check_all(f, m))
            t.expect(v == tarski, [&] { return "sentence " + print_fo(sentence) + " on\n" + print_model(m); });
    }
    return t.outcome("sentences");
}

Outcome materialization()
{
    Tally t;

    ++t.cases;
    FiniteType two({}, {"x", "y"});
    Structure bits({"0", "1"}, {});
    MaterializedTeam full = materialize_fo_team(bits, two, fo::truth());
    t.expect(full.model.team() == full_team(bits, two).team(), [] { return "True does not give the full team"; });
    ++t.cases;
    MaterializedTeam diag =
        materialize_fo_team(bits, two, parse_fo("(x = 0 & y = 0) | (x = 1 & y = 1)", two.variables()));
    t.expect(diag.model.team() == std::vector<Assignment>{{0, 0}, {1, 1}},
             [] { return "diagonal team differs"; });

    // Structure: R is the 3-cycle 0 -> 1 -> 2 -> 0, P = {0}.
    FiniteType type({{"R", 2}, {"P", 1}}, {"x", "y", "z"});
    Structure cycle({"0", "1", "2"}, {{{0, 1}, {1, 2}, {2, 0}}, {{0}}});
    auto succ = [](Elem a) { return static_cast<Elem>((a + 1) % 3); };
    auto r = [&](Elem a, Elem b) { return succ(a) == b; };
    using Pred = std::function<bool(Elem, Elem, Elem)>;
    struct Fixture {
        std::string text;
        std::size_t bound;
        Pred expected;
    };
    const std::vector<Fixture> fixtures{
        {"true", 0, [](Elem, Elem, Elem) { return true; }},
        {"false | true", 0, [](Elem, Elem, Elem) { return true; }},
        {"P(x)", 1, [](Elem x, Elem, Elem) { return x == 0; }},
        {"R(x, y)", 2, [&](Elem x, Elem y, Elem) { return r(x, y); }},
        {"R(x, y) & R(y, z)", 3, [&](Elem x, Elem y, Elem z) { return r(x, y) && r(y, z); }},
        {"exists z. (R(x, z) & R(z, y))", 3, [&](Elem x, Elem y, Elem) { return succ(succ(x)) == y; }},
        {"exists y. R(x, y)", 2, [](Elem, Elem, Elem) { return true; }},
        {"forall y. (R(x, y) -> P(y))", 2, [&](Elem x, Elem, Elem) { return succ(x) == 0; }},
        {"x = y", 2, [](Elem x, Elem y, Elem) { return x == y; }},
        {"x = 0", 1, [](Elem x, Elem, Elem) { return x == 0; }},
        {"x = 0 & y = 1", 2, [](Elem x, Elem y, Elem) { return x == 0 && y == 1; }},
        {"(x = 0 & y = 0) | (x = 1 & y = 1)", 2, [](Elem x, Elem y, Elem) { return x == y && x < 2; }},
        {"exists x. exists y. R(x, y)", 2, [](Elem, Elem, Elem) { return true; }},
        {"exists w. (P(w) & R(w, x))", 2, [](Elem x, Elem, Elem) { return x == 1; }},
        {"P(z) & exists x. R(x, z)", 2, [](Elem, Elem, Elem z) { return z == 0; }},
        {"not R(x, x)", 1, [](Elem, Elem, Elem) { return true; }},
        {"forall w. (R(w, x) -> R(w, y))", 3, [](Elem x, Elem y, Elem) { return x == y; }},
        {"exists w. exists v. (R(x, w) & R(w, v) & R(v, y))", 4, [](Elem x, Elem y, Elem) { return x == y; }},
        {"x != y & y != z & x != z", 3, [](Elem x, Elem y, Elem z) { return x != y && y != z && x != z; }},
        {"exists y. (R(x, y) & exists x. R(y, x))", 2, [](Elem, Elem, Elem) { return true; }},
    };
    for (const auto& fx : fixtures) {
        ++t.cases;
        MaterializedTeam m = materialize_fo_team(cycle, type, parse_fo(fx.text, type.variables()));
        t.expect(m.free_variable_bound == fx.bound, [&] {
            return fx.text + ": bound " + std::to_string(m.free_variable_bound) + ", expected " +
                   std::to_string(fx.bound);
        });
        std::vector<Assignment> expected;
        for (Elem x = 0; x < 3; ++x)
            for (Elem y = 0; y < 3; ++y)
                for (Elem z = 0; z < 3; ++z)
                    if (fx.expected(x, y, z))
                        expected.push_back({x, y, z});
        t.expect(m.model.team() == expected, [&] { return fx.text + ": team differs"; });
    }
    return t.outcome("team definitions");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance suite for the localised team logic library"};
    std::vector<int> expect_fail;
    app.add_option("--expect-fail", expect_fail, "Criteria known to fail; they do not affect the exit code");
    CLI11_PARSE(app, argc, argv);
    const std::set<int> expected(expect_fail.begin(), expect_fail.end());

    auto start = std::chrono::steady_clock::now();
    Population population = make_population();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"local dependence fixtures", local_dependence_fixtures},
        {"checker vs standard translation and direct oracle", [&] { return oracle_equivalence(population); }},
        {"locality", [&] { return locality(population); }},
        {"variable-distinguished transform", variable_distinguished_transform},
        {"bisimulation examples", bisimulation_suite},
        {"k-bisimulation and characteristic formulas", ef_theorem},
        {"maximal-X refinement vs all subsets", maximal_x_reduction},
        {"Kahr reductions and extraction", reduction_suite},
        {"rewrite on variable-distinguished models", rewrite_suite},
        {"full-team FO correspondence", full_team_correspondence},
        {"FO-defined team materialization", materialization},
    };

    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.summary = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream line;
        line.setf(std::ios::fixed);
        line.precision(2);
        line << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << criteria[i].first << " (" << o.summary
             << ", " << secs << " s)";
        if (!o.pass && expected.count(id))
            line << " [expected]";
        if (o.pass && expected.count(id))
            line << " [unexpected pass]";
        std::cout << line.str() << "\n";
        for (const auto& n : o.notes)
            std::cout << "      " << n << "\n";
        if (o.pass == static_cast<bool>(expected.count(id)))
            ++unexpected;
    }
    double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "total " << total << " s\n";
    if (total >= 60.0) {
        std::cout << "FAIL  time budget of 60 s exceeded\n";
        return 1;
    }
    return unexpected == 0 ? 0 : 1;
}
