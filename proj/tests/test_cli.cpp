#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "lfd_cli.hpp"

using namespace lfd;

namespace {

const std::string kData = LFD_DATA_DIR;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

} // namespace

TEST_CASE("check exit codes", "[cli]")
{
    std::string model = kData + "/ex_local_dep.dm";
    CHECK(run({"check", "--model", model, "--formula", "D[y] x", "--at", "1 1 0"}).code == 0);
    CHECK(run({"check", "--model", model, "--formula", "D[x] y", "--at", "1 1 0"}).code == 1);
    Run outside = run({"check", "--model", model, "--formula", "D[y] x", "--at", "0 1 2"});
    CHECK(outside.code == 2);
    CHECK(outside.out.empty());
    CHECK(outside.err.find("outside team") != std::string::npos);
    CHECK(run({"check", "--model", model, "--formula", "D[y] q", "--at", "1 1 0"}).code == 2);
    CHECK(run({"check", "--model", kData + "/missing.dm", "--formula", "D[y] x"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("check reports every row and stats", "[cli]")
{
    std::string model = kData + "/ex_local_dep.dm";
    Run r = run({"check", "--model", model, "--formula", "D[z] y"});
    DependenceModel m = load_model_file(model);
    auto values = check_all(parse_formula("D[z] y", m.type()), m);
    std::string expected;
    for (std::size_t i = 0; i < m.team_size(); ++i)
        expected += "(" + m.format_assignment(m.row(i)) + ") " + (values[i] ? "true" : "false") + "\n";
    CHECK(r.out.substr(0, expected.size()) == expected);
    CHECK(r.out.find("atom evaluations: 4") != std::string::npos);
    CHECK(r.code == 1);
}

TEST_CASE("check with an FO-defined team", "[cli]")
{
    std::string model = kData + "/sample_structure.dm";
    Run r = run({"check", "--model", model, "--team-fo", "exists z. (R(x, z) & R(z, y))", "--bound", "2",
                 "--formula", "x = y"});
    CHECK(r.code == 0);
    CHECK(r.out.find("team size: 2") != std::string::npos);
    CHECK(r.out.find("free-variable bound: 3 (limit 2)") != std::string::npos);
    CHECK(r.err.find("warning") != std::string::npos);
    Run within = run({"check", "--model", model, "--team-fo", "R(x, y)", "--bound", "2", "--formula", "D[x] y",
                      "--at", "0 1"});
    CHECK(within.code == 0);
    CHECK(within.err.empty());
}

TEST_CASE("bisim wraps the library", "[cli]")
{
    std::string left = kData + "/ex_inc_left.dm", right = kData + "/ex_inc_right.dm";
    Run r = run({"bisim", "--left", left, "--right", right, "--at-left", "a b", "--at-right", "1 2", "--depth",
                 "fix"});
    CHECK(r.code == 0);
    CHECK(r.out == "bisimilar (stage 1 fixpoint)\n0 0\n0 1\n1 0\n1 1\n");

    Run rel = run({"bisim", "--left", left, "--right", right, "--at-left", "a b", "--at-right", "1 2", "--relation",
                   "0:1,1:0"});
    CHECK(rel.code == 1);
    CHECK(first_line(rel.out) == "valid but does not relate the points");
    Run single = run({"bisim", "--left", left, "--right", right, "--at-left", "a b", "--at-right", "1 2",
                      "--relation", "0:0"});
    CHECK(single.code == 1);
    CHECK(first_line(single.out) == "not a bisimulation");

    std::string first = kData + "/notgf2_first.dm", second = kData + "/notgf2_second.dm";
    Run no = run({"bisim", "--left", first, "--right", second, "--at-left", "0 0 0", "--at-right", "0 0 0",
                  "--witness"});
    CHECK(no.code == 1);
    CHECK(no.out.find("replay: reproduced") != std::string::npos);
}

TEST_CASE("charform, translate, reduce, vd and union print library output", "[cli]")
{
    std::string left = kData + "/ex_inc_left.dm";
    DependenceModel m = load_model_file(left);
    OmegaProfile lfd = OmegaProfile::parse("D,Y");
    Run c = run({"charform", "--model", left, "--at", "a b", "--depth", "2"});
    CHECK(c.out == print_formula(char_formula(m, m.row(0), 2, lfd), m.type()) + "\n");
    CHECK(run({"charform", "--model", left, "--at", "a b", "--depth", "5"}).code == 2);

    CHECK(run({"translate", "--mode", "standard", "--formula", "E[x] P(y)"}).out == "exists y. (T(x, y) & P(y))\n");
    FiniteType t = infer_type("D[x] y");
    CHECK(run({"translate", "--mode", "modal", "--formula", "D[x] y"}).out ==
          print_fo(modal_translation(parse_formula("D[x] y", t), t)) + "\n");
    CHECK(run({"translate", "--mode", "modal", "--formula", "x = y"}).code == 2);

    std::string kahr = kData + "/sample.kahr";
    KahrSentence psi = parse_kahr(read_text_file(kahr));
    CHECK(run({"reduce", "--target", "eq", kahr}).out ==
          print_formula(reduce_to_equality(psi), kahr_type(psi)) + "\n");
    CHECK(run({"reduce", "--target", "incl", kahr}).out ==
          print_formula(reduce_to_inclusion(psi), kahr_type(psi)) + "\n");

    CHECK(run({"vd", "--model", left}).out == print_model(variable_distinguished(m)));
    CHECK(run({"vd", "--formula", "x != y | P(x)"}).out == "D[x y] x\n");
    CHECK(run({"union", "--left", left, "--right", left}).out == print_model(disjoint_union(m, m)));
}

TEST_CASE("out writes the report to a file", "[cli]")
{
    auto path = std::filesystem::temp_directory_path() / "lfd_cli_out.txt";
    Run r = run({"reduce", kData + "/sample.kahr", "--out", path.string()});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    CHECK(!read_text_file(path.string()).empty());
    std::filesystem::remove(path);
}
