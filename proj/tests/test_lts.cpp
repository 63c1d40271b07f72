#include <catch_amalgamated.hpp>

#include "cbm/generators.hpp"
#include "cbm/lts.hpp"

#include "fixtures.hpp"

using namespace cbm;
using cbmtest::slurp;

TEST_CASE("P fixture loads with 3 states and 2 transitions") {
    ProcessLts lts = ProcessLts::load(slurp("P.lts"), "P.lts");
    CHECK(lts.num_states() == 3);
    CHECK(lts.num_transitions() == 2);
    CHECK(lts.policy() == ImmediatePolicy::Liberal);
}

TEST_CASE("load rejects malformed documents") {
    CHECK_THROWS_AS(ProcessLts::load("labels: a\n"), ParseError); // empty state list
    CHECK_THROWS_MATCHES(
        ProcessLts::load("states: p\nlabels: a\ntrans: p -a-> zz\n"), ParseError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("zz")));
    // re-declaring a name unifies (merge semantics), but the constructor
    // rejects genuine duplicates
    CHECK(ProcessLts::load("states: p p\nlabels: a\n").num_states() == 1);
    CHECK_THROWS_AS(ProcessLts({"p", "p"}, {"a"}, Quantale::boolean()), ParseError);
}

TEST_CASE("duplicate transitions are deduplicated") {
    ProcessLts lts = ProcessLts::load("states: p q\nlabels: a\ntrans: p -a-> q\ntrans: p -a-> q\n");
    CHECK(lts.num_transitions() == 1);
}

TEST_CASE("successors on the fixtures") {
    ProcessLts lts = cbmtest::load_pqr();
    auto succ = lts.successors("q0", "a");
    REQUIRE(succ.size() == 1);
    CHECK(lts.state_name(succ[0]) == "q1");
    CHECK(lts.successors("p1", "a").empty());
    auto b = lts.successors("p0", "b");
    REQUIRE(b.size() == 1);
    CHECK(lts.state_name(b[0]) == "p2");
    CHECK_THROWS_AS(lts.successors("nope", "a"), LookupError);
}

TEST_CASE("immediate distance per policy") {
    ProcessLts lts = cbmtest::load_pqr();
    const Quantale& q = *lts.quantale();
    auto p1 = lts.state("p1"), q1 = lts.state("q1");

    lts.set_policy(ImmediatePolicy::Canonical);
    CHECK(q.equal(lts.immediate_distance(p1, q1), q.top())); // {} vs {b}

    lts.set_policy(ImmediatePolicy::Liberal);
    CHECK(q.equal(lts.immediate_distance(p1, q1), q.bottom())); // p1 terminated

    lts.set_policy(ImmediatePolicy::CommonAction);
    CHECK(q.equal(lts.immediate_distance(p1, q1), q.top()));

    for (auto pol : {ImmediatePolicy::Canonical, ImmediatePolicy::CommonAction,
                     ImmediatePolicy::Liberal}) {
        lts.set_policy(pol);
        for (ProcessLts::State s = 0; s < lts.num_states(); ++s) {
            if (pol == ImmediatePolicy::CommonAction && lts.terminated(s)) continue;
            CHECK(q.equal(lts.immediate_distance(s, s), q.bottom()));
        }
    }
}

TEST_CASE("canonical policy is always a pseudometric") {
    Rng rng(5);
    for (int i = 0; i < 25; ++i) {
        ProcessLts lts = random_lts(rng, 6, 2, Quantale::boolean());
        Report rep = lts.validate_immediate_metric();
        CHECK(rep.count(CheckStatus::Warn) == 0);
    }
}

TEST_CASE("common-action policy fails the triangle inequality") {
    // p enables {a}, q enables {a,b}, r enables {b}
    ProcessLts lts = ProcessLts::load("states: p q r x\nlabels: a b\n"
                                      "trans: p -a-> x\ntrans: q -a-> x\n"
                                      "trans: q -b-> x\ntrans: r -b-> x\n");
    lts.set_policy(ImmediatePolicy::CommonAction);
    Report rep = lts.validate_immediate_metric();
    bool tri_warn = false;
    for (const auto& e : rep.entries)
        if (e.id == "immediate.triangle" && e.status == CheckStatus::Warn) {
            tri_warn = true;
            CHECK(e.witness.find("p") != std::string::npos);
        }
    CHECK(tri_warn);
}

TEST_CASE("explicit tables must be symmetric, total, bot-diagonal") {
    const char* base = "states: x y\nlabels: a\ntrans: x -a-> y\nquantale: reals\n";
    CHECK_THROWS_MATCHES(
        ProcessLts::load(std::string(base) + "D-table: x y 0.5\nD-table: y x 0.25\n"),
        ParseError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("symmetric")));
    ProcessLts ok = ProcessLts::load(std::string(base) + "D-table: x y 0.5\n");
    CHECK(ok.quantale()->equal(ok.immediate_distance("x", "y"), ok.quantale()->real(0.5)));
    CHECK(ok.quantale()->equal(ok.immediate_distance("x", "x"), ok.quantale()->bottom()));
}

TEST_CASE("immediate distance is symmetric and bot on the diagonal", "[property]") {
    Rng rng(17);
    for (int i = 0; i < 20; ++i) {
        ProcessLts lts = random_lts(rng, 5, 2, Quantale::boolean(), ImmediatePolicy::Liberal);
        const Quantale& q = *lts.quantale();
        for (ProcessLts::State a = 0; a < lts.num_states(); ++a) {
            CHECK(q.equal(lts.immediate_distance(a, a), q.bottom()));
            for (ProcessLts::State b = 0; b < lts.num_states(); ++b)
                CHECK(q.equal(lts.immediate_distance(a, b), lts.immediate_distance(b, a)));
        }
    }
}
