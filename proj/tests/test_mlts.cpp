#include <catch_amalgamated.hpp>

#include "cbm/generators.hpp"
#include "cbm/mlts.hpp"
#include "cbm/mlts_ops.hpp"

#include "fixtures.hpp"

using namespace cbm;
using cbmtest::slurp;

namespace {
Mlts load_s0() { return Mlts::load(slurp("S0.mlts"), "S0.mlts"); }
} // namespace

TEST_CASE("down values follow the constructors") {
    Mlts m = load_s0();
    const Quantale& q = *m.quantale();
    CHECK(q.equal(m.down(m.bot()), q.bottom()));
    CHECK(q.equal(m.down(m.top()), q.top()));
    CHECK(q.equal(m.down(m.base_term("s0")), q.bottom()));
    CHECK(q.equal(m.down(m.store().plus(m.top(), m.bot())), q.top()));
    TermId mixed = m.store().meet({m.base_term("s0"), m.top()});
    CHECK(q.equal(m.down(mixed), q.bottom()));
}

TEST_CASE("derived transitions") {
    Mlts m = load_s0();
    TermId s0 = m.base_term("s0");

    CHECK(m.transitions(m.top(), "a").empty());
    CHECK(m.transitions(m.bot(), "a") == std::vector<TermId>{m.bot()});

    // meet moves when some member moves; normalization shares the result
    TermId meet = m.store().meet({s0, m.bot()});
    auto b = m.transitions(meet, "b");
    CHECK(b == std::vector<TermId>{m.bot()});

    // join needs every member to move
    TermId join = m.store().join({s0, m.top()});
    CHECK(m.transitions(join, "a").empty());
    TermId join2 = m.store().join({s0, m.bot()});
    auto ja = m.transitions(join2, "a");
    REQUIRE(ja.size() == 1);
    CHECK(ja[0] == m.store().join({m.base_term("s1"), m.bot()}));

    // plus steps both sides together
    TermId plus = m.store().plus(s0, m.bot());
    auto pa = m.transitions(plus, "a");
    REQUIRE(pa.size() == 1);
    CHECK(pa[0] == m.store().plus(m.base_term("s1"), m.bot()));
    CHECK(m.transitions(m.store().plus(s0, m.top()), "a").empty());
}

TEST_CASE("hash consing: equal structure, same id") {
    Mlts m = load_s0();
    TermId a = m.store().meet({m.base_term("s0"), m.base_term("s1")});
    TermId b = m.store().meet({m.base_term("s1"), m.base_term("s0")});
    CHECK(a == b);
    CHECK(m.store().plus(a, m.bot()) == m.store().plus(m.bot(), b));
    // flattening
    TermId c = m.store().meet({a, m.base_term("s0")});
    CHECK(c == a);
    // empty and singleton normalization
    CHECK(m.store().meet({}) == m.top());
    CHECK(m.store().join({}) == m.bot());
    CHECK(m.store().meet({m.base_term("s0")}) == m.base_term("s0"));
}

TEST_CASE("term parsing round-trips rendering", "[property]") {
    Mlts m = load_s0();
    std::vector<TermId> pool{m.bot(), m.top(), m.base_term("s0"), m.base_term("s1")};
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        std::size_t k = rng.below(4);
        TermId t;
        try {
            if (k == 0)
                t = m.store().meet({pool[rng.below(pool.size())], pool[rng.below(pool.size())]});
            else if (k == 1)
                t = m.store().join({pool[rng.below(pool.size())], pool[rng.below(pool.size())]});
            else if (k == 2)
                t = m.store().plus(pool[rng.below(pool.size())], pool[rng.below(pool.size())]);
            else
                t = pool[rng.below(pool.size())];
        } catch (const ResourceError&) {
            continue; // depth bound hit; draw again
        }
        pool.push_back(t);
        CHECK(m.parse_term(m.render(t)) == t);
    }
}

TEST_CASE("term parser accepts the surface syntax") {
    Mlts m = load_s0();
    CHECK(m.parse_term("bot") == m.bot());
    CHECK(m.parse_term("meet{s0, bot}") == m.store().meet({m.base_term("s0"), m.bot()}));
    CHECK(m.parse_term("s0 + s1") ==
          m.store().plus(m.base_term("s0"), m.base_term("s1")));
    CHECK(m.parse_term("(s0 + s1) + top") ==
          m.store().plus(m.store().plus(m.base_term("s0"), m.base_term("s1")), m.top()));
    CHECK_THROWS_AS(m.parse_term("meet{s0"), ParseError);
    CHECK_THROWS_AS(m.parse_term("zz"), LookupError);
}

TEST_CASE("simulation order on the fixtures") {
    ProcessLts lts = cbmtest::load_pqr();
    Mlts m = cbmtest::load_v0(lts);
    auto uni = m.transition_closure(
        {m.base_term("s0"), m.base_term("s''0"), m.bot(), m.top()});
    SimPreorder sim(m, uni);
    for (TermId t : uni) {
        CHECK(sim.leq(m.bot(), t));
        CHECK(sim.leq(t, m.top()));
    }
    CHECK(sim.leq(m.base_term("s0"), m.base_term("s''0")));
    CHECK_FALSE(sim.leq(m.base_term("s''0"), m.base_term("s0")));
    CHECK_FALSE(sim.leq(m.base_term("s0"), m.base_term("s1")));
}

TEST_CASE("simulation order implies value order and matching moves", "[property]") {
    Rng rng(31);
    for (int i = 0; i < 30; ++i) {
        auto q = i % 2 ? Quantale::diamond() : Quantale::boolean();
        Mlts m = random_mlts(rng, 4, 2, q);
        std::vector<TermId> roots{m.bot(), m.top()};
        for (TermId b : m.base_terms()) roots.push_back(b);
        auto uni = m.transition_closure(roots);
        SimPreorder sim(m, uni);
        for (TermId a : uni)
            for (TermId b : uni) {
                if (!sim.leq(a, b)) continue;
                CHECK(q->leq(m.down(a), m.down(b)));
                for (Mlts::Label l = 0; l < m.num_labels(); ++l)
                    for (TermId bs : m.transitions(b, l)) {
                        bool matched = false;
                        for (TermId as : m.transitions(a, l))
                            matched = matched || sim.leq(as, bs);
                        CHECK(matched);
                    }
            }
    }
}

TEST_CASE("validator passes on the fixture universe") {
    ProcessLts lts = cbmtest::load_pqr();
    Mlts m = cbmtest::load_v0(lts);
    std::vector<TermId> roots{m.bot(), m.top()};
    for (TermId b : m.base_terms()) roots.push_back(b);
    Report rep = validate_mlts(m, m.transition_closure(roots));
    CHECK(rep.ok());
    // plus unit law appears and passes
    bool unit = false;
    for (const auto& e : rep.entries)
        if (e.id == "mlts.6.plus-unit") unit = e.status == CheckStatus::Pass;
    CHECK(unit);
}

TEST_CASE("a state that copies top's value but moves is strictly below top") {
    // Top is a symbolic constructor here, so its axioms (maximal value, no
    // transitions) cannot be broken by construction; what CAN go wrong is a
    // base state claiming top's value while still moving. It stays strictly
    // below Top and the law suite still holds.
    Mlts m2({"fake"}, {"a"}, Quantale::boolean());
    m2.set_down("fake", m2.quantale()->top());
    m2.add_transition("fake", "a", "fake");
    std::vector<TermId> roots{m2.bot(), m2.top(), m2.base_term("fake")};
    auto uni = m2.transition_closure(roots);
    SimPreorder sim(m2, uni);
    CHECK(sim.leq(m2.base_term("fake"), m2.top()));
    CHECK_FALSE(sim.leq(m2.top(), m2.base_term("fake"))); // not a legal top
    Report rep = validate_mlts(m2, uni);
    CHECK(rep.ok());
}

TEST_CASE("bounds are enforced") {
    Bounds b;
    b.max_depth = 3;
    b.max_set_size = 2;
    Mlts m({"x"}, {"a"}, Quantale::boolean(), b);
    TermId x = m.base_term("x");
    TermId p1 = m.store().plus(x, m.top());
    TermId p2 = m.store().plus(p1, x);
    CHECK_THROWS_AS(m.store().plus(p2, p1), ResourceError);
    CHECK_THROWS_AS(m.store().meet({x, p1, p2}), ResourceError);
    try {
        m.store().meet({x, p1, p2});
    } catch (const ResourceError& e) {
        CHECK(e.bound() == "max_set_size");
    }
}

TEST_CASE("closure of a single silent base state") {
    Mlts m({"b"}, {"a"}, Quantale::boolean());
    ClosureStats st = close_pre_mlts(m);
    CHECK(st.complete);
    // bot, top, b itself; every combination collapses onto one of them
    CHECK(st.representatives.size() == 3);
    auto uni = m.transition_closure({m.store().meet({m.base_term("b"), m.bot()}), m.bot()});
    SimPreorder sim(m, uni);
    CHECK(sim.equiv(m.store().meet({m.base_term("b"), m.bot()}), m.bot()));
}

TEST_CASE("closure of an empty base is two classes") {
    Mlts m({}, {"a"}, Quantale::boolean());
    ClosureStats st = close_pre_mlts(m);
    CHECK(st.complete);
    REQUIRE(st.representatives.size() == 2);
    CHECK(st.representatives[0] == m.bot());
    CHECK(st.representatives[1] == m.top());
}

TEST_CASE("closure of the bundled distance fixture: regression") {
    Mlts m = Mlts::load(slurp("S0.mlts"), "S0.mlts");
    ClosureStats st = close_pre_mlts(m);
    CHECK(st.complete);
    CHECK(st.representatives.size() == 5); // bot, top, s0, s1, join{s0,s1}
    CHECK(st.rounds == 2);
}

TEST_CASE("quantale as MLTS") {
    auto q = Quantale::boolean();
    Mlts m = quantale_as_mlts(q, {"a", "b"});
    CHECK(m.base_names().size() == 2);
    CHECK(m.transitions(m.top(), "a").empty());
    TermId qb = m.base_term("q_bot"), qt = m.base_term("q_top");
    CHECK(m.transitions(qb, "a") == std::vector<TermId>{qb});
    auto uni = m.transition_closure({qb, qt, m.bot(), m.top()});
    SimPreorder sim(m, uni);
    // value order matches simulation order on carrier copies
    CHECK(sim.leq(qb, qt));
    CHECK_FALSE(sim.leq(qt, qb));
    CHECK(sim.equiv(qb, m.bot()));
    CHECK(sim.leq(qt, m.top()));
    CHECK_FALSE(sim.leq(m.top(), qt));
}

TEST_CASE("environment embedding is a mutual similarity") {
    auto q = Quantale::boolean();
    ProcessLts env = ProcessLts::load("states: e\nlabels: a\ntrans: e -a-> e\n", "<env>", q);
    Embedding emb = embed_environment(env, q);
    CHECK(verify_embedding(env, emb));
    TermId se = emb.state_term[env.state("e")];
    CHECK(emb.mlts.transitions(se, "a") == std::vector<TermId>{se});
    CHECK(emb.mlts.quantale()->equal(emb.mlts.down(se), q->bottom()));

    Rng rng(41);
    for (int i = 0; i < 20; ++i) {
        ProcessLts renv = random_lts(rng, 4, 2, Quantale::boolean());
        Embedding remb = embed_environment(renv);
        CHECK(verify_embedding(renv, remb));
    }
}
