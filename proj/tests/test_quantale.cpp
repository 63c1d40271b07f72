#include <catch_amalgamated.hpp>

#include "cbm/quantale.hpp"

#include "fixtures.hpp"

using namespace cbm;

TEST_CASE("boolean quantale basics") {
    auto q = Quantale::boolean();
    CHECK(q->leq(q->bottom(), q->top()));
    CHECK_FALSE(q->leq(q->top(), q->bottom()));
    CHECK(q->equal(q->meet({q->bottom(), q->top()}), q->bottom()));
    CHECK(q->equal(q->plus(q->bottom(), q->bottom()), q->bottom()));
    CHECK(q->equal(q->plus(q->bottom(), q->top()), q->top()));
}

TEST_CASE("extended reals: order, truncation, empty meet") {
    auto q = Quantale::extended_reals();
    CHECK_FALSE(q->leq(q->real(0.5), q->real(0.2)));
    CHECK(q->equal(q->plus(q->real(0.3), q->real(0.4)), q->real(0.7)));
    CHECK(q->equal(q->plus(q->top(), q->real(0.0)), q->top()));
    CHECK(q->equal(q->meet(std::vector<QValue>{}), q->top()));
    CHECK(q->equal(q->join({q->real(0.1), q->real(0.7), q->real(0.3)}), q->real(0.7)));
}

TEST_CASE("unit interval clamps the sum") {
    auto q = Quantale::unit_interval();
    CHECK(q->equal(q->plus(q->real(0.8), q->real(0.9)), q->top()));
    CHECK_THROWS_AS(q->real(1.5), QuantaleTypeError);
}

TEST_CASE("diamond: incomparable elements fail leq both ways") {
    auto q = Quantale::diamond();
    QValue l = q->parse_value("l"), r = q->parse_value("r");
    CHECK_FALSE(q->leq(l, r));
    CHECK_FALSE(q->leq(r, l));
    CHECK(q->equal(q->meet({l, r}), q->bottom()));
    CHECK(q->equal(q->join({l, r}), q->top()));
    CHECK(q->equal(q->plus(l, r), q->top())); // sum = join
}

TEST_CASE("mixed-quantale operands are a type error") {
    auto a = Quantale::boolean();
    auto b = Quantale::boolean();
    CHECK_THROWS_AS(a->leq(a->bottom(), b->bottom()), QuantaleTypeError);
}

TEST_CASE("law validation passes on built-ins") {
    for (auto q : {Quantale::boolean(), Quantale::diamond(), Quantale::chain(4),
                   Quantale::extended_reals(), Quantale::unit_interval()}) {
        Report rep = validate_quantale(*q, q->default_sample(), 4);
        INFO(q->name());
        CHECK(rep.ok());
    }
}

TEST_CASE("law validation catches a non-commutative plus") {
    // chain 0 < 1 < 2 with a deliberately asymmetric table
    std::vector<std::string> names{"0", "1", "2"};
    std::vector<char> leq{1, 1, 1, 0, 1, 1, 0, 0, 1};
    std::vector<std::uint32_t> meet{0, 0, 0, 0, 1, 1, 0, 1, 2};
    std::vector<std::uint32_t> join{0, 1, 2, 1, 1, 2, 2, 2, 2};
    std::vector<std::uint32_t> plus{0, 1, 2, 1, 2, 2, 1, 2, 2}; // plus(2,0)=1 != plus(0,2)=2
    auto q = make_finite_for_tests(names, leq, meet, join, plus, 0, 2);
    Report rep = validate_quantale(*q, q->default_sample(), 3);
    CHECK_FALSE(rep.ok());
    bool saw = false;
    for (const auto& e : rep.entries)
        if (e.id == "monoid.commutative" && e.status == CheckStatus::Fail) {
            saw = true;
            CHECK_FALSE(e.witness.empty());
        }
    CHECK(saw);
}

TEST_CASE("plus idempotence gate") {
    auto b = Quantale::boolean();
    CHECK(plus_is_idempotent(*b, b->default_sample()));
    auto r = Quantale::extended_reals();
    CHECK_FALSE(plus_is_idempotent(*r, {r->real(0.0), r->real(1.0)}));
    CHECK(plus_is_idempotent(*r, {r->real(0.0), r->top()}));
}

TEST_CASE("finite quantale loads from the table format") {
    auto q = Quantale::load_table(cbmtest::slurp("diamond.q"), "diamond.q");
    CHECK(q->carrier_size() == 4);
    QValue l = q->parse_value("l"), r = q->parse_value("r");
    CHECK(q->equal(q->join({l, r}), q->top()));
    CHECK(q->equal(q->plus(l, l), l));
    Report rep = validate_quantale(*q, q->default_sample(), 4);
    CHECK(rep.ok());
}

TEST_CASE("table loader rejects broken inputs") {
    CHECK_THROWS_AS(Quantale::load_table("carrier: a b\nbottom: a\ntop: b\nplus: join\n"),
                    ParseError); // no order
    // not a lattice: two maximal elements
    CHECK_THROWS_AS(
        Quantale::load_table(
            "carrier: a b c\nbottom: a\ntop: b\norder: a < b, a < c\nplus: join\n"),
        ParseError);
    // bottom designation wrong
    CHECK_THROWS_AS(
        Quantale::load_table("carrier: a b\nbottom: b\ntop: a\norder: a < b\nplus: join\n"),
        ParseError);
}

TEST_CASE("order properties on sampled pairs", "[property]") {
    for (auto q : {Quantale::diamond(), Quantale::chain(5)}) {
        auto sample = q->default_sample();
        for (const auto& a : sample) {
            CHECK(q->leq(a, a));
            for (const auto& b : sample) {
                if (q->leq(a, b) && q->leq(b, a)) CHECK(q->equal(a, b));
                // meet/join duality
                CHECK(q->leq(q->meet({a, b}), a));
                CHECK(q->leq(a, q->join({a, b})));
            }
        }
    }
}
