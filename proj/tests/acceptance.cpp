// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Everything runs on bounded universes; the bounds in force are echoed up
// front so results are reproducible.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cbm/algebra.hpp"
#include "cbm/generators.hpp"
#include "cbm/mlts_ops.hpp"
#include "cbm/quantale.hpp"
#include "cbm/solver.hpp"

using namespace cbm;

namespace {

int g_failures = 0;

void line(const std::string& id, bool ok, const std::string& detail = "") {
    if (!ok) ++g_failures;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << id;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << std::endl;
}

std::string slurp(const std::string& name) {
    std::ifstream f(std::string(CBM_FIXTURE_DIR) + "/" + name);
    if (!f) throw std::runtime_error("missing fixture " + name);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct Fixture {
    ProcessLts lts;
    Mlts m;
    ProcStore st;

    Fixture()
        : lts(ProcessLts::load_merged({slurp("P.lts"), slurp("Q.lts"), slurp("R.lts")},
                                      {"P.lts", "Q.lts", "R.lts"})),
          m(Mlts::load_merged({slurp("S0.mlts"), slurp("Spp.mlts"), slurp("Mpar.mlts")},
                              {"S0.mlts", "Spp.mlts", "Mpar.mlts"}, lts.quantale())),
          st(lts, 3) {}

    std::vector<TermId> roots() {
        std::vector<TermId> out{m.bot(), m.top()};
        for (TermId b : m.base_terms()) out.push_back(b);
        return out;
    }
};

// --- paper-example reproduction ---------------------------------------------

void example_restriction() {
    Fixture f;
    ProcId p0 = parse_process_term(f.st, "p0");
    ProcId q0 = parse_process_term(f.st, "q0");
    ProcId np = parse_process_term(f.st, "nu a p0");
    ProcId nq = parse_process_term(f.st, "nu a q0");
    SolvedContext ctx(f.st, f.m, {p0, q0, np, nq}, f.roots());
    TermId d1 = ctx.metric(f.m, p0, q0);
    line("example-5.1  d(p0,q0) = s0 exactly", d1 == f.m.base_term("s0"), f.m.render(d1));
    TermId d2 = ctx.metric(f.m, np, nq);
    line("example-5.1  d(nu a p0, nu a q0) = bot exactly", d2 == f.m.bot(), f.m.render(d2));
}

void example_prefix() {
    Fixture f;
    Mlts mpre = Mlts::load(slurp("Spre.mlts"), "Spre.mlts", f.lts.quantale());
    ProcId bp = parse_process_term(f.st, "b.p0");
    ProcId bq = parse_process_term(f.st, "b.q0");
    std::vector<TermId> roots{mpre.bot(), mpre.top()};
    for (TermId b : mpre.base_terms()) roots.push_back(b);
    SolvedContext ctx(f.st, mpre, {bp, bq}, roots);
    TermId d = ctx.metric(mpre, bp, bq);
    auto bsucc = mpre.transitions(d, "b");
    auto asucc = mpre.transitions(d, "a");
    bool b_ok = bsucc.size() == 1;
    if (b_ok) {
        ctx.sim.extend({bsucc[0]});
        b_ok = ctx.sim.equiv(bsucc[0], mpre.base_term("s0"));
    }
    bool a_ok = asucc == std::vector<TermId>{mpre.bot()};
    line("example-5.2  d(b.p0,b.q0) steps to s0 on b", b_ok, mpre.render(d));
    line("example-5.2  d(b.p0,b.q0) steps to {bot} on a", a_ok);
}

void example_sum() {
    Fixture f;
    ProcId l = parse_process_term(f.st, "p0 + r0");
    ProcId r = parse_process_term(f.st, "q0 + r0");
    SolvedContext ctx(f.st, f.m, {l, r}, f.roots());
    TermId d = ctx.metric(f.m, l, r);
    line("example-5.3  d(p0+r0,q0+r0) = s0 exactly", d == f.m.base_term("s0"), f.m.render(d));
}

void example_parallel() {
    Fixture f;
    ProcId l = parse_process_term(f.st, "p0 | r0");
    ProcId r = parse_process_term(f.st, "q0 | r0");
    ProcId p0 = parse_process_term(f.st, "p0");
    SolvedContext ctx(f.st, f.m, {l, r, p0}, f.roots());
    TermId d = ctx.metric(f.m, l, r);
    line("example-5.4  d(p0|r0,q0|r0) = m0 (b to bot, a-chain of length 3)",
         d == f.m.base_term("m0"), f.m.render(d));
    CompatRelation compat(f.m, ctx.sim, f.st, ctx.universe, ctx.tl.terms);
    line("example-5.4  s0 is not p0-compatible",
         !compat.is_compatible(f.m.base_term("s0"), p0));
    line("example-5.4  s''0 is p0-compatible",
         compat.is_compatible(f.m.base_term("s''0"), p0));
}

void example_replication() {
    Fixture f; // K = 3
    ProcId bp = parse_process_term(f.st, "!p0");
    ProcId bq = parse_process_term(f.st, "!q0");
    SolvedContext ctx(f.st, f.m, {bp, bq}, f.roots());
    TermId d = ctx.metric(f.m, bp, bq);
    line("example-5.5  d(!p0,!q0) = bot with K=3", d == f.m.bot(), f.m.render(d));
}

// --- property-based acceptance ----------------------------------------------

void laws_on_closure_and_random() {
    Fixture f;
    {
        ClosureStats st = close_pre_mlts(f.m);
        Report rep = validate_mlts(f.m, st.representatives);
        line("prop-3.1  law suite on the bundled closure", st.complete && rep.ok(),
             std::to_string(st.representatives.size()) + " classes");
    }
    Rng rng(20260810);
    std::size_t failures = 0;
    for (int i = 0; i < 200; ++i) {
        auto q = i % 2 ? Quantale::diamond() : Quantale::boolean();
        Mlts m = random_mlts(rng, 5, 2, q);
        std::vector<TermId> roots{m.bot(), m.top()};
        for (TermId b : m.base_terms()) roots.push_back(b);
        Report rep = validate_mlts(m, m.transition_closure(roots), 16, 6);
        if (!rep.ok()) ++failures;
    }
    line("prop-3.1  law suite on 200 random systems (boolean + diamond)", failures == 0,
         std::to_string(200 - failures) + "/200");
}

void characterization_and_oracle() {
    Rng rng(424242);
    std::size_t iff_bad = 0, family_bad = 0, done = 0;
    while (done < 200) {
        auto q = done % 2 ? Quantale::diamond() : Quantale::boolean();
        ProcessLts lts = random_lts(rng, 3, 2, q, ImmediatePolicy::Liberal);
        Mlts m = random_mlts(rng, 2, 2, q);
        std::vector<TermId> roots{m.bot(), m.top()};
        for (TermId b : m.base_terms()) roots.push_back(b);
        auto uni = m.transition_closure(roots);
        if (uni.size() > 4) continue; // stay inside the oracle guard
        auto fam = param_bisim_family(lts, m, uni);
        auto oracle = brute_force_family(lts, m, uni);
        for (std::size_t k = 0; k < uni.size(); ++k)
            if (!(fam.rel[k] == oracle.rel[k])) ++family_bad;
        SimPreorder sim(m, uni);
        for (std::size_t p = 0; p < lts.num_states(); ++p)
            for (std::size_t s = 0; s < lts.num_states(); ++s) {
                TermId d = contextual_metric(m, sim, fam, p, s);
                for (TermId sv : uni)
                    if (sim.leq(d, sv) != fam.contains(sv, p, s)) ++iff_bad;
            }
        ++done;
    }
    line("prop-3.9  d(p,q) <= s iff p ~_s q on 200 random instances", iff_bad == 0);
    line("prop-3.9  solver family equals brute-force family exactly", family_bad == 0);
}

void metric_theorem() {
    Fixture f;
    bool fixtures_ok = true;
    {
        auto uni = f.m.transition_closure(f.roots());
        fixtures_ok = metric_axiom_check(f.lts, f.m, uni).ok();
        ProcessLts primed = ProcessLts::load_merged({slurp("Pp.lts"), slurp("Qp.lts")},
                                                    {"Pp.lts", "Qp.lts"});
        Mlts m2 = Mlts::load(slurp("S0.mlts"), "S0.mlts", primed.quantale());
        std::vector<TermId> roots{m2.bot(), m2.top()};
        for (TermId b : m2.base_terms()) roots.push_back(b);
        fixtures_ok = fixtures_ok &&
                      metric_axiom_check(primed, m2, m2.transition_closure(roots)).ok();
    }
    line("metric-theorem  axioms on the bundled systems", fixtures_ok);

    Rng rng(7777);
    std::size_t failures = 0;
    for (int i = 0; i < 100; ++i) {
        // the theorem assumes the immediate distance is a pseudometric;
        // the canonical policy always is (the liberal one is not in general)
        auto q = Quantale::boolean();
        ProcessLts lts = random_lts(rng, 4, 2, q, ImmediatePolicy::Canonical);
        Mlts m = random_mlts(rng, 3, 2, q);
        std::vector<TermId> roots{m.bot(), m.top()};
        for (TermId b : m.base_terms()) roots.push_back(b);
        if (!metric_axiom_check(lts, m, m.transition_closure(roots)).ok()) ++failures;
    }
    line("metric-theorem  axioms on 100 random instances", failures == 0,
         std::to_string(100 - failures) + "/100");
}

void bisimilarity_as_cbm() {
    Rng rng(314159);
    std::size_t failures = 0;
    for (int i = 0; i < 200; ++i) {
        auto q = Quantale::boolean();
        ProcessLts lts = random_lts(rng, 8, 2, q, ImmediatePolicy::Canonical);
        Mlts vm = quantale_as_mlts(q, lts.label_names());
        std::vector<TermId> roots{vm.bot(), vm.top()};
        for (TermId b : vm.base_terms()) roots.push_back(b);
        auto uni = vm.transition_closure(roots);
        auto fam = param_bisim_family(lts, vm, uni);
        SimPreorder sim(vm, uni);
        auto blocks = strong_bisim(lts);
        for (std::size_t p = 0; p < lts.num_states(); ++p)
            for (std::size_t s = 0; s < lts.num_states(); ++s) {
                TermId d = contextual_metric(vm, sim, fam, p, s);
                bool zero = sim.equiv(d, vm.bot());
                if (zero != (blocks[p] == blocks[s])) ++failures;
            }
    }
    line("sec-4.1  boolean-quantale distance is bot iff bisimilar (200 random systems)",
         failures == 0);
}

void behavioural_agreement() {
    Rng rng(626262);
    std::size_t style_bad = 0, cbm_bad = 0;
    for (int i = 0; i < 100; ++i) {
        std::shared_ptr<const Quantale> q =
            i % 3 == 0 ? Quantale::boolean() : Quantale::chain(3 + i % 4);
        ProcessLts lts = random_lts(rng, 5, 2, q, ImmediatePolicy::Canonical);
        if (q->kind() != Quantale::Kind::Boolean) {
            // random symmetric D table over the chain
            const std::size_t n = lts.num_states();
            std::vector<QValue> tab(n * n, q->bottom());
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b) {
                    QValue v = q->element(rng.below(q->carrier_size()));
                    tab[a * n + b] = v;
                    tab[b * n + a] = v;
                }
            lts.set_table(std::move(tab));
        }
        MetricTable h = behavioural_metric(lts, MetricStyle::Hausdorff);
        MetricTable pm = behavioural_metric(lts, MetricStyle::PerMove);
        for (std::size_t p = 0; p < h.n; ++p)
            for (std::size_t s = 0; s < h.n; ++s)
                if (!q->equal(h.at(p, s), pm.at(p, s))) ++style_bad;
        if (!behavioural_as_cbm(lts, h).ok()) ++cbm_bad;
    }
    line("sec-4.2  per-move and Hausdorff metrics agree on totally ordered quantales",
         style_bad == 0);
    line("sec-4.2  behavioural metric agrees with the contextual map (down d = M)",
         cbm_bad == 0);
}

void environment_embedding() {
    Rng rng(515151);
    std::size_t failures = 0, implications = 0;
    for (int i = 0; i < 50; ++i) {
        auto q = Quantale::boolean();
        ProcessLts env = random_lts(rng, 4, 2, q, ImmediatePolicy::CommonAction, "e");
        ProcessLts procs = random_lts(rng, 4, 2, q, ImmediatePolicy::Liberal, "p");
        Embedding emb = embed_environment(env, q);
        if (!verify_embedding(env, emb)) ++failures;
        auto epb = epb_family(procs, env);
        std::vector<TermId> roots = emb.state_term;
        roots.push_back(emb.mlts.bot());
        roots.push_back(emb.mlts.top());
        auto uni = emb.mlts.transition_closure(roots);
        auto fam = param_bisim_family(procs, emb.mlts, uni);
        SimPreorder sim(emb.mlts, uni);
        for (std::size_t e = 0; e < env.num_states(); ++e)
            for (std::size_t p = 0; p < procs.num_states(); ++p)
                for (std::size_t s = 0; s < procs.num_states(); ++s) {
                    if (!epb[e].get(p, s)) continue;
                    ++implications;
                    TermId d = contextual_metric(emb.mlts, sim, fam, p, s);
                    if (!sim.leq(d, emb.state_term[e])) ++failures;
                }
    }
    line("sec-4.3  EPB at e implies d(p,q) <= s_e in the embedding (50 random environments)",
         failures == 0, std::to_string(implications) + " implications");
}

void composition_verifiers() {
    Rng rng(898989);
    std::size_t violations = 0, runs = 0, gated = 0;
    for (int i = 0; i < 40; ++i) {
        auto q = Quantale::boolean();
        ImmediatePolicy pol = i % 4 == 0 ? ImmediatePolicy::Liberal : ImmediatePolicy::Canonical;
        ProcessLts base = random_lts(rng, 3, 2, q, pol);
        Mlts m = random_mlts(rng, 3, 2, q);
        ProcStore st(base, 3);
        std::vector<ProcId> procs;
        for (ProcessLts::State s = 0; s < base.num_states(); ++s) procs.push_back(st.atom(s));
        std::vector<TermId> roots{m.bot(), m.top()};
        for (TermId b : m.base_terms()) roots.push_back(b);
        for (std::string opname : {"restrict:a", "prefix:a", "sum", "par", "bang"}) {
            OperatorId op = OperatorId::parse(opname, base);
            Report rep = verify_composition(st, m, op, procs, roots);
            bool pre_skip = false;
            for (const auto& e : rep.entries)
                if (e.status == CheckStatus::Skip &&
                    e.id.find("precondition") != std::string::npos)
                    pre_skip = true;
            if (pre_skip) {
                ++gated;
                continue;
            }
            ++runs;
            if (!rep.ok()) ++violations;
        }
    }
    line("sec-5  operator verifiers report zero violations on random instances",
         violations == 0,
         std::to_string(runs) + " runs, " + std::to_string(gated) + " precondition-gated");

    // fixture-scale reproduction of every operator bound
    Fixture f;
    std::vector<ProcId> procs{parse_process_term(f.st, "p0"), parse_process_term(f.st, "q0"),
                              parse_process_term(f.st, "r0")};
    bool all_ok = true;
    for (std::string opname : {"restrict:a", "prefix:b", "sum", "par", "bang"}) {
        OperatorId op = OperatorId::parse(opname, f.lts);
        Report rep = verify_composition(f.st, f.m, op, procs, f.roots());
        all_ok = all_ok && rep.ok();
    }
    line("sec-5  operator verifiers over the bundled example universe", all_ok);
}

} // namespace

int main() {
    Bounds b;
    std::cout << "bounds in force: " << b.echo() << std::endl;
    auto t0 = std::chrono::steady_clock::now();
    try {
        example_restriction();
        example_prefix();
        example_sum();
        example_parallel();
        example_replication();
        laws_on_closure_and_random();
        characterization_and_oracle();
        metric_theorem();
        bisimilarity_as_cbm();
        behavioural_agreement();
        environment_embedding();
        composition_verifiers();
    } catch (const std::exception& e) {
        std::cout << "FAIL  unexpected exception: " << e.what() << std::endl;
        ++g_failures;
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    std::cout << (g_failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE OK") << " (" << ms << " ms)"
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
