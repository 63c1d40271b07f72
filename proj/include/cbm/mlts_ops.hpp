#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cbm/mlts.hpp"

namespace cbm {

struct ClosureStats {
    std::vector<TermId> representatives; // one canonical term per equivalence class
    std::size_t explored_terms = 0;      // size of the closed sim universe
    std::size_t rounds = 0;
    bool complete = false; // true when a round added no new class
};

/// Bounded closure of a pre-MLTS under the symbolic constructors: starting
/// from Bot, Top and the base states, keeps applying binary meet, join and
/// plus to class representatives, quotienting by mutual similarity after
/// each round, until no new class appears or a bound is hit. Wider
/// meets/joins are reachable by nesting up to behavioural equivalence, so
/// binary generation is enough to enumerate classes.
inline ClosureStats close_pre_mlts(const Mlts& m, std::size_t max_rounds = 16) {
    ClosureStats st;
    std::vector<TermId> seeds = {m.bot(), m.top()};
    for (TermId b : m.base_terms()) seeds.push_back(b);
    SimPreorder sim(m, m.transition_closure(seeds));

    auto representatives = [&]() {
        std::vector<TermId> reps;
        for (TermId t : sim.universe())
            if (sim.canonical(t) == t) reps.push_back(t);
        return reps;
    };

    std::vector<TermId> reps = representatives();
    for (st.rounds = 1; st.rounds <= max_rounds; ++st.rounds) {
        std::vector<TermId> batch;
        for (std::size_t i = 0; i < reps.size(); ++i)
            for (std::size_t j = i + 1; j < reps.size(); ++j) {
                batch.push_back(m.store().meet({reps[i], reps[j]}));
                batch.push_back(m.store().join({reps[i], reps[j]}));
            }
        for (std::size_t i = 0; i < reps.size(); ++i)
            for (std::size_t j = i; j < reps.size(); ++j)
                batch.push_back(m.store().plus(reps[i], reps[j]));
        std::sort(batch.begin(), batch.end());
        batch.erase(std::unique(batch.begin(), batch.end()), batch.end());
        sim.extend(batch);
        std::vector<TermId> next = representatives();
        if (next.size() == reps.size()) {
            reps = std::move(next);
            st.complete = true;
            break;
        }
        reps = std::move(next);
    }
    st.representatives = reps;
    st.explored_terms = sim.universe().size();
    return st;
}

/// Prop-style law suite for an MLTS over a transition-closed universe:
/// preorder laws, extremality of Bot/Top, meets as greatest lower bounds,
/// joins as least upper bounds, distributivity of plus over meet, and the
/// monoid laws of plus up to mutual similarity. Findings are report
/// entries; the universe is extended internally with the composite terms
/// each clause mentions.
inline Report validate_mlts(const Mlts& m, std::vector<TermId> universe,
                            std::size_t max_universe = 24, std::size_t sample_triples = 10) {
    Report rep;
    rep.command = "validate-mlts";
    if (universe.size() > max_universe) {
        universe.resize(max_universe);
        rep.note("universe truncated to " + std::to_string(max_universe) + " terms");
    }
    {
        bool has_bot = false, has_top = false;
        for (TermId t : universe) {
            has_bot = has_bot || t == m.bot();
            has_top = has_top || t == m.top();
        }
        if (!has_bot) universe.push_back(m.bot());
        if (!has_top) universe.push_back(m.top());
    }
    universe = m.transition_closure(universe);
    SimPreorder sim(m, universe);
    auto R = [&](TermId t) { return m.render(t); };

    // 1. preorder
    {
        bool refl = true, trans = true;
        std::string w1, w2;
        for (TermId a : universe)
            if (refl && !sim.leq(a, a)) { refl = false; w1 = R(a); }
        for (TermId a : universe)
            for (TermId b : universe)
                for (TermId c : universe)
                    if (trans && sim.leq(a, b) && sim.leq(b, c) && !sim.leq(a, c)) {
                        trans = false;
                        w2 = "(" + R(a) + ", " + R(b) + ", " + R(c) + ")";
                    }
        rep.add("mlts.1.preorder.reflexive", refl ? CheckStatus::Pass : CheckStatus::Fail, w1);
        rep.add("mlts.1.preorder.transitive", trans ? CheckStatus::Pass : CheckStatus::Fail, w2);
    }
    // 2. extremality
    {
        bool ok = true;
        std::string w;
        for (TermId a : universe)
            if (!sim.leq(m.bot(), a) || !sim.leq(a, m.top())) {
                ok = false;
                w = R(a);
                break;
            }
        rep.add("mlts.2.bot-top-extremal", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }

    // explicit subsets: all pairs, then the first few triples
    std::vector<std::vector<TermId>> subsets;
    for (std::size_t i = 0; i < universe.size(); ++i)
        for (std::size_t j = i + 1; j < universe.size(); ++j)
            subsets.push_back({universe[i], universe[j]});
    {
        std::size_t budget = sample_triples;
        for (std::size_t i = 0; i < universe.size() && budget; ++i)
            for (std::size_t j = i + 1; j < universe.size() && budget; ++j)
                for (std::size_t k = j + 1; k < universe.size() && budget; ++k) {
                    subsets.push_back({universe[i], universe[j], universe[k]});
                    --budget;
                }
    }

    // 3./4. meet is glb, join is lub. The source text states clause 4 for
    // meet; the least-upper-bound reading for join is checked here and the
    // discrepancy noted.
    {
        bool glb_ok = true, lub_ok = true;
        std::string gw, lw;
        for (const auto& S : subsets) {
            TermId mt = m.store().meet(S);
            TermId jt = m.store().join(S);
            sim.extend({mt, jt});
            for (TermId x : S) {
                if (glb_ok && !sim.leq(mt, x)) { glb_ok = false; gw = R(mt) + " not below " + R(x); }
                if (lub_ok && !sim.leq(x, jt)) { lub_ok = false; lw = R(jt) + " not above " + R(x); }
            }
            for (TermId b : universe) {
                bool lower = true, upper = true;
                for (TermId x : S) {
                    lower = lower && sim.leq(b, x);
                    upper = upper && sim.leq(x, b);
                }
                if (glb_ok && lower && !sim.leq(b, mt)) {
                    glb_ok = false;
                    gw = R(b) + " is a lower bound not below " + R(mt);
                }
                if (lub_ok && upper && !sim.leq(jt, b)) {
                    lub_ok = false;
                    lw = R(b) + " is an upper bound not above " + R(jt);
                }
            }
        }
        rep.add("mlts.3.meet-is-glb", glb_ok ? CheckStatus::Pass : CheckStatus::Fail, gw);
        rep.add("mlts.4.join-is-lub", lub_ok ? CheckStatus::Pass : CheckStatus::Fail, lw);
        rep.note("clause 4 checked as least-upper-bound of join; the statement's 'meet' on the "
                 "upper-bound side is read as a typo");
    }

    // 5. plus distributes over meet (up to mutual similarity)
    {
        bool ok = true;
        std::string w;
        std::size_t budget = sample_triples * 4;
        for (const auto& S : subsets) {
            if (!budget) break;
            for (TermId e : universe) {
                if (!budget) break;
                --budget;
                TermId lhs = m.store().plus(e, m.store().meet(S));
                std::vector<TermId> shifted;
                for (TermId x : S) shifted.push_back(m.store().plus(e, x));
                TermId rhs = m.store().meet(std::move(shifted));
                sim.extend({lhs, rhs});
                if (!sim.equiv(lhs, rhs)) {
                    ok = false;
                    w = R(lhs) + " !~ " + R(rhs);
                    break;
                }
            }
            if (!ok) break;
        }
        rep.add("mlts.5.plus-distributes-over-meet", ok ? CheckStatus::Pass : CheckStatus::Fail,
                w);
    }
    // 6. unit
    {
        bool ok = true;
        std::string w;
        for (TermId a : universe) {
            TermId t = m.store().plus(a, m.bot());
            sim.extend({t});
            if (!sim.equiv(t, a)) {
                ok = false;
                w = R(a);
                break;
            }
        }
        rep.add("mlts.6.plus-unit", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    // 7. commutativity (normalization sorts summands, so this is structural)
    {
        bool ok = true;
        std::string w;
        for (TermId a : universe)
            for (TermId b : universe)
                if (m.store().plus(a, b) != m.store().plus(b, a)) {
                    ok = false;
                    w = "(" + R(a) + ", " + R(b) + ")";
                }
        rep.add("mlts.7.plus-commutative", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    // 8. associativity up to mutual similarity
    {
        bool ok = true;
        std::string w;
        std::size_t budget = sample_triples * 4;
        for (TermId a : universe) {
            for (TermId b : universe) {
                for (TermId c : universe) {
                    if (!budget) break;
                    --budget;
                    TermId lhs = m.store().plus(m.store().plus(a, b), c);
                    TermId rhs = m.store().plus(a, m.store().plus(b, c));
                    sim.extend({lhs, rhs});
                    if (!sim.equiv(lhs, rhs)) {
                        ok = false;
                        w = "(" + R(a) + ", " + R(b) + ", " + R(c) + ")";
                        break;
                    }
                }
                if (!ok || !budget) break;
            }
            if (!ok || !budget) break;
        }
        rep.add("mlts.8.plus-associative", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    // 9. partial order => quantale on the nose; otherwise quotient classes
    {
        bool antisym = true;
        std::size_t classes = 0;
        for (TermId a : universe)
            if (sim.canonical(a) == a) ++classes;
        antisym = classes == universe.size();
        if (antisym)
            rep.add("mlts.9.partial-order", CheckStatus::Pass, "order is antisymmetric");
        else
            rep.add("mlts.9.partial-order", CheckStatus::Skip,
                    "quotient by mutual similarity has " + std::to_string(classes) +
                        " classes; quantale laws hold on representatives");
    }
    return rep;
}

/// Interprets a (finite-carrier) quantale as an MLTS: one base state per
/// carrier element with self loops on every label and the identity as the
/// value map, plus the transitionless Top. Eq. q_leq matches the
/// simulation order on non-top states.
inline Mlts quantale_as_mlts(std::shared_ptr<const Quantale> q,
                             const std::vector<std::string>& labels, Bounds bounds = {}) {
    if (!q->finite_carrier())
        throw ContractError("quantale_as_mlts needs a finite (or sampled) carrier");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < q->carrier_size(); ++i)
        names.push_back("q_" + q->to_string(q->element(i)));
    Mlts m(names, labels, q, bounds);
    for (std::size_t i = 0; i < q->carrier_size(); ++i) {
        m.set_down(names[i], q->element(i));
        for (const auto& l : labels) m.add_transition(names[i], l, names[i]);
    }
    return m;
}

/// An environment LTS embedded as an MLTS over the boolean quantale: live
/// environment states become base states with value bot and the same
/// transition structure; terminated environment states are represented by
/// Top (which is also terminated, so mutual similarity still holds).
struct Embedding {
    Mlts mlts;
    std::vector<TermId> state_term; // env state id -> representing term
};

inline Embedding embed_environment(const ProcessLts& env,
                                   std::shared_ptr<const Quantale> q = nullptr) {
    if (!q) q = Quantale::boolean();
    if (q->kind() != Quantale::Kind::Boolean)
        throw ContractError("environment embeddings live over the boolean quantale");
    std::vector<std::string> names;
    std::vector<std::optional<std::uint32_t>> live_index(env.num_states());
    for (ProcessLts::State s = 0; s < env.num_states(); ++s)
        if (!env.terminated(s)) {
            live_index[s] = static_cast<std::uint32_t>(names.size());
            names.push_back("e_" + env.state_name(s));
        }
    Mlts m(names, env.label_names(), q);
    for (ProcessLts::State s = 0; s < env.num_states(); ++s) {
        if (!live_index[s]) continue;
        for (ProcessLts::Label l = 0; l < env.num_labels(); ++l)
            for (ProcessLts::State to : env.successors(s, l))
                m.add_transition("e_" + env.state_name(s), env.label_name(l),
                                 live_index[to] ? "e_" + env.state_name(to) : "top");
    }
    Embedding emb{std::move(m), {}};
    for (ProcessLts::State s = 0; s < env.num_states(); ++s)
        emb.state_term.push_back(live_index[s] ? emb.mlts.base_term("e_" + env.state_name(s))
                                               : emb.mlts.top());
    return emb;
}

/// Checks mutual strong similarity between every environment state and its
/// representing term (values ignored), replaying both simulation
/// directions on the embedding relation.
inline bool verify_embedding(const ProcessLts& env, const Embedding& emb) {
    const Mlts& m = emb.mlts;
    std::vector<TermId> universe = m.transition_closure(emb.state_term);
    std::map<TermId, std::size_t> tidx;
    for (std::size_t i = 0; i < universe.size(); ++i) tidx[universe[i]] = i;

    // sim_pt[e][i]: term universe[i] simulates env state e (matching e's moves)
    auto refine = [&](auto moves_small, auto moves_big, auto& rel) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t a = 0; a < rel.size(); ++a)
                for (std::size_t b = 0; b < rel[a].size(); ++b) {
                    if (!rel[a][b]) continue;
                    bool ok = true;
                    for (ProcessLts::Label l = 0; l < env.num_labels() && ok; ++l) {
                        for (auto sa : moves_small(a, l)) {
                            bool matched = false;
                            for (auto sb : moves_big(b, l))
                                if (rel[sa][sb]) {
                                    matched = true;
                                    break;
                                }
                            if (!matched) {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if (!ok) {
                        rel[a][b] = 0;
                        changed = true;
                    }
                }
        }
    };

    auto env_moves = [&](std::size_t e, ProcessLts::Label l) {
        std::vector<std::size_t> out;
        for (auto s : env.successors(static_cast<ProcessLts::State>(e), l)) out.push_back(s);
        return out;
    };
    auto term_moves = [&](std::size_t i, ProcessLts::Label l) {
        std::vector<std::size_t> out;
        for (TermId u : m.transitions(universe[i], l)) out.push_back(tidx.at(u));
        return out;
    };

    // env simulated by term
    std::vector<std::vector<char>> fwd(env.num_states(),
                                       std::vector<char>(universe.size(), 1));
    refine(env_moves, term_moves, fwd);
    // term simulated by env
    std::vector<std::vector<char>> bwd(universe.size(),
                                       std::vector<char>(env.num_states(), 1));
    refine(term_moves, env_moves, bwd);

    for (ProcessLts::State e = 0; e < env.num_states(); ++e) {
        std::size_t i = tidx.at(emb.state_term[e]);
        if (!fwd[e][i] || !bwd[i][e]) return false;
    }
    return true;
}

} // namespace cbm
