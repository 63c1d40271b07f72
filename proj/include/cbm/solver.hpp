#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cbm/lts.hpp"
#include "cbm/mlts.hpp"
#include "cbm/mlts_ops.hpp"
#include "cbm/report.hpp"

namespace cbm {

/// Symmetric relation over state pairs of one ProcessLts, as a bit matrix.
class PairRel {
public:
    PairRel() = default;
    PairRel(std::size_t n, bool full) : n_(n), bits_((n * n + 63) / 64, full ? ~0ull : 0ull) {}

    bool get(std::size_t p, std::size_t q) const {
        std::size_t i = p * n_ + q;
        return (bits_[i >> 6] >> (i & 63)) & 1;
    }
    void set(std::size_t p, std::size_t q) {
        std::size_t i = p * n_ + q;
        bits_[i >> 6] |= 1ull << (i & 63);
    }
    void clear(std::size_t p, std::size_t q) {
        std::size_t i = p * n_ + q;
        bits_[i >> 6] &= ~(1ull << (i & 63));
    }
    std::size_t size() const { return n_; }
    bool operator==(const PairRel& o) const {
        if (n_ != o.n_) return false;
        // trailing garbage bits are never set
        return bits_ == o.bits_;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (std::size_t p = 0; p < n_; ++p)
            for (std::size_t q = 0; q < n_; ++q) c += get(p, q);
        return c;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// The greatest parametrized bisimulation over a transition-closed term
/// universe: one relation R_s per term, the largest family such that
/// members have immediate distance at most down(s) and every move of s
/// imposes the two-sided matching clauses.
struct ParamBisimFamily {
    std::vector<TermId> universe;
    std::unordered_map<TermId, std::size_t> index;
    std::vector<PairRel> rel;
    std::size_t iterations = 0;

    bool contains(TermId s, std::size_t p, std::size_t q) const {
        auto it = index.find(s);
        if (it == index.end()) throw ContractError("term outside the family universe");
        return rel[it->second].get(p, q);
    }
};

/// The process LTS and the MLTS must speak the same label alphabet; this
/// maps MLTS label ids to process-LTS label ids by name.
inline std::vector<ProcessLts::Label> align_labels(const ProcessLts& lts, const Mlts& m) {
    if (lts.num_labels() != m.num_labels())
        throw ContractError("process LTS and MLTS label alphabets differ");
    std::vector<ProcessLts::Label> map(m.num_labels());
    for (Mlts::Label l = 0; l < m.num_labels(); ++l)
        map[l] = lts.label(m.label_names()[l]);
    return map;
}

inline ParamBisimFamily param_bisim_family(const ProcessLts& lts, const Mlts& m,
                                           const std::vector<TermId>& universe) {
    ParamBisimFamily fam;
    fam.universe = universe;
    for (std::size_t i = 0; i < universe.size(); ++i) fam.index.emplace(universe[i], i);

    const std::size_t np = lts.num_states();
    const Quantale& q = *lts.quantale();
    const auto lmap = align_labels(lts, m);

    // per-term successor lists inside the universe
    std::vector<std::vector<std::vector<std::size_t>>> succ(universe.size());
    for (std::size_t k = 0; k < universe.size(); ++k) {
        succ[k].resize(m.num_labels());
        for (Mlts::Label l = 0; l < m.num_labels(); ++l)
            for (TermId u : m.transitions(universe[k], l)) {
                auto it = fam.index.find(u);
                if (it == fam.index.end())
                    throw ContractError("universe not transition-closed at " +
                                        m.render(universe[k]));
                succ[k][l].push_back(it->second);
            }
    }

    fam.rel.assign(universe.size(), PairRel(np, false));
    for (std::size_t k = 0; k < universe.size(); ++k) {
        QValue dk = m.down(universe[k]);
        for (std::size_t p = 0; p < np; ++p)
            for (std::size_t sq = 0; sq < np; ++sq)
                if (q.leq(lts.immediate_distance(static_cast<ProcessLts::State>(p),
                                                 static_cast<ProcessLts::State>(sq)),
                          dk))
                    fam.rel[k].set(p, sq);
    }

    auto half_matched = [&](std::size_t kk, std::size_t from, std::size_t to,
                            ProcessLts::Label l) {
        for (auto fp : lts.successors(static_cast<ProcessLts::State>(from), l)) {
            bool ok = false;
            for (auto tq : lts.successors(static_cast<ProcessLts::State>(to), l))
                if (fam.rel[kk].get(fp, tq)) {
                    ok = true;
                    break;
                }
            if (!ok) return false;
        }
        return true;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        ++fam.iterations;
        for (std::size_t k = 0; k < universe.size(); ++k)
            for (std::size_t p = 0; p < np; ++p)
                for (std::size_t sq = 0; sq < np; ++sq) {
                    if (!fam.rel[k].get(p, sq)) continue;
                    bool ok = true;
                    for (Mlts::Label l = 0; l < m.num_labels() && ok; ++l)
                        for (std::size_t kk : succ[k][l]) {
                            if (!half_matched(kk, p, sq, lmap[l]) ||
                                !half_matched(kk, sq, p, lmap[l])) {
                                ok = false;
                                break;
                            }
                        }
                    if (!ok) {
                        fam.rel[k].clear(p, sq);
                        changed = true;
                    }
                }
    }
    return fam;
}

/// p ~_s q, with the universe taken as the transition closure of {s}.
inline bool param_bisim(const ProcessLts& lts, const Mlts& m, ProcessLts::State p,
                        ProcessLts::State q, TermId s) {
    auto universe = m.transition_closure({s});
    return param_bisim_family(lts, m, universe).contains(s, p, q);
}

/// The contextual bisimilarity map at (p, q) relative to a universe: the
/// meet of the satisfying terms, reduced to minimal representatives and
/// canonicalized inside the sim preorder. The result itself satisfies
/// p ~_result q and is below every satisfying term.
inline TermId contextual_metric(const Mlts& m, SimPreorder& sim, const ParamBisimFamily& fam,
                                std::size_t p, std::size_t q) {
    std::vector<TermId> sat;
    for (std::size_t k = 0; k < fam.universe.size(); ++k)
        if (fam.rel[k].get(p, q)) sat.push_back(fam.universe[k]);
    if (sat.empty())
        throw ContractError("no satisfying term: universe must contain top");
    // keep only minimal terms, one per mutual-similarity class
    std::vector<TermId> minimal;
    for (TermId s : sat) {
        bool is_min = true;
        for (TermId t : sat)
            if (sim.leq(t, s) && !sim.leq(s, t)) {
                is_min = false;
                break;
            }
        if (is_min) minimal.push_back(sim.canonical(s));
    }
    std::sort(minimal.begin(), minimal.end());
    minimal.erase(std::unique(minimal.begin(), minimal.end()), minimal.end());
    TermId t = m.store().meet(std::move(minimal));
    sim.extend({t});
    return sim.canonical(t);
}

/// Coarsest strong-bisimulation partition (signature refinement); block id
/// per state. Ignores the immediate metric.
inline std::vector<std::uint32_t> strong_bisim(const ProcessLts& lts) {
    const std::size_t n = lts.num_states();
    std::vector<std::uint32_t> block(n, 0);
    for (;;) {
        std::map<std::pair<std::uint32_t, std::vector<std::pair<std::uint32_t, std::uint32_t>>>,
                 std::uint32_t>
            sig_map;
        std::vector<std::uint32_t> next(n);
        for (std::size_t p = 0; p < n; ++p) {
            std::vector<std::pair<std::uint32_t, std::uint32_t>> sig;
            for (ProcessLts::Label l = 0; l < lts.num_labels(); ++l)
                for (auto to : lts.successors(static_cast<ProcessLts::State>(p), l))
                    sig.emplace_back(l, block[to]);
            std::sort(sig.begin(), sig.end());
            sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
            auto key = std::make_pair(block[p], std::move(sig));
            auto it = sig_map.find(key);
            if (it == sig_map.end())
                it = sig_map.emplace(std::move(key), static_cast<std::uint32_t>(sig_map.size()))
                         .first;
            next[p] = it->second;
        }
        if (next == block) return block;
        block = std::move(next);
    }
}

/// Checks the pseudometric axioms of the contextual bisimilarity map over
/// every process pair and triple: bot on the diagonal, symmetry, and the
/// triangle inequality against the symbolic sum of the two legs. Whether
/// the map lies below the sum is decided through the parametrized
/// bisimulation at the sum term (the characterization d <= s iff p ~_s q):
/// the universe-relative meet alone can over-approximate the map at terms
/// outside the declared universe.
inline Report metric_axiom_check(const ProcessLts& lts, const Mlts& m,
                                 const std::vector<TermId>& universe) {
    Report rep;
    rep.command = "metric-axiom-check";
    ParamBisimFamily fam = param_bisim_family(lts, m, universe);
    SimPreorder sim(m, universe);
    const std::size_t n = lts.num_states();

    std::vector<TermId> metric(n * n);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
            metric[p * n + q] = contextual_metric(m, sim, fam, p, q);

    bool diag = true, sym = true, tri = true;
    std::string wd, ws, wt;
    for (std::size_t p = 0; p < n && diag; ++p)
        if (!sim.equiv(metric[p * n + p], m.bot())) {
            diag = false;
            wd = lts.state_name(static_cast<ProcessLts::State>(p));
        }
    for (std::size_t p = 0; p < n && sym; ++p)
        for (std::size_t q = 0; q < n && sym; ++q)
            if (metric[p * n + q] != metric[q * n + p]) {
                sym = false;
                ws = "(" + lts.state_name(p) + ", " + lts.state_name(q) + ")";
            }

    // one family over the universe extended with every needed sum term
    std::vector<TermId> sums;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
            for (std::size_t r = 0; r < n; ++r)
                sums.push_back(m.store().plus(metric[p * n + q], metric[q * n + r]));
    std::sort(sums.begin(), sums.end());
    sums.erase(std::unique(sums.begin(), sums.end()), sums.end());
    std::vector<TermId> extended = universe;
    extended.insert(extended.end(), sums.begin(), sums.end());
    ParamBisimFamily tri_fam = param_bisim_family(lts, m, m.transition_closure(extended));

    for (std::size_t p = 0; p < n && tri; ++p)
        for (std::size_t q = 0; q < n && tri; ++q)
            for (std::size_t r = 0; r < n && tri; ++r) {
                TermId sum = m.store().plus(metric[p * n + q], metric[q * n + r]);
                if (!tri_fam.contains(sum, p, r)) {
                    tri = false;
                    wt = "(" + lts.state_name(p) + ", " + lts.state_name(q) + ", " +
                         lts.state_name(r) + ")";
                }
            }
    rep.add("metric.diagonal-bot", diag ? CheckStatus::Pass : CheckStatus::Fail, wd);
    rep.add("metric.symmetry", sym ? CheckStatus::Pass : CheckStatus::Fail, ws);
    rep.add("metric.triangle", tri ? CheckStatus::Pass : CheckStatus::Fail, wt);
    return rep;
}

// ---------------------------------------------------------------------------
// behavioural metrics (quantale-valued tables)

enum class MetricStyle { PerMove, Hausdorff };

struct MetricTable {
    MetricStyle style = MetricStyle::Hausdorff;
    std::size_t n = 0;
    std::vector<QValue> value; // row major
    std::size_t iterations = 0;
    bool meets_achieved = true; // per-move witnesses exist (always on total orders)

    const QValue& at(std::size_t p, std::size_t q) const { return value.at(p * n + q); }
};

/// Least behavioural metric. The Hausdorff style runs Kleene iteration on
/// the sup-inf functional seeded from D; the per-move style solves one
/// matching game per candidate threshold and takes pointwise meets of the
/// passing thresholds. The two agree on totally ordered quantales over
/// image-finite systems.
inline MetricTable behavioural_metric(const ProcessLts& lts, MetricStyle style,
                                      std::size_t max_iterations = 10000) {
    const Quantale& q = *lts.quantale();
    const std::size_t n = lts.num_states();
    MetricTable t;
    t.style = style;
    t.n = n;

    if (style == MetricStyle::Hausdorff) {
        std::vector<QValue> cur(n * n, q.bottom());
        for (;;) {
            if (++t.iterations > max_iterations)
                throw ResourceError("iterations", "behavioural metric did not converge");
            std::vector<QValue> next(n * n, q.bottom());
            bool changed = false;
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t s = 0; s < n; ++s) {
                    std::vector<QValue> parts{
                        lts.immediate_distance(static_cast<ProcessLts::State>(p),
                                               static_cast<ProcessLts::State>(s))};
                    auto one_side = [&](std::size_t a, std::size_t b) {
                        for (ProcessLts::Label l = 0; l < lts.num_labels(); ++l) {
                            auto moves = lts.successors(static_cast<ProcessLts::State>(a), l);
                            if (moves.empty()) continue;
                            std::vector<QValue> sup;
                            for (auto ap : moves) {
                                std::vector<QValue> inf;
                                for (auto bp :
                                     lts.successors(static_cast<ProcessLts::State>(b), l))
                                    inf.push_back(cur[ap * n + bp]); // table stays symmetric
                                sup.push_back(q.meet(inf)); // empty inf = top
                            }
                            parts.push_back(q.join(sup));
                        }
                    };
                    one_side(p, s);
                    one_side(s, p);
                    next[p * n + s] = q.join(parts);
                    if (!q.equal(next[p * n + s], cur[p * n + s])) changed = true;
                }
            cur = std::move(next);
            if (!changed) break;
        }
        t.value = std::move(cur);
        return t;
    }

    // per-move: candidate thresholds are the immediate-distance values
    // closed under pairwise meet/join (already closed on total orders)
    std::vector<QValue> cands{q.bottom(), q.top()};
    auto push_unique = [&](const QValue& v) {
        for (const auto& c : cands)
            if (q.equal(c, v)) return false;
        cands.push_back(v);
        return true;
    };
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t s = 0; s < n; ++s)
            push_unique(lts.immediate_distance(static_cast<ProcessLts::State>(p),
                                               static_cast<ProcessLts::State>(s)));
    for (bool grew = true; grew;) {
        grew = false;
        if (cands.size() > 64)
            throw ResourceError("max_reachable", "per-move threshold grid exceeds limit");
        std::vector<QValue> snapshot = cands;
        for (std::size_t i = 0; i < snapshot.size(); ++i)
            for (std::size_t j = i + 1; j < snapshot.size(); ++j) {
                grew |= push_unique(q.meet({snapshot[i], snapshot[j]}));
                grew |= push_unique(q.join({snapshot[i], snapshot[j]}));
            }
    }

    auto game = [&](const QValue& v) {
        PairRel rel(n, false);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t s = 0; s < n; ++s)
                if (q.leq(lts.immediate_distance(static_cast<ProcessLts::State>(p),
                                                 static_cast<ProcessLts::State>(s)),
                          v))
                    rel.set(p, s);
        bool changed = true;
        while (changed) {
            changed = false;
            ++t.iterations;
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t s = 0; s < n; ++s) {
                    if (!rel.get(p, s)) continue;
                    bool ok = true;
                    for (ProcessLts::Label l = 0; l < lts.num_labels() && ok; ++l) {
                        auto match = [&](std::size_t a, std::size_t b) {
                            for (auto ap : lts.successors(static_cast<ProcessLts::State>(a), l)) {
                                bool m = false;
                                for (auto bp :
                                     lts.successors(static_cast<ProcessLts::State>(b), l))
                                    if (rel.get(ap, bp)) { // relation stays symmetric
                                        m = true;
                                        break;
                                    }
                                if (!m) return false;
                            }
                            return true;
                        };
                        ok = match(p, s) && match(s, p);
                    }
                    if (!ok) {
                        rel.clear(p, s);
                        changed = true;
                    }
                }
        }
        return rel;
    };

    std::vector<PairRel> per_cand;
    per_cand.reserve(cands.size());
    for (const auto& v : cands) per_cand.push_back(game(v));

    t.value.assign(n * n, q.top());
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t s = 0; s < n; ++s) {
            std::vector<QValue> passing;
            for (std::size_t c = 0; c < cands.size(); ++c)
                if (per_cand[c].get(p, s)) passing.push_back(cands[c]);
            QValue v = q.meet(passing); // empty = top
            t.value[p * n + s] = v;
            // witness achievement: the meet itself must pass the game
            bool achieved = passing.empty();
            for (std::size_t c = 0; c < cands.size() && !achieved; ++c)
                if (q.equal(cands[c], v) && per_cand[c].get(p, s)) achieved = true;
            t.meets_achieved = t.meets_achieved && achieved;
        }
    return t;
}

/// Pseudometric axioms of a metric table, within the quantale's tolerance.
inline Report validate_metric_table(const ProcessLts& lts, const MetricTable& t) {
    Report rep;
    rep.command = "validate-metric-table";
    const Quantale& q = *lts.quantale();
    const std::size_t n = t.n;
    bool diag = true, sym = true, tri = true;
    std::string wd, ws, wt;
    for (std::size_t p = 0; p < n; ++p) {
        if (diag && !q.equal(t.at(p, p), q.bottom())) { diag = false; wd = lts.state_name(p); }
        for (std::size_t s = 0; s < n; ++s) {
            if (sym && !q.equal(t.at(p, s), t.at(s, p))) {
                sym = false;
                ws = "(" + lts.state_name(p) + ", " + lts.state_name(s) + ")";
            }
            for (std::size_t r = 0; r < n; ++r)
                if (tri && !q.leq(t.at(p, r), q.plus(t.at(p, s), t.at(s, r)))) {
                    tri = false;
                    wt = "(" + lts.state_name(p) + ", " + lts.state_name(s) + ", " +
                         lts.state_name(r) + ")";
                }
        }
    }
    rep.add("table.diagonal-bot", diag ? CheckStatus::Pass : CheckStatus::Fail, wd);
    rep.add("table.symmetry", sym ? CheckStatus::Pass : CheckStatus::Fail, ws);
    rep.add("table.triangle", tri ? CheckStatus::Pass : CheckStatus::Fail, wt);
    return rep;
}

/// Cross-checks a behavioural metric against the contextual map computed
/// in the quantale-as-MLTS: down(d(p,q)) must equal M(p,q) on every pair.
inline Report behavioural_as_cbm(const ProcessLts& lts, const MetricTable& M) {
    Report rep;
    rep.command = "behavioural-as-cbm";
    const Quantale& q = *lts.quantale();
    Mlts vm = quantale_as_mlts(lts.quantale(), lts.label_names());
    std::vector<TermId> roots = {vm.bot(), vm.top()};
    for (TermId b : vm.base_terms()) roots.push_back(b);
    auto universe = vm.transition_closure(roots);
    ParamBisimFamily fam = param_bisim_family(lts, vm, universe);
    SimPreorder sim(vm, universe);
    bool ok = true;
    std::string w;
    const std::size_t n = lts.num_states();
    for (std::size_t p = 0; p < n && ok; ++p)
        for (std::size_t s = 0; s < n && ok; ++s) {
            TermId d = contextual_metric(vm, sim, fam, p, s);
            if (!q.equal(vm.down(d), M.at(p, s))) {
                ok = false;
                w = "(" + lts.state_name(p) + ", " + lts.state_name(s) + "): down " +
                    q.to_string(vm.down(d)) + " vs table " + q.to_string(M.at(p, s));
            }
        }
    rep.add("agreement.down-d-equals-M", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    return rep;
}

// ---------------------------------------------------------------------------
// brute-force oracle

/// Literal enumeration oracle for the greatest parametrized bisimulation.
/// Relation families are enumerated per strongly connected component of
/// the term graph in reverse topological order (parametrized bisimulations
/// are closed under union, so the union of the valid assignments of one
/// component, given the settled successor components, is exact). Guarded:
/// at most 4 process states, 4 universe terms, 2 labels, and 2^22
/// candidate combinations per component.
inline ParamBisimFamily brute_force_family(const ProcessLts& lts, const Mlts& m,
                                           const std::vector<TermId>& universe) {
    if (lts.num_states() > 4 || universe.size() > 4 || lts.num_labels() > 2)
        throw ContractError("oracle size guard: need <=4 states, <=4 terms, <=2 labels");

    const std::size_t np = lts.num_states();
    const Quantale& q = *lts.quantale();
    const auto lmap = align_labels(lts, m);
    ParamBisimFamily fam;
    fam.universe = universe;
    for (std::size_t i = 0; i < universe.size(); ++i) fam.index.emplace(universe[i], i);
    fam.rel.assign(universe.size(), PairRel(np, false));

    const std::size_t nt = universe.size();
    std::vector<std::vector<std::vector<std::size_t>>> succ(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        succ[k].resize(m.num_labels());
        for (Mlts::Label l = 0; l < m.num_labels(); ++l)
            for (TermId u : m.transitions(universe[k], l)) {
                auto it = fam.index.find(u);
                if (it == fam.index.end())
                    throw ContractError("universe not transition-closed at " +
                                        m.render(universe[k]));
                succ[k][l].push_back(it->second);
            }
    }

    // SCCs of the term graph, processed successors-first (iterative Tarjan
    // is overkill at <=4 nodes: repeated reachability does fine)
    std::vector<std::vector<char>> reach(nt, std::vector<char>(nt, 0));
    for (std::size_t k = 0; k < nt; ++k) {
        reach[k][k] = 1;
        for (auto& per_label : succ[k])
            for (std::size_t s : per_label) reach[k][s] = 1;
    }
    for (std::size_t w = 0; w < nt; ++w)
        for (std::size_t i = 0; i < nt; ++i)
            if (reach[i][w])
                for (std::size_t j = 0; j < nt; ++j)
                    if (reach[w][j]) reach[i][j] = 1;
    std::vector<int> comp(nt, -1);
    std::vector<std::vector<std::size_t>> comps;
    for (std::size_t k = 0; k < nt; ++k) {
        if (comp[k] >= 0) continue;
        comps.emplace_back();
        for (std::size_t j = k; j < nt; ++j)
            if (comp[j] < 0 && reach[k][j] && reach[j][k]) {
                comp[j] = static_cast<int>(comps.size()) - 1;
                comps.back().push_back(j);
            }
    }
    // successors-first topological order over the component DAG
    std::vector<std::size_t> order;
    std::vector<char> placed(comps.size(), 0);
    while (order.size() < comps.size()) {
        for (std::size_t c = 0; c < comps.size(); ++c) {
            if (placed[c]) continue;
            bool ready = true;
            for (std::size_t k : comps[c])
                for (auto& per_label : succ[k])
                    for (std::size_t s : per_label)
                        if (static_cast<std::size_t>(comp[s]) != c && !placed[comp[s]])
                            ready = false;
            if (ready) {
                placed[c] = 1;
                order.push_back(c);
            }
        }
    }

    // unordered candidate pairs per term (condition 1)
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> cand(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        QValue dk = m.down(universe[k]);
        for (std::size_t p = 0; p < np; ++p)
            for (std::size_t sq = p; sq < np; ++sq)
                if (q.leq(lts.immediate_distance(static_cast<ProcessLts::State>(p),
                                                 static_cast<ProcessLts::State>(sq)),
                          dk))
                    cand[k].emplace_back(p, sq);
    }

    std::vector<char> settled(nt, 0);
    for (std::size_t ci : order) {
        const auto& members = comps[ci];
        std::size_t total_bits = 0;
        for (std::size_t k : members) total_bits += cand[k].size();
        if (total_bits > 22)
            throw ContractError("oracle size guard: component needs 2^" +
                                std::to_string(total_bits) + " assignments");
        const std::size_t combos = std::size_t{1} << total_bits;

        std::vector<PairRel> best(members.size(), PairRel(np, false));
        std::vector<PairRel> attempt(members.size());
        for (std::size_t mask = 0; mask < combos; ++mask) {
            std::size_t bit = 0;
            for (std::size_t mi = 0; mi < members.size(); ++mi) {
                attempt[mi] = PairRel(np, false);
                for (const auto& [p, sq] : cand[members[mi]]) {
                    if (mask & (std::size_t{1} << bit)) {
                        attempt[mi].set(p, sq);
                        attempt[mi].set(sq, p);
                    }
                    ++bit;
                }
            }
            auto rel_at = [&](std::size_t k) -> const PairRel& {
                if (settled[k]) return fam.rel[k];
                for (std::size_t mi = 0; mi < members.size(); ++mi)
                    if (members[mi] == k) return attempt[mi];
                throw ContractError("component order broken");
            };
            // literal replay of the defining clauses on every member pair
            bool valid = true;
            for (std::size_t mi = 0; mi < members.size() && valid; ++mi) {
                std::size_t k = members[mi];
                for (std::size_t p = 0; p < np && valid; ++p)
                    for (std::size_t sq = 0; sq < np && valid; ++sq) {
                        if (!attempt[mi].get(p, sq)) continue;
                        for (Mlts::Label l = 0; l < m.num_labels() && valid; ++l)
                            for (std::size_t kk : succ[k][l]) {
                                const PairRel& target = rel_at(kk);
                                auto matched = [&](std::size_t a, std::size_t b) {
                                    for (auto ap : lts.successors(
                                             static_cast<ProcessLts::State>(a), lmap[l])) {
                                        bool ok = false;
                                        for (auto bp : lts.successors(
                                                 static_cast<ProcessLts::State>(b), lmap[l]))
                                            if (target.get(ap, bp)) {
                                                ok = true;
                                                break;
                                            }
                                        if (!ok) return false;
                                    }
                                    return true;
                                };
                                if (!matched(p, sq) || !matched(sq, p)) {
                                    valid = false;
                                    break;
                                }
                            }
                    }
            }
            if (valid)
                for (std::size_t mi = 0; mi < members.size(); ++mi)
                    for (std::size_t p = 0; p < np; ++p)
                        for (std::size_t sq = 0; sq < np; ++sq)
                            if (attempt[mi].get(p, sq)) best[mi].set(p, sq);
        }
        for (std::size_t mi = 0; mi < members.size(); ++mi) {
            fam.rel[members[mi]] = best[mi];
            settled[members[mi]] = 1;
        }
    }
    return fam;
}

// ---------------------------------------------------------------------------
// environment parametrized bisimulation (Larsen)

/// Greatest environment-parametrized bisimulation: one relation per
/// environment state; moves of the environment drive the matching
/// obligations, with no immediate-distance clause.
inline std::vector<PairRel> epb_family(const ProcessLts& procs, const ProcessLts& env) {
    const std::size_t np = procs.num_states();
    std::vector<PairRel> rel(env.num_states(), PairRel(np, true));
    if (procs.num_labels() != env.num_labels())
        throw ContractError("environment and processes must share the label set");
    std::vector<ProcessLts::Label> lmap(env.num_labels());
    for (ProcessLts::Label l = 0; l < env.num_labels(); ++l)
        lmap[l] = procs.label(env.label_name(l));
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t e = 0; e < env.num_states(); ++e)
            for (std::size_t p = 0; p < np; ++p)
                for (std::size_t q = 0; q < np; ++q) {
                    if (!rel[e].get(p, q)) continue;
                    bool ok = true;
                    for (ProcessLts::Label l = 0; l < env.num_labels() && ok; ++l)
                        for (auto ep : env.successors(static_cast<ProcessLts::State>(e), l)) {
                            auto matched = [&](std::size_t a, std::size_t b, bool fwd) {
                                for (auto ap : procs.successors(
                                         static_cast<ProcessLts::State>(a), lmap[l])) {
                                    bool m = false;
                                    for (auto bp : procs.successors(
                                             static_cast<ProcessLts::State>(b), lmap[l]))
                                        if (fwd ? rel[ep].get(ap, bp) : rel[ep].get(bp, ap)) {
                                            m = true;
                                            break;
                                        }
                                    if (!m) return false;
                                }
                                return true;
                            };
                            if (!matched(p, q, true) || !matched(q, p, false)) {
                                ok = false;
                                break;
                            }
                        }
                    if (!ok) {
                        rel[e].clear(p, q);
                        changed = true;
                    }
                }
    }
    return rel;
}

} // namespace cbm
