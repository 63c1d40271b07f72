#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cbm/lts.hpp"
#include "cbm/mlts.hpp"
#include "cbm/solver.hpp"

namespace cbm {

using ProcId = std::uint32_t;

enum class ProcKind : std::uint8_t { Nil, Atom, Prefix, Restrict, Sum, Par, Bang };

struct ProcNode {
    ProcKind kind;
    std::uint32_t atom = 0;  // Atom: base state id
    std::uint32_t label = 0; // Prefix/Restrict
    std::vector<ProcId> kids;
    std::vector<std::uint32_t> enabled; // sorted label ids, computed at construction
    bool terminated() const { return enabled.empty(); }
};

/// Hash-consed process terms over one base ProcessLts, normalized so that
/// state spaces of the operator semantics stay finite:
///   - sums are flattened, sorted, deduplicated (their moves are a union);
///   - parallel compositions are flattened multisets with terminated
///     components dropped and the empty composition collapsing to Nil;
///   - when a parallel multiset contains a replication, multiplicities of
///     the other components are clamped at the unfold bound K and the term
///     is flagged as saturated (bounded verification, not an exact answer).
class ProcStore {
public:
    ProcStore(const ProcessLts& base, std::size_t bang_unfold)
        : base_(&base), k_(bang_unfold) {
        nodes_.push_back(ProcNode{ProcKind::Nil, 0, 0, {}, {}});
    }

    static constexpr ProcId kNil = 0;

    const ProcessLts& base() const { return *base_; }
    std::size_t unfold_bound() const { return k_; }

    ProcId nil() const { return kNil; }

    ProcId atom(std::uint32_t state) {
        ProcNode n{ProcKind::Atom, state, 0, {}, {}};
        for (auto l : base_->enabled(static_cast<ProcessLts::State>(state)))
            n.enabled.push_back(l);
        return intern(std::move(n));
    }

    ProcId prefix(std::uint32_t label, ProcId p) {
        ProcNode n{ProcKind::Prefix, 0, label, {p}, {label}};
        return intern(std::move(n));
    }

    ProcId restrict(std::uint32_t label, ProcId p) {
        ProcNode n{ProcKind::Restrict, 0, label, {p}, {}};
        for (auto l : node(p).enabled)
            if (l != label) n.enabled.push_back(l);
        return intern(std::move(n));
    }

    ProcId sum(std::vector<ProcId> kids) {
        std::vector<ProcId> flat;
        for (ProcId k : kids) {
            if (node(k).kind == ProcKind::Sum) {
                auto inner = node(k).kids;
                flat.insert(flat.end(), inner.begin(), inner.end());
            } else
                flat.push_back(k);
        }
        std::sort(flat.begin(), flat.end(),
                  [this](ProcId a, ProcId b) { return compare(a, b) < 0; });
        flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
        if (flat.empty()) return kNil;
        if (flat.size() == 1) return flat[0];
        ProcNode n{ProcKind::Sum, 0, 0, std::move(flat), {}};
        n.enabled = union_enabled(n.kids);
        return intern(std::move(n));
    }

    ProcId par(std::vector<ProcId> kids) {
        std::vector<ProcId> flat;
        for (ProcId k : kids) {
            if (node(k).kind == ProcKind::Par) {
                auto inner = node(k).kids;
                flat.insert(flat.end(), inner.begin(), inner.end());
            } else
                flat.push_back(k);
        }
        // a terminated component can neither interleave nor synchronise
        flat.erase(std::remove_if(flat.begin(), flat.end(),
                                  [this](ProcId k) { return node(k).terminated(); }),
                   flat.end());
        std::sort(flat.begin(), flat.end(),
                  [this](ProcId a, ProcId b) { return compare(a, b) < 0; });
        bool has_bang = false;
        for (ProcId k : flat) has_bang = has_bang || node(k).kind == ProcKind::Bang;
        if (has_bang && k_ > 0) {
            std::vector<ProcId> clamped;
            std::size_t run = 0;
            for (std::size_t i = 0; i < flat.size(); ++i) {
                if (i > 0 && flat[i] == flat[i - 1])
                    ++run;
                else
                    run = 1;
                if (node(flat[i]).kind != ProcKind::Bang && run > k_) {
                    ++clamp_events_;
                    continue;
                }
                clamped.push_back(flat[i]);
            }
            flat = std::move(clamped);
        }
        if (flat.empty()) return kNil;
        if (flat.size() == 1) return flat[0];
        ProcNode n{ProcKind::Par, 0, 0, std::move(flat), {}};
        n.enabled = union_enabled(n.kids);
        return intern(std::move(n));
    }

    ProcId bang(ProcId p) {
        ProcNode n{ProcKind::Bang, 0, 0, {p}, node(p).enabled};
        return intern(std::move(n));
    }

    const ProcNode& node(ProcId p) const { return nodes_.at(p); }

    int compare(ProcId a, ProcId b) const {
        if (a == b) return 0;
        const ProcNode& na = node(a);
        const ProcNode& nb = node(b);
        if (na.kind != nb.kind)
            return static_cast<int>(na.kind) < static_cast<int>(nb.kind) ? -1 : 1;
        if (na.atom != nb.atom) return na.atom < nb.atom ? -1 : 1;
        if (na.label != nb.label) return na.label < nb.label ? -1 : 1;
        if (na.kids.size() != nb.kids.size()) return na.kids.size() < nb.kids.size() ? -1 : 1;
        for (std::size_t i = 0; i < na.kids.size(); ++i)
            if (int c = compare(na.kids[i], nb.kids[i])) return c;
        return 0;
    }

    /// CSP synchronisation: any non-empty subset of parallel components
    /// enabling the label fires jointly, label preserved.
    /// One-step moves plus a flag telling whether computing them clamped a
    /// bang unfolding (bounded verification marker).
    struct Moves {
        std::vector<std::pair<std::uint32_t, ProcId>> list;
        bool clamped = false;
    };

    const Moves& moves_info(ProcId p) {
        auto it = moves_cache_.find(p);
        if (it != moves_cache_.end()) return it->second;
        const std::size_t clamps_before = clamp_events_;
        std::vector<std::pair<std::uint32_t, ProcId>> out;
        const ProcNode n = node(p); // copy: recursive calls may grow nodes_
        switch (n.kind) {
        case ProcKind::Nil: break;
        case ProcKind::Atom:
            for (ProcessLts::Label l = 0; l < base_->num_labels(); ++l)
                for (auto to : base_->successors(static_cast<ProcessLts::State>(n.atom), l))
                    out.emplace_back(l, atom(to));
            break;
        case ProcKind::Prefix: out.emplace_back(n.label, n.kids[0]); break;
        case ProcKind::Restrict:
            for (const auto& [l, t] : moves(n.kids[0]))
                if (l != n.label) out.emplace_back(l, restrict(n.label, t));
            break;
        case ProcKind::Sum:
            for (ProcId k : n.kids)
                for (const auto& mv : moves(k)) out.push_back(mv);
            break;
        case ProcKind::Par: {
            for (std::uint32_t l : n.enabled) {
                std::vector<std::size_t> firers;
                for (std::size_t i = 0; i < n.kids.size(); ++i) {
                    const auto& en = node(n.kids[i]).enabled;
                    if (std::binary_search(en.begin(), en.end(), l)) firers.push_back(i);
                }
                if (firers.size() > 16)
                    throw ResourceError("max_reachable",
                                        "too many parallel components fire one label");
                std::vector<std::vector<ProcId>> reducts(firers.size());
                for (std::size_t fi = 0; fi < firers.size(); ++fi)
                    for (const auto& [ml, mt] : moves(n.kids[firers[fi]]))
                        if (ml == l) reducts[fi].push_back(mt);
                for (std::size_t mask = 1; mask < (std::size_t{1} << firers.size()); ++mask) {
                    std::vector<std::size_t> chosen;
                    for (std::size_t fi = 0; fi < firers.size(); ++fi)
                        if (mask & (std::size_t{1} << fi)) chosen.push_back(fi);
                    std::vector<std::size_t> pick(chosen.size(), 0);
                    for (;;) {
                        std::vector<ProcId> kids = n.kids;
                        for (std::size_t ci = 0; ci < chosen.size(); ++ci)
                            kids[firers[chosen[ci]]] = reducts[chosen[ci]][pick[ci]];
                        out.emplace_back(l, par(std::move(kids)));
                        std::size_t ci = 0;
                        for (; ci < chosen.size(); ++ci) {
                            if (++pick[ci] < reducts[chosen[ci]].size()) break;
                            pick[ci] = 0;
                        }
                        if (ci == chosen.size()) break;
                    }
                }
            }
            break;
        }
        case ProcKind::Bang:
            for (const auto& [l, t] : moves(n.kids[0]))
                out.emplace_back(l, par({t, p}));
            break;
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        Moves mv{std::move(out), clamp_events_ != clamps_before};
        return moves_cache_.emplace(p, std::move(mv)).first->second;
    }

    const std::vector<std::pair<std::uint32_t, ProcId>>& moves(ProcId p) {
        return moves_info(p).list;
    }

    std::string render(ProcId p) const {
        const ProcNode& n = node(p);
        switch (n.kind) {
        case ProcKind::Nil: return "0";
        case ProcKind::Atom: return base_->state_name(n.atom);
        case ProcKind::Prefix:
            return base_->label_name(n.label) + "." + wrap(n.kids[0], 1);
        case ProcKind::Restrict:
            return "nu " + base_->label_name(n.label) + " " + wrap(n.kids[0], 2);
        case ProcKind::Sum: {
            std::string s;
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                if (i) s += " + ";
                s += wrap(n.kids[i], 5);
            }
            return s;
        }
        case ProcKind::Par: {
            std::string s;
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                if (i) s += " | ";
                s += wrap(n.kids[i], 4);
            }
            return s;
        }
        case ProcKind::Bang: return "!" + wrap(n.kids[0], 3);
        }
        return "?";
    }

private:
    // precedence ranks: prefix 1 > restriction 2 > replication 3 > parallel 4 > sum 5
    int rank(ProcId p) const {
        switch (node(p).kind) {
        case ProcKind::Nil:
        case ProcKind::Atom: return 0;
        case ProcKind::Prefix: return 1;
        case ProcKind::Restrict: return 2;
        case ProcKind::Bang: return 3;
        case ProcKind::Par: return 4;
        case ProcKind::Sum: return 5;
        }
        return 0;
    }
    std::string wrap(ProcId p, int parent_rank) const {
        std::string s = render(p);
        return rank(p) > parent_rank ? "(" + s + ")" : s;
    }

    std::vector<std::uint32_t> union_enabled(const std::vector<ProcId>& kids) const {
        std::set<std::uint32_t> acc;
        for (ProcId k : kids)
            for (auto l : node(k).enabled) acc.insert(l);
        return {acc.begin(), acc.end()};
    }

    struct Key {
        ProcKind kind;
        std::uint32_t atom, label;
        std::vector<ProcId> kids;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::size_t h = static_cast<std::size_t>(k.kind) * 2654435761u + k.atom * 97 + k.label;
            for (ProcId p : k.kids) h = h * 1000003u + p;
            return h;
        }
    };

    ProcId intern(ProcNode n) {
        Key key{n.kind, n.atom, n.label, n.kids};
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        ProcId id = static_cast<ProcId>(nodes_.size());
        nodes_.push_back(std::move(n));
        index_.emplace(std::move(key), id);
        return id;
    }

    const ProcessLts* base_;
    std::size_t k_;
    std::size_t clamp_events_ = 0;
    std::vector<ProcNode> nodes_;
    std::unordered_map<Key, ProcId, KeyHash> index_;
    std::unordered_map<ProcId, Moves> moves_cache_;
};

// ---------------------------------------------------------------------------
// process-term parsing
//
// grammar (loosest to tightest): sum, parallel, replication, restriction,
// prefix; atoms by name, `0`, parentheses.

namespace detail {

class ProcParser {
public:
    ProcParser(ProcStore& st, std::string text) : st_(st), s_(std::move(text)) {}

    ProcId parse() {
        ProcId t = sum();
        skip_ws();
        if (pos_ != s_.size())
            throw ParseError("unexpected trailing input at '" + s_.substr(pos_) + "'");
        return t;
    }

private:
    ProcId sum() {
        std::vector<ProcId> parts{par()};
        for (;;) {
            skip_ws();
            if (!eat('+')) break;
            parts.push_back(par());
        }
        return parts.size() == 1 ? parts[0] : st_.sum(std::move(parts));
    }
    ProcId par() {
        std::vector<ProcId> parts{repl()};
        for (;;) {
            skip_ws();
            if (!eat('|')) break;
            parts.push_back(repl());
        }
        return parts.size() == 1 ? parts[0] : st_.par(std::move(parts));
    }
    ProcId repl() {
        skip_ws();
        if (eat('!')) return st_.bang(repl());
        return rest();
    }
    ProcId rest() {
        skip_ws();
        if (peek_word("nu")) {
            eat_word("nu");
            std::string l = ident();
            return st_.restrict(st_.base().label(l), rest());
        }
        return pre();
    }
    ProcId pre() {
        skip_ws();
        if (eat('(')) {
            ProcId t = sum();
            skip_ws();
            if (!eat(')')) throw ParseError("expected ')'");
            return t;
        }
        if (eat('0')) return st_.nil();
        std::string id = ident();
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            return st_.prefix(st_.base().label(id), pre());
        }
        return st_.atom(st_.base().state(id));
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos_;
        auto head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
        auto body = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
        };
        if (pos_ >= s_.size() || !head(s_[pos_]))
            throw ParseError("expected a process term at offset " + std::to_string(pos_) +
                             " of '" + s_ + "'");
        ++pos_;
        while (pos_ < s_.size() && body(s_[pos_])) ++pos_;
        return s_.substr(start, pos_ - start);
    }
    bool peek_word(const char* w) {
        skip_ws();
        std::size_t len = std::string(w).size();
        if (s_.compare(pos_, len, w) != 0) return false;
        char next = pos_ + len < s_.size() ? s_[pos_ + len] : ' ';
        return !(std::isalnum(static_cast<unsigned char>(next)) || next == '_' || next == '\'');
    }
    void eat_word(const char* w) { pos_ += std::string(w).size(); }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ProcStore& st_;
    std::string s_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline ProcId parse_process_term(ProcStore& st, const std::string& text) {
    return detail::ProcParser(st, text).parse();
}

// ---------------------------------------------------------------------------
// operator-closed LTS

/// The reachable fragment of the operator semantics over the given roots,
/// materialized as a ProcessLts whose states are rendered process terms.
/// Inherits the base immediate policy; an explicit D table only covers
/// atoms, so composite states fall back to the canonical rule (noted).
struct TermLts {
    ProcessLts lts;
    std::vector<ProcId> terms;                  // per lts state
    std::unordered_map<ProcId, std::uint32_t> state_of;
    bool saturated = false;                     // bang unfolding clamped somewhere
    bool table_fallback = false;                // explicit D extended structurally
};

inline TermLts build_term_lts(ProcStore& st, std::vector<ProcId> roots,
                              std::size_t max_states = 20000) {
    const ProcessLts& base = st.base();

    bool saturated = false;
    std::vector<ProcId> order;
    std::set<ProcId> seen;
    std::vector<ProcId> queue = roots;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        ProcId p = queue[qi];
        if (!seen.insert(p).second) continue;
        order.push_back(p);
        if (order.size() > max_states)
            throw ResourceError("max_reachable",
                                "operator closure exceeds limit from root " +
                                    st.render(roots.empty() ? p : roots[0]));
        const auto& mv = st.moves_info(p);
        saturated = saturated || mv.clamped;
        for (const auto& [l, t] : mv.list)
            if (!seen.count(t)) queue.push_back(t);
    }

    std::vector<std::string> names;
    names.reserve(order.size());
    for (ProcId p : order) names.push_back(st.render(p));
    ProcessLts lts(names, base.label_names(), base.quantale(),
                   base.policy() == ImmediatePolicy::ExplicitTable ? ImmediatePolicy::Canonical
                                                                   : base.policy());
    TermLts out{std::move(lts), order, {}, saturated, false};
    for (std::uint32_t i = 0; i < order.size(); ++i) out.state_of.emplace(order[i], i);
    for (std::uint32_t i = 0; i < order.size(); ++i)
        for (const auto& [l, t] : st.moves(order[i]))
            out.lts.add_transition(i, l, out.state_of.at(t));

    if (base.policy() == ImmediatePolicy::ExplicitTable) {
        // keep table entries between atoms, canonical rule elsewhere
        const std::size_t n = order.size();
        std::vector<QValue> table(n * n, base.quantale()->bottom());
        bool fallback = false;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const ProcNode& a = st.node(order[i]);
                const ProcNode& b = st.node(order[j]);
                if (a.kind == ProcKind::Atom && b.kind == ProcKind::Atom)
                    table[i * n + j] = base.immediate_distance(a.atom, b.atom);
                else {
                    fallback = fallback || i != j;
                    table[i * n + j] = out.lts.enabled(i) == out.lts.enabled(j)
                                           ? base.quantale()->bottom()
                                           : base.quantale()->top();
                }
            }
        out.lts.set_table(std::move(table));
        out.table_fallback = fallback;
    }
    return out;
}

// ---------------------------------------------------------------------------
// operators as functions

struct OperatorId {
    enum class Kind { Prefix, Restrict, Sum, Par, Bang } kind;
    std::uint32_t label = 0; // Prefix/Restrict
    std::size_t arity() const {
        return kind == Kind::Sum || kind == Kind::Par ? 2 : 1;
    }
    std::string name(const ProcessLts& base) const {
        switch (kind) {
        case Kind::Prefix: return "prefix:" + base.label_name(label);
        case Kind::Restrict: return "restrict:" + base.label_name(label);
        case Kind::Sum: return "sum";
        case Kind::Par: return "par";
        case Kind::Bang: return "bang";
        }
        return "?";
    }
    static OperatorId parse(const std::string& s, const ProcessLts& base) {
        auto colon = s.find(':');
        std::string head = s.substr(0, colon);
        if (head == "sum") return {Kind::Sum, 0};
        if (head == "par") return {Kind::Par, 0};
        if (head == "bang") return {Kind::Bang, 0};
        if (head == "prefix" || head == "restrict") {
            if (colon == std::string::npos)
                throw ParseError("operator '" + head + "' needs a label, e.g. " + head + ":a");
            std::uint32_t l = base.label(s.substr(colon + 1));
            return {head == "prefix" ? Kind::Prefix : Kind::Restrict, l};
        }
        throw ParseError("unknown operator '" + s + "'");
    }
};

inline ProcId apply_operator(ProcStore& st, const OperatorId& op, const std::vector<ProcId>& args) {
    switch (op.kind) {
    case OperatorId::Kind::Prefix: return st.prefix(op.label, args.at(0));
    case OperatorId::Kind::Restrict: return st.restrict(op.label, args.at(0));
    case OperatorId::Kind::Sum: return st.sum({args.at(0), args.at(1)});
    case OperatorId::Kind::Par: return st.par({args.at(0), args.at(1)});
    case OperatorId::Kind::Bang: return st.bang(args.at(0));
    }
    throw std::logic_error("unreachable");
}

/// Eq-style compositionality of the immediate metric: D(f(p...), f(q...))
/// bounded by the sum of the component distances, over every tuple drawn
/// from `universe_procs`.
inline Report check_immediate_compositionality(ProcStore& st, const OperatorId& op,
                                               const std::vector<ProcId>& universe_procs) {
    Report rep;
    rep.command = "comp-imm " + op.name(st.base());
    const std::size_t arity = op.arity();
    std::vector<ProcId> roots = universe_procs;
    std::vector<std::vector<ProcId>> tuples; // p-args then q-args
    std::vector<std::size_t> pick(2 * arity, 0);
    const std::size_t n = universe_procs.size();
    if (n == 0) {
        rep.add("comp-imm.empty-universe", CheckStatus::Skip);
        return rep;
    }
    for (;;) {
        std::vector<ProcId> tup;
        for (std::size_t i = 0; i < pick.size(); ++i) tup.push_back(universe_procs[pick[i]]);
        tuples.push_back(tup);
        std::size_t i = 0;
        for (; i < pick.size(); ++i) {
            if (++pick[i] < n) break;
            pick[i] = 0;
        }
        if (i == pick.size()) break;
    }
    for (const auto& tup : tuples) {
        std::vector<ProcId> pargs(tup.begin(), tup.begin() + arity);
        std::vector<ProcId> qargs(tup.begin() + arity, tup.end());
        roots.push_back(apply_operator(st, op, pargs));
        roots.push_back(apply_operator(st, op, qargs));
    }
    TermLts t = build_term_lts(st, roots);
    if (t.saturated) rep.note("bounded verification: bang unfolding clamped at K");
    if (t.table_fallback)
        rep.note("explicit D table extended to composite states by the canonical rule");
    const Quantale& q = *t.lts.quantale();

    bool ok = true;
    std::string w;
    for (const auto& tup : tuples) {
        std::vector<ProcId> pargs(tup.begin(), tup.begin() + arity);
        std::vector<ProcId> qargs(tup.begin() + arity, tup.end());
        ProcId fp = apply_operator(st, op, pargs);
        ProcId fq = apply_operator(st, op, qargs);
        QValue lhs = t.lts.immediate_distance(t.state_of.at(fp), t.state_of.at(fq));
        QValue rhs = q.bottom();
        for (std::size_t i = 0; i < arity; ++i)
            rhs = q.plus(rhs, t.lts.immediate_distance(t.state_of.at(pargs[i]),
                                                       t.state_of.at(qargs[i])));
        if (!q.leq(lhs, rhs)) {
            ok = false;
            w = st.render(fp) + " vs " + st.render(fq) + ": " + q.to_string(lhs) + " > " +
                q.to_string(rhs);
            break;
        }
    }
    rep.add("comp-imm." + op.name(st.base()), ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    return rep;
}

// ---------------------------------------------------------------------------
// solved context: term LTS + family + sim over one universe

/// Everything the f-hat bound operator and the §-style verifiers need:
/// the operator-closed LTS, the greatest parametrized bisimulation over
/// the term universe, and the simulation preorder for comparing bounds.
struct SolvedContext {
    TermLts tl;
    std::vector<TermId> universe;
    ParamBisimFamily family;
    SimPreorder sim;

    SolvedContext(ProcStore& st, const Mlts& m, std::vector<ProcId> roots,
                  std::vector<TermId> terms)
        : tl(build_term_lts(st, std::move(roots))),
          universe(m.transition_closure(with_extremes(m, std::move(terms)))),
          family(param_bisim_family(tl.lts, m, universe)), sim(m, universe) {}

    static std::vector<TermId> with_extremes(const Mlts& m, std::vector<TermId> ts) {
        ts.push_back(m.bot());
        ts.push_back(m.top());
        return ts;
    }

    bool related(TermId s, ProcId p, ProcId q) const {
        return family.contains(s, tl.state_of.at(p), tl.state_of.at(q));
    }
    TermId metric(const Mlts& m, ProcId p, ProcId q) {
        auto key = std::make_pair(p, q);
        auto it = metric_cache_.find(key);
        if (it != metric_cache_.end()) return it->second;
        TermId t = contextual_metric(m, sim, family, tl.state_of.at(p), tl.state_of.at(q));
        metric_cache_.emplace(key, t);
        return t;
    }

private:
    std::map<std::pair<ProcId, ProcId>, TermId> metric_cache_;
};

/// The tightest bound on the distance between f(p...) and any f(p'...)
/// whose components stay within the given distance bounds: the join of
/// the pointwise contextual metrics over all candidate tuples drawn from
/// `candidates`.
inline TermId f_hat(ProcStore& st, const Mlts& m, SolvedContext& ctx, const OperatorId& op,
                    const std::vector<ProcId>& pargs, const std::vector<TermId>& sargs,
                    const std::vector<ProcId>& candidates) {
    const std::size_t arity = op.arity();
    if (pargs.size() != arity || sargs.size() != arity)
        throw ContractError("operator arity mismatch");
    ProcId fp = apply_operator(st, op, pargs);

    std::vector<std::vector<ProcId>> cand_per_arg(arity);
    for (std::size_t i = 0; i < arity; ++i)
        for (ProcId c : candidates)
            if (ctx.related(sargs[i], pargs[i], c)) cand_per_arg[i].push_back(c);

    std::vector<TermId> members;
    bool any_empty = false;
    for (const auto& c : cand_per_arg) any_empty = any_empty || c.empty();
    std::vector<std::size_t> pick(arity, 0);
    for (; !any_empty;) {
        std::vector<ProcId> qargs;
        for (std::size_t i = 0; i < arity; ++i) qargs.push_back(cand_per_arg[i][pick[i]]);
        ProcId fq = apply_operator(st, op, qargs);
        members.push_back(ctx.metric(m, fp, fq));
        std::size_t i = 0;
        for (; i < arity; ++i) {
            if (++pick[i] < cand_per_arg[i].size()) break;
            pick[i] = 0;
        }
        if (i == arity) break;
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    // join of a set equals the join of its maximal elements
    if (members.size() > m.bounds().max_set_size) {
        std::vector<TermId> maximal;
        for (TermId s : members) {
            bool is_max = true;
            for (TermId t : members)
                if (ctx.sim.leq(s, t) && !ctx.sim.leq(t, s)) {
                    is_max = false;
                    break;
                }
            if (is_max) maximal.push_back(ctx.sim.canonical(s));
        }
        std::sort(maximal.begin(), maximal.end());
        maximal.erase(std::unique(maximal.begin(), maximal.end()), maximal.end());
        members = std::move(maximal);
    }
    TermId j = m.store().join(std::move(members));
    ctx.sim.extend({j});
    return j;
}

// ---------------------------------------------------------------------------
// compatibility and increasing states

/// Greatest compatibility relation between distance terms and processes:
/// reducts of the distance stay compatible, and whenever distance and
/// process fire the same label the distance must not shrink.
class CompatRelation {
public:
    CompatRelation(const Mlts& m, SimPreorder& sim, ProcStore& st,
                   const std::vector<TermId>& terms, const std::vector<ProcId>& procs)
        : terms_(terms), procs_(procs) {
        for (std::size_t i = 0; i < terms.size(); ++i) tidx_[terms[i]] = i;
        for (std::size_t i = 0; i < procs.size(); ++i) pidx_[procs[i]] = i;
        ok_.assign(terms.size(), std::vector<char>(procs.size(), 1));

        // successor indices; both universes must be closed
        std::vector<std::vector<std::vector<std::size_t>>> tsucc(terms.size());
        std::vector<std::vector<std::vector<std::size_t>>> psucc(procs.size());
        for (std::size_t i = 0; i < terms.size(); ++i) {
            tsucc[i].resize(m.num_labels());
            for (Mlts::Label l = 0; l < m.num_labels(); ++l)
                for (TermId u : m.transitions(terms[i], l)) {
                    auto it = tidx_.find(u);
                    if (it == tidx_.end())
                        throw ContractError("term universe not closed at " + m.render(terms[i]));
                    tsucc[i][l].push_back(it->second);
                }
        }
        const auto lmap = align_labels(st.base(), m);
        std::vector<std::size_t> rev(st.base().num_labels());
        for (Mlts::Label l = 0; l < m.num_labels(); ++l) rev[lmap[l]] = l;
        for (std::size_t i = 0; i < procs.size(); ++i) {
            psucc[i].resize(m.num_labels());
            for (const auto& [l, t] : st.moves(procs[i])) {
                auto it = pidx_.find(t);
                if (it == pidx_.end())
                    throw ContractError("process universe not closed at " + st.render(procs[i]));
                psucc[i][rev[l]].push_back(it->second);
            }
        }

        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < terms.size(); ++i)
                for (std::size_t j = 0; j < procs.size(); ++j) {
                    if (!ok_[i][j]) continue;
                    bool keep = true;
                    for (Mlts::Label l = 0; l < m.num_labels() && keep; ++l)
                        for (std::size_t ti : tsucc[i][l]) {
                            if (!ok_[ti][j]) { keep = false; break; } // clause 1
                            for (std::size_t pj : psucc[j][l])
                                if (!ok_[ti][pj] || !sim.leq(terms[i], terms[ti])) {
                                    keep = false; // clause 2
                                    break;
                                }
                            if (!keep) break;
                        }
                    if (!keep) {
                        ok_[i][j] = 0;
                        changed = true;
                    }
                }
        }
    }

    bool is_compatible(TermId s, ProcId p) const {
        auto it = tidx_.find(s);
        auto jt = pidx_.find(p);
        if (it == tidx_.end() || jt == pidx_.end())
            throw ContractError("compatibility query outside the computed universes");
        return ok_[it->second][jt->second];
    }

private:
    std::vector<TermId> terms_;
    std::vector<ProcId> procs_;
    std::map<TermId, std::size_t> tidx_;
    std::map<ProcId, std::size_t> pidx_;
    std::vector<std::vector<char>> ok_;
};

/// Largest set of terms whose every reduct is a simulation-larger member
/// of the set.
inline std::vector<TermId> increasing_states(const Mlts& m, SimPreorder& sim,
                                             const std::vector<TermId>& universe) {
    std::map<TermId, std::size_t> idx;
    for (std::size_t i = 0; i < universe.size(); ++i) idx[universe[i]] = i;
    std::vector<char> in(universe.size(), 1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < universe.size(); ++i) {
            if (!in[i]) continue;
            bool keep = true;
            for (Mlts::Label l = 0; l < m.num_labels() && keep; ++l)
                for (TermId u : m.transitions(universe[i], l)) {
                    auto it = idx.find(u);
                    if (it == idx.end())
                        throw ContractError("universe not closed at " + m.render(universe[i]));
                    if (!in[it->second] || !sim.leq(universe[i], u)) {
                        keep = false;
                        break;
                    }
                }
            if (!keep) {
                in[i] = 0;
                changed = true;
            }
        }
    }
    std::vector<TermId> out;
    for (std::size_t i = 0; i < universe.size(); ++i)
        if (in[i]) out.push_back(universe[i]);
    return out;
}


// ---------------------------------------------------------------------------
// per-operator compositionality verification

/// Runs the compositionality bound for one operator over every tuple from
/// the given universes, after checking the immediate-metric precondition
/// (its failure skips the run rather than failing it):
///
///   restriction   f^(nu_l, p, s) below s, unconditionally
///   prefix        with s_l the meet of the l-reducts of s_eps, when
///                 s_eps and s_l are strictly above bot and
///                 down(s_l) <= down(s_eps): f^(.l, p, s_l) below s_eps
///   sum           f^(+, p1 p2, s1 s2) below s1 + s2
///   parallel      same bound, when s1 is p2-compatible and s2 is
///                 p1-compatible
///   replication   f^(!, p, s) below s, when s is increasing and the
///                 quantale sum is idempotent
///
/// A reported violation at desk scale would falsify the corresponding
/// proposition, so violations are hard failures; gated instances whose
/// side conditions fail are counted as skips.
inline Report verify_composition(ProcStore& st, const Mlts& m, const OperatorId& op,
                                 const std::vector<ProcId>& universe_procs,
                                 const std::vector<TermId>& term_roots,
                                 std::size_t max_witnesses = 5) {
    Report rep;
    rep.command = "compose " + op.name(st.base());

    Report pre = check_immediate_compositionality(st, op, universe_procs);
    if (!pre.ok()) {
        rep.add("compose." + op.name(st.base()) + ".precondition", CheckStatus::Skip,
                "comp-imm does not hold on this universe: " + pre.entries.back().witness);
        return rep;
    }
    rep.add("compose." + op.name(st.base()) + ".precondition", CheckStatus::Pass);

    const std::size_t arity = op.arity();
    std::vector<ProcId> roots = universe_procs;
    {
        std::vector<std::size_t> pick(arity, 0);
        const std::size_t n = universe_procs.size();
        for (;;) {
            std::vector<ProcId> args;
            for (std::size_t i = 0; i < arity; ++i) args.push_back(universe_procs[pick[i]]);
            roots.push_back(apply_operator(st, op, args));
            std::size_t i = 0;
            for (; i < arity; ++i) {
                if (++pick[i] < n) break;
                pick[i] = 0;
            }
            if (i == arity) break;
        }
    }
    // The tuple space is the closure of the given roots; the solved context
    // additionally carries every bound term the checks mention (sums of
    // pairs, meets of prefix reducts), so that the satisfaction sets of the
    // contextual metric see them and the order checks are exact.
    std::vector<TermId> terms =
        m.transition_closure(SolvedContext::with_extremes(m, term_roots));
    std::vector<TermId> enriched = terms;
    if (op.kind == OperatorId::Kind::Sum || op.kind == OperatorId::Kind::Par) {
        for (TermId s1 : terms)
            for (TermId s2 : terms) enriched.push_back(m.store().plus(s1, s2));
    } else if (op.kind == OperatorId::Kind::Prefix) {
        for (TermId se : terms) enriched.push_back(m.store().meet(m.transitions(se, op.label)));
    }
    SolvedContext ctx(st, m, roots, enriched);
    if (ctx.tl.saturated)
        rep.note("bounded verification: bang unfolding clamped at K=" +
                 std::to_string(st.unfold_bound()));

    std::size_t checked = 0, skipped = 0, violations = 0;
    auto violate = [&](const std::string& w) {
        ++violations;
        if (violations <= max_witnesses)
            rep.add("compose." + op.name(st.base()) + ".violation", CheckStatus::Fail, w);
    };

    switch (op.kind) {
    case OperatorId::Kind::Restrict: {
        for (ProcId p : universe_procs)
            for (TermId sv : terms) {
                TermId t = f_hat(st, m, ctx, op, {p}, {sv}, universe_procs);
                ++checked;
                if (!ctx.sim.leq(t, sv))
                    violate(st.render(p) + ", " + m.render(sv) + ": bound " + m.render(t));
            }
        break;
    }
    case OperatorId::Kind::Prefix: {
        for (TermId se : terms) {
            if (ctx.sim.leq(se, m.bot())) { ++skipped; continue; } // need s_eps strictly above bot
            TermId sl = m.store().meet(m.transitions(se, op.label));
            ctx.sim.extend({sl});
            if (ctx.sim.leq(sl, m.bot()) ||
                !m.quantale()->leq(m.down(sl), m.down(se))) {
                ++skipped;
                continue;
            }
            for (ProcId p : universe_procs) {
                TermId t = f_hat(st, m, ctx, op, {p}, {sl}, universe_procs);
                ++checked;
                if (!ctx.sim.leq(t, se))
                    violate(st.render(p) + ", s_eps=" + m.render(se) + ", s_delta=" +
                            m.render(sl) + ": bound " + m.render(t));
            }
        }
        break;
    }
    case OperatorId::Kind::Sum: {
        for (ProcId p1 : universe_procs)
            for (ProcId p2 : universe_procs)
                for (TermId s1 : terms)
                    for (TermId s2 : terms) {
                        TermId bound = m.store().plus(s1, s2);
                        ctx.sim.extend({bound});
                        TermId t = f_hat(st, m, ctx, op, {p1, p2}, {s1, s2}, universe_procs);
                        ++checked;
                        if (!ctx.sim.leq(t, bound))
                            violate(st.render(p1) + "+" + st.render(p2) + ", " + m.render(s1) +
                                    ", " + m.render(s2) + ": bound " + m.render(t));
                    }
        break;
    }
    case OperatorId::Kind::Par: {
        CompatRelation compat(m, ctx.sim, st, terms, ctx.tl.terms);
        for (ProcId p1 : universe_procs)
            for (ProcId p2 : universe_procs)
                for (TermId s1 : terms)
                    for (TermId s2 : terms) {
                        if (!compat.is_compatible(s1, p2) || !compat.is_compatible(s2, p1)) {
                            ++skipped;
                            continue;
                        }
                        TermId bound = m.store().plus(s1, s2);
                        ctx.sim.extend({bound});
                        TermId t = f_hat(st, m, ctx, op, {p1, p2}, {s1, s2}, universe_procs);
                        ++checked;
                        if (!ctx.sim.leq(t, bound))
                            violate(st.render(p1) + "|" + st.render(p2) + ", " + m.render(s1) +
                                    ", " + m.render(s2) + ": bound " + m.render(t));
                    }
        break;
    }
    case OperatorId::Kind::Bang: {
        bool idem = plus_is_idempotent(*m.quantale(), m.quantale()->default_sample());
        if (!idem) {
            rep.add("compose.bang.gate", CheckStatus::Skip, "quantale sum is not idempotent");
            return rep;
        }
        std::vector<TermId> inc = increasing_states(m, ctx.sim, terms);
        std::set<TermId> inc_set(inc.begin(), inc.end());
        for (TermId sv : terms) {
            if (!inc_set.count(sv)) { ++skipped; continue; }
            for (ProcId p : universe_procs) {
                TermId t = f_hat(st, m, ctx, op, {p}, {sv}, universe_procs);
                ++checked;
                if (!ctx.sim.leq(t, sv))
                    violate("!" + st.render(p) + ", " + m.render(sv) + ": bound " + m.render(t));
            }
        }
        break;
    }
    }

    std::string summary = std::to_string(checked) + " instances checked, " +
                          std::to_string(skipped) + " gated out";
    if (violations > 0)
        rep.add("compose." + op.name(st.base()),
                CheckStatus::Fail,
                std::to_string(violations) + " violations; " + summary);
    else
        rep.add("compose." + op.name(st.base()), CheckStatus::Pass, summary);
    return rep;
}

} // namespace cbm
