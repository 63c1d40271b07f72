#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cbm/errors.hpp"
#include "cbm/lts.hpp"
#include "cbm/quantale.hpp"
#include "cbm/report.hpp"

namespace cbm {

using TermId = std::uint32_t;

enum class TermKind : std::uint8_t { Bot, Top, Base, Meet, Join, Plus };

struct TermNode {
    TermKind kind;
    std::uint32_t base = 0;     // Base only
    std::vector<TermId> args;   // Meet/Join: sorted distinct members; Plus: two sorted
    std::uint32_t depth = 1;
};

/// Exploration and term-size limits. The closure of a pre-MLTS only exists
/// via iterated powersets, so everything here works with explicitly bounded
/// universes; hitting a bound raises ResourceError naming it.
struct Bounds {
    std::size_t max_set_size = 6;
    std::size_t max_depth = 8;
    std::size_t max_reachable = 20000;
    std::size_t bang_unfold = 3; // K
    double epsq = 1e-9;

    static Bounds parse(const std::string& spec) {
        Bounds b;
        b.update(spec);
        return b;
    }
    void update(const std::string& spec) {
        std::string item;
        std::istringstream is(spec);
        while (std::getline(is, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos) {
                if (item.find_first_not_of(" \t") == std::string::npos) continue;
                throw ParseError("bounds expect key=value pairs, got '" + item + "'");
            }
            std::string k = item.substr(0, eq), v = item.substr(eq + 1);
            auto trim = [](std::string s) {
                auto b0 = s.find_first_not_of(" \t");
                auto e0 = s.find_last_not_of(" \t");
                return b0 == std::string::npos ? std::string() : s.substr(b0, e0 - b0 + 1);
            };
            k = trim(k); v = trim(v);
            if (k == "max_set_size") max_set_size = std::stoul(v);
            else if (k == "max_depth") max_depth = std::stoul(v);
            else if (k == "max_reachable") max_reachable = std::stoul(v);
            else if (k == "K") bang_unfold = std::stoul(v);
            else if (k == "epsq") epsq = std::stod(v);
            else throw ParseError("unknown bound '" + k + "'");
        }
    }
    std::string echo() const {
        std::ostringstream os;
        os << "max_set_size=" << max_set_size << ",max_depth=" << max_depth
           << ",max_reachable=" << max_reachable << ",K=" << bang_unfold << ",epsq=" << epsq;
        return os.str();
    }
};

/// Hash-consing store: structurally equal normalized terms share one id.
/// Normalization flattens nested meets/meets and joins/joins, sorts and
/// deduplicates member sets, maps the empty meet to Top and the empty join
/// to Bot, collapses singletons, and sorts the two summands of a plus.
/// Construction is internally synchronized.
class TermStore {
public:
    explicit TermStore(Bounds bounds = {}) : bounds_(bounds) {
        nodes_.push_back(TermNode{TermKind::Bot, 0, {}, 1});
        nodes_.push_back(TermNode{TermKind::Top, 0, {}, 1});
    }

    static constexpr TermId kBot = 0;
    static constexpr TermId kTop = 1;

    TermId bot() const { return kBot; }
    TermId top() const { return kTop; }

    TermId base(std::uint32_t idx) {
        return intern(TermNode{TermKind::Base, idx, {}, 1});
    }

    TermId meet(std::vector<TermId> args) { return assemble(TermKind::Meet, std::move(args)); }
    TermId join(std::vector<TermId> args) { return assemble(TermKind::Join, std::move(args)); }

    TermId plus(TermId a, TermId b) {
        if (compare(b, a) < 0) std::swap(a, b);
        TermNode n{TermKind::Plus, 0, {a, b}, 1};
        n.depth = 1 + std::max(depth(a), depth(b));
        check_depth(n.depth);
        return intern(std::move(n));
    }

    const TermNode& node(TermId t) const {
        std::lock_guard<std::mutex> lk(mu_);
        return nodes_.at(t);
    }
    TermKind kind(TermId t) const { return node(t).kind; }
    std::size_t size() const {
        std::lock_guard<std::mutex> lk(mu_);
        return nodes_.size();
    }

    /// Canonical structural order, stable across runs.
    int compare(TermId a, TermId b) const {
        if (a == b) return 0;
        const TermNode& na = node(a);
        const TermNode& nb = node(b);
        if (na.kind != nb.kind)
            return static_cast<int>(na.kind) < static_cast<int>(nb.kind) ? -1 : 1;
        if (na.kind == TermKind::Base)
            return na.base < nb.base ? -1 : (na.base > nb.base ? 1 : 0);
        if (na.args.size() != nb.args.size()) return na.args.size() < nb.args.size() ? -1 : 1;
        for (std::size_t i = 0; i < na.args.size(); ++i)
            if (int c = compare(na.args[i], nb.args[i])) return c;
        return 0;
    }

    std::string render(TermId t, const std::vector<std::string>& base_names) const {
        const TermNode& n = node(t);
        switch (n.kind) {
        case TermKind::Bot: return "bot";
        case TermKind::Top: return "top";
        case TermKind::Base: return base_names.at(n.base);
        case TermKind::Meet:
        case TermKind::Join: {
            std::string out = n.kind == TermKind::Meet ? "meet{" : "join{";
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ", ";
                out += render(n.args[i], base_names);
            }
            return out + "}";
        }
        case TermKind::Plus: {
            auto part = [&](TermId x) {
                std::string s = render(x, base_names);
                return kind(x) == TermKind::Plus ? "(" + s + ")" : s;
            };
            return part(n.args[0]) + " + " + part(n.args[1]);
        }
        }
        return "?";
    }

    const Bounds& bounds() const { return bounds_; }

private:
    std::uint32_t depth(TermId t) const { return node(t).depth; }

    void check_depth(std::uint32_t d) const {
        if (d > bounds_.max_depth)
            throw ResourceError("max_depth", "term depth " + std::to_string(d) + " exceeds limit");
    }

    TermId assemble(TermKind k, std::vector<TermId> args) {
        std::vector<TermId> flat;
        for (TermId a : args) {
            if (kind(a) == k) {
                auto kids = node(a).args;
                flat.insert(flat.end(), kids.begin(), kids.end());
            } else
                flat.push_back(a);
        }
        std::sort(flat.begin(), flat.end(),
                  [this](TermId x, TermId y) { return compare(x, y) < 0; });
        flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
        if (flat.empty()) return k == TermKind::Meet ? kTop : kBot;
        if (flat.size() == 1) return flat[0];
        if (flat.size() > bounds_.max_set_size)
            throw ResourceError("max_set_size", "operand set of size " +
                                                    std::to_string(flat.size()) + " exceeds limit");
        TermNode n{k, 0, std::move(flat), 1};
        for (TermId a : n.args) n.depth = std::max(n.depth, 1 + depth(a));
        check_depth(n.depth);
        return intern(std::move(n));
    }

    struct KeyHash {
        std::size_t operator()(const TermNode* n) const {
            std::size_t h = static_cast<std::size_t>(n->kind) * 1315423911u + n->base;
            for (TermId a : n->args) h = h * 1000003u + a;
            return h;
        }
    };
    struct KeyEq {
        bool operator()(const TermNode* a, const TermNode* b) const {
            return a->kind == b->kind && a->base == b->base && a->args == b->args;
        }
    };

    TermId intern(TermNode n) {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = index_.find(&n);
        if (it != index_.end()) return it->second;
        TermId id = static_cast<TermId>(nodes_.size());
        nodes_.push_back(std::move(n));
        index_.emplace(&nodes_.back(), id);
        return id;
    }

    mutable std::mutex mu_;
    std::deque<TermNode> nodes_; // deque: stable addresses for the intern index
    std::unordered_map<const TermNode*, TermId, KeyHash, KeyEq> index_;
    Bounds bounds_;
};

/// A metric LTS presented by a finite pre-metric base (named states with a
/// quantale value each) plus the symbolic constructors Bot, Top, Meet,
/// Join and Plus with their derived transition rules:
///
///   Bot  -l-> Bot for every l          Top has no transitions
///   Meet S' -l-> t  iff some member of S' does
///   Join S' -l-> join(image f)  for every choice function f picking an
///            l-successor of every member (none if a member is stuck)
///   s1+s2 -l-> s1'+s2'  iff s1 -l-> s1' and s2 -l-> s2'
///
/// Bot's self loops are implicit in `.mlts` files.
class Mlts {
public:
    using Label = std::uint32_t;

    Mlts(std::vector<std::string> base_names, std::vector<std::string> labels,
         std::shared_ptr<const Quantale> q, Bounds bounds = {})
        : base_names_(std::move(base_names)), labels_(std::move(labels)), quantale_(std::move(q)),
          bounds_(bounds), store_(std::make_unique<TermStore>(bounds)) {
        for (std::uint32_t i = 0; i < base_names_.size(); ++i) {
            if (base_names_[i] == "bot" || base_names_[i] == "top")
                throw ParseError("'" + base_names_[i] + "' is reserved and cannot name a state");
            if (!base_index_.emplace(base_names_[i], i).second)
                throw ParseError("duplicate state '" + base_names_[i] + "'");
        }
        for (Label i = 0; i < labels_.size(); ++i)
            if (!label_index_.emplace(labels_[i], i).second)
                throw ParseError("duplicate label '" + labels_[i] + "'");
        down_.assign(base_names_.size(), quantale_->bottom());
        succ_.assign(base_names_.size(), std::vector<std::vector<TermId>>(labels_.size()));
    }

    Mlts(Mlts&&) = default;
    Mlts& operator=(Mlts&&) = default;

    TermStore& store() const { return *store_; }
    const Bounds& bounds() const { return bounds_; }
    const std::shared_ptr<const Quantale>& quantale() const { return quantale_; }
    const std::vector<std::string>& base_names() const { return base_names_; }
    const std::vector<std::string>& label_names() const { return labels_; }
    std::size_t num_labels() const { return labels_.size(); }

    Label label(const std::string& name) const {
        auto it = label_index_.find(name);
        if (it == label_index_.end()) throw LookupError("unknown label '" + name + "'");
        return it->second;
    }

    TermId bot() const { return TermStore::kBot; }
    TermId top() const { return TermStore::kTop; }
    TermId base_term(const std::string& name) const {
        auto it = base_index_.find(name);
        if (it == base_index_.end()) throw LookupError("unknown state '" + name + "'");
        return store_->base(it->second);
    }
    std::vector<TermId> base_terms() const {
        std::vector<TermId> out;
        for (std::uint32_t i = 0; i < base_names_.size(); ++i) out.push_back(store_->base(i));
        return out;
    }

    void set_down(const std::string& name, QValue v) {
        down_.at(base_index_only(name)) = v;
    }
    /// `to` may be a state name or the reserved words bot / top.
    void add_transition(const std::string& from, const std::string& label_name,
                        const std::string& to) {
        TermId target;
        if (to == "bot") target = bot();
        else if (to == "top") target = top();
        else target = store_->base(base_index_only(to));
        auto& v = succ_.at(base_index_only(from)).at(label(label_name));
        if (std::find(v.begin(), v.end(), target) == v.end()) v.push_back(target);
        std::sort(v.begin(), v.end());
    }

    QValue down(TermId t) const {
        std::lock_guard<std::mutex> lk(caches_->mu);
        return down_locked(t);
    }

    std::vector<TermId> transitions(TermId t, Label l) const {
        if (l >= labels_.size()) throw LookupError("label id out of range");
        {
            std::lock_guard<std::mutex> lk(caches_->mu);
            auto it = caches_->trans.find(key(t, l));
            if (it != caches_->trans.end()) return it->second;
        }
        std::vector<TermId> out = compute_transitions(t, l);
        std::lock_guard<std::mutex> lk(caches_->mu);
        caches_->trans.emplace(key(t, l), out);
        return out;
    }
    std::vector<TermId> transitions(TermId t, const std::string& l) const {
        return transitions(t, label(l));
    }

    std::string render(TermId t) const { return store_->render(t, base_names_); }

    /// Breadth-first transition closure of `roots`, in deterministic
    /// visiting order (roots first).
    std::vector<TermId> transition_closure(std::vector<TermId> roots) const {
        std::vector<TermId> order;
        std::set<TermId> seen;
        std::vector<TermId> queue = std::move(roots);
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            TermId t = queue[qi];
            if (!seen.insert(t).second) continue;
            order.push_back(t);
            if (order.size() > bounds_.max_reachable)
                throw ResourceError("max_reachable", "transition closure exceeds limit");
            for (Label l = 0; l < labels_.size(); ++l)
                for (TermId u : transitions(t, l))
                    if (!seen.count(u)) queue.push_back(u);
        }
        return order;
    }

    /// Parses `bot`, `top`, state names, `meet{..}`, `join{..}`, `+` and
    /// parentheses.
    TermId parse_term(const std::string& text) const;

    static Mlts load(const std::string& text, const std::string& filename = "<mlts>",
                     std::shared_ptr<const Quantale> quantale = nullptr,
                     std::optional<Bounds> bounds_override = {}) {
        return load_merged({text}, {filename}, std::move(quantale), bounds_override);
    }
    static Mlts load_merged(const std::vector<std::string>& texts,
                            const std::vector<std::string>& filenames,
                            std::shared_ptr<const Quantale> quantale = nullptr,
                            std::optional<Bounds> bounds_override = {});

private:
    std::uint32_t base_index_only(const std::string& name) const {
        auto it = base_index_.find(name);
        if (it == base_index_.end()) throw LookupError("unknown state '" + name + "'");
        return it->second;
    }

    static std::uint64_t key(TermId t, Label l) {
        return (static_cast<std::uint64_t>(t) << 16) | l;
    }

    QValue down_locked(TermId t) const {
        auto it = caches_->down.find(t);
        if (it != caches_->down.end()) return it->second;
        const TermNode& n = store_->node(t);
        QValue v = quantale_->bottom();
        switch (n.kind) {
        case TermKind::Bot: v = quantale_->bottom(); break;
        case TermKind::Top: v = quantale_->top(); break;
        case TermKind::Base: v = down_.at(n.base); break;
        case TermKind::Meet: {
            std::vector<QValue> xs;
            for (TermId a : n.args) xs.push_back(down_locked(a));
            v = quantale_->meet(xs);
            break;
        }
        case TermKind::Join: {
            std::vector<QValue> xs;
            for (TermId a : n.args) xs.push_back(down_locked(a));
            v = quantale_->join(xs);
            break;
        }
        case TermKind::Plus:
            v = quantale_->plus(down_locked(n.args[0]), down_locked(n.args[1]));
            break;
        }
        caches_->down.emplace(t, v);
        return v;
    }

    std::vector<TermId> compute_transitions(TermId t, Label l) const {
        const TermNode& n = store_->node(t);
        std::vector<TermId> out;
        switch (n.kind) {
        case TermKind::Bot: out.push_back(TermStore::kBot); break;
        case TermKind::Top: break;
        case TermKind::Base: out = succ_.at(n.base).at(l); break;
        case TermKind::Meet:
            for (TermId a : n.args)
                for (TermId u : transitions(a, l)) out.push_back(u);
            break;
        case TermKind::Join: {
            std::vector<std::vector<TermId>> per_member;
            std::size_t combos = 1;
            for (TermId a : n.args) {
                per_member.push_back(transitions(a, l));
                if (per_member.back().empty()) return {};
                combos *= per_member.back().size();
                if (combos > bounds_.max_reachable)
                    throw ResourceError("max_reachable",
                                        "join choice-function enumeration exceeds limit");
            }
            std::vector<std::size_t> pick(per_member.size(), 0);
            for (;;) {
                std::vector<TermId> image;
                for (std::size_t i = 0; i < pick.size(); ++i)
                    image.push_back(per_member[i][pick[i]]);
                out.push_back(store_->join(std::move(image)));
                std::size_t i = 0;
                for (; i < pick.size(); ++i) {
                    if (++pick[i] < per_member[i].size()) break;
                    pick[i] = 0;
                }
                if (i == pick.size()) break;
            }
            break;
        }
        case TermKind::Plus: {
            for (TermId a : transitions(n.args[0], l))
                for (TermId b : transitions(n.args[1], l)) out.push_back(store_->plus(a, b));
            break;
        }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::vector<std::string> base_names_, labels_;
    std::map<std::string, std::uint32_t> base_index_;
    std::map<std::string, Label> label_index_;
    std::vector<QValue> down_;
    std::vector<std::vector<std::vector<TermId>>> succ_; // [base][label] -> sorted terms
    std::shared_ptr<const Quantale> quantale_;
    Bounds bounds_;
    std::unique_ptr<TermStore> store_;

    struct Caches {
        std::mutex mu;
        std::unordered_map<TermId, QValue> down;
        std::unordered_map<std::uint64_t, std::vector<TermId>> trans;
    };
    std::unique_ptr<Caches> caches_ = std::make_unique<Caches>();
};

/// The largest value-preserving (reverse) simulation on a transition-closed
/// finite term universe: s1 <= s2 demands down(s1) <= down(s2) in the
/// quantale and every move of s2 matched by a move of s1 into related
/// terms. Mutual similarity (equiv) is the equivalence that makes the MLTS
/// a quantale; `canonical` picks the first-explored member of each class.
class SimPreorder {
public:
    SimPreorder(const Mlts& m, std::vector<TermId> universe) : m_(&m) {
        append(std::move(universe));
        refine_all();
    }

    const std::vector<TermId>& universe() const { return universe_; }

    bool contains(TermId t) const { return index_.count(t) > 0; }

    bool leq(TermId a, TermId b) const {
        return leq_.at(idx(a) * cap_ + idx(b)) != 0;
    }
    bool equiv(TermId a, TermId b) const { return leq(a, b) && leq(b, a); }

    TermId canonical(TermId t) const {
        std::size_t i = idx(t);
        for (std::size_t j = 0; j < universe_.size(); ++j)
            if (leq_[i * cap_ + j] && leq_[j * cap_ + i]) return universe_[j];
        return t;
    }

    /// Adds the transition closure of `roots` to the universe and refines
    /// the new rows/columns. Existing entries are unaffected (the old
    /// universe was already closed).
    void extend(std::vector<TermId> roots) {
        std::vector<TermId> closure = m_->transition_closure(std::move(roots));
        std::vector<TermId> fresh;
        for (TermId t : closure)
            if (!index_.count(t)) fresh.push_back(t);
        if (fresh.empty()) return;
        std::size_t old_n = universe_.size();
        append(fresh);
        refine_from(old_n);
    }

private:
    std::size_t idx(TermId t) const {
        auto it = index_.find(t);
        if (it == index_.end())
            throw ContractError("term " + m_->render(t) + " is outside the sim universe");
        return it->second;
    }

    void append(std::vector<TermId> terms) {
        for (TermId t : terms) {
            if (index_.count(t)) continue;
            index_.emplace(t, universe_.size());
            universe_.push_back(t);
        }
        // rebuild matrix preserving old content
        std::size_t n = universe_.size();
        std::vector<char> fresh(n * n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i < old_rows_ && j < old_rows_)
                    fresh[i * n + j] = leq_[i * cap_ + j];
                else
                    fresh[i * n + j] =
                        m_->quantale()->leq(m_->down(universe_[i]), m_->down(universe_[j])) ? 1 : 0;
            }
        leq_ = std::move(fresh);
        cap_ = n;
        succ_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!succ_[i].empty()) continue;
            succ_[i].resize(m_->num_labels());
            for (std::uint32_t l = 0; l < m_->num_labels(); ++l) {
                for (TermId u : m_->transitions(universe_[i], l)) {
                    auto it = index_.find(u);
                    if (it == index_.end())
                        throw ContractError("universe not transition-closed at " +
                                            m_->render(universe_[i]));
                    succ_[i][l].push_back(it->second);
                }
            }
        }
    }

    void refine_all() {
        refine_from(0);
        old_rows_ = universe_.size();
    }

    void refine_from(std::size_t fresh_begin) {
        const std::size_t n = universe_.size();
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    if (fresh_begin > 0 && i < fresh_begin && j < fresh_begin) continue;
                    if (!leq_[i * n + j]) continue;
                    if (!simulates(i, j)) {
                        leq_[i * n + j] = 0;
                        changed = true;
                    }
                }
        }
        old_rows_ = n;
    }

    // every move of j matched by a move of i into leq-related pairs
    bool simulates(std::size_t i, std::size_t j) const {
        const std::size_t n = universe_.size();
        for (std::uint32_t l = 0; l < m_->num_labels(); ++l) {
            for (std::size_t tj : succ_[j][l]) {
                bool matched = false;
                for (std::size_t ti : succ_[i][l])
                    if (leq_[ti * n + tj]) {
                        matched = true;
                        break;
                    }
                if (!matched) return false;
            }
        }
        return true;
    }

    const Mlts* m_;
    std::vector<TermId> universe_;
    std::unordered_map<TermId, std::size_t> index_;
    std::vector<char> leq_;
    std::size_t cap_ = 0;
    std::size_t old_rows_ = 0;
    std::vector<std::vector<std::vector<std::size_t>>> succ_; // [idx][label] -> member indices
};

// ---------------------------------------------------------------------------
// term expression parsing

namespace detail {

class TermParser {
public:
    TermParser(const Mlts& m, std::string text) : m_(m), s_(std::move(text)) {}

    TermId parse() {
        TermId t = sum();
        skip_ws();
        if (pos_ != s_.size())
            throw ParseError("unexpected trailing input at '" + s_.substr(pos_) + "'");
        return t;
    }

private:
    TermId sum() {
        TermId t = atom();
        for (;;) {
            skip_ws();
            if (!eat('+')) return t;
            TermId u = atom();
            t = m_.store().plus(t, u);
        }
    }

    TermId atom() {
        skip_ws();
        if (eat('(')) {
            TermId t = sum();
            skip_ws();
            if (!eat(')')) throw ParseError("expected ')'");
            return t;
        }
        std::string id = ident();
        if (id == "bot") return m_.bot();
        if (id == "top") return m_.top();
        if (id == "meet" || id == "join") {
            skip_ws();
            if (!eat('{')) throw ParseError("expected '{' after " + id);
            std::vector<TermId> members;
            skip_ws();
            if (!eat('}')) {
                for (;;) {
                    members.push_back(sum());
                    skip_ws();
                    if (eat(',')) continue;
                    if (eat('}')) break;
                    throw ParseError("expected ',' or '}' in " + id + " set");
                }
            }
            return id == "meet" ? m_.store().meet(std::move(members))
                                : m_.store().join(std::move(members));
        }
        return m_.base_term(id);
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos_;
        auto head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
        auto body = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
        };
        if (pos_ >= s_.size() || !head(s_[pos_]))
            throw ParseError("expected a term at offset " + std::to_string(pos_) + " of '" + s_ +
                             "'");
        ++pos_;
        while (pos_ < s_.size() && body(s_[pos_])) ++pos_;
        return s_.substr(start, pos_ - start);
    }

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

    const Mlts& m_;
    std::string s_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline TermId Mlts::parse_term(const std::string& text) const {
    return detail::TermParser(*this, text).parse();
}

// ---------------------------------------------------------------------------
// .mlts loading

namespace detail {

struct MltsDocument {
    std::vector<std::string> states, labels;
    std::vector<std::array<std::string, 3>> transitions;
    std::vector<std::pair<std::string, std::string>> downs;
    std::optional<std::string> quantale_name;
    std::optional<std::string> bounds_spec;
};

inline MltsDocument parse_mlts_document(const std::string& text, const std::string& filename) {
    MltsDocument doc;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::string section;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto words = split_ws(line);
        if (words.empty()) continue;
        const std::string where = filename + ":" + std::to_string(lineno);
        std::string head = words[0];
        if (head.back() == ':') {
            section = head.substr(0, head.size() - 1);
            words.erase(words.begin());
            if (words.empty()) continue;
        }
        if (section == "states")
            doc.states.insert(doc.states.end(), words.begin(), words.end());
        else if (section == "labels")
            doc.labels.insert(doc.labels.end(), words.begin(), words.end());
        else if (section == "trans")
            doc.transitions.push_back(parse_transition_words(words, where));
        else if (section == "down") {
            if (words.size() != 2) throw ParseError(where + ": down rows are 'state value'");
            doc.downs.emplace_back(words[0], words[1]);
        } else if (section == "quantale") {
            if (words.size() != 1) throw ParseError(where + ": expected one quantale name");
            doc.quantale_name = words[0];
        } else if (section == "bounds") {
            std::string joined;
            for (const auto& w : words) {
                if (!joined.empty()) joined += ",";
                joined += w;
            }
            doc.bounds_spec = joined;
        } else
            throw ParseError(where + ": unknown section '" + section + "'");
    }
    return doc;
}

} // namespace detail

inline Mlts Mlts::load_merged(const std::vector<std::string>& texts,
                              const std::vector<std::string>& filenames,
                              std::shared_ptr<const Quantale> quantale,
                              std::optional<Bounds> bounds_override) {
    std::vector<detail::MltsDocument> docs;
    for (std::size_t i = 0; i < texts.size(); ++i)
        docs.push_back(detail::parse_mlts_document(
            texts[i], i < filenames.size() ? filenames[i] : "<mlts>"));
    std::optional<std::string> qname;
    Bounds bounds;
    for (const auto& d : docs) {
        if (d.quantale_name) {
            if (qname && *qname != *d.quantale_name)
                throw ParseError("merged .mlts documents disagree on the quantale");
            qname = d.quantale_name;
        }
        if (d.bounds_spec) bounds.update(*d.bounds_spec);
    }
    if (bounds_override) bounds = *bounds_override;
    if (!quantale) quantale = detail::quantale_by_name(qname.value_or("boolean"));
    std::vector<std::string> states, labels;
    for (const auto& d : docs) {
        for (const auto& s : d.states)
            if (std::find(states.begin(), states.end(), s) == states.end()) states.push_back(s);
        for (const auto& l : d.labels)
            if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
    }
    Mlts m(states, labels, quantale, bounds);
    for (const auto& d : docs) {
        for (const auto& [s, v] : d.downs) m.set_down(s, quantale->parse_value(v));
        for (const auto& t : d.transitions) m.add_transition(t[0], t[1], t[2]);
    }
    return m;
}

} // namespace cbm
