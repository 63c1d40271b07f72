#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbm/errors.hpp"
#include "cbm/report.hpp"

namespace cbm {

class Quantale;

/// An element of one particular quantale instance. Values are tagged with
/// the owning quantale's id; mixing values from different instances is a
/// QuantaleTypeError.
struct QValue {
    std::uint32_t owner = 0;
    double num = 0.0;        // payload for real-valued carriers
    std::uint32_t idx = 0;   // payload for finite carriers
};

/// A unital integral commutative quantale: a complete lattice carrying a
/// commutative monoid whose sum distributes over meets. Instances are
/// immutable after construction and safe to share between threads.
///
/// Built-in carriers: the two-point boolean lattice, [0,+inf] with
/// truncated addition, [0,1] with addition clamped at 1, and arbitrary
/// finite tables (loadable from text, see `load_table`).
class Quantale {
public:
    enum class Kind { Boolean, ExtendedReal, UnitInterval, Finite };

    static constexpr double kDefaultEps = 1e-9;

    static std::shared_ptr<const Quantale> boolean() {
        auto q = std::shared_ptr<Quantale>(new Quantale(Kind::Boolean, "boolean"));
        q->finite_names_ = {"bot", "top"};
        q->leq_ = {1, 1, 0, 1};
        q->bot_idx_ = 0;
        q->top_idx_ = 1;
        return q;
    }

    static std::shared_ptr<const Quantale> extended_reals(double eps = kDefaultEps) {
        auto q = std::shared_ptr<Quantale>(new Quantale(Kind::ExtendedReal, "reals"));
        q->eps_ = eps;
        return q;
    }

    static std::shared_ptr<const Quantale> unit_interval(double eps = kDefaultEps) {
        auto q = std::shared_ptr<Quantale>(new Quantale(Kind::UnitInterval, "unit"));
        q->eps_ = eps;
        return q;
    }

    /// The four-point diamond: bot < {l, r} < top with l, r incomparable
    /// and sum = join. Distributive, idempotent.
    static std::shared_ptr<const Quantale> diamond() {
        std::vector<std::string> names = {"bot", "l", "r", "top"};
        std::vector<std::pair<std::string, std::string>> order = {
            {"bot", "l"}, {"bot", "r"}, {"l", "top"}, {"r", "top"}};
        return finite_from_order("diamond", names, order, "bot", "top", PlusRule::Join, {});
    }

    /// Total order 0 < 1 < ... < n-1 with truncated index addition.
    static std::shared_ptr<const Quantale> chain(std::size_t n) {
        if (n < 2) throw ParseError("chain quantale needs at least two elements");
        std::vector<std::string> names;
        std::vector<std::pair<std::string, std::string>> order;
        for (std::size_t i = 0; i < n; ++i) names.push_back(std::to_string(i));
        for (std::size_t i = 0; i + 1 < n; ++i) order.emplace_back(names[i], names[i + 1]);
        auto q = finite_from_order("chain" + std::to_string(n), names, order, names.front(),
                                   names.back(), PlusRule::Explicit, {});
        auto* w = const_cast<Quantale*>(q.get());
        const std::uint32_t top = static_cast<std::uint32_t>(n - 1);
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = 0; j < n; ++j)
                w->plus_table_[i * n + j] = std::min<std::uint32_t>(top, i + j);
        return q;
    }

    /// Parses the `.q` text format: `carrier:`, `bottom:`, `top:`, either
    /// `order:` pairs (`a < b`, Hasse or full; meet/join tables are derived)
    /// or explicit `meet:`/`join:` triples, a `plus:` table (triples, or the
    /// shorthands `join` / `meet`), plus `#` comments.
    static std::shared_ptr<const Quantale> load_table(const std::string& text,
                                                      const std::string& name = "table");

    std::uint32_t id() const { return id_; }
    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    double eps() const { return eps_; }
    bool finite_carrier() const { return kind_ == Kind::Boolean || kind_ == Kind::Finite; }
    std::size_t carrier_size() const { return finite_names_.size(); }

    QValue bottom() const {
        return real_kind() ? make_real(0.0) : make_idx(bot_idx_);
    }
    QValue top() const {
        if (kind_ == Kind::ExtendedReal) return make_real(std::numeric_limits<double>::infinity());
        if (kind_ == Kind::UnitInterval) return make_real(1.0);
        return make_idx(top_idx_);
    }

    QValue real(double v) const {
        if (!real_kind()) throw QuantaleTypeError("quantale '" + name_ + "' has no real carrier");
        if (v < 0) throw QuantaleTypeError("negative value outside carrier of '" + name_ + "'");
        if (kind_ == Kind::UnitInterval && v > 1.0)
            throw QuantaleTypeError("value > 1 outside carrier of '" + name_ + "'");
        return make_real(v);
    }

    QValue element(std::size_t i) const {
        if (!finite_carrier() || i >= finite_names_.size())
            throw LookupError("carrier index out of range for quantale '" + name_ + "'");
        return make_idx(static_cast<std::uint32_t>(i));
    }

    bool leq(const QValue& a, const QValue& b) const {
        check(a); check(b);
        if (real_kind()) return a.num <= b.num;
        return leq_[a.idx * carrier_size() + b.idx];
    }

    bool equal(const QValue& a, const QValue& b) const {
        check(a); check(b);
        if (real_kind()) {
            if (std::isinf(a.num) || std::isinf(b.num)) return a.num == b.num;
            return std::fabs(a.num - b.num) <= eps_;
        }
        return a.idx == b.idx;
    }

    /// Meet of a finite set; meet of the empty set is top.
    template <typename It>
    QValue meet(It first, It last) const {
        if (first == last) return top();
        QValue acc = *first++;
        check(acc);
        for (; first != last; ++first) acc = meet2(acc, *first);
        return acc;
    }
    QValue meet(std::initializer_list<QValue> xs) const { return meet(xs.begin(), xs.end()); }
    QValue meet(const std::vector<QValue>& xs) const { return meet(xs.begin(), xs.end()); }

    /// Join of a finite set; join of the empty set is bottom.
    template <typename It>
    QValue join(It first, It last) const {
        if (first == last) return bottom();
        QValue acc = *first++;
        check(acc);
        for (; first != last; ++first) acc = join2(acc, *first);
        return acc;
    }
    QValue join(std::initializer_list<QValue> xs) const { return join(xs.begin(), xs.end()); }
    QValue join(const std::vector<QValue>& xs) const { return join(xs.begin(), xs.end()); }

    QValue plus(const QValue& a, const QValue& b) const {
        check(a); check(b);
        switch (kind_) {
        case Kind::Boolean: return make_idx(a.idx | b.idx);
        case Kind::ExtendedReal: return make_real(a.num + b.num);
        case Kind::UnitInterval: return make_real(std::min(1.0, a.num + b.num));
        case Kind::Finite: return make_idx(plus_table_[a.idx * carrier_size() + b.idx]);
        }
        throw std::logic_error("unreachable");
    }

    std::string to_string(const QValue& v) const {
        check(v);
        if (finite_carrier()) return finite_names_[v.idx];
        if (std::isinf(v.num)) return "top";
        if (v.num == 0.0) return "bot";
        std::ostringstream os;
        os << v.num;
        std::string s = os.str();
        if (kind_ == Kind::UnitInterval && v.num == 1.0) return "top";
        return s;
    }

    /// Parses "bot"/"top", a carrier element name, or a number, depending
    /// on the carrier.
    QValue parse_value(const std::string& s) const {
        if (s == "bot") return bottom();
        if (s == "top") return top();
        if (finite_carrier()) {
            for (std::size_t i = 0; i < finite_names_.size(); ++i)
                if (finite_names_[i] == s) return make_idx(static_cast<std::uint32_t>(i));
            throw LookupError("'" + s + "' is not in the carrier of quantale '" + name_ + "'");
        }
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw ParseError("");
            return real(v);
        } catch (const QuantaleTypeError&) {
            throw;
        } catch (...) {
            throw ParseError("cannot parse quantale value '" + s + "'");
        }
    }

    /// A default law-check sample: the full carrier when finite, a small
    /// spread of representative reals otherwise.
    std::vector<QValue> default_sample() const {
        std::vector<QValue> out;
        if (finite_carrier()) {
            for (std::size_t i = 0; i < carrier_size(); ++i) out.push_back(element(i));
        } else {
            out.push_back(bottom());
            out.push_back(real(0.25));
            out.push_back(real(kind_ == Kind::UnitInterval ? 0.75 : 1.0));
            out.push_back(top());
        }
        return out;
    }

private:
    enum class PlusRule { Join, Meet, Explicit };

    explicit Quantale(Kind k, std::string name)
        : kind_(k), name_(std::move(name)), id_(next_id()++) {}

    static std::atomic<std::uint32_t>& next_id() {
        static std::atomic<std::uint32_t> n{1};
        return n;
    }

    bool real_kind() const { return kind_ == Kind::ExtendedReal || kind_ == Kind::UnitInterval; }

    QValue make_real(double v) const { return QValue{id_, v, 0}; }
    QValue make_idx(std::uint32_t i) const { return QValue{id_, 0.0, i}; }

    void check(const QValue& v) const {
        if (v.owner != id_)
            throw QuantaleTypeError("value does not belong to quantale '" + name_ + "'");
    }

    QValue meet2(const QValue& a, const QValue& b) const {
        switch (kind_) {
        case Kind::Boolean: return make_idx(a.idx & b.idx);
        case Kind::ExtendedReal:
        case Kind::UnitInterval: return make_real(std::min(a.num, b.num));
        case Kind::Finite: return make_idx(meet_table_[a.idx * carrier_size() + b.idx]);
        }
        throw std::logic_error("unreachable");
    }
    QValue join2(const QValue& a, const QValue& b) const {
        switch (kind_) {
        case Kind::Boolean: return make_idx(a.idx | b.idx);
        case Kind::ExtendedReal:
        case Kind::UnitInterval: return make_real(std::max(a.num, b.num));
        case Kind::Finite: return make_idx(join_table_[a.idx * carrier_size() + b.idx]);
        }
        throw std::logic_error("unreachable");
    }

    static std::shared_ptr<const Quantale> finite_from_order(
        const std::string& name, const std::vector<std::string>& names,
        const std::vector<std::pair<std::string, std::string>>& order, const std::string& bot,
        const std::string& top, PlusRule plus_rule,
        const std::vector<std::array<std::string, 3>>& plus_triples);

    Kind kind_;
    std::string name_;
    std::uint32_t id_;
    double eps_ = kDefaultEps;

    // finite-carrier data
    std::vector<std::string> finite_names_;
    std::vector<char> leq_;                 // n*n
    std::vector<std::uint32_t> meet_table_; // n*n
    std::vector<std::uint32_t> join_table_; // n*n
    std::vector<std::uint32_t> plus_table_; // n*n
    std::uint32_t bot_idx_ = 0, top_idx_ = 0;

    friend std::shared_ptr<const Quantale> make_finite_for_tests(
        std::vector<std::string>, std::vector<char>, std::vector<std::uint32_t>,
        std::vector<std::uint32_t>, std::vector<std::uint32_t>, std::uint32_t, std::uint32_t);
};

inline std::shared_ptr<const Quantale> make_finite_for_tests(
    std::vector<std::string> names, std::vector<char> leq, std::vector<std::uint32_t> meet,
    std::vector<std::uint32_t> join, std::vector<std::uint32_t> plus, std::uint32_t bot,
    std::uint32_t top) {
    auto q = std::shared_ptr<Quantale>(new Quantale(Quantale::Kind::Finite, "custom"));
    q->finite_names_ = std::move(names);
    q->leq_ = std::move(leq);
    q->meet_table_ = std::move(meet);
    q->join_table_ = std::move(join);
    q->plus_table_ = std::move(plus);
    q->bot_idx_ = bot;
    q->top_idx_ = top;
    return q;
}

inline std::shared_ptr<const Quantale> Quantale::finite_from_order(
    const std::string& name, const std::vector<std::string>& names,
    const std::vector<std::pair<std::string, std::string>>& order, const std::string& bot,
    const std::string& top, PlusRule plus_rule,
    const std::vector<std::array<std::string, 3>>& plus_triples) {
    const std::size_t n = names.size();
    if (n == 0) throw ParseError("finite quantale '" + name + "' has an empty carrier");
    std::map<std::string, std::uint32_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        if (!index.emplace(names[i], static_cast<std::uint32_t>(i)).second)
            throw ParseError("duplicate carrier element '" + names[i] + "'");
    }
    auto at = [&](const std::string& s) {
        auto it = index.find(s);
        if (it == index.end())
            throw ParseError("undeclared carrier element '" + s + "' in quantale '" + name + "'");
        return it->second;
    };

    std::vector<char> leq(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) leq[i * n + i] = 1;
    for (const auto& [a, b] : order) leq[at(a) * n + at(b)] = 1;
    // transitive closure
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (leq[i * n + k])
                for (std::size_t j = 0; j < n; ++j)
                    if (leq[k * n + j]) leq[i * n + j] = 1;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (leq[i * n + j] && leq[j * n + i])
                throw ParseError("order on '" + name + "' is not antisymmetric: " + names[i] +
                                 " and " + names[j]);

    auto glb = [&](std::uint32_t a, std::uint32_t b) -> std::uint32_t {
        std::int64_t best = -1;
        for (std::size_t k = 0; k < n; ++k) {
            if (!leq[k * n + a] || !leq[k * n + b]) continue;
            if (best < 0 || leq[best * n + k]) best = static_cast<std::int64_t>(k);
        }
        if (best < 0) throw ParseError("no lower bound for " + names[a] + ", " + names[b]);
        for (std::size_t k = 0; k < n; ++k)
            if (leq[k * n + a] && leq[k * n + b] && !leq[k * n + best])
                throw ParseError("carrier of '" + name + "' is not a lattice: " + names[a] +
                                 " meet " + names[b] + " has no greatest lower bound");
        return static_cast<std::uint32_t>(best);
    };
    auto lub = [&](std::uint32_t a, std::uint32_t b) -> std::uint32_t {
        std::int64_t best = -1;
        for (std::size_t k = 0; k < n; ++k) {
            if (!leq[a * n + k] || !leq[b * n + k]) continue;
            if (best < 0 || leq[k * n + best]) best = static_cast<std::int64_t>(k);
        }
        if (best < 0) throw ParseError("no upper bound for " + names[a] + ", " + names[b]);
        for (std::size_t k = 0; k < n; ++k)
            if (leq[a * n + k] && leq[b * n + k] && !leq[best * n + k])
                throw ParseError("carrier of '" + name + "' is not a lattice: " + names[a] +
                                 " join " + names[b] + " has no least upper bound");
        return static_cast<std::uint32_t>(best);
    };

    std::vector<std::uint32_t> meet(n * n), join(n * n), plus(n * n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            meet[i * n + j] = glb(i, j);
            join[i * n + j] = lub(i, j);
        }
    switch (plus_rule) {
    case PlusRule::Join: plus = join; break;
    case PlusRule::Meet: plus = meet; break;
    case PlusRule::Explicit: {
        std::vector<char> given(n * n, 0);
        for (const auto& t : plus_triples) {
            std::uint32_t a = at(t[0]), b = at(t[1]), c = at(t[2]);
            plus[a * n + b] = c;
            plus[b * n + a] = c;
            given[a * n + b] = given[b * n + a] = 1;
        }
        if (!plus_triples.empty())
            for (std::size_t i = 0; i < n * n; ++i)
                if (!given[i])
                    throw ParseError("plus table of '" + name + "' is not total");
        break;
    }
    }

    auto q = std::shared_ptr<Quantale>(new Quantale(Kind::Finite, name));
    q->finite_names_ = names;
    q->leq_ = std::move(leq);
    q->meet_table_ = std::move(meet);
    q->join_table_ = std::move(join);
    q->plus_table_ = std::move(plus);
    q->bot_idx_ = at(bot);
    q->top_idx_ = at(top);
    for (std::size_t i = 0; i < n; ++i) {
        if (!q->leq_[q->bot_idx_ * n + i])
            throw ParseError("'" + names[q->bot_idx_] + "' is not the bottom of '" + name + "'");
        if (!q->leq_[i * n + q->top_idx_])
            throw ParseError("'" + names[q->top_idx_] + "' is not the top of '" + name + "'");
    }
    return q;
}

namespace detail {
inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}
} // namespace detail

inline std::shared_ptr<const Quantale> Quantale::load_table(const std::string& text,
                                                            const std::string& name) {
    std::vector<std::string> carrier;
    std::string bot, top;
    std::vector<std::pair<std::string, std::string>> order;
    std::vector<std::array<std::string, 3>> plus_triples, meet_triples, join_triples;
    PlusRule plus_rule = PlusRule::Explicit;
    bool has_plus = false;

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::string section;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto words = detail::split_ws(line);
        if (words.empty()) continue;
        auto err = [&](const std::string& m) {
            throw ParseError(name + ":" + std::to_string(lineno) + ": " + m);
        };
        std::string head = words[0];
        if (head.back() == ':') {
            section = head.substr(0, head.size() - 1);
            words.erase(words.begin());
            if (words.empty()) continue;
        }
        if (section == "carrier") {
            carrier.insert(carrier.end(), words.begin(), words.end());
        } else if (section == "bottom") {
            if (words.size() != 1) err("expected one element after bottom:");
            bot = words[0];
        } else if (section == "top") {
            if (words.size() != 1) err("expected one element after top:");
            top = words[0];
        } else if (section == "order") {
            // accept "a < b" and "a<b", comma separated
            std::string joined;
            for (const auto& w : words) joined += w + " ";
            std::string cur;
            std::vector<std::string> toks;
            for (char c : joined) {
                if (c == '<' || c == ',' || c == ' ') {
                    if (!cur.empty()) toks.push_back(cur), cur.clear();
                    if (c == '<') toks.push_back("<");
                } else
                    cur += c;
            }
            if (!cur.empty()) toks.push_back(cur);
            for (std::size_t i = 0; i + 2 < toks.size() + 1; ++i) {
                if (toks[i] == "<") continue;
                if (i + 2 < toks.size() && toks[i + 1] == "<")
                    order.emplace_back(toks[i], toks[i + 2]);
            }
        } else if (section == "plus") {
            if (words.size() == 1 && (words[0] == "join" || words[0] == "meet")) {
                plus_rule = words[0] == "join" ? PlusRule::Join : PlusRule::Meet;
                has_plus = true;
            } else if (words.size() == 3) {
                plus_triples.push_back({words[0], words[1], words[2]});
                has_plus = true;
            } else
                err("plus: expects 'join', 'meet', or triples 'a b (a+b)'");
        } else if (section == "meet") {
            if (words.size() != 3) err("meet: expects triples 'a b (a meet b)'");
            meet_triples.push_back({words[0], words[1], words[2]});
        } else if (section == "join") {
            if (words.size() != 3) err("join: expects triples 'a b (a join b)'");
            join_triples.push_back({words[0], words[1], words[2]});
        } else {
            err("unknown section '" + section + "'");
        }
    }
    if (carrier.empty()) throw ParseError(name + ": missing carrier");
    if (bot.empty() || top.empty()) throw ParseError(name + ": missing bottom/top designation");
    if (!has_plus) throw ParseError(name + ": missing plus table");

    // Explicit meet/join triples define the order (a <= b iff meet(a,b) = a);
    // otherwise the order: section must be present.
    if (!meet_triples.empty()) {
        std::map<std::pair<std::string, std::string>, std::string> mt;
        for (const auto& t : meet_triples) {
            mt[{t[0], t[1]}] = t[2];
            mt[{t[1], t[0]}] = t[2];
        }
        for (const auto& a : carrier)
            for (const auto& b : carrier) {
                auto it = mt.find({a, b});
                if (it == mt.end()) throw ParseError(name + ": meet table is not total");
                if (it->second == a) order.emplace_back(a, b);
            }
    } else if (order.empty()) {
        throw ParseError(name + ": need either an order: section or meet: triples");
    }
    auto q = finite_from_order(name, carrier, order, bot, top, plus_rule, plus_triples);
    // Cross-check any explicit join triples against the derived table.
    if (!join_triples.empty()) {
        for (const auto& t : join_triples) {
            QValue a = q->parse_value(t[0]), b = q->parse_value(t[1]);
            if (!q->equal(q->join({a, b}), q->parse_value(t[2])))
                throw ParseError(name + ": join table disagrees with the declared order at (" +
                                 t[0] + ", " + t[1] + ")");
        }
    }
    return q;
}

/// True iff plus(a, a) = a for every sampled element. Gate for the
/// replication bound.
inline bool plus_is_idempotent(const Quantale& q, const std::vector<QValue>& sample) {
    for (const auto& a : sample)
        if (!q.equal(q.plus(a, a), a)) return false;
    return true;
}

/// Checks the quantale laws (complete lattice on samples, commutative
/// monoid, distributivity of plus over meets) over all subsets of `sample`
/// of size at most `max_subset`. Failures become report entries with a
/// witness, never exceptions.
inline Report validate_quantale(const Quantale& q, const std::vector<QValue>& sample,
                                std::size_t max_subset = 3) {
    Report rep;
    rep.command = "validate-quantale " + q.name();
    if (!q.finite_carrier()) rep.note("infinite carrier: laws checked on a sample only");

    // Subset enumeration is exponential; clamp very large samples.
    std::vector<QValue> capped(sample);
    if (capped.size() > 12) {
        capped.resize(12);
        rep.note("sample truncated to 12 elements for subset enumeration");
    }
    const std::vector<QValue>& s = capped;
    const std::size_t n = s.size();
    auto name = [&](const QValue& v) { return q.to_string(v); };

    // order laws
    {
        bool ok = true;
        std::string w;
        for (const auto& a : s)
            if (!q.leq(a, a)) { ok = false; w = name(a); break; }
        rep.add("order.reflexive", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    {
        bool ok = true;
        std::string w;
        for (const auto& a : s) {
            for (const auto& b : s)
                if (q.leq(a, b) && q.leq(b, a) && !q.equal(a, b)) {
                    ok = false;
                    w = "(" + name(a) + ", " + name(b) + ")";
                    break;
                }
            if (!ok) break;
        }
        rep.add("order.antisymmetric", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    {
        bool ok = true;
        std::string w;
        for (const auto& a : s)
            for (const auto& b : s)
                for (const auto& c : s)
                    if (ok && q.leq(a, b) && q.leq(b, c) && !q.leq(a, c)) {
                        ok = false;
                        w = "(" + name(a) + ", " + name(b) + ", " + name(c) + ")";
                    }
        rep.add("order.transitive", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }

    // lattice laws over subsets
    {
        bool glb_ok = true, lub_ok = true;
        std::string glb_w, lub_w;
        std::vector<QValue> subset;
        const std::size_t limit = std::size_t{1} << n;
        for (std::size_t mask = 0; mask < limit; ++mask) {
            subset.clear();
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (std::size_t{1} << i)) subset.push_back(s[i]);
            if (subset.size() > max_subset) continue;
            QValue m = q.meet(subset);
            QValue j = q.join(subset);
            if (subset.empty()) {
                if (!q.equal(m, q.top())) { glb_ok = false; glb_w = "meet {} != top"; }
                if (!q.equal(j, q.bottom())) { lub_ok = false; lub_w = "join {} != bot"; }
                continue;
            }
            for (const auto& x : subset) {
                if (glb_ok && !q.leq(m, x)) {
                    glb_ok = false;
                    glb_w = "meet not below " + name(x);
                }
                if (lub_ok && !q.leq(x, j)) {
                    lub_ok = false;
                    lub_w = "join not above " + name(x);
                }
            }
            for (const auto& b : s) {
                bool lower = true, upper = true;
                for (const auto& x : subset) {
                    lower = lower && q.leq(b, x);
                    upper = upper && q.leq(x, b);
                }
                if (glb_ok && lower && !q.leq(b, m)) {
                    glb_ok = false;
                    glb_w = name(b) + " is a lower bound above the meet";
                }
                if (lub_ok && upper && !q.leq(j, b)) {
                    lub_ok = false;
                    lub_w = name(b) + " is an upper bound below the join";
                }
            }
        }
        rep.add("lattice.meet-is-glb", glb_ok ? CheckStatus::Pass : CheckStatus::Fail, glb_w);
        rep.add("lattice.join-is-lub", lub_ok ? CheckStatus::Pass : CheckStatus::Fail, lub_w);
    }

    // commutative monoid
    {
        bool ok = true;
        std::string w;
        for (const auto& a : s)
            for (const auto& b : s)
                if (ok && !q.equal(q.plus(a, b), q.plus(b, a))) {
                    ok = false;
                    w = "(" + name(a) + ", " + name(b) + ")";
                }
        rep.add("monoid.commutative", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    {
        bool ok = true;
        std::string w;
        for (const auto& a : s)
            if (ok && !q.equal(q.plus(a, q.bottom()), a)) {
                ok = false;
                w = name(a);
            }
        rep.add("monoid.unit", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    {
        bool ok = true;
        std::string w;
        for (const auto& a : s)
            for (const auto& b : s)
                for (const auto& c : s)
                    if (ok && !q.equal(q.plus(q.plus(a, b), c), q.plus(a, q.plus(b, c)))) {
                        ok = false;
                        w = "(" + name(a) + ", " + name(b) + ", " + name(c) + ")";
                    }
        rep.add("monoid.associative", ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }

    // distributivity: e + meet A = meet { e + f : f in A }
    {
        bool ok = true;
        std::string w;
        std::vector<QValue> subset, shifted;
        const std::size_t limit = std::size_t{1} << n;
        for (std::size_t mask = 1; mask < limit && ok; ++mask) {
            subset.clear();
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (std::size_t{1} << i)) subset.push_back(s[i]);
            if (subset.size() > max_subset) continue;
            for (const auto& e : s) {
                shifted.clear();
                for (const auto& f : subset) shifted.push_back(q.plus(e, f));
                if (!q.equal(q.plus(e, q.meet(subset)), q.meet(shifted))) {
                    ok = false;
                    w = name(e) + " + meet of " + std::to_string(subset.size()) + " elements";
                    break;
                }
            }
        }
        rep.add("quantale.plus-distributes-over-meet",
                ok ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    return rep;
}

} // namespace cbm
