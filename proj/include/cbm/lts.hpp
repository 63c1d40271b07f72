#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cbm/errors.hpp"
#include "cbm/quantale.hpp"
#include "cbm/report.hpp"

namespace cbm {

/// How the one-step observable distance D between two processes is
/// computed.
///
///   canonical      bot iff both states enable exactly the same label set
///   common-action  bot iff some label is enabled by both
///   liberal        bot iff either state is terminated or some label is
///                  enabled by both
///   explicit-table bot/values from a user supplied table
///
/// canonical is always a pseudometric. common-action fails the triangle
/// inequality and is bot-reflexive only on non-terminated states; the
/// validator reports such defects as warnings so that example workflows
/// remain runnable.
enum class ImmediatePolicy { Canonical, CommonAction, Liberal, ExplicitTable };

inline const char* to_string(ImmediatePolicy p) {
    switch (p) {
    case ImmediatePolicy::Canonical: return "canonical";
    case ImmediatePolicy::CommonAction: return "common-action";
    case ImmediatePolicy::Liberal: return "liberal";
    case ImmediatePolicy::ExplicitTable: return "explicit-table";
    }
    return "?";
}

inline ImmediatePolicy policy_from_string(const std::string& s) {
    if (s == "canonical") return ImmediatePolicy::Canonical;
    if (s == "common-action") return ImmediatePolicy::CommonAction;
    if (s == "liberal") return ImmediatePolicy::Liberal;
    if (s == "explicit-table") return ImmediatePolicy::ExplicitTable;
    throw ParseError("unknown immediate policy '" + s + "'");
}

/// A finite labelled transition system over named states, together with a
/// quantale and an immediate-metric policy. Immutable after construction.
class ProcessLts {
public:
    using State = std::uint32_t;
    using Label = std::uint32_t;

    ProcessLts(std::vector<std::string> states, std::vector<std::string> labels,
               std::shared_ptr<const Quantale> quantale,
               ImmediatePolicy policy = ImmediatePolicy::Canonical)
        : states_(std::move(states)), labels_(std::move(labels)), quantale_(std::move(quantale)),
          policy_(policy) {
        if (states_.empty()) throw ParseError("empty state list");
        for (State i = 0; i < states_.size(); ++i)
            if (!state_index_.emplace(states_[i], i).second)
                throw ParseError("duplicate state '" + states_[i] + "'");
        for (Label i = 0; i < labels_.size(); ++i)
            if (!label_index_.emplace(labels_[i], i).second)
                throw ParseError("duplicate label '" + labels_[i] + "'");
        succ_.assign(states_.size(), std::vector<std::vector<State>>(labels_.size()));
    }

    void add_transition(State from, Label l, State to) {
        auto& v = succ_.at(from).at(l);
        auto it = std::lower_bound(v.begin(), v.end(), to);
        if (it == v.end() || *it != to) v.insert(it, to); // duplicates deduplicated
    }
    void add_transition(const std::string& from, const std::string& l, const std::string& to) {
        add_transition(state(from), label(l), state(to));
    }

    void set_policy(ImmediatePolicy p) { policy_ = p; }

    /// Installs an explicit D table; must be total, symmetric and bot on
    /// the diagonal.
    void set_table(std::vector<QValue> table) {
        const std::size_t n = states_.size();
        if (table.size() != n * n) throw ParseError("immediate-metric table is not total");
        for (std::size_t i = 0; i < n; ++i) {
            if (!quantale_->equal(table[i * n + i], quantale_->bottom()))
                throw ParseError("immediate-metric table is not bot on the diagonal at state '" +
                                 states_[i] + "'");
            for (std::size_t j = 0; j < n; ++j)
                if (!quantale_->equal(table[i * n + j], table[j * n + i]))
                    throw ParseError("immediate-metric table is not symmetric at (" + states_[i] +
                                     ", " + states_[j] + ")");
        }
        table_ = std::move(table);
        policy_ = ImmediatePolicy::ExplicitTable;
    }

    std::size_t num_states() const { return states_.size(); }
    std::size_t num_labels() const { return labels_.size(); }
    const std::vector<std::string>& state_names() const { return states_; }
    const std::vector<std::string>& label_names() const { return labels_; }
    const std::string& state_name(State s) const { return states_.at(s); }
    const std::string& label_name(Label l) const { return labels_.at(l); }
    ImmediatePolicy policy() const { return policy_; }
    const std::shared_ptr<const Quantale>& quantale() const { return quantale_; }

    State state(const std::string& name) const {
        auto it = state_index_.find(name);
        if (it == state_index_.end()) throw LookupError("unknown state '" + name + "'");
        return it->second;
    }
    Label label(const std::string& name) const {
        auto it = label_index_.find(name);
        if (it == label_index_.end()) throw LookupError("unknown label '" + name + "'");
        return it->second;
    }
    bool has_state(const std::string& name) const { return state_index_.count(name) > 0; }

    std::span<const State> successors(State p, Label l) const {
        if (p >= states_.size()) throw LookupError("state id out of range");
        if (l >= labels_.size()) throw LookupError("label id out of range");
        return succ_[p][l];
    }
    std::span<const State> successors(const std::string& p, const std::string& l) const {
        return successors(state(p), label(l));
    }

    bool terminated(State p) const {
        for (Label l = 0; l < labels_.size(); ++l)
            if (!succ_.at(p)[l].empty()) return false;
        return true;
    }

    std::set<Label> enabled(State p) const {
        std::set<Label> out;
        for (Label l = 0; l < labels_.size(); ++l)
            if (!succ_.at(p)[l].empty()) out.insert(l);
        return out;
    }

    std::size_t num_transitions() const {
        std::size_t n = 0;
        for (const auto& per_state : succ_)
            for (const auto& v : per_state) n += v.size();
        return n;
    }

    QValue immediate_distance(State p, State q) const {
        if (p >= states_.size() || q >= states_.size()) throw LookupError("state id out of range");
        switch (policy_) {
        case ImmediatePolicy::Canonical:
            return enabled(p) == enabled(q) ? quantale_->bottom() : quantale_->top();
        case ImmediatePolicy::CommonAction:
            return share_label(p, q) ? quantale_->bottom() : quantale_->top();
        case ImmediatePolicy::Liberal:
            return (terminated(p) || terminated(q) || share_label(p, q)) ? quantale_->bottom()
                                                                         : quantale_->top();
        case ImmediatePolicy::ExplicitTable:
            return table_.at(p * states_.size() + q);
        }
        throw std::logic_error("unreachable");
    }
    QValue immediate_distance(const std::string& p, const std::string& q) const {
        return immediate_distance(state(p), state(q));
    }

    /// Checks the pseudometric axioms of D over all state pairs/triples.
    /// Violations are warnings, not failures: the common-action policy is
    /// deliberately usable even though its triangle inequality fails.
    Report validate_immediate_metric() const {
        Report rep;
        rep.command = "validate-immediate-metric";
        const Quantale& q = *quantale_;
        bool refl = true, sym = true, tri = true;
        std::string wr, ws, wt;
        for (State a = 0; a < states_.size(); ++a) {
            if (refl && !q.equal(immediate_distance(a, a), q.bottom())) {
                refl = false;
                wr = states_[a];
            }
            for (State b = 0; b < states_.size(); ++b) {
                if (sym && !q.equal(immediate_distance(a, b), immediate_distance(b, a))) {
                    sym = false;
                    ws = "(" + states_[a] + ", " + states_[b] + ")";
                }
                for (State c = 0; c < states_.size(); ++c)
                    if (tri && !q.leq(immediate_distance(a, c),
                                      q.plus(immediate_distance(a, b), immediate_distance(b, c)))) {
                        tri = false;
                        wt = "(" + states_[a] + ", " + states_[b] + ", " + states_[c] + ")";
                    }
            }
        }
        rep.add("immediate.reflexive-bot", refl ? CheckStatus::Pass : CheckStatus::Warn, wr);
        rep.add("immediate.symmetric", sym ? CheckStatus::Pass : CheckStatus::Warn, ws);
        rep.add("immediate.triangle", tri ? CheckStatus::Pass : CheckStatus::Warn, wt);
        return rep;
    }

    /// Loads the `.lts` text format; see the bundled fixtures for examples.
    /// Undeclared states/labels and malformed D tables are reported with
    /// their line number.
    static ProcessLts load(const std::string& text, const std::string& filename = "<lts>",
                           std::shared_ptr<const Quantale> quantale = nullptr);

    /// Loads several `.lts` documents into one disjoint-union system. All
    /// documents must agree on the quantale kind and policy.
    static ProcessLts load_merged(const std::vector<std::string>& texts,
                                  const std::vector<std::string>& filenames,
                                  std::shared_ptr<const Quantale> quantale = nullptr);

private:
    bool share_label(State p, State q) const {
        for (Label l = 0; l < labels_.size(); ++l)
            if (!succ_[p][l].empty() && !succ_[q][l].empty()) return true;
        return false;
    }

    std::vector<std::string> states_, labels_;
    std::map<std::string, State> state_index_;
    std::map<std::string, Label> label_index_;
    std::vector<std::vector<std::vector<State>>> succ_; // [state][label] -> sorted targets
    std::shared_ptr<const Quantale> quantale_;
    ImmediatePolicy policy_;
    std::vector<QValue> table_; // explicit D, row major, when policy is ExplicitTable
};

namespace detail {

struct LtsDocument {
    std::vector<std::string> states, labels;
    std::vector<std::array<std::string, 3>> transitions; // from, label, to
    std::optional<std::string> policy;
    std::vector<std::array<std::string, 3>> dtable; // p, q, value
    std::optional<std::string> quantale_name;
};

inline std::array<std::string, 3> parse_transition_words(const std::vector<std::string>& words,
                                                         const std::string& where) {
    // accepted: "p -a-> q" (one token or three)
    std::string joined;
    for (const auto& w : words) joined += w;
    auto l = joined.find("-");
    auto r = joined.find("->");
    if (l == std::string::npos || r == std::string::npos || r <= l)
        throw ParseError(where + ": malformed transition (expected 'p -a-> q')");
    std::string from = joined.substr(0, l);
    std::string lab = joined.substr(l + 1, r - l - 1);
    std::string to = joined.substr(r + 2);
    if (from.empty() || lab.empty() || to.empty())
        throw ParseError(where + ": malformed transition (expected 'p -a-> q')");
    return {from, lab, to};
}

inline LtsDocument parse_lts_document(const std::string& text, const std::string& filename) {
    LtsDocument doc;
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
        else if (section == "quantale") {
            if (words.size() != 1) throw ParseError(where + ": expected one quantale name");
            doc.quantale_name = words[0];
        } else if (section == "D") {
            if (words.size() == 1 && words[0].rfind("policy=", 0) == 0)
                doc.policy = words[0].substr(7);
            else
                throw ParseError(where + ": expected 'D: policy=<name>'");
        } else if (section == "D-table") {
            if (words.size() != 3)
                throw ParseError(where + ": D-table rows are 'p q value'");
            doc.dtable.push_back({words[0], words[1], words[2]});
        } else
            throw ParseError(where + ": unknown section '" + section + "'");
    }
    return doc;
}

inline std::shared_ptr<const Quantale> quantale_by_name(const std::string& n) {
    if (n == "boolean") return Quantale::boolean();
    if (n == "reals") return Quantale::extended_reals();
    if (n == "unit") return Quantale::unit_interval();
    if (n == "diamond") return Quantale::diamond();
    if (n.rfind("chain", 0) == 0 && n.size() > 5) return Quantale::chain(std::stoul(n.substr(5)));
    throw ParseError("unknown quantale '" + n + "' (use boolean|reals|unit|diamond|chainN or a .q file)");
}

} // namespace detail

inline ProcessLts ProcessLts::load(const std::string& text, const std::string& filename,
                                   std::shared_ptr<const Quantale> quantale) {
    return load_merged({text}, {filename}, std::move(quantale));
}

inline ProcessLts ProcessLts::load_merged(const std::vector<std::string>& texts,
                                          const std::vector<std::string>& filenames,
                                          std::shared_ptr<const Quantale> quantale) {
    std::vector<detail::LtsDocument> docs;
    for (std::size_t i = 0; i < texts.size(); ++i)
        docs.push_back(detail::parse_lts_document(
            texts[i], i < filenames.size() ? filenames[i] : "<lts>"));

    std::optional<std::string> qname, policy;
    for (const auto& d : docs) {
        if (d.quantale_name) {
            if (qname && *qname != *d.quantale_name)
                throw ParseError("merged .lts documents disagree on the quantale");
            qname = d.quantale_name;
        }
        if (d.policy) {
            if (policy && *policy != *d.policy)
                throw ParseError("merged .lts documents disagree on the immediate policy");
            policy = d.policy;
        }
    }
    if (!quantale) quantale = detail::quantale_by_name(qname.value_or("boolean"));

    std::vector<std::string> states, labels;
    for (const auto& d : docs) {
        for (const auto& s : d.states)
            if (std::find(states.begin(), states.end(), s) == states.end()) states.push_back(s);
        for (const auto& l : d.labels)
            if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
    }
    ProcessLts lts(states, labels, quantale,
                   policy ? policy_from_string(*policy) : ImmediatePolicy::Canonical);
    for (const auto& d : docs)
        for (const auto& t : d.transitions) {
            if (!lts.has_state(t[0])) throw ParseError("transition from undeclared state '" + t[0] + "'");
            if (!lts.has_state(t[2])) throw ParseError("transition to undeclared state '" + t[2] + "'");
            lts.add_transition(t[0], t[1], t[2]);
        }

    bool any_table = false;
    for (const auto& d : docs) any_table = any_table || !d.dtable.empty();
    if (any_table) {
        const std::size_t n = states.size();
        std::vector<QValue> table(n * n, quantale->bottom());
        std::vector<char> given(n * n, 0);
        for (std::size_t i = 0; i < n; ++i) given[i * n + i] = 1; // diagonal defaults to bot
        for (const auto& d : docs)
            for (const auto& row : d.dtable) {
                State a = lts.state(row[0]), b = lts.state(row[1]);
                QValue v = quantale->parse_value(row[2]);
                if (a != b && given[a * n + b] && !quantale->equal(table[a * n + b], v))
                    throw ParseError("D-table is not symmetric at (" + row[0] + ", " + row[1] +
                                     ")");
                table[a * n + b] = v;
                table[b * n + a] = v;
                given[a * n + b] = given[b * n + a] = 1;
            }
        for (std::size_t i = 0; i < n * n; ++i)
            if (!given[i])
                throw ParseError("D-table is not total (missing pair " + states[i / n] + ", " +
                                 states[i % n] + ")");
        lts.set_table(std::move(table));
    }
    return lts;
}

} // namespace cbm
