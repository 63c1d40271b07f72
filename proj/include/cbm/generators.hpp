#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cbm/lts.hpp"
#include "cbm/mlts.hpp"

namespace cbm {

/// splitmix64; deterministic across platforms, so seeds printed in reports
/// reproduce runs everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    std::size_t below(std::size_t n) { return n ? static_cast<std::size_t>(next() % n) : 0; }
    bool chance(std::uint32_t percent) { return next() % 100 < percent; }

private:
    std::uint64_t state_;
};

/// Random process LTS: up to `max_states` states over `num_labels` labels
/// named a, b, c, ...; roughly half the (state, label) slots get one or
/// two successors.
inline ProcessLts random_lts(Rng& rng, std::size_t max_states, std::size_t num_labels,
                             std::shared_ptr<const Quantale> q,
                             ImmediatePolicy policy = ImmediatePolicy::Canonical,
                             const std::string& prefix = "x") {
    std::size_t n = 1 + rng.below(max_states);
    std::vector<std::string> states, labels;
    for (std::size_t i = 0; i < n; ++i) states.push_back(prefix + std::to_string(i));
    for (std::size_t l = 0; l < num_labels; ++l) labels.push_back(std::string(1, 'a' + char(l)));
    ProcessLts lts(states, labels, std::move(q), policy);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t l = 0; l < num_labels; ++l) {
            if (!rng.chance(55)) continue;
            std::size_t fanout = 1 + rng.below(2);
            for (std::size_t f = 0; f < fanout; ++f)
                lts.add_transition(static_cast<ProcessLts::State>(s),
                                   static_cast<ProcessLts::Label>(l),
                                   static_cast<ProcessLts::State>(rng.below(n)));
        }
    return lts;
}

/// Random pre-metric base: up to `max_states` states, transitions may also
/// target bot or top, values drawn from the quantale carrier (finite
/// carriers only).
inline Mlts random_mlts(Rng& rng, std::size_t max_states, std::size_t num_labels,
                        std::shared_ptr<const Quantale> q, Bounds bounds = {}) {
    std::size_t n = 1 + rng.below(max_states);
    std::vector<std::string> states, labels;
    for (std::size_t i = 0; i < n; ++i) states.push_back("m" + std::to_string(i));
    for (std::size_t l = 0; l < num_labels; ++l) labels.push_back(std::string(1, 'a' + char(l)));
    Mlts m(states, labels, q, bounds);
    for (std::size_t s = 0; s < n; ++s) {
        if (rng.chance(70))
            m.set_down(states[s], q->element(rng.below(q->carrier_size())));
        for (std::size_t l = 0; l < num_labels; ++l) {
            if (!rng.chance(50)) continue;
            std::size_t fanout = rng.chance(25) ? 2 : 1;
            for (std::size_t f = 0; f < fanout; ++f) {
                std::size_t roll = rng.below(n + 2);
                std::string target = roll < n ? states[roll] : (roll == n ? "bot" : "top");
                m.add_transition(states[s], labels[l], target);
            }
        }
    }
    return m;
}

} // namespace cbm
