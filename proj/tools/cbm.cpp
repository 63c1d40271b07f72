// Command-line front end for the contextual behavioural metric workbench.
//
// Exit codes: 0 all checks passed, 1 some check failed, 2 malformed
// input/usage, 3 a configured resource bound was exceeded.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbm/algebra.hpp"
#include "cbm/generators.hpp"
#include "cbm/mlts_ops.hpp"
#include "cbm/quantale.hpp"
#include "cbm/solver.hpp"
#include "cbm/version.hpp"

using namespace cbm;

namespace {

struct Options {
    std::string lts_files;
    std::string mlts_files;
    std::string quantale_spec; // builtin name or .q path
    std::string policy;
    std::string bounds_spec;
    std::string format = "text";
    std::uint64_t seed = 42;
    std::size_t count = 0;
    std::string ops;
    std::string procs;
    std::string style = "both";
    std::vector<std::string> args; // positional terms
};

std::string slurp_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::vector<std::string> split_commas(const std::string& in) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(in);
    while (std::getline(is, cur, ','))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

std::shared_ptr<const Quantale> resolve_quantale(const std::string& spec) {
    if (spec.empty()) return nullptr;
    if (spec.size() > 2 && spec.substr(spec.size() - 2) == ".q")
        return Quantale::load_table(slurp_file(spec), spec);
    return detail::quantale_by_name(spec);
}

Bounds resolve_bounds(const std::string& cli_spec) {
    Bounds b;
    if (const char* env = std::getenv("CBM_BOUNDS_FILE")) {
        std::string text = slurp_file(env);
        std::string squashed;
        for (char c : text) squashed += (c == '\n' ? ',' : c);
        b.update(squashed);
    }
    if (!cli_spec.empty()) b.update(cli_spec);
    return b;
}

struct Loaded {
    std::optional<ProcessLts> lts;
    std::optional<Mlts> mlts;
    std::shared_ptr<const Quantale> quantale;
    Bounds bounds;
};

Loaded load_inputs(const Options& opt) {
    Loaded out;
    out.bounds = resolve_bounds(opt.bounds_spec);
    out.quantale = resolve_quantale(opt.quantale_spec);
    auto lts_files = split_commas(opt.lts_files);
    auto mlts_files = split_commas(opt.mlts_files);
    if (!lts_files.empty()) {
        std::vector<std::string> texts;
        for (const auto& f : lts_files) texts.push_back(slurp_file(f));
        out.lts = ProcessLts::load_merged(texts, lts_files, out.quantale);
        if (!opt.policy.empty()) out.lts->set_policy(policy_from_string(opt.policy));
        out.quantale = out.lts->quantale();
    }
    if (!mlts_files.empty()) {
        std::vector<std::string> texts;
        for (const auto& f : mlts_files) texts.push_back(slurp_file(f));
        std::optional<Bounds> file_override;
        if (!opt.bounds_spec.empty() || std::getenv("CBM_BOUNDS_FILE")) file_override = out.bounds;
        Mlts m = Mlts::load_merged(texts, mlts_files, out.quantale, file_override);
        out.quantale = m.quantale();
        out.mlts = std::move(m);
    }
    return out;
}

std::string now_iso() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void echo_config(Report& rep, const Options& opt, const Bounds& b) {
    rep.seed = opt.seed;
    if (!opt.lts_files.empty()) rep.config.emplace_back("lts", opt.lts_files);
    if (!opt.mlts_files.empty()) rep.config.emplace_back("mlts", opt.mlts_files);
    if (!opt.quantale_spec.empty()) rep.config.emplace_back("quantale", opt.quantale_spec);
    if (!opt.policy.empty()) rep.config.emplace_back("policy", opt.policy);
    rep.config.emplace_back("bounds", b.echo());
    rep.config.emplace_back("format", opt.format);
}

int emit(Report& rep, const Options& opt) {
    rep.timestamp = now_iso();
    if (opt.format == "json")
        std::cout << rep.to_json().dump(2) << "\n";
    else
        rep.write_text(std::cout);
    return rep.ok() ? 0 : 1;
}

std::vector<TermId> default_universe_roots(const Mlts& m) {
    std::vector<TermId> roots{m.bot(), m.top()};
    for (TermId b : m.base_terms()) roots.push_back(b);
    return roots;
}

int run_validate(const Options& opt) {
    Loaded in = load_inputs(opt);
    Report rep;
    rep.command = "validate";
    echo_config(rep, opt, in.bounds);
    if (!in.quantale && !in.lts && !in.mlts)
        throw ParseError("validate needs --quantale, --lts or --mlts");
    if (in.quantale && !opt.quantale_spec.empty()) {
        Report sub = validate_quantale(*in.quantale, in.quantale->default_sample(), 4);
        rep.merge(sub);
    }
    if (in.lts) rep.merge(in.lts->validate_immediate_metric());
    if (in.mlts) {
        auto uni = in.mlts->transition_closure(default_universe_roots(*in.mlts));
        rep.merge(validate_mlts(*in.mlts, uni));
    }
    if (opt.count > 0) {
        Rng rng(opt.seed);
        std::size_t failures = 0;
        for (std::size_t i = 0; i < opt.count; ++i) {
            auto q = i % 2 ? Quantale::diamond() : Quantale::boolean();
            Mlts m = random_mlts(rng, 5, 2, q, in.bounds);
            auto uni = m.transition_closure(default_universe_roots(m));
            Report sub = validate_mlts(m, uni, 16, 6);
            if (!sub.ok()) ++failures;
        }
        rep.add("mlts.random-law-suite", failures == 0 ? CheckStatus::Pass : CheckStatus::Fail,
                std::to_string(opt.count - failures) + "/" + std::to_string(opt.count) +
                    " random systems pass");
    }
    return emit(rep, opt);
}

int run_metric(const Options& opt) {
    Loaded in = load_inputs(opt);
    if (!in.lts || !in.mlts || opt.args.size() != 2)
        throw ParseError("metric needs --lts, --mlts and two process terms");
    Report rep;
    rep.command = "metric";
    echo_config(rep, opt, in.bounds);
    ProcStore st(*in.lts, in.bounds.bang_unfold);
    ProcId a = parse_process_term(st, opt.args[0]);
    ProcId b = parse_process_term(st, opt.args[1]);
    SolvedContext ctx(st, *in.mlts, {a, b}, default_universe_roots(*in.mlts));
    if (ctx.tl.saturated) rep.note("bounded verification: bang unfolding clamped at K");
    TermId d = ctx.metric(*in.mlts, a, b);
    rep.add("metric." + opt.args[0] + "~" + opt.args[1], CheckStatus::Pass,
            in.mlts->render(d));
    // structured export: universe, per-term relations, metric table
    nlohmann::json uni = nlohmann::json::array();
    for (TermId t : ctx.universe) uni.push_back(in.mlts->render(t));
    rep.payload["universe"] = uni;
    nlohmann::json rels = nlohmann::json::object();
    for (std::size_t k = 0; k < ctx.universe.size(); ++k) {
        nlohmann::json pairs = nlohmann::json::array();
        for (std::size_t pp = 0; pp < ctx.tl.lts.num_states(); ++pp)
            for (std::size_t qq = 0; qq < ctx.tl.lts.num_states(); ++qq)
                if (ctx.family.rel[k].get(pp, qq))
                    pairs.push_back({ctx.tl.lts.state_name(pp), ctx.tl.lts.state_name(qq)});
        rels[in.mlts->render(ctx.universe[k])] = pairs;
    }
    rep.payload["relations"] = rels;
    nlohmann::json table = nlohmann::json::object();
    table[opt.args[0] + " ~ " + opt.args[1]] = in.mlts->render(d);
    rep.payload["metric"] = table;
    std::cout << in.mlts->render(d) << "\n";
    return emit(rep, opt);
}

int run_check(const Options& opt) {
    Loaded in = load_inputs(opt);
    if (!in.lts || !in.mlts || opt.args.size() != 3)
        throw ParseError("check needs --lts, --mlts, two process terms and a distance term");
    Report rep;
    rep.command = "check";
    echo_config(rep, opt, in.bounds);
    ProcStore st(*in.lts, in.bounds.bang_unfold);
    ProcId a = parse_process_term(st, opt.args[0]);
    ProcId b = parse_process_term(st, opt.args[1]);
    TermId s = in.mlts->parse_term(opt.args[2]);
    SolvedContext ctx(st, *in.mlts, {a, b}, {s});
    bool holds = ctx.related(s, a, b);
    std::cout << (holds ? "true" : "false") << "\n";
    rep.add("check." + opt.args[0] + "~" + opt.args[1] + "@" + opt.args[2],
            holds ? CheckStatus::Pass : CheckStatus::Fail);
    return emit(rep, opt);
}

int run_order(const Options& opt) {
    Loaded in = load_inputs(opt);
    if (!in.mlts || opt.args.size() != 2)
        throw ParseError("order needs --mlts and two distance terms");
    Report rep;
    rep.command = "order";
    echo_config(rep, opt, in.bounds);
    TermId a = in.mlts->parse_term(opt.args[0]);
    TermId b = in.mlts->parse_term(opt.args[1]);
    SimPreorder sim(*in.mlts, in.mlts->transition_closure({a, b}));
    bool holds = sim.leq(a, b);
    std::cout << (holds ? "true" : "false") << "\n";
    rep.add("order." + opt.args[0] + "<=" + opt.args[1],
            holds ? CheckStatus::Pass : CheckStatus::Fail);
    return emit(rep, opt);
}

int run_behavioural(const Options& opt) {
    Loaded in = load_inputs(opt);
    if (!in.lts) throw ParseError("behavioural needs --lts");
    Report rep;
    rep.command = "behavioural";
    echo_config(rep, opt, in.bounds);
    const Quantale& q = *in.lts->quantale();
    std::optional<MetricTable> h, pm;
    if (opt.style == "hausdorff" || opt.style == "both")
        h = behavioural_metric(*in.lts, MetricStyle::Hausdorff);
    if (opt.style == "per-move" || opt.style == "both")
        pm = behavioural_metric(*in.lts, MetricStyle::PerMove);
    const MetricTable& shown = h ? *h : *pm;
    for (std::size_t p = 0; p < shown.n; ++p)
        for (std::size_t s = p + 1; s < shown.n; ++s)
            std::cout << "M(" << in.lts->state_name(p) << ", " << in.lts->state_name(s)
                      << ") = " << q.to_string(shown.at(p, s)) << "\n";
    if (h) rep.merge(validate_metric_table(*in.lts, *h));
    if (h && pm) {
        bool agree = true;
        std::string w;
        for (std::size_t p = 0; p < h->n && agree; ++p)
            for (std::size_t s = 0; s < h->n && agree; ++s)
                if (!q.equal(h->at(p, s), pm->at(p, s))) {
                    agree = false;
                    w = "(" + in.lts->state_name(p) + ", " + in.lts->state_name(s) + ")";
                }
        rep.add("behavioural.styles-agree", agree ? CheckStatus::Pass : CheckStatus::Fail, w);
    }
    if (in.lts->quantale()->finite_carrier())
        rep.merge(behavioural_as_cbm(*in.lts, shown));
    else
        rep.add("behavioural.as-cbm", CheckStatus::Skip, "infinite carrier");
    return emit(rep, opt);
}

int run_compose(const Options& opt) {
    Loaded in = load_inputs(opt);
    if (!in.lts || !in.mlts) throw ParseError("compose needs --lts and --mlts");
    Report rep;
    rep.command = "compose";
    echo_config(rep, opt, in.bounds);
    ProcStore st(*in.lts, in.bounds.bang_unfold);
    std::vector<ProcId> procs;
    if (!opt.procs.empty())
        for (const auto& p : split_commas(opt.procs)) procs.push_back(parse_process_term(st, p));
    else
        for (ProcessLts::State s = 0; s < in.lts->num_states(); ++s) procs.push_back(st.atom(s));
    std::vector<std::string> ops = split_commas(opt.ops);
    if (ops.empty()) throw ParseError("compose needs --op (e.g. --op sum,par)");
    for (const auto& opname : ops) {
        OperatorId op = OperatorId::parse(opname, *in.lts);
        rep.merge(verify_composition(st, *in.mlts, op, procs, default_universe_roots(*in.mlts)));
    }
    return emit(rep, opt);
}

int run_closure(const Options& opt) {
    Loaded in = load_inputs(opt);
    if (!in.mlts) throw ParseError("closure needs --mlts");
    Report rep;
    rep.command = "closure";
    echo_config(rep, opt, in.bounds);
    ClosureStats stats = close_pre_mlts(*in.mlts);
    std::string detail = std::to_string(stats.representatives.size()) + " classes, " +
                         std::to_string(stats.explored_terms) + " terms explored, " +
                         std::to_string(stats.rounds) + " rounds";
    rep.add("closure.stabilized", stats.complete ? CheckStatus::Pass : CheckStatus::Fail, detail);
    std::cout << detail << "\n";
    for (TermId t : stats.representatives) std::cout << "  " << in.mlts->render(t) << "\n";
    return emit(rep, opt);
}

int run_oracle(const Options& opt) {
    Loaded in = load_inputs(opt);
    Report rep;
    rep.command = "oracle";
    echo_config(rep, opt, in.bounds);
    if (in.lts && in.mlts) {
        auto uni = in.mlts->transition_closure(default_universe_roots(*in.mlts));
        auto fast = param_bisim_family(*in.lts, *in.mlts, uni);
        auto slow = brute_force_family(*in.lts, *in.mlts, uni);
        bool eq = true;
        for (std::size_t k = 0; k < uni.size(); ++k) eq = eq && (fast.rel[k] == slow.rel[k]);
        rep.add("oracle.family-equality", eq ? CheckStatus::Pass : CheckStatus::Fail);
    } else {
        std::size_t count = opt.count ? opt.count : 50;
        Rng rng(opt.seed);
        std::size_t mismatches = 0, done = 0;
        while (done < count) {
            auto q = done % 2 ? Quantale::diamond() : Quantale::boolean();
            ProcessLts lts = random_lts(rng, 3, 2, q, ImmediatePolicy::Liberal);
            Mlts m = random_mlts(rng, 2, 2, q, in.bounds);
            std::vector<TermId> roots = default_universe_roots(m);
            auto uni = m.transition_closure(roots);
            if (uni.size() > 4) continue;
            auto fast = param_bisim_family(lts, m, uni);
            auto slow = brute_force_family(lts, m, uni);
            for (std::size_t k = 0; k < uni.size(); ++k)
                if (!(fast.rel[k] == slow.rel[k])) ++mismatches;
            ++done;
        }
        rep.add("oracle.random-cross-check",
                mismatches == 0 ? CheckStatus::Pass : CheckStatus::Fail,
                std::to_string(done) + " instances, " + std::to_string(mismatches) +
                    " mismatching relations");
    }
    return emit(rep, opt);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"contextual behavioural metrics workbench"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub, bool positional_terms) {
        sub->add_option("--lts", opt.lts_files, "process LTS file(s), comma separated");
        sub->add_option("--mlts", opt.mlts_files, "metric LTS file(s), comma separated");
        sub->add_option("--quantale", opt.quantale_spec,
                        "boolean|reals|unit|diamond|chainN or a .q table file");
        sub->add_option("--policy", opt.policy,
                        "immediate policy: canonical|common-action|liberal");
        sub->add_option("--bounds", opt.bounds_spec,
                        "k=v,... of max_set_size,max_depth,max_reachable,K,epsq");
        sub->add_option("--format", opt.format, "text|json")->check(CLI::IsMember({"text", "json"}));
        sub->add_option("--seed", opt.seed, "seed for randomized suites");
        if (positional_terms) sub->add_option("terms", opt.args, "term arguments");
        return sub;
    };

    auto* validate = add_common(app.add_subcommand("validate", "law suites"), false);
    validate->add_option("--random", opt.count, "also run N random MLTS law suites");
    add_common(app.add_subcommand("metric", "contextual metric between two process terms"), true);
    add_common(app.add_subcommand("check", "parametrized bisimilarity p ~_s q"), true);
    add_common(app.add_subcommand("order", "simulation order between two distance terms"), true);
    auto* behavioural =
        add_common(app.add_subcommand("behavioural", "behavioural metric tables"), false);
    behavioural->add_option("--style", opt.style, "per-move|hausdorff|both")
        ->check(CLI::IsMember({"per-move", "hausdorff", "both"}));
    auto* compose = add_common(app.add_subcommand("compose", "operator compositionality"), false);
    compose->add_option("--op", opt.ops, "operators: prefix:l, restrict:l, sum, par, bang");
    compose->add_option("--procs", opt.procs, "process universe (default: all states)");
    add_common(app.add_subcommand("closure", "bounded closure statistics"), false);
    auto* oracle = add_common(app.add_subcommand("oracle", "brute-force cross-checks"), false);
    oracle->add_option("--count", opt.count, "number of random instances");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("validate")) return run_validate(opt);
        if (app.got_subcommand("metric")) return run_metric(opt);
        if (app.got_subcommand("check")) return run_check(opt);
        if (app.got_subcommand("order")) return run_order(opt);
        if (app.got_subcommand("behavioural")) return run_behavioural(opt);
        if (app.got_subcommand("compose")) return run_compose(opt);
        if (app.got_subcommand("closure")) return run_closure(opt);
        if (app.got_subcommand("oracle")) return run_oracle(opt);
    } catch (const ResourceError& e) {
        std::cerr << "resource bound exceeded: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const LookupError& e) {
        std::cerr << "lookup error: " << e.what() << "\n";
        return 2;
    } catch (const QuantaleTypeError& e) {
        std::cerr << "type error: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "contract error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
