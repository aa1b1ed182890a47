// ipslab: run one experiment from an INI config and write a JSON report.
//
// Exit codes: 0 success, 2 config or validation error, 3 statistical
// acceptance failure under --assert.

#include "ips/config.hpp"
#include "ips/couplings.hpp"
#include "ips/experiments.hpp"
#include "ips/report.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace ips;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAssert = 3;

struct Overrides
{
    std::string config;
    std::optional<std::uint64_t> seed, reps;
    std::optional<double> horizon;
    std::optional<int> workers;
    bool assert_ok = false;
    std::string out;
};

struct Outcome
{
    Json params = Json::object();
    Json results = Json::object();
    bool accepted = true;
    std::string csv;          ///< optional table written next to the report
    std::string csv_suffix;
};

std::vector<double> horizons_of(const ExperimentConfig& c)
{
    return c.horizons.empty() ? std::vector<double>{c.horizon} : c.horizons;
}

ModelParams model_of(const ExperimentConfig& c)
{
    ModelParams m{c.model, c.p, c.v, c.R};
    m.method = c.method == "gillespie" ? DualMethod::gillespie : DualMethod::constructive;
    return m;
}

Json common_params(const ExperimentConfig& c, const Topology& g)
{
    return Json{{"graph", g.describe()}, {"model", to_string(c.model)}, {"p", c.p}, {"v", c.v}, {"R", c.R},
                {"alpha", c.alpha}, {"reps", c.reps}, {"horizon", c.horizon}};
}

Outcome run_simulate(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    SimOptions opt;
    opt.horizon = c.horizon;
    opt.snapshot_times = c.horizons;
    auto one = [&](std::uint64_t rep) {
        const SiteConfig eta0 = initial_sites(c, g, seeds, rep);
        switch (c.model)
        {
        case Model::voter:
            return simulate_voter(g, eta0, c.R, opt, seeds, rep);
        case Model::stirring:
            return simulate_stirring(g, eta0, c.v, opt, seeds, rep);
        case Model::vmdyn:
            break;
        }
        return simulate_vmdyn(g, JointState{eta0, initial_edges(c, g, seeds, rep)}, c.p, c.v, c.R, opt, seeds, rep);
    };
    const auto stats = run_replicas(c.reps, workers, [&](std::uint64_t rep) {
        const Trajectory t = one(rep);
        double ones = 0.0;
        for (auto x : t.final_state.eta)
            ones += x;
        return std::pair<double, double>{ones / static_cast<double>(t.final_state.eta.size()),
                                         t.consensus_time <= c.horizon ? 1.0 : 0.0};
    });
    Accumulator density;
    std::uint64_t consensus = 0;
    for (const auto& [d, k] : stats)
    {
        density.add(d);
        consensus += static_cast<std::uint64_t>(k);
    }
    const Trajectory first = one(0);
    Outcome o;
    o.params = common_params(c, g);
    o.params["eta0"] = c.eta0;
    o.results = Json{{"final_density", to_json(normal_estimate(density))},
                     {"consensus_by_horizon", to_json(wilson(consensus, c.reps))},
                     {"replica_0", Json::parse(trajectory_json(g, first))}};
    o.csv = snapshot_csv(g, first.final_state.eta);
    o.csv_suffix = "_snapshot.csv";
    return o;
}

Outcome run_duality(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    DualityQuery q;
    q.eta0 = initial_sites(c, g, seeds);
    if (c.model == Model::vmdyn)
        q.zeta0 = initial_edges(c, g, seeds);
    q.C = c.sites;
    q.E = c.open_edges;
    q.F = c.closed_edges;
    q.p = c.p;
    q.v = c.v;
    q.R = c.R;
    q.t = c.t;
    q.N = c.reps;
    q.exact = c.exact;
    q.workers = workers;
    q.method = model_of(c).method;
    DualityReport r;
    if (c.model == Model::voter)
        r = duality_check_voter(g, q, seeds);
    else if (c.model == Model::stirring)
        r = duality_check_stirring(g, q, seeds);
    else
        r = duality_check_vmdyn(g, q, seeds);
    Outcome o;
    o.params = common_params(c, g);
    o.params["t"] = c.t;
    o.results = to_json(r);
    o.accepted = r.pass;
    return o;
}

Outcome run_mu(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    CorrelationQuery q;
    q.C = c.sites;
    q.E = c.open_edges;
    q.F = c.closed_edges;
    q.alpha = c.alpha;
    q.t_star = c.t_star;
    q.N = c.reps;
    q.workers = workers;
    const CorrelationReport r = estimate_mu_correlation(g, model_of(c), q, seeds);
    Outcome o;
    o.params = common_params(c, g);
    o.params["t_star"] = c.t_star;
    o.results = to_json(r);
    return o;
}

Outcome run_collision(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    Outcome o;
    o.params = common_params(c, g);
    o.params["walk"] = c.walk;
    if (c.walk == "static")
    {
        const DecayReport r = meeting_decay_check(c.topology.d, c.ell, c.distances, c.horizon, c.reps, seeds, workers);
        o.results = to_json(r);
        o.accepted = r.decreasing && r.fit.slope < 0.0;
        return o;
    }
    CollisionParams cp;
    cp.p = c.p;
    cp.v = c.v;
    cp.R = c.R;
    cp.ell = c.ell;
    cp.env = c.env;
    cp.N = c.reps;
    cp.workers = workers;
    const CollisionReport r = collision_experiment(g, *c.x, *c.y, horizons_of(c), cp, seeds);
    o.params["env"] = c.env == EnvMode::single ? "single" : "separate";
    o.params["ell"] = c.ell;
    o.results = to_json(r);
    for (std::size_t i = 1; i < r.hit.size(); ++i)
        o.accepted = o.accepted && (r.horizons[i] < r.horizons[i - 1] || r.hit[i].mean >= r.hit[i - 1].mean);
    return o;
}

Outcome run_regen(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    const RegenerationReport r = regeneration_experiment(g, *c.x, *c.y, c.p, c.v, c.R,
                                                         static_cast<int>(std::floor(c.horizon)), c.reps, seeds, workers);
    Outcome o;
    o.params = common_params(c, g);
    o.results = to_json(r);
    o.accepted = r.ks_gaps.p_value >= 0.01 && r.ks_increments.p_value >= 0.01 && r.tail_fit.slope_ci_high < 0.0;
    return o;
}

Outcome run_mixing(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    const MixingReport r = mixing_check(g, c.sites, c.sites, c.open_edges, c.open_edges, c.alpha, c.shifts,
                                        model_of(c), c.t_star, c.reps, seeds, workers);
    Outcome o;
    o.params = common_params(c, g);
    o.params["t_star"] = c.t_star;
    o.results = to_json(r);
    for (std::size_t i = 1; i < r.gap.size(); ++i)
        o.accepted = o.accepted && std::abs(r.gap[i].mean) < std::abs(r.gap[i - 1].mean);
    const Estimate& last = r.gap.back();
    o.accepted = o.accepted && last.ci_low <= 0.0 && 0.0 <= last.ci_high;
    return o;
}

Outcome run_couple_check(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    Outcome o;
    o.params = common_params(c, g);
    o.params["coupling"] = c.coupling;
    if (c.coupling == "containment")
    {
        const ContainmentSummary s = containment_experiment(g, c.sites, c.horizon, c.reps, seeds, c.R, workers);
        o.results = to_json(s);
        o.accepted = s.violations == 0;
    }
    else if (c.coupling == "single-separate")
    {
        std::vector<int> distances = c.distances;
        if (distances.empty() && c.x && c.y)
            distances.push_back(g.distance(*c.x, *c.y));
        if (distances.empty())
            throw ConfigError({"missing required field 'query.distances'"});
        Json rows = Json::array();
        for (int k : distances)
        {
            const SingleSeparateSummary s =
                single_separate_experiment(g, k, c.p, c.v, c.R, c.horizon, c.reps, seeds, workers);
            rows.push_back(to_json(s));
            o.accepted = o.accepted && s.bound_holds;
        }
        o.results = Json{{"by_distance", rows}};
    }
    else
    {
        const bool collisions = c.coupling == "collision-identity";
        const RateTable r1 = collisions ? independent_set_rates(g, c.v, false) : stirring_set_rates(g, c.v);
        const RateTable r2 = independent_set_rates(g, c.v, true);
        std::function<double(const SetState&)> alt;
        if (collisions)
            alt = [&](const SetState& s) { return 2.0 * (1.0 + c.v) * phi_edge_count(g, s); };
        const IdentityReport r = martingale_identity_check(r1, r2, c.sites, c.horizon, c.reps, seeds, alt);
        o.results = to_json(r);
        o.accepted = collisions ? r.alt_within : r.within;
    }
    return o;
}

Outcome run_exchangeability(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    const ExchangeabilityReport r =
        exchangeability_check(g, c.shapes, c.alpha, model_of(c), c.t_star, c.reps, seeds, workers);
    Outcome o;
    o.params = common_params(c, g);
    o.params["t_star"] = c.t_star;
    o.results = to_json(r);
    o.accepted = r.overlap;
    return o;
}

Outcome run_tree_measure(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int)
{
    const TreeMeasure r = tree_branch_measure(g, c.tree_x, c.branches, c.horizon, c.reps, seeds);
    Outcome o;
    o.params = Json{{"graph", g.describe()}, {"branches", c.branches}, {"x", c.tree_x}, {"horizon", c.horizon},
                    {"reps", c.reps}};
    o.results = to_json(r);
    return o;
}

Outcome dispatch(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds, int workers)
{
    if (c.kind == "simulate")
        return run_simulate(c, g, seeds, workers);
    if (c.kind == "duality")
        return run_duality(c, g, seeds, workers);
    if (c.kind == "mu")
        return run_mu(c, g, seeds, workers);
    if (c.kind == "collision")
        return run_collision(c, g, seeds, workers);
    if (c.kind == "regen")
        return run_regen(c, g, seeds, workers);
    if (c.kind == "mixing")
        return run_mixing(c, g, seeds, workers);
    if (c.kind == "couple-check")
        return run_couple_check(c, g, seeds, workers);
    if (c.kind == "exchangeability")
        return run_exchangeability(c, g, seeds, workers);
    return run_tree_measure(c, g, seeds, workers);
}

void print_problems(const std::vector<std::string>& problems)
{
    for (const auto& p : problems)
        std::cerr << "error: " << p << "\n";
}

int run(const std::string& kind, const Overrides& ov)
{
    ExperimentConfig c;
    try
    {
        c = load_config(ov.config);
    }
    catch (const ConfigError& e)
    {
        print_problems(e.problems());
        return kExitConfig;
    }
    c.kind = kind;
    if (ov.seed)
        c.seed = *ov.seed;
    if (ov.reps)
        c.reps = *ov.reps;
    if (ov.horizon)
        c.horizon = *ov.horizon;
    if (ov.workers)
        c.workers = *ov.workers;
    if (!ov.out.empty())
        c.out = ov.out;
    if (const auto problems = validate(c); !problems.empty())
    {
        print_problems(problems);
        return kExitConfig;
    }

    const int workers = c.workers > 0 ? c.workers : default_workers();
    const SeedScheme seeds{c.seed};
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try
    {
        o = dispatch(c, make_topology(c.topology), seeds, workers);
    }
    catch (const ConfigError& e)
    {
        print_problems(e.problems());
        return kExitConfig;
    }
    catch (const std::invalid_argument& e)
    {
        // domain errors raised while setting up the run
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    RunManifest m;
    m.config = config_echo(c);
    m.master_seed = c.seed;
    m.workers = workers;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string text = dump_report(make_report(kind, o.params, o.results, o.accepted, m)) + "\n";

    if (c.out.empty())
        std::cout << text;
    else
    {
        std::filesystem::path path(c.out);
        if (path.extension() != ".json")
            path /= kind + ".json";
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream(path) << text;
        if (!o.csv.empty())
        {
            std::filesystem::path csv = path;
            csv.replace_filename(path.stem().string() + o.csv_suffix);
            std::ofstream(csv) << o.csv;
        }
        std::cerr << "report written to " << path.string() << "\n";
    }
    if (ov.assert_ok && !o.accepted)
    {
        std::cerr << "acceptance check failed\n";
        return kExitAssert;
    }
    return kExitOk;
}

int validate_only(const std::string& path)
{
    try
    {
        const ExperimentConfig c = load_config(path);
        if (const auto problems = validate(c); !problems.empty())
        {
            print_problems(problems);
            return kExitConfig;
        }
    }
    catch (const ConfigError& e)
    {
        print_problems(e.problems());
        return kExitConfig;
    }
    std::cout << "ok\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exact simulation and duality checks for voter-type interacting particle systems"};
    app.require_subcommand(1);

    static const std::vector<std::pair<std::string, std::string>> kinds{
        {"simulate", "forward simulation on a finite graph"},
        {"duality", "duality identity, exact and Monte Carlo"},
        {"mu", "correlation of the stationary measure via the dual"},
        {"collision", "two-walker collision probabilities"},
        {"regen", "regeneration times of a walker pair"},
        {"mixing", "decay of correlations under shifts"},
        {"couple-check", "coupling checks and martingale identities"},
        {"exchangeability", "correlations of translated or permuted shapes"},
        {"tree-measure", "branch measure on the regular tree"},
    };
    Overrides ov;
    std::string chosen;
    for (const auto& [name, help] : kinds)
    {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", ov.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", ov.seed, "master seed");
        sub->add_option("--reps", ov.reps, "replica count");
        sub->add_option("--horizon", ov.horizon, "time horizon");
        sub->add_option("--workers", ov.workers, "worker threads (default: logical cores)");
        sub->add_flag("--assert", ov.assert_ok, "exit 3 when the acceptance check fails");
        sub->add_option("--out", ov.out, "report path (.json) or directory");
        sub->callback([&chosen, n = name] { chosen = n; });
    }
    std::string vpath;
    CLI::App* val = app.add_subcommand("validate", "check a config without running it");
    val->add_option("config", vpath, "experiment config (INI)")->required();
    val->callback([&chosen] { chosen = "validate"; });

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    if (chosen == "validate")
        return validate_only(vpath);
    return run(chosen, ov);
}
