#pragma once

#include "ips/experiments.hpp"
#include "ips/lattice.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ips
{

/// Parse or validation problem in an experiment config; `what()` joins all messages.
class ConfigError : public std::runtime_error
{
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct TopologySpec
{
    std::string kind;  ///< torus, lattice, box, comb, tree
    int d = 1;
    int side = 0;
    int width = 0, height = 0;
    int degree = 3, depth = -1;
};

Topology make_topology(const TopologySpec& s);

/// One experiment as read from an INI file with sections [experiment],
/// [topology], [model], [query] and [output].
struct ExperimentConfig
{
    std::string kind; ///< subcommand name
    std::uint64_t seed = 1;
    std::uint64_t reps = 1000;
    double horizon = 10.0;
    int workers = 0; ///< 0: one per logical core

    TopologySpec topology;

    Model model = Model::voter;
    double p = 0.5;
    double v = 1.0;
    int R = 1;
    double alpha = 0.5;

    std::string eta0 = "bernoulli"; ///< all0, all1, bernoulli, stripe or a 0/1 list
    std::string zeta0 = "stationary"; ///< all_open, all_closed, stationary or a 0/1 list
    std::vector<Vertex> sites;
    std::vector<Edge> open_edges, closed_edges;
    double t = 0.5;
    double t_star = 100.0;
    std::optional<Vertex> x, y;
    int ell = 0;
    std::vector<int> distances;
    std::vector<int> shifts;
    std::vector<double> horizons;
    EnvMode env = EnvMode::single;
    std::vector<std::vector<Vertex>> shapes;
    std::vector<int> branches;
    TreePath tree_x;
    std::string coupling = "containment"; ///< containment, single-separate, stirring-identity, collision-identity
    std::string walk = "flow";            ///< flow (dynamical percolation) or static
    bool exact = true;
    std::string method = "constructive";

    std::string out;
};

/// Read and type-check; unknown sections or keys and malformed values throw ConfigError.
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Every violated parameter constraint; empty when the config can run.
std::vector<std::string> validate(const ExperimentConfig& c);

/// Config echo for manifests, with all defaults filled in.
std::string config_echo(const ExperimentConfig& c);

Vertex parse_vertex(const std::string& s);
std::vector<Vertex> parse_vertex_list(const std::string& s);
Edge parse_edge(const std::string& s);

/// Initial opinions and edges described by the config for a finite graph.
SiteConfig initial_sites(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds,
                         std::uint64_t replica = 0);
EdgeConfig initial_edges(const ExperimentConfig& c, const Topology& g, const SeedScheme& seeds,
                         std::uint64_t replica = 0);

} // namespace ips
