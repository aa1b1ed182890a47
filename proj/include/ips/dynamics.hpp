#pragma once

#include "ips/environment.hpp"
#include "ips/lattice.hpp"
#include "ips/randomness.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ips
{

/// Opinions indexed by Topology::index_of.
using SiteConfig = std::vector<std::uint8_t>;
/// Edge states indexed by position in Topology::edges().
using EdgeConfig = std::vector<std::uint8_t>;

struct JointState
{
    SiteConfig eta;
    EdgeConfig zeta;
};

enum class EventKind
{
    copy,
    swap,
    refresh
};

struct DynEvent
{
    double time = 0.0;
    EventKind kind = EventKind::copy;
    std::size_t a = 0; ///< copying site, swap edge or refreshed edge
    std::size_t b = 0; ///< copied site (copy events)
    bool applied = false; ///< copy allowed / swap performed / new edge state
};

struct SimOptions
{
    double horizon = 1.0;
    std::vector<double> snapshot_times;
    bool stop_at_consensus = false;
    std::function<void(const DynEvent&, const JointState&)> observer;
};

struct Trajectory
{
    std::vector<double> times;
    std::vector<SiteConfig> sites;
    std::vector<EdgeConfig> edges;
    JointState final_state;
    double end_time = 0.0;
    double consensus_time = kInf; ///< kInf when consensus was not reached by the horizon
    std::uint64_t events = 0;
};

/// R = 1: every site copies a uniform neighbor at rate 1.
/// R > 1: every ordered pair at l1 distance <= R fires at rate 1/(|B(R)| - 1).
Trajectory simulate_voter(const Topology& g, const SiteConfig& eta0, int R, const SimOptions& opt,
                          const SeedScheme& seeds, std::uint64_t replica = 0);

/// Voter model plus stirring: each edge swaps its endpoints at rate v/deg.
Trajectory simulate_stirring(const Topology& g, const SiteConfig& eta0, double v, const SimOptions& opt,
                             const SeedScheme& seeds, std::uint64_t replica = 0);

/// Dynamical percolation alone; edge e refreshes at rate v to a Ber(p) mark.
Trajectory simulate_dynperc(const Topology& g, const EdgeConfig& zeta0, double p, double v, const SimOptions& opt,
                            const SeedScheme& seeds, std::uint64_t replica = 0);

/// Voter model on dynamical percolation: x copies y (|x-y| <= R, rate
/// 1/(|B(R)|-1)) only when they are joined by open edges inside the ball around x.
Trajectory simulate_vmdyn(const Topology& g, const JointState& init, double p, double v, int R,
                          const SimOptions& opt, const SeedScheme& seeds, std::uint64_t replica = 0);

double consensus_time(const Trajectory& t);

/// Requirements on a topology for range-R dynamics; throws DomainError.
void check_ball_geometry(const Topology& g, int R);

SiteConfig constant_sites(const Topology& g, std::uint8_t value);
EdgeConfig constant_edges(const Topology& g, std::uint8_t value);
EdgeConfig stationary_edges(const Topology& g, double p, const SeedScheme& seeds, std::uint64_t replica = 0);

std::string snapshot_csv(const Topology& g, const SiteConfig& eta);
std::string trajectory_json(const Topology& g, const Trajectory& t);

} // namespace ips
