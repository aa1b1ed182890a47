#pragma once

#include "ips/lattice.hpp"
#include "ips/markov.hpp"

#include <cstdint>
#include <vector>

namespace ips
{

/// Exact generators on small finite graphs. Site configurations and vertex
/// sets are bit masks over Topology::index_of; edge sets over Topology::edges().
namespace exact
{

inline constexpr std::size_t kMaxStates = 1u << 16;

/// Voter model (R = 1 nearest neighbor, R > 1 range R) on 2^n configurations.
Generator<double> voter(const Topology& g, int R = 1);
/// Voter model with stirring at rate v / deg per edge.
Generator<double> stirring(const Topology& g, double v);
/// Voter model on dynamical percolation; state = eta | zeta << n.
Generator<double> vmdyn(const Topology& g, double p, double v, int R);

/// Coalescing walks as a chain on vertex subsets.
Generator<double> coalescing_sets(const Topology& g, int R = 1);
/// Coalescing walks with stirring as a chain on vertex subsets.
Generator<double> stirring_sets(const Topology& g, double v);

/// Dual chain on (C, E, F) with E, F disjoint edge sets.
struct DualSpace
{
    std::size_t n = 0; ///< vertices
    std::size_t m = 0; ///< edges
    std::size_t size() const;
    std::size_t index(std::uint32_t C, std::uint32_t E, std::uint32_t F) const;
    void decode(std::size_t idx, std::uint32_t& C, std::uint32_t& E, std::uint32_t& F) const;
};

DualSpace dual_space(const Topology& g);
Generator<double> dual_chain(const Topology& g, double p, double v, int R);

/// Masks for vertex sets and edge sets.
std::uint32_t vertex_mask(const Topology& g, const std::vector<Vertex>& set);
std::uint32_t edge_mask(const Topology& g, const std::vector<Edge>& set);

} // namespace exact

} // namespace ips
