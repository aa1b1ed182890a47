#include "ips/exact.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ips::exact
{

namespace
{

struct Tables
{
    std::vector<Vertex> verts;
    std::vector<Edge> edges;
    std::size_t n = 0;
    std::size_t m = 0;

    explicit Tables(const Topology& g)
    {
        if (!g.finite() || g.kind() == TopologyKind::tree)
            throw UnsupportedTopology("exact generators need a finite coordinate topology");
        verts = g.vertices();
        edges = g.edges();
        n = verts.size();
        m = edges.size();
    }

    std::size_t edge_index(const Edge& e) const
    {
        const auto it = std::lower_bound(edges.begin(), edges.end(), e);
        if (it == edges.end() || !(*it == e))
            throw DomainError("edge " + to_string(e) + " is not in the graph");
        return static_cast<std::size_t>(it - edges.begin());
    }
};

void check_states(std::size_t states)
{
    if (states > kMaxStates)
        throw DomainError("exact state space too large: " + std::to_string(states) + " states");
}

bool bit(std::uint64_t mask, std::size_t i)
{
    return ((mask >> i) & 1u) != 0;
}

/// (target vertex index, rate) pairs of the walk / copy kernel at x.
std::vector<std::pair<std::size_t, double>> kernel(const Topology& g, const Tables& tb, std::size_t x, int R)
{
    std::vector<std::pair<std::size_t, double>> out;
    if (R == 1)
    {
        const auto nb = neighbors(g, tb.verts[x]);
        for (const auto& y : nb)
            out.emplace_back(g.index_of(y), 1.0 / static_cast<double>(nb.size()));
        return out;
    }
    const double rate = 1.0 / static_cast<double>(ball_geometry(g.dim(), R).size() - 1);
    for (const auto& y : l1_ball(g, tb.verts[x], R))
        if (!same_vertex(y, tb.verts[x]))
            out.emplace_back(g.index_of(y), rate);
    return out;
}

} // namespace

Generator<double> voter(const Topology& g, int R)
{
    const Tables tb(g);
    const std::size_t S = std::size_t{1} << tb.n;
    check_states(S);
    Generator<double> q(static_cast<Eigen::Index>(S));
    for (std::size_t x = 0; x < tb.n; ++x)
        for (const auto& [y, rate] : kernel(g, tb, x, R))
            for (std::size_t s = 0; s < S; ++s)
            {
                const std::size_t t = bit(s, y) ? (s | (std::size_t{1} << x)) : (s & ~(std::size_t{1} << x));
                q.add(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t), rate);
            }
    return q;
}

Generator<double> stirring(const Topology& g, double v)
{
    const Tables tb(g);
    const int deg = g.regular_degree();
    if (deg == 0)
        throw UnsupportedTopology("stirring needs a regular graph");
    const std::size_t S = std::size_t{1} << tb.n;
    check_states(S);
    Generator<double> q(static_cast<Eigen::Index>(S));
    for (std::size_t x = 0; x < tb.n; ++x)
        for (const auto& y : neighbors(g, tb.verts[x]))
        {
            const std::size_t yi = g.index_of(y);
            for (std::size_t s = 0; s < S; ++s)
            {
                const std::size_t t = bit(s, yi) ? (s | (std::size_t{1} << x)) : (s & ~(std::size_t{1} << x));
                q.add(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t), 1.0 / deg);
            }
        }
    for (const auto& e : tb.edges)
    {
        const std::size_t a = g.index_of(e.lo), b = g.index_of(e.hi);
        for (std::size_t s = 0; s < S; ++s)
        {
            std::size_t t = s & ~((std::size_t{1} << a) | (std::size_t{1} << b));
            if (bit(s, a))
                t |= std::size_t{1} << b;
            if (bit(s, b))
                t |= std::size_t{1} << a;
            q.add(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t), v / deg);
        }
    }
    return q;
}

Generator<double> vmdyn(const Topology& g, double p, double v, int R)
{
    const Tables tb(g);
    const std::size_t S = std::size_t{1} << (tb.n + tb.m);
    check_states(S);
    const double rate = 1.0 / static_cast<double>(ball_geometry(g.dim(), R).size() - 1);
    Generator<double> q(static_cast<Eigen::Index>(S));
    const std::size_t etas = std::size_t{1} << tb.n;
    for (std::size_t s = 0; s < S; ++s)
    {
        const std::size_t eta = s & (etas - 1);
        const std::size_t zeta = s >> tb.n;
        auto open = [&](const Edge& e) { return bit(zeta, tb.edge_index(e)); };
        for (std::size_t x = 0; x < tb.n; ++x)
            for (const auto& y : l1_ball(g, tb.verts[x], R))
            {
                if (same_vertex(y, tb.verts[x]) || !connected_in_ball(g, open, tb.verts[x], y, R))
                    continue;
                const std::size_t yi = g.index_of(y);
                const std::size_t e2 = bit(eta, yi) ? (eta | (std::size_t{1} << x)) : (eta & ~(std::size_t{1} << x));
                q.add(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(e2 | (zeta << tb.n)), rate);
            }
        for (std::size_t e = 0; e < tb.m; ++e)
        {
            const std::size_t flipped = s ^ (std::size_t{1} << (tb.n + e));
            q.add(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(flipped),
                  bit(zeta, e) ? v * (1.0 - p) : v * p);
        }
    }
    return q;
}

Generator<double> coalescing_sets(const Topology& g, int R)
{
    const Tables tb(g);
    const std::size_t S = std::size_t{1} << tb.n;
    check_states(S);
    Generator<double> q(static_cast<Eigen::Index>(S));
    for (std::size_t A = 0; A < S; ++A)
        for (std::size_t x = 0; x < tb.n; ++x)
        {
            if (!bit(A, x))
                continue;
            for (const auto& [y, rate] : kernel(g, tb, x, R))
            {
                const std::size_t B = (A & ~(std::size_t{1} << x)) | (std::size_t{1} << y);
                q.add(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(B), rate);
            }
        }
    return q;
}

Generator<double> stirring_sets(const Topology& g, double v)
{
    const Tables tb(g);
    const int deg = g.regular_degree();
    if (deg == 0)
        throw UnsupportedTopology("stirring needs a regular graph");
    const std::size_t S = std::size_t{1} << tb.n;
    check_states(S);
    Generator<double> q(static_cast<Eigen::Index>(S));
    for (std::size_t A = 0; A < S; ++A)
        for (std::size_t x = 0; x < tb.n; ++x)
        {
            if (!bit(A, x))
                continue;
            const std::size_t without = A & ~(std::size_t{1} << x);
            for (const auto& y : neighbors(g, tb.verts[x]))
            {
                const std::size_t yi = g.index_of(y);
                if (bit(A, yi))
                    q.add(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(without), 1.0 / deg);
                else
                    q.add(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(without | (std::size_t{1} << yi)),
                          (v + 1.0) / deg);
            }
        }
    return q;
}

std::size_t DualSpace::size() const
{
    std::size_t s = std::size_t{1} << n;
    for (std::size_t i = 0; i < m; ++i)
        s *= 3;
    return s;
}

std::size_t DualSpace::index(std::uint32_t C, std::uint32_t E, std::uint32_t F) const
{
    std::size_t code = 0;
    for (std::size_t i = m; i-- > 0;)
        code = code * 3 + (bit(E, i) ? 1 : bit(F, i) ? 2 : 0);
    return (code << n) | C;
}

void DualSpace::decode(std::size_t idx, std::uint32_t& C, std::uint32_t& E, std::uint32_t& F) const
{
    C = static_cast<std::uint32_t>(idx & ((std::size_t{1} << n) - 1));
    std::size_t code = idx >> n;
    E = F = 0;
    for (std::size_t i = 0; i < m; ++i)
    {
        const std::size_t d = code % 3;
        code /= 3;
        if (d == 1)
            E |= 1u << i;
        else if (d == 2)
            F |= 1u << i;
    }
}

DualSpace dual_space(const Topology& g)
{
    const Tables tb(g);
    DualSpace sp{tb.n, tb.m};
    check_states(sp.size());
    return sp;
}

Generator<double> dual_chain(const Topology& g, double p, double v, int R)
{
    const Tables tb(g);
    const DualSpace sp = dual_space(g);
    const double rate = 1.0 / static_cast<double>(ball_geometry(g.dim(), R).size() - 1);
    Generator<double> q(static_cast<Eigen::Index>(sp.size()));
    for (std::size_t s = 0; s < sp.size(); ++s)
    {
        std::uint32_t C, E, F;
        sp.decode(s, C, E, F);
        for (std::size_t e = 0; e < tb.m; ++e)
            if (bit(E | F, e))
                q.add(static_cast<Eigen::Index>(s),
                      static_cast<Eigen::Index>(sp.index(C, E & ~(1u << e), F & ~(1u << e))), v);
        for (std::size_t x = 0; x < tb.n; ++x)
        {
            if (!bit(C, x))
                continue;
            std::vector<std::size_t> fresh;
            for (const auto& e : ball_edges(g, tb.verts[x], R))
            {
                const std::size_t k = tb.edge_index(e);
                if (!bit(E | F, k))
                    fresh.push_back(k);
            }
            for (const auto& y : l1_ball(g, tb.verts[x], R))
            {
                if (same_vertex(y, tb.verts[x]))
                    continue;
                const std::size_t yi = g.index_of(y);
                for (std::uint32_t part = 0; part < (1u << fresh.size()); ++part)
                {
                    std::uint32_t E2 = E, F2 = F;
                    double w = rate;
                    for (std::size_t b = 0; b < fresh.size(); ++b)
                    {
                        if (bit(part, b))
                        {
                            E2 |= 1u << fresh[b];
                            w *= p;
                        }
                        else
                        {
                            F2 |= 1u << fresh[b];
                            w *= 1.0 - p;
                        }
                    }
                    auto open = [&](const Edge& e) { return bit(E2, tb.edge_index(e)); };
                    std::uint32_t C2 = C;
                    if (connected_in_ball(g, open, tb.verts[x], y, R))
                        C2 = (C & ~(1u << x)) | (1u << yi);
                    q.add(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(sp.index(C2, E2, F2)), w);
                }
            }
        }
    }
    return q;
}

std::uint32_t vertex_mask(const Topology& g, const std::vector<Vertex>& set)
{
    std::uint32_t mask = 0;
    for (const auto& x : set)
        mask |= 1u << g.index_of(x);
    return mask;
}

std::uint32_t edge_mask(const Topology& g, const std::vector<Edge>& set)
{
    const Tables tb(g);
    std::uint32_t mask = 0;
    for (const auto& e : set)
        mask |= 1u << tb.edge_index(e);
    return mask;
}

} // namespace ips::exact
