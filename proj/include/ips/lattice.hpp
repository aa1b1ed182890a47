#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ips
{

inline constexpr int kMaxDim = 4;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Integer coordinates, stack allocated, runtime length 1..kMaxDim.
using Vertex = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

/// Path-from-root label of a regular tree vertex; empty is the root.
using TreePath = std::vector<int>;

struct DomainError : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedTopology : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

Vertex make_vertex(std::initializer_list<int> coords);
Vertex origin(int d);
Vertex unit_vector(int d, int axis, int sign = 1);

bool same_vertex(const Vertex& a, const Vertex& b);
bool lex_less(const Vertex& a, const Vertex& b);
int l1_norm(const Vertex& v);
std::string to_string(const Vertex& v);
std::uint64_t vertex_key(const Vertex& v);

/// Undirected edge with lo < hi lexicographically.
struct Edge
{
    Vertex lo;
    Vertex hi;
};

Edge make_edge(const Vertex& a, const Vertex& b);
bool operator==(const Edge& a, const Edge& b);
bool operator<(const Edge& a, const Edge& b);
std::uint64_t edge_key(const Edge& e);
std::string to_string(const Edge& e);

struct VertexHash
{
    std::size_t operator()(const Vertex& v) const { return vertex_key(v); }
};
struct VertexEq
{
    bool operator()(const Vertex& a, const Vertex& b) const { return same_vertex(a, b); }
};
struct EdgeHash
{
    std::size_t operator()(const Edge& e) const { return edge_key(e); }
};

enum class TopologyKind
{
    torus,
    lattice,
    box,
    comb,
    tree
};

/// Graph on which the processes live. A comb with width/height 0 is uncapped.
class Topology
{
public:
    static Topology torus(int d, int side);
    static Topology lattice(int d);
    static Topology box(int d, int side);
    static Topology comb(int width = 0, int height = 0);
    static Topology regular_tree(int degree, int depth = -1);

    TopologyKind kind() const { return kind_; }
    int dim() const { return dim_; }
    int side() const { return side_; }
    int comb_width() const { return comb_width_; }
    int comb_height() const { return comb_height_; }
    int tree_degree() const { return tree_degree_; }
    int tree_depth() const { return tree_depth_; }

    bool finite() const;
    /// True for torus, lattice and box: the ones with l1 balls.
    bool has_balls() const;
    /// Degree when every vertex has the same degree, otherwise 0.
    int regular_degree() const;
    std::string describe() const;

    bool contains(const Vertex& v) const;
    /// Torus coordinates reduced mod side; identity elsewhere.
    Vertex canonical(const Vertex& v) const;
    /// v + z reduced to canonical form, or nothing when it leaves the graph.
    std::optional<Vertex> translate(const Vertex& v, const Vertex& z) const;
    /// Graph distance (l1 with wraparound on the torus).
    int distance(const Vertex& a, const Vertex& b) const;

    std::size_t vertex_count() const;
    std::vector<Vertex> vertices() const;
    std::size_t index_of(const Vertex& v) const;
    Vertex vertex_at(std::size_t index) const;
    std::vector<Edge> edges() const;

private:
    TopologyKind kind_ = TopologyKind::lattice;
    int dim_ = 1;
    int side_ = 0;
    int comb_width_ = 0;
    int comb_height_ = 0;
    int tree_degree_ = 0;
    int tree_depth_ = -1;

    void require_finite(const char* what) const;
};

std::vector<Vertex> neighbors(const Topology& g, const Vertex& v);
std::vector<TreePath> neighbors(const Topology& g, const TreePath& v);

/// Vertices within l1 distance R of x, x first.
std::vector<Vertex> l1_ball(const Topology& g, const Vertex& x, int R);
/// Edges with both endpoints in the l1 ball of radius R around x.
std::vector<Edge> ball_edges(const Topology& g, const Vertex& x, int R);

/// Shape of B(0,R) in Z^d with local edge indices. Offsets[0] is the origin.
struct BallGeometry
{
    int d = 0;
    int R = 0;
    std::vector<Vertex> offsets;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<std::pair<int, int>>> adjacency; // (offset, edge)
    std::vector<Vertex> edge_lo;                              // lo offset of each edge
    std::vector<Vertex> edge_hi;

    int size() const { return static_cast<int>(offsets.size()); }
    int index_of(const Vertex& offset) const;
};

const BallGeometry& ball_geometry(int d, int R);

/// BFS from offset 0 to `target` using local edges for which open(k) holds
/// and whose endpoints satisfy present(i).
template <class Present, class Open>
bool local_connected(const BallGeometry& g, int target, Present&& present, Open&& open)
{
    if (target == 0)
        return true;
    const int n = g.size();
    std::vector<char> seen_big;
    std::uint64_t seen = 1;
    if (n > 64)
    {
        seen_big.assign(static_cast<std::size_t>(n), 0);
        seen_big[0] = 1;
    }
    auto visited = [&](int w) { return n > 64 ? seen_big[static_cast<std::size_t>(w)] != 0 : ((seen >> w) & 1u) != 0; };
    auto mark = [&](int w) {
        if (n > 64)
            seen_big[static_cast<std::size_t>(w)] = 1;
        else
            seen |= std::uint64_t{1} << w;
    };
    std::vector<int> stack;
    stack.reserve(static_cast<std::size_t>(n));
    stack.push_back(0);
    while (!stack.empty())
    {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& [w, k] : g.adjacency[static_cast<std::size_t>(u)])
        {
            if (visited(w) || !present(w) || !open(k))
                continue;
            if (w == target)
                return true;
            mark(w);
            stack.push_back(w);
        }
    }
    return false;
}

/// Is there an open path from x to y using only edges of the ball around x?
bool connected_in_ball(const Topology& g, const std::function<bool(const Edge&)>& open, const Vertex& x,
                       const Vertex& y, int R);

} // namespace ips
