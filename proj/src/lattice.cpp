#include "ips/lattice.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_set>

namespace ips
{

namespace
{

void check_dim(int d)
{
    if (d < 1 || d > kMaxDim)
        throw DomainError("dimension must lie in [1," + std::to_string(kMaxDim) + "]");
}

int wrap(int a, int side)
{
    const int r = a % side;
    return r < 0 ? r + side : r;
}

} // namespace

Vertex make_vertex(std::initializer_list<int> coords)
{
    check_dim(static_cast<int>(coords.size()));
    Vertex v(static_cast<Eigen::Index>(coords.size()));
    Eigen::Index i = 0;
    for (int c : coords)
        v(i++) = c;
    return v;
}

Vertex origin(int d)
{
    check_dim(d);
    return Vertex::Zero(d);
}

Vertex unit_vector(int d, int axis, int sign)
{
    Vertex v = origin(d);
    v(axis) = sign;
    return v;
}

bool same_vertex(const Vertex& a, const Vertex& b)
{
    return a.size() == b.size() && (a.array() == b.array()).all();
}

bool lex_less(const Vertex& a, const Vertex& b)
{
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

int l1_norm(const Vertex& v)
{
    return v.cwiseAbs().sum();
}

std::string to_string(const Vertex& v)
{
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i)
        os << (i ? "," : "") << v(i);
    os << ')';
    return os.str();
}

std::uint64_t vertex_key(const Vertex& v)
{
    std::uint64_t h = mix64(static_cast<std::uint64_t>(v.size()) + 0x51ed270b27f4c0a5ULL);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(v(i))));
    return h;
}

Edge make_edge(const Vertex& a, const Vertex& b)
{
    if (lex_less(b, a))
        return Edge{b, a};
    return Edge{a, b};
}

bool operator==(const Edge& a, const Edge& b)
{
    return same_vertex(a.lo, b.lo) && same_vertex(a.hi, b.hi);
}

bool operator<(const Edge& a, const Edge& b)
{
    if (lex_less(a.lo, b.lo))
        return true;
    if (lex_less(b.lo, a.lo))
        return false;
    return lex_less(a.hi, b.hi);
}

std::uint64_t edge_key(const Edge& e)
{
    return mix64(vertex_key(e.lo) * 0x9e3779b97f4a7c15ULL ^ vertex_key(e.hi));
}

std::string to_string(const Edge& e)
{
    return "{" + to_string(e.lo) + "," + to_string(e.hi) + "}";
}

// ---------------------------------------------------------------- Topology

Topology Topology::torus(int d, int side)
{
    check_dim(d);
    if (side < 3)
        throw DomainError("torus side must be at least 3");
    Topology t;
    t.kind_ = TopologyKind::torus;
    t.dim_ = d;
    t.side_ = side;
    return t;
}

Topology Topology::lattice(int d)
{
    check_dim(d);
    Topology t;
    t.kind_ = TopologyKind::lattice;
    t.dim_ = d;
    return t;
}

Topology Topology::box(int d, int side)
{
    check_dim(d);
    if (side < 1)
        throw DomainError("box side must be positive");
    Topology t;
    t.kind_ = TopologyKind::box;
    t.dim_ = d;
    t.side_ = side;
    return t;
}

Topology Topology::comb(int width, int height)
{
    if (width < 0 || height < 0)
        throw DomainError("comb caps must be non-negative");
    if ((width == 0) != (height == 0))
        throw DomainError("comb caps must be both set or both zero");
    Topology t;
    t.kind_ = TopologyKind::comb;
    t.dim_ = 2;
    t.comb_width_ = width;
    t.comb_height_ = height;
    return t;
}

Topology Topology::regular_tree(int degree, int depth)
{
    if (degree < 2)
        throw DomainError("tree degree must be at least 2");
    if (depth < -1)
        throw DomainError("tree depth must be non-negative or -1 for infinite");
    Topology t;
    t.kind_ = TopologyKind::tree;
    t.dim_ = 0;
    t.tree_degree_ = degree;
    t.tree_depth_ = depth;
    return t;
}

bool Topology::finite() const
{
    switch (kind_)
    {
    case TopologyKind::torus:
    case TopologyKind::box:
        return true;
    case TopologyKind::lattice:
        return false;
    case TopologyKind::comb:
        return comb_width_ > 0;
    case TopologyKind::tree:
        return tree_depth_ >= 0;
    }
    return false;
}

bool Topology::has_balls() const
{
    return kind_ == TopologyKind::torus || kind_ == TopologyKind::lattice || kind_ == TopologyKind::box;
}

int Topology::regular_degree() const
{
    switch (kind_)
    {
    case TopologyKind::torus:
    case TopologyKind::lattice:
        return 2 * dim_;
    case TopologyKind::box:
    case TopologyKind::comb:
        return 0;
    case TopologyKind::tree:
        return tree_depth_ < 0 ? tree_degree_ : 0;
    }
    return 0;
}

std::string Topology::describe() const
{
    switch (kind_)
    {
    case TopologyKind::torus:
        return "torus(d=" + std::to_string(dim_) + ",side=" + std::to_string(side_) + ")";
    case TopologyKind::lattice:
        return "lattice(d=" + std::to_string(dim_) + ")";
    case TopologyKind::box:
        return "box(d=" + std::to_string(dim_) + ",side=" + std::to_string(side_) + ")";
    case TopologyKind::comb:
        return "comb(width=" + std::to_string(comb_width_) + ",height=" + std::to_string(comb_height_) + ")";
    case TopologyKind::tree:
        return "regular_tree(degree=" + std::to_string(tree_degree_) + ",depth=" + std::to_string(tree_depth_) + ")";
    }
    return "?";
}

bool Topology::contains(const Vertex& v) const
{
    if (kind_ == TopologyKind::tree || v.size() != dim_)
        return false;
    switch (kind_)
    {
    case TopologyKind::torus:
    case TopologyKind::box:
        return (v.array() >= 0).all() && (v.array() < side_).all();
    case TopologyKind::lattice:
        return true;
    case TopologyKind::comb:
        return comb_width_ == 0 || (std::abs(v(0)) <= comb_width_ && std::abs(v(1)) <= comb_height_);
    case TopologyKind::tree:
        return false;
    }
    return false;
}

Vertex Topology::canonical(const Vertex& v) const
{
    if (kind_ != TopologyKind::torus)
        return v;
    Vertex w = v;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w(i) = wrap(w(i), side_);
    return w;
}

std::optional<Vertex> Topology::translate(const Vertex& v, const Vertex& z) const
{
    Vertex w = canonical(v + z);
    if (!contains(w))
        return std::nullopt;
    return w;
}

int Topology::distance(const Vertex& a, const Vertex& b) const
{
    switch (kind_)
    {
    case TopologyKind::torus:
    {
        int s = 0;
        for (Eigen::Index i = 0; i < a.size(); ++i)
        {
            const int diff = wrap(a(i) - b(i), side_);
            s += std::min(diff, side_ - diff);
        }
        return s;
    }
    case TopologyKind::lattice:
    case TopologyKind::box:
        return (a - b).cwiseAbs().sum();
    case TopologyKind::comb:
        if (a(0) == b(0))
            return std::abs(a(1) - b(1));
        return std::abs(a(1)) + std::abs(a(0) - b(0)) + std::abs(b(1));
    case TopologyKind::tree:
        break;
    }
    throw UnsupportedTopology("distance on coordinates is undefined for " + describe());
}

void Topology::require_finite(const char* what) const
{
    if (!finite() || kind_ == TopologyKind::tree)
        throw UnsupportedTopology(std::string(what) + " needs a finite coordinate topology, got " + describe());
}

std::size_t Topology::vertex_count() const
{
    require_finite("vertex_count");
    if (kind_ == TopologyKind::comb)
        return static_cast<std::size_t>(2 * comb_width_ + 1) * static_cast<std::size_t>(2 * comb_height_ + 1);
    std::size_t n = 1;
    for (int i = 0; i < dim_; ++i)
        n *= static_cast<std::size_t>(side_);
    return n;
}

Vertex Topology::vertex_at(std::size_t index) const
{
    require_finite("vertex_at");
    if (kind_ == TopologyKind::comb)
    {
        const auto h = static_cast<std::size_t>(2 * comb_height_ + 1);
        return make_vertex({static_cast<int>(index / h) - comb_width_, static_cast<int>(index % h) - comb_height_});
    }
    Vertex v(dim_);
    for (int i = dim_ - 1; i >= 0; --i)
    {
        v(i) = static_cast<int>(index % static_cast<std::size_t>(side_));
        index /= static_cast<std::size_t>(side_);
    }
    return v;
}

std::size_t Topology::index_of(const Vertex& v) const
{
    require_finite("index_of");
    if (!contains(v))
        throw DomainError("vertex " + to_string(v) + " is not in " + describe());
    if (kind_ == TopologyKind::comb)
        return static_cast<std::size_t>(v(0) + comb_width_) * static_cast<std::size_t>(2 * comb_height_ + 1) +
               static_cast<std::size_t>(v(1) + comb_height_);
    std::size_t idx = 0;
    for (int i = 0; i < dim_; ++i)
        idx = idx * static_cast<std::size_t>(side_) + static_cast<std::size_t>(v(i));
    return idx;
}

std::vector<Vertex> Topology::vertices() const
{
    const std::size_t n = vertex_count();
    std::vector<Vertex> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(vertex_at(i));
    return out;
}

std::vector<Edge> Topology::edges() const
{
    std::vector<Edge> out;
    for (const Vertex& v : vertices())
        for (const Vertex& w : neighbors(*this, v))
            if (lex_less(v, w))
                out.push_back(Edge{v, w});
    std::sort(out.begin(), out.end());
    return out;
}

// --------------------------------------------------------------- neighbors

std::vector<Vertex> neighbors(const Topology& g, const Vertex& v)
{
    if (g.kind() == TopologyKind::tree)
        throw UnsupportedTopology("tree vertices are path labels");
    if (!g.contains(v))
        throw DomainError("vertex " + to_string(v) + " is not in " + g.describe());
    std::vector<Vertex> out;
    if (g.kind() == TopologyKind::comb)
    {
        for (int s : {-1, 1})
        {
            const Vertex w = make_vertex({v(0), v(1) + s});
            if (g.contains(w))
                out.push_back(w);
        }
        if (v(1) == 0)
            for (int s : {-1, 1})
            {
                const Vertex w = make_vertex({v(0) + s, 0});
                if (g.contains(w))
                    out.push_back(w);
            }
        return out;
    }
    for (int i = 0; i < g.dim(); ++i)
        for (int s : {1, -1})
            if (auto w = g.translate(v, unit_vector(g.dim(), i, s)))
                out.push_back(*w);
    return out;
}

std::vector<TreePath> neighbors(const Topology& g, const TreePath& v)
{
    if (g.kind() != TopologyKind::tree)
        throw UnsupportedTopology("path labels only address tree vertices");
    const int k = g.tree_degree();
    const int depth = static_cast<int>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        const int limit = i == 0 ? k : k - 1;
        if (v[i] < 0 || v[i] >= limit)
            throw DomainError("invalid tree path label");
    }
    if (g.tree_depth() >= 0 && depth > g.tree_depth())
        throw DomainError("tree path deeper than the tree");
    std::vector<TreePath> out;
    if (depth > 0)
        out.emplace_back(v.begin(), v.end() - 1);
    if (g.tree_depth() < 0 || depth < g.tree_depth())
    {
        const int children = depth == 0 ? k : k - 1;
        for (int c = 0; c < children; ++c)
        {
            TreePath w = v;
            w.push_back(c);
            out.push_back(std::move(w));
        }
    }
    return out;
}

// ------------------------------------------------------------------- balls

int BallGeometry::index_of(const Vertex& offset) const
{
    for (int i = 0; i < size(); ++i)
        if (same_vertex(offsets[static_cast<std::size_t>(i)], offset))
            return i;
    return -1;
}

namespace
{

std::unique_ptr<BallGeometry> build_geometry(int d, int R)
{
    auto g = std::make_unique<BallGeometry>();
    g->d = d;
    g->R = R;
    Vertex z = Vertex::Constant(d, -R);
    std::vector<Vertex> rest;
    while (true)
    {
        const int n = l1_norm(z);
        if (n > 0 && n <= R)
            rest.push_back(z);
        int i = d - 1;
        while (i >= 0 && z(i) == R)
        {
            z(i) = -R;
            --i;
        }
        if (i < 0)
            break;
        ++z(i);
    }
    std::sort(rest.begin(), rest.end(), lex_less);
    g->offsets.push_back(origin(d));
    g->offsets.insert(g->offsets.end(), rest.begin(), rest.end());
    g->adjacency.resize(g->offsets.size());
    for (int i = 0; i < g->size(); ++i)
        for (int a = 0; a < d; ++a)
        {
            const Vertex w = g->offsets[static_cast<std::size_t>(i)] + unit_vector(d, a);
            const int j = g->index_of(w);
            if (j < 0)
                continue;
            const int k = static_cast<int>(g->edges.size());
            g->edges.emplace_back(i, j);
            g->edge_lo.push_back(g->offsets[static_cast<std::size_t>(i)]);
            g->edge_hi.push_back(w);
            g->adjacency[static_cast<std::size_t>(i)].emplace_back(j, k);
            g->adjacency[static_cast<std::size_t>(j)].emplace_back(i, k);
        }
    return g;
}

} // namespace

const BallGeometry& ball_geometry(int d, int R)
{
    check_dim(d);
    if (R < 0)
        throw DomainError("ball radius must be non-negative");
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<BallGeometry>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{d, R}];
    if (!slot)
        slot = build_geometry(d, R);
    return *slot;
}

std::vector<Vertex> l1_ball(const Topology& g, const Vertex& x, int R)
{
    if (R < 0)
        throw DomainError("ball radius must be non-negative");
    if (!g.has_balls())
        throw UnsupportedTopology("l1 balls are not defined on " + g.describe());
    if (!g.contains(x))
        throw DomainError("vertex " + to_string(x) + " is not in " + g.describe());
    const BallGeometry& geo = ball_geometry(g.dim(), R);
    std::vector<Vertex> out;
    std::unordered_set<Vertex, VertexHash, VertexEq> seen;
    for (const Vertex& z : geo.offsets)
        if (auto w = g.translate(x, z))
            if (seen.insert(*w).second)
                out.push_back(*w);
    return out;
}

std::vector<Edge> ball_edges(const Topology& g, const Vertex& x, int R)
{
    const std::vector<Vertex> ball = l1_ball(g, x, R);
    std::unordered_set<Vertex, VertexHash, VertexEq> in(ball.begin(), ball.end());
    std::vector<Edge> out;
    for (const Vertex& u : ball)
        for (const Vertex& w : neighbors(g, u))
            if (lex_less(u, w) && in.count(w))
                out.push_back(Edge{u, w});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool connected_in_ball(const Topology& g, const std::function<bool(const Edge&)>& open, const Vertex& x,
                       const Vertex& y, int R)
{
    const std::vector<Vertex> ball = l1_ball(g, x, R);
    std::unordered_set<Vertex, VertexHash, VertexEq> in(ball.begin(), ball.end());
    if (!in.count(y))
        throw DomainError("target " + to_string(y) + " lies outside the ball of radius " + std::to_string(R) +
                          " around " + to_string(x));
    if (same_vertex(x, y))
        return true;
    std::unordered_set<Vertex, VertexHash, VertexEq> seen{x};
    std::vector<Vertex> stack{x};
    while (!stack.empty())
    {
        const Vertex u = stack.back();
        stack.pop_back();
        for (const Vertex& w : neighbors(g, u))
        {
            if (!in.count(w) || seen.count(w) || !open(make_edge(u, w)))
                continue;
            if (same_vertex(w, y))
                return true;
            seen.insert(w);
            stack.push_back(w);
        }
    }
    return false;
}

} // namespace ips
