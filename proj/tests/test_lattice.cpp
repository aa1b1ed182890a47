#include "doctest.h"

#include "ips/lattice.hpp"

#include <algorithm>
#include <set>

using namespace ips;

namespace
{

std::set<std::string> names(const std::vector<Vertex>& vs)
{
    std::set<std::string> out;
    for (const auto& v : vs)
        out.insert(to_string(v));
    return out;
}

std::function<bool(const Edge&)> open_set(const std::vector<Edge>& open)
{
    return [open](const Edge& e) { return std::find(open.begin(), open.end(), e) != open.end(); };
}

} // namespace

TEST_CASE("neighbors on torus, lattice and comb")
{
    const Topology t = Topology::torus(2, 5);
    CHECK(names(neighbors(t, make_vertex({0, 0}))) ==
          names({make_vertex({1, 0}), make_vertex({4, 0}), make_vertex({0, 1}), make_vertex({0, 4})}));
    CHECK(names(neighbors(Topology::lattice(1), make_vertex({7}))) == names({make_vertex({6}), make_vertex({8})}));
    const Topology comb = Topology::comb();
    CHECK(names(neighbors(comb, make_vertex({3, 2}))) == names({make_vertex({3, 1}), make_vertex({3, 3})}));
    // the spine keeps its horizontal edges
    CHECK(neighbors(comb, make_vertex({3, 0})).size() == 4);
}

TEST_CASE("box boundary and tree neighborhoods")
{
    const Topology b = Topology::box(1, 3);
    CHECK(neighbors(b, make_vertex({0})).size() == 1);
    CHECK(neighbors(b, make_vertex({1})).size() == 2);
    CHECK(b.edges().size() == 2);
    const Topology tree = Topology::regular_tree(3);
    CHECK(neighbors(tree, TreePath{}).size() == 3);
    CHECK(neighbors(tree, TreePath{0, 1}).size() == 3);
}

TEST_CASE("l1 ball sizes")
{
    const Topology z2 = Topology::lattice(2);
    CHECK(l1_ball(z2, origin(2), 1).size() == 5);
    CHECK(l1_ball(z2, origin(2), 2).size() == 13);
    CHECK(l1_ball(Topology::lattice(3), origin(3), 1).size() == 7);
    CHECK(same_vertex(l1_ball(z2, make_vertex({2, -1}), 2).front(), make_vertex({2, -1})));
}

TEST_CASE("ball edges")
{
    const auto e1 = ball_edges(Topology::lattice(1), make_vertex({0}), 1);
    REQUIRE(e1.size() == 2);
    CHECK(std::count(e1.begin(), e1.end(), make_edge(make_vertex({-1}), make_vertex({0}))) == 1);
    CHECK(std::count(e1.begin(), e1.end(), make_edge(make_vertex({0}), make_vertex({1}))) == 1);
    CHECK(ball_edges(Topology::lattice(2), origin(2), 1).size() == 4);
    CHECK(ball_edges(Topology::lattice(2), origin(2), 2).size() == 16);
    CHECK(ball_geometry(2, 2).edges.size() == 16);
}

TEST_CASE("torus wraparound and distances")
{
    const Topology t = Topology::torus(2, 5);
    CHECK(t.distance(make_vertex({0, 0}), make_vertex({4, 4})) == 2);
    CHECK(same_vertex(t.canonical(make_vertex({-1, 7})), make_vertex({4, 2})));
    CHECK(t.vertex_count() == 25);
    CHECK(t.edges().size() == 50);
    for (std::size_t i = 0; i < t.vertex_count(); ++i)
        CHECK(t.index_of(t.vertex_at(i)) == i);
    CHECK_FALSE(Topology::box(2, 3).translate(make_vertex({2, 2}), make_vertex({1, 0})).has_value());
}

TEST_CASE("connected_in_ball")
{
    const Topology z2 = Topology::lattice(2);
    const Vertex x = origin(2);
    const Vertex e1 = make_vertex({1, 0}), e2 = make_vertex({0, 1}), e12 = make_vertex({1, 1});
    auto all_open = [](const Edge&) { return true; };
    auto all_closed = [](const Edge&) { return false; };
    CHECK(connected_in_ball(z2, all_open, x, e1, 1));
    CHECK_FALSE(connected_in_ball(z2, all_closed, x, e2, 2));

    const std::vector<Edge> detour{make_edge(x, e1), make_edge(e1, e12), make_edge(e12, e2)};
    CHECK(connected_in_ball(z2, open_set(detour), x, e2, 2));
    // with R = 1 the detour leaves the ball
    CHECK_FALSE(connected_in_ball(z2, open_set(detour), x, e2, 1));
    std::vector<Edge> broken = detour;
    broken.pop_back();
    CHECK_FALSE(connected_in_ball(z2, open_set(broken), x, e2, 2));

    // d = 1, R = 2: {0,1} closed and {1,2} open, so 0 cannot reach 2
    const Topology z1 = Topology::lattice(1);
    CHECK_FALSE(connected_in_ball(z1, open_set({make_edge(make_vertex({1}), make_vertex({2}))}), make_vertex({0}),
                                  make_vertex({2}), 2));
}

TEST_CASE("invalid topologies are rejected")
{
    CHECK_THROWS_AS(Topology::torus(0, 5), DomainError);
    CHECK_THROWS_AS(Topology::torus(2, 0), DomainError);
    CHECK_THROWS(Topology::lattice(2).vertices());
}
