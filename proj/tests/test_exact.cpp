#include "doctest.h"

#include "ips/exact.hpp"
#include "ips/experiments.hpp"

#include <cmath>

using namespace ips;

namespace
{

SiteConfig sites(std::initializer_list<int> v)
{
    SiteConfig s;
    for (int x : v)
        s.push_back(static_cast<std::uint8_t>(x));
    return s;
}

Vertex v1(int a) { return make_vertex({a}); }

} // namespace

TEST_CASE("uniformization matches a two-state closed form")
{
    Generator<double> q(2);
    q.add(0, 1, 2.0);
    q.add(1, 0, 3.0);
    Eigen::VectorXd p0(2);
    p0 << 1.0, 0.0;
    for (double t : {0.1, 0.7, 5.0, 80.0})
    {
        const auto pt = q.transient(p0, t);
        const double stat = 3.0 / 5.0;
        CHECK(pt(0) == doctest::Approx(stat + (1.0 - stat) * std::exp(-5.0 * t)).epsilon(1e-10));
        CHECK(pt.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("generators have zero row sums and the expected sizes")
{
    const Topology c3 = Topology::torus(1, 3);
    CHECK(exact::voter(c3).size() == 8);
    CHECK(exact::coalescing_sets(c3).size() == 8);
    const Topology p3 = Topology::box(1, 3);
    CHECK(exact::vmdyn(p3, 0.6, 1.0, 1).size() == 32);
    CHECK(exact::dual_space(p3).size() == 8 * 9);
    const auto q = exact::dual_chain(p3, 0.6, 1.0, 1).matrix();
    const Eigen::VectorXd rows = q * Eigen::VectorXd::Ones(q.cols());
    CHECK(rows.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dual space encoding round-trips")
{
    const exact::DualSpace sp{3, 2};
    for (std::size_t i = 0; i < sp.size(); ++i)
    {
        std::uint32_t C, E, F;
        sp.decode(i, C, E, F);
        CHECK((E & F) == 0);
        CHECK(sp.index(C, E, F) == i);
    }
}

TEST_CASE("exact voter duality on the 3-cycle")
{
    const Topology c3 = Topology::torus(1, 3);
    DualityQuery q;
    q.eta0 = sites({1, 0, 0});
    q.C = {v1(0), v1(1)};
    q.t = 0.7;
    const DualityReport r = duality_check_voter(c3, q, SeedScheme{1});
    REQUIRE(r.has_exact);
    CHECK(std::abs(r.lhs_exact - r.rhs_exact) <= 1e-8);
    CHECK(r.lhs_exact > 0.0);
    CHECK(r.lhs_exact < 1.0);
    CHECK(r.pass);
}

TEST_CASE("exact duality: empty set and all-ones start give one")
{
    const Topology c3 = Topology::torus(1, 3);
    DualityQuery q;
    q.eta0 = sites({0, 1, 0});
    q.t = 0.4;
    auto r = duality_check_voter(c3, q, SeedScheme{1});
    CHECK(r.lhs_exact == doctest::Approx(1.0));
    CHECK(r.rhs_exact == doctest::Approx(1.0));
    q.eta0 = sites({1, 1, 1});
    q.C = {v1(0), v1(2)};
    r = duality_check_voter(c3, q, SeedScheme{1});
    CHECK(r.lhs_exact == doctest::Approx(1.0));
    CHECK(r.rhs_exact == doctest::Approx(1.0));
}

TEST_CASE("exact stirring duality on C3 and C4")
{
    for (int side : {3, 4})
        for (double v : {0.5, 2.0})
        {
            const Topology g = Topology::torus(1, side);
            DualityQuery q;
            q.eta0 = SiteConfig(static_cast<std::size_t>(side), 0);
            q.eta0[0] = q.eta0[1] = 1;
            q.C = {v1(1), v1(side - 1)};
            q.v = v;
            q.t = 0.9;
            const DualityReport r = duality_check_stirring(g, q, SeedScheme{2});
            REQUIRE(r.has_exact);
            CHECK(std::abs(r.lhs_exact - r.rhs_exact) <= 1e-8);
        }
}

TEST_CASE("exact weighted duality for the voter model on dynamical percolation")
{
    const Topology p3 = Topology::box(1, 3);
    const auto edges = p3.edges();
    for (double p : {0.3, 0.6})
    {
        DualityQuery q;
        q.eta0 = sites({1, 1, 0});
        q.zeta0 = {1, 0};
        q.C = {v1(1)};
        q.E = {edges[0]};
        q.p = p;
        q.v = 1.0;
        q.t = 0.5;
        const DualityReport r = duality_check_vmdyn(p3, q, SeedScheme{3});
        REQUIRE(r.has_exact);
        CHECK(std::abs(r.lhs_exact - r.rhs_exact) <= 1e-8);
        CHECK(r.lhs_exact > 0.0);
    }
}

TEST_CASE("weighted duality at t = 0 is the indicator")
{
    const Topology p3 = Topology::box(1, 3);
    const auto edges = p3.edges();
    DualityQuery q;
    q.eta0 = sites({1, 1, 0});
    q.zeta0 = {1, 0};
    q.C = {v1(0), v1(1)};
    q.E = {edges[0]};
    q.F = {edges[1]};
    q.p = 0.6;
    q.t = 0.0;
    const DualityReport r = duality_check_vmdyn(p3, q, SeedScheme{3});
    CHECK(r.lhs_exact == doctest::Approx(1.0));
    CHECK(r.rhs_exact == doctest::Approx(1.0));
}

TEST_CASE("boundary values of p with revealed edges are excluded, not skipped")
{
    const Topology p3 = Topology::box(1, 3);
    DualityQuery q;
    q.eta0 = sites({1, 1, 0});
    q.zeta0 = {1, 1};
    q.E = {p3.edges()[0]};
    q.p = 0.0;
    const DualityReport r = duality_check_vmdyn(p3, q, SeedScheme{3});
    CHECK(r.excluded);
    CHECK_FALSE(r.note.empty());
}
