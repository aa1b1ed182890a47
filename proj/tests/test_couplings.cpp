#include "doctest.h"

#include "ips/couplings.hpp"
#include "ips/markov.hpp"

#include <cmath>

using namespace ips;

namespace
{

Vertex at(int d, int k)
{
    Vertex z = origin(d);
    z(0) = k;
    return z;
}

} // namespace

TEST_CASE("edge counts inside a set")
{
    const Topology z2 = Topology::lattice(2);
    CHECK(phi_edge_count(z2, {origin(2)}) == 0);
    CHECK(phi_edge_count(z2, {origin(2), make_vertex({1, 0})}) == 1);
    CHECK(phi_edge_count(z2, {origin(2), make_vertex({1, 0}), make_vertex({0, 1}), make_vertex({1, 1})}) == 4);
    CHECK(phi_edge_count(z2, {origin(2), make_vertex({2, 0})}) == 0);
}

TEST_CASE("coalescing walkers stay inside the independent ones")
{
    const Topology g = Topology::torus(2, 5);
    const SeedScheme s{1};
    const auto lone = couple_coalescing_independent(g, {origin(2)}, 20.0, s);
    CHECK_FALSE(lone.coalesced);
    CHECK(lone.violations == 0);
    std::uint64_t checks = 0;
    for (std::uint64_t r = 0; r < 2000; ++r)
    {
        const auto res =
            couple_coalescing_independent(g, {make_vertex({0, 0}), make_vertex({1, 0}), make_vertex({3, 3})}, 10.0, s, r);
        CHECK(res.violations == 0);
        checks += res.checks;
    }
    CHECK(checks > 2000);
}

TEST_CASE("coalescence probability against the exact pair chain on torus(2,5)")
{
    const Topology g = Topology::torus(2, 5);
    const auto n = static_cast<Eigen::Index>(g.vertex_count());
    Generator<double> q(n * n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
        {
            if (a == b)
                continue;
            for (int who = 0; who < 2; ++who)
            {
                const Vertex from = g.vertex_at(static_cast<std::size_t>(who == 0 ? a : b));
                for (const auto& w : neighbors(g, from))
                {
                    const auto k = static_cast<Eigen::Index>(g.index_of(w));
                    q.add(a * n + b, who == 0 ? k * n + b : a * n + k, 0.25);
                }
            }
        }
    const Vertex x = make_vertex({0, 0}), y = make_vertex({1, 0});
    const auto law = q.transient_from(static_cast<Eigen::Index>(g.index_of(x)) * n +
                                          static_cast<Eigen::Index>(g.index_of(y)),
                                      5.0);
    double absorbed = 0.0;
    for (Eigen::Index a = 0; a < n; ++a)
        absorbed += law(a * n + a);
    const Estimate e = estimate_g(g, {x, y}, 5.0, 20000, SeedScheme{2});
    CHECK(std::abs(e.mean - absorbed) <= 3.0 * e.se);
}

TEST_CASE("coalescence probability: trivial, transient and recurrent cases")
{
    const SeedScheme s{3};
    CHECK(estimate_g(Topology::lattice(3), {origin(3)}, 10.0, 100, s).mean == 0.0);
    const Topology z3 = Topology::lattice(3);
    const Estimate near = estimate_g(z3, {origin(3), at(3, 2)}, 200.0, 4000, s);
    const Estimate far = estimate_g(z3, {origin(3), at(3, 20)}, 200.0, 4000, s);
    CHECK(far.mean < near.mean);
    CHECK(intervals_disjoint(near, far));
    const Topology c9 = Topology::torus(1, 9);
    CHECK(estimate_g(c9, {at(1, 0), at(1, 4)}, 10.0, 2000, s).mean <
          estimate_g(c9, {at(1, 0), at(1, 4)}, 400.0, 2000, s).mean);
    CHECK(estimate_g(c9, {at(1, 0), at(1, 4)}, 400.0, 2000, s).mean > 0.99);
}

TEST_CASE("martingale identity: unreachable mismatch and stirring pair on C6")
{
    const Topology c6 = Topology::torus(1, 6);
    const SetState a0{at(1, 0), at(1, 1)};
    const auto same = martingale_identity_check(stirring_set_rates(c6, 1.0), stirring_set_rates(c6, 1.0), a0, 10.0,
                                                500, SeedScheme{4});
    CHECK(same.lhs.mean == 0.0);
    CHECK(same.rhs.mean == 0.0);

    const auto r = martingale_identity_check(stirring_set_rates(c6, 1.0), independent_set_rates(c6, 1.0, true), a0,
                                             10.0, 20000, SeedScheme{5});
    CHECK(r.within);
    CHECK(r.lhs.mean > 0.5);
}

TEST_CASE("set rates on C6")
{
    const Topology c6 = Topology::torus(1, 6);
    const double v = 2.0;
    auto total = [](const std::vector<std::pair<SetState, double>>& t) {
        double s = 0.0;
        for (const auto& [b, r] : t)
            s += r;
        return s;
    };
    const SetState pair{at(1, 0), at(1, 1)};
    // each walker: one vacant neighbor at (1+v)/2, one occupied at 1/2 (coalesce) in the stirring chain
    CHECK(total(stirring_set_rates(c6, v)(pair)) == doctest::Approx(2 * ((1 + v) / 2 + 0.5)));
    CHECK(total(independent_set_rates(c6, v, true)(pair)) == doctest::Approx(2 * (1 + v)));
    CHECK(total(independent_set_rates(c6, v, false)(pair)) == doctest::Approx(2 * (1 + v) / 2));
}

TEST_CASE("single/separate coupling: immediate entry and far starts")
{
    const Topology z3 = Topology::lattice(3);
    const SeedScheme s{6};
    const auto same = couple_single_separate(z3, origin(3), origin(3), 0.5, 1.0, 1, 10.0, s);
    CHECK(same.tau_B == 0.0);
    std::uint64_t breaks = 0;
    for (std::uint64_t r = 0; r < 500; ++r)
        breaks += couple_single_separate(z3, origin(3), at(3, 60), 0.5, 1.0, 1, 5.0, s, r).break_time <= 5.0;
    CHECK(breaks == 0);
}

TEST_CASE("single/separate coupling keeps the single-environment marginal")
{
    const Topology z1 = Topology::lattice(1);
    const SeedScheme s{7};
    std::vector<double> coupled, direct;
    for (std::uint64_t r = 0; r < 4000; ++r)
    {
        PairState w;
        (void)couple_single_separate(z1, at(1, 0), at(1, 3), 0.5, 1.0, 1, 6.0, s, r, &w);
        coupled.push_back(w.X(0) - w.Y(0));
        const PairState d = single_env_pair(z1, at(1, 0), at(1, 3), 0.5, 1.0, 1, 6.0, SeedScheme{8}, r);
        direct.push_back(d.X(0) - d.Y(0));
    }
    CHECK(ks_two_sample(coupled, direct).p_value > 0.01);
}

TEST_CASE("proximity functionals")
{
    const Topology z3 = Topology::lattice(3);
    const SeedScheme s{9};
    CHECK(estimate_f_ell(z3, origin(3), at(3, 3), 3, 0.5, 1.0, 1, 10.0, 200, s).estimate.mean == 1.0);
    const auto f = estimate_f_ell(z3, origin(3), at(3, 4), 2, 0.5, 1.0, 1, 50.0, 4000, s);
    const auto g = estimate_g_ell(z3, origin(3), at(3, 4), 2, 0.5, 1.0, 1, 50.0, 4000, s);
    CHECK(f.estimate.mean <= std::exp(2.0) * g.estimate.mean + 3.0 * f.estimate.se);
    const auto f_far = estimate_f_ell(z3, origin(3), at(3, 24), 2, 0.5, 1.0, 1, 50.0, 4000, s);
    CHECK(f_far.estimate.mean < f.estimate.mean);
}
