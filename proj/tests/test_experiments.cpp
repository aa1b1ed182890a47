#include "doctest.h"

#include "ips/experiments.hpp"
#include "ips/report.hpp"

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

TEST_CASE("replica runner is independent of the worker count")
{
    auto f = [](std::uint64_t r) { return SeedScheme{5}.stream(StreamTag::replica, 0, r).uniform(); };
    const auto one = run_replicas(1000, 1, f);
    const auto four = run_replicas(1000, 4, f);
    CHECK(one == four);
    CHECK_THROWS(run_replicas(10, 3, [](std::uint64_t r) -> int {
        if (r == 7)
            throw DomainError("boom");
        return 0;
    }));
}

TEST_CASE("duality: trivial cases")
{
    const Topology g = Topology::torus(1, 4);
    const SeedScheme s{1};
    DualityQuery q;
    q.eta0 = SiteConfig{1, 0, 1, 0};
    q.t = 0.5;
    q.N = 2000;
    for (auto* check : {&duality_check_voter, &duality_check_stirring})
    {
        const DualityReport empty = check(g, q, s);
        CHECK(empty.lhs.mean == 1.0);
        CHECK(empty.rhs.mean == 1.0);
        CHECK(empty.pass);
    }
    DualityQuery all = q;
    all.eta0 = constant_sites(g, 1);
    all.C = {at(1, 0), at(1, 2)};
    const DualityReport ones = duality_check_voter(g, all, s);
    CHECK(ones.lhs.mean == 1.0);
    CHECK(ones.rhs.mean == 1.0);

    const Topology big = Topology::torus(1, 5);
    DualityQuery v = q;
    v.eta0 = constant_sites(big, 0);
    const DualityReport vm = duality_check_vmdyn(big, [&] {
        DualityQuery z = v;
        z.zeta0 = constant_edges(big, 1);
        return z;
    }(), s);
    CHECK(vm.lhs.mean == 1.0);
    CHECK(vm.rhs.mean == 1.0);
}

TEST_CASE("duality: oracle cases")
{
    const SeedScheme s{2};
    DualityQuery q;
    q.eta0 = SiteConfig{1, 0, 0};
    q.C = {at(1, 0), at(1, 1)};
    q.t = 0.7;
    const DualityReport c3 = duality_check_voter(Topology::torus(1, 3), q, s);
    REQUIRE(c3.has_exact);
    CHECK(std::abs(c3.lhs_exact - c3.rhs_exact) <= kExactTolerance);

    const Topology p3 = Topology::box(1, 3);
    DualityQuery w;
    w.eta0 = SiteConfig{0, 1, 1};
    w.zeta0 = EdgeConfig{1, 0};
    w.C = {at(1, 1)};
    w.E = {make_edge(at(1, 0), at(1, 1))};
    w.p = 0.6;
    w.t = 0.5;
    const DualityReport vm = duality_check_vmdyn(p3, w, s);
    REQUIRE(vm.has_exact);
    CHECK(std::abs(vm.lhs_exact - vm.rhs_exact) <= kExactTolerance);
    CHECK(vm.pass);

    // t = 0: both sides are the indicator at the starting configuration
    w.t = 0.0;
    const DualityReport t0 = duality_check_vmdyn(p3, w, s);
    CHECK(t0.lhs_exact == t0.rhs_exact);
}

TEST_CASE("duality: Monte Carlo agreement for stirring on C4")
{
    const Topology c4 = Topology::torus(1, 4);
    DualityQuery q;
    q.eta0 = SiteConfig{1, 1, 0, 1};
    q.C = {at(1, 0), at(1, 1)};
    q.v = 2.0;
    q.t = 0.6;
    q.N = 50000;
    q.exact = false;
    const DualityReport r = duality_check_stirring(c4, q, SeedScheme{3});
    CHECK(r.pass);
    CHECK(std::abs(r.lhs.mean - r.rhs.mean) <= 3.0 * r.pooled);
}

TEST_CASE("duality: single site keeps alpha under a product start")
{
    const Topology c4 = Topology::torus(1, 4);
    const SeedScheme s{4};
    Accumulator acc;
    for (std::uint64_t r = 0; r < 2000; ++r)
    {
        DualityQuery q;
        q.eta0 = bernoulli_sites(c4, 0.3, s, r);
        q.C = {at(1, 2)};
        q.v = 1.5;
        q.t = 0.8;
        const DualityReport rep = duality_check_stirring(c4, q, s);
        acc.add(rep.lhs_exact);
        CHECK(std::abs(rep.lhs_exact - rep.rhs_exact) <= kExactTolerance);
    }
    CHECK(std::abs(acc.mean() - 0.3) <= 3.0 * acc.se());
}

TEST_CASE("mu correlations: trivial values")
{
    const Topology z3 = Topology::lattice(3);
    const SeedScheme s{5};
    CorrelationQuery q;
    q.C = {origin(3)};
    q.alpha = 0.37;
    q.t_star = 10.0;
    q.N = 200;
    for (Model m : {Model::voter, Model::stirring, Model::vmdyn})
    {
        const ModelParams mp{m, 0.5, 1.0, 1};
        CHECK(estimate_mu_correlation(z3, mp, q, s).estimate.mean == doctest::Approx(0.37));
        CorrelationQuery two = q;
        two.C = {origin(3), at(3, 1)};
        two.alpha = 1.0;
        CHECK(estimate_mu_correlation(z3, mp, two, s).estimate.mean == 1.0);
        two.alpha = 0.0;
        CHECK(estimate_mu_correlation(z3, mp, two, s).estimate.mean == 0.0);
    }
}

TEST_CASE("mu correlations: pair in d = 3 lies strictly between alpha^2 and alpha")
{
    CorrelationQuery q;
    q.C = {origin(3), at(3, 1)};
    q.alpha = 0.5;
    q.t_star = 50.0;
    q.N = 4000;
    const CorrelationReport r = estimate_mu_correlation(Topology::lattice(3), ModelParams{}, q, SeedScheme{6});
    CHECK(r.estimate.ci_low > 0.25);
    CHECK(r.estimate.ci_high < 0.5);
    CHECK(r.bias_bound >= 0.0);
    CHECK(r.samples.size() == q.N);
}

TEST_CASE("collisions and meeting decay: trivial and trend cases")
{
    CollisionParams cp;
    cp.ell = 4;
    cp.N = 50;
    const auto at0 = collision_experiment(Topology::lattice(3), origin(3), at(3, 4), {1.0}, cp, SeedScheme{7});
    CHECK(at0.hit[0].mean == 1.0);
    const DecayReport trivial = meeting_decay_check(3, 5, {2, 4}, 10.0, 50, SeedScheme{8});
    CHECK(trivial.hit[0].mean == 1.0);
    CHECK(trivial.hit[1].mean == 1.0);
    const DecayReport r = meeting_decay_check(3, 1, {4, 8, 16}, 1000.0, 4000, SeedScheme{9});
    CHECK(r.decreasing);
    CHECK(r.fit.slope < 0.0);
}

TEST_CASE("mixing: exact zeros and the singleton example")
{
    const Topology z3 = Topology::lattice(3);
    const ModelParams vm{Model::vmdyn, 0.5, 1.0, 1};
    const auto empty = mixing_check(z3, {origin(3)}, {}, {}, {}, 0.5, {2, 8}, vm, 10.0, 200, SeedScheme{10});
    for (const auto& g : empty.gap)
        CHECK(g.mean == 0.0);
    for (double alpha : {0.0, 1.0})
    {
        const auto r = mixing_check(z3, {origin(3)}, {origin(3)}, {}, {}, alpha, {2, 8}, vm, 10.0, 200, SeedScheme{11});
        for (const auto& g : r.gap)
            CHECK(g.mean == 0.0);
    }
    const auto r = mixing_check(z3, {origin(3)}, {origin(3)}, {}, {}, 0.5, {2, 8, 32}, vm, 100.0, 5000, SeedScheme{12});
    CHECK(r.gap[2].ci_low <= 0.0);
    CHECK(r.gap[2].ci_high >= 0.0);
    CHECK(r.gap[0].ci_low > r.gap[2].ci_high);
    CHECK_THROWS(mixing_check(z3, {origin(3)}, {origin(3)}, {}, {}, 0.5, {0}, vm, 10.0, 10, SeedScheme{13}));
}

TEST_CASE("exchangeability: singletons and alpha = 1")
{
    const Topology z3 = Topology::lattice(3);
    const std::vector<std::vector<Vertex>> singles{{origin(3)}, {at(3, 5)}};
    const auto r = exchangeability_check(z3, singles, 0.4, ModelParams{}, 10.0, 100, SeedScheme{14});
    for (const auto& q : r.q)
        CHECK(q.estimate.mean == doctest::Approx(0.4));
    CHECK(r.overlap);
    const std::vector<std::vector<Vertex>> pairs{{origin(3), at(3, 1)}, {origin(3), at(3, 2)}};
    const auto ones = exchangeability_check(z3, pairs, 1.0, ModelParams{}, 10.0, 100, SeedScheme{15});
    for (const auto& q : ones.q)
        CHECK(q.estimate.mean == 1.0);
}

TEST_CASE("forward density at the boundary values is exact")
{
    const Topology g = Topology::torus(2, 5);
    for (double alpha : {0.0, 1.0})
    {
        const Estimate e = forward_density(g, ModelParams{Model::vmdyn, 0.5, 1.0, 1}, alpha, 2.0, 20, SeedScheme{16});
        CHECK(e.mean == alpha);
        CHECK(e.se == 0.0);
    }
}

TEST_CASE("reports embed the manifest and are reproducible")
{
    RunManifest m;
    m.config = "[experiment]\nkind = mu";
    m.master_seed = 9;
    m.workers = 2;
    m.wall_seconds = 1.25;
    const Json rep = make_report("mu", Json{{"alpha", 0.5}}, Json{{"x", 1.0}}, true, m);
    CHECK(rep["schema"] == kReportSchema);
    CHECK(rep["manifest"]["results_digest"] == digest(Json{{"x", 1.0}}.dump()));
    CHECK(rep["manifest"]["worker_seeds"].size() == 2);
    const std::string a = dump_report(rep, false);
    RunManifest m2 = m;
    m2.wall_seconds = 99.0;
    CHECK(a == dump_report(make_report("mu", Json{{"alpha", 0.5}}, Json{{"x", 1.0}}, true, m2), false));
    CHECK(a.find("wall_seconds") == std::string::npos);
    CHECK(dump_report(rep).find("wall_seconds") != std::string::npos);
    Estimate inf;
    inf.mean = kInf;
    CHECK(to_json(inf)["estimate"].is_null());
}
