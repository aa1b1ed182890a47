#include "doctest.h"

#include "ips/config.hpp"

#include <algorithm>

using namespace ips;

namespace
{

const char* kValid = R"([experiment]
kind = duality
seed = 12
reps = 500

[topology]
kind = torus
d = 2
side = 5

[model]
name = vmdyn
p = 0.25
v = 2
R = 1

[query]
eta0 = stripe
zeta0 = all_open
sites = 0,0;1,0
open_edges = 0,0-1,0
closed_edges = 2,2 - 2,3
t = 0.4
)";

bool mentions(const std::vector<std::string>& problems, const std::string& text)
{
    return std::any_of(problems.begin(), problems.end(),
                       [&](const std::string& p) { return p.find(text) != std::string::npos; });
}

std::vector<std::string> parse_problems(const std::string& text)
{
    try
    {
        const ExperimentConfig c = parse_config_string(text);
        return validate(c);
    }
    catch (const ConfigError& e)
    {
        return e.problems();
    }
}

} // namespace

TEST_CASE("a valid config parses with typed fields")
{
    const ExperimentConfig c = parse_config_string(kValid);
    CHECK(c.kind == "duality");
    CHECK(c.seed == 12);
    CHECK(c.reps == 500);
    CHECK(c.model == Model::vmdyn);
    CHECK(c.p == 0.25);
    CHECK(c.v == 2.0);
    REQUIRE(c.sites.size() == 2);
    CHECK(same_vertex(c.sites[1], make_vertex({1, 0})));
    REQUIRE(c.closed_edges.size() == 1);
    CHECK(c.closed_edges[0] == make_edge(make_vertex({2, 2}), make_vertex({2, 3})));
    CHECK(validate(c).empty());
}

TEST_CASE("config echo round-trips")
{
    const ExperimentConfig c = parse_config_string(kValid);
    const std::string echo = config_echo(c);
    CHECK(config_echo(parse_config_string(echo)) == echo);
}

TEST_CASE("unknown sections and keys are rejected")
{
    CHECK(mentions(parse_problems(std::string(kValid) + "\n[extra]\nfoo = 1\n"), "unknown section [extra]"));
    CHECK(mentions(parse_problems(std::string(kValid) + "\nsdie = 4\n"), "unknown key 'query.sdie'"));
}

TEST_CASE("missing topology kind names the field")
{
    CHECK(mentions(parse_problems("[experiment]\nreps = 5\n"), "missing required field 'topology.kind'"));
}

TEST_CASE("parameter ranges")
{
    std::string text = kValid;
    text.replace(text.find("p = 0.25"), 8, "p = 1.5");
    CHECK(mentions(parse_problems(text), "p must lie in [0,1]"));
    CHECK(mentions(parse_problems("[topology]\nkind = torus\nd = 1\nside = 5\n[model]\nalpha = -1\n"),
                   "alpha must lie in [0,1]"));
    CHECK(mentions(parse_problems("[topology]\nkind = torus\nd = 1\nside = 5\n[experiment]\nreps = abc\n"),
                   "reps"));
}

TEST_CASE("ball geometry and disjointness violations")
{
    std::string text = kValid;
    text.replace(text.find("side = 5"), 8, "side = 3");
    CHECK(mentions(parse_problems(text), "ball geometry constraint violated"));

    std::string both = kValid;
    both.replace(both.find("closed_edges = 2,2 - 2,3"), 24, "closed_edges = 0,0-1,0");
    CHECK(mentions(parse_problems(both), "revealed sets must be disjoint"));
}

TEST_CASE("vertex and edge membership")
{
    std::string text = kValid;
    text.replace(text.find("sites = 0,0;1,0"), 15, "sites = 0,0;9,0");
    CHECK(mentions(parse_problems(text), "is not a vertex"));
    std::string edge = kValid;
    edge.replace(edge.find("open_edges = 0,0-1,0"), 20, "open_edges = 0,0-2,0");
    CHECK(mentions(parse_problems(edge), "is not an edge"));
}

TEST_CASE("value parsers")
{
    CHECK(same_vertex(parse_vertex("3,-2"), make_vertex({3, -2})));
    CHECK(parse_vertex_list("0;1;2").size() == 3);
    CHECK(parse_edge("-1-0") == make_edge(make_vertex({-1}), make_vertex({0})));
    CHECK(parse_edge("0,0 - 0,1") == make_edge(make_vertex({0, 0}), make_vertex({0, 1})));
    CHECK_THROWS(parse_vertex("a,b"));
}

TEST_CASE("initial data from the config")
{
    const ExperimentConfig c = parse_config_string(kValid);
    const Topology g = make_topology(c.topology);
    const SiteConfig eta = initial_sites(c, g, SeedScheme{1});
    for (const auto& x : g.vertices())
        CHECK(eta[g.index_of(x)] == (x(0) < 3 ? 1 : 0));
    const EdgeConfig zeta = initial_edges(c, g, SeedScheme{1});
    CHECK(std::all_of(zeta.begin(), zeta.end(), [](std::uint8_t z) { return z == 1; }));
}

TEST_CASE("unreadable files are reported")
{
    CHECK_THROWS_AS(load_config("/nonexistent/file.ini"), ConfigError);
}
