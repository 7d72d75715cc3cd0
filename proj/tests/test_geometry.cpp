#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"

#include "coexsim/geometry.hpp"
#include "coexsim/stats.hpp"

using namespace coexsim;

namespace {

TierSpec tier(const char* name, double per_km2, Protocol proto = Protocol::lte_scheduled) {
    TierSpec t;
    t.name = name;
    t.density_per_m2 = per_km2 * 1e-6;
    t.protocol = proto;
    return t;
}

Region km_region(double km = 1.0, Boundary b = Boundary::torus) {
    return Region{km * 1000.0, km * 1000.0, b};
}

// Brute-force nearest node of a tier, the oracle for grid/association checks.
int nearest_brute(const Deployment& dep, int t, const Vec2& p, const Region& r) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (const Node& n : dep.nodes) {
        if (n.tier != t) continue;
        double d = wrap_distance_sq(p, n.pos, r);
        if (d < bd || (d == bd && n.id < best)) {
            bd = d;
            best = n.id;
        }
    }
    return best;
}

}  // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("wrap distance identity and minimum image") {
    Region r = km_region();
    CHECK(wrap_distance({10, 20}, {10, 20}, r) == 0.0);
    CHECK(wrap_distance({10, 0}, {990, 0}, r) == doctest::Approx(20.0));
    CHECK(wrap_distance({0, 10}, {0, 990}, r) == doctest::Approx(20.0));
    Region g = km_region(1.0, Boundary::guard);
    CHECK(wrap_distance({10, 0}, {990, 0}, g) == doctest::Approx(980.0));
}

TEST_CASE("torus distance never exceeds the euclidean distance") {
    Region torus = km_region();
    Region guard = km_region(1.0, Boundary::guard);
    Prng rng(7);
    for (int i = 0; i < 10000; ++i) {
        Vec2 a{rng.uniform(0, 1000), rng.uniform(0, 1000)};
        Vec2 b{rng.uniform(0, 1000), rng.uniform(0, 1000)};
        CHECK(wrap_distance(a, b, torus) <= wrap_distance(a, b, guard) + 1e-12);
    }
}

TEST_CASE("zero density yields an empty point set") {
    Prng rng(1);
    CHECK(sample_ppp(tier("empty", 0.0), km_region(), rng).empty());
}

TEST_CASE("ppp count matches the configured density") {
    Region r = km_region();
    {
        Prng rng(11);
        TierSpec t = tier("wifi", 300.0);
        double sum = 0.0;
        const int draws = 1000;
        for (int i = 0; i < draws; ++i) sum += static_cast<double>(sample_ppp(t, r, rng).size());
        double mean = sum / draws;
        double tol = 3.0 * std::sqrt(300.0 / draws);
        CHECK(std::fabs(mean - 300.0) < tol);
    }
    {
        Prng rng(12);
        TierSpec t = tier("lte", 3.0);
        double sum = 0.0;
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) sum += static_cast<double>(sample_ppp(t, r, rng).size());
        double mean = sum / draws;
        double tol = 3.0 * std::sqrt(3.0 / draws);
        CHECK(std::fabs(mean - 3.0) < tol);
    }
}

TEST_CASE("ppp counts pass a chi-square goodness of fit at the 1% level") {
    // Poisson(3) binned {0,1,...,7,>=8}; expected from the pmf.
    Prng rng(13);
    TierSpec t = tier("lte", 3.0);
    Region r = km_region();
    const int draws = 2000;
    std::vector<long> counts(9, 0);
    for (int i = 0; i < draws; ++i) {
        std::size_t n = sample_ppp(t, r, rng).size();
        counts[std::min<std::size_t>(n, 8)] += 1;
    }
    double pmf = std::exp(-3.0);
    std::vector<double> expected(9, 0.0);
    double cum = 0.0;
    for (int k = 0; k < 8; ++k) {
        expected[static_cast<std::size_t>(k)] = draws * pmf;
        cum += pmf;
        pmf *= 3.0 / (k + 1);
    }
    expected[8] = draws * (1.0 - cum);
    double chi2 = 0.0;
    for (int k = 0; k < 9; ++k) {
        double diff = counts[static_cast<std::size_t>(k)] - expected[static_cast<std::size_t>(k)];
        chi2 += diff * diff / expected[static_cast<std::size_t>(k)];
    }
    // df = 8, critical value at 1%: 20.09.
    CHECK(chi2 < 20.09);
}

TEST_CASE("positions are uniform in the region") {
    Prng rng(17);
    TierSpec t = tier("wifi", 200.0);
    Region r = km_region();
    double sx = 0.0, sy = 0.0;
    long n = 0;
    for (int i = 0; i < 200; ++i) {
        for (const Vec2& p : sample_ppp(t, r, rng)) {
            CHECK(r.contains(p));
            sx += p.x;
            sy += p.y;
            ++n;
        }
    }
    double tol = 3.0 * 288.675 / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(sx / n - 500.0) < tol);
    CHECK(std::fabs(sy / n - 500.0) < tol);
}

TEST_CASE("user placement requires nodes") {
    Deployment dep;
    Prng rng(1);
    CHECK_THROWS_WITH(place_users(dep, 1, km_region(), rng), "no serving nodes");
}

TEST_CASE("single node serves a user somewhere in the region") {
    Deployment dep;
    dep.nodes.push_back({{400, 400}, 0, 0});
    Region r = km_region();
    Prng rng(3);
    place_users(dep, 1, r, rng);
    REQUIRE(dep.users.size() == 1);
    CHECK(dep.users[0].serving == 0);
    CHECK(r.contains(dep.users[0].pos));
}

TEST_CASE("two nodes: each user is wrap-aware nearest to its server") {
    Deployment dep;
    dep.nodes.push_back({{100, 500}, 0, 0});
    dep.nodes.push_back({{900, 500}, 0, 1});
    Region r = km_region();
    Prng rng(5);
    place_users(dep, 1, r, rng);
    REQUIRE(dep.users.size() == 2);
    for (const User& u : dep.users) {
        const Vec2& own = dep.nodes[static_cast<std::size_t>(u.serving)].pos;
        const Vec2& other = dep.nodes[static_cast<std::size_t>(1 - u.serving)].pos;
        CHECK(wrap_distance(u.pos, own, r) <= wrap_distance(u.pos, other, r));
    }
}

TEST_CASE("voronoi membership matches the brute-force nearest scan") {
    Prng rng(23);
    Region r = km_region();
    TierSpec t = tier("wifi", 100.0, Protocol::wifi_contention);
    Deployment dep = sample_deployment({t}, r, rng);
    REQUIRE(dep.nodes.size() >= 50);
    place_users(dep, 1, r, rng);
    REQUIRE(dep.users.size() == dep.nodes.size());
    for (const User& u : dep.users) {
        CHECK(u.serving == nearest_brute(dep, 0, u.pos, r));
    }
}

TEST_CASE("mixed tiers associate users within their own tier") {
    Prng rng(29);
    Region r = km_region();
    Deployment dep = sample_deployment(
        {tier("lte", 5.0), tier("wifi", 60.0, Protocol::wifi_contention)}, r, rng);
    place_users(dep, 1, r, rng);
    for (const User& u : dep.users) {
        int t = dep.nodes[static_cast<std::size_t>(u.serving)].tier;
        CHECK(u.serving == nearest_brute(dep, t, u.pos, r));
    }
}

TEST_CASE("deployments are deterministic given the seed") {
    Region r = km_region();
    std::vector<TierSpec> tiers{tier("lte", 3.0), tier("wifi", 300.0, Protocol::wifi_contention)};
    Prng rng1(42);
    Deployment a = sample_deployment(tiers, r, rng1);
    place_users(a, 1, r, rng1);
    Prng rng2(42);
    Deployment b = sample_deployment(tiers, r, rng2);
    place_users(b, 1, r, rng2);
    CHECK(deployment_hash(a) == deployment_hash(b));
    CHECK(deployment_text(a, tiers) == deployment_text(b, tiers));
    Prng rng3(43);
    Deployment c = sample_deployment(tiers, r, rng3);
    CHECK(deployment_hash(a) != deployment_hash(c));
}

TEST_CASE("snapshot text lists every node and user") {
    Prng rng(31);
    Region r = km_region();
    std::vector<TierSpec> tiers{tier("lte", 10.0)};
    Deployment dep = sample_deployment(tiers, r, rng);
    place_users(dep, 1, r, rng);
    std::string text = deployment_text(dep, tiers);
    CHECK(text.find("nodes " + std::to_string(dep.nodes.size())) != std::string::npos);
    CHECK(text.find("users " + std::to_string(dep.users.size())) != std::string::npos);
    CHECK(text.find("lte") != std::string::npos);
}

TEST_SUITE_END();
