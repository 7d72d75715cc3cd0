#include <cmath>
#include <vector>

#include "doctest.h"

#include "coexsim/channel.hpp"
#include "coexsim/rng.hpp"

using namespace coexsim;

namespace {

PathlossModel umi() {
    return PathlossModel{22.7, 36.7, 26.0, 1.0, 0.0};
}

Region big_guard() {
    return Region{1e6, 1e6, Boundary::guard};
}

}  // namespace

TEST_SUITE_BEGIN("channel");

TEST_CASE("pathloss clamps below the minimum distance") {
    PathlossModel m = umi();
    m.min_distance_m = 10.0;
    double at_min = pathloss_db(m, 10.0, 2.1e9);
    CHECK(pathloss_db(m, 5.0, 2.1e9) == at_min);
    CHECK(pathloss_db(m, 0.0, 2.1e9) == at_min);
}

TEST_CASE("pathloss at 100 m and 2.1 GHz under the default coefficients") {
    // 22.7 + 36.7*log10(100) + 26*log10(2.1) = 104.4777...
    double pl = pathloss_db(umi(), 100.0, 2.1e9);
    CHECK(pl == doctest::Approx(104.4777).epsilon(1e-4));
    CHECK(pl == doctest::Approx(104.48).epsilon(1e-4));
}

TEST_CASE("a distance decade adds 10*alpha dB") {
    PathlossModel m = umi();
    double d1 = pathloss_db(m, 37.0, 2.4e9);
    double d2 = pathloss_db(m, 370.0, 2.4e9);
    CHECK(d2 - d1 == doctest::Approx(10.0 * m.alpha()).epsilon(1e-9));
}

TEST_CASE("pathloss rejects a non-positive carrier") {
    CHECK_THROWS(pathloss_db(umi(), 100.0, 0.0));
    CHECK_THROWS(pathloss_db(umi(), 100.0, -1.0));
}

TEST_CASE("pathloss is monotone in distance and carrier") {
    PathlossModel m = umi();
    Prng rng(3);
    for (int i = 0; i < 2000; ++i) {
        double d1 = rng.uniform(1.0, 5000.0);
        double d2 = d1 + rng.uniform(0.0, 1000.0);
        double f1 = rng.uniform(0.5e9, 6e9);
        double f2 = f1 + rng.uniform(0.0, 1e9);
        CHECK(pathloss_db(m, d2, f1) >= pathloss_db(m, d1, f1));
        CHECK(pathloss_db(m, d1, f2) >= pathloss_db(m, d1, f1));
    }
}

TEST_CASE("received power follows the dB definition") {
    CHECK(received_power(7.5, 0.0) == doctest::Approx(7.5));
    CHECK(received_power(40.0, 60.0) == doctest::Approx(4e-5));
    CHECK(received_power(1.0, 90.0) == doctest::Approx(1e-9));
}

TEST_CASE("sir: empty interferer set is interference-free") {
    Emitter serving{{0, 0}, 40.0, 2.1e9};
    double s = sir({100, 0}, serving, {}, umi(), big_guard());
    CHECK(is_interference_free(s));
}

TEST_CASE("sir: symmetric interferer gives 0 dB") {
    Emitter serving{{0, 0}, 40.0, 2.1e9};
    std::vector<Emitter> active{{{200, 0}, 40.0, 2.1e9}};
    double s = sir({100, 0}, serving, active, umi(), big_guard());
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sir matches a brute-force power summation") {
    Prng rng(11);
    PathlossModel m = umi();
    Region r{2000, 2000, Boundary::torus};
    for (int scene = 0; scene < 50; ++scene) {
        Emitter serving{{rng.uniform(0, 2000), rng.uniform(0, 2000)}, 40.0, 2.1e9};
        Vec2 user{rng.uniform(0, 2000), rng.uniform(0, 2000)};
        int n = rng.uniform_int(1, 50);
        std::vector<Emitter> active;
        for (int i = 0; i < n; ++i) {
            double p = rng.uniform_int(1, 2) == 1 ? 40.0 : 1.0;
            double c = p == 40.0 ? 2.1e9 : 2.4e9;
            active.push_back({{rng.uniform(0, 2000), rng.uniform(0, 2000)}, p, c});
        }
        double got = sir(user, serving, active, m, r);
        // Oracle: direct absolute power summation.
        double sig = serving.power_w *
                     received_power(1.0, pathloss_db(m, wrap_distance(user, serving.pos, r),
                                                     serving.carrier_hz));
        double intf = 0.0;
        for (const Emitter& e : active) {
            intf += e.power_w * received_power(1.0, pathloss_db(m, wrap_distance(user, e.pos, r),
                                                                e.carrier_hz));
        }
        CHECK(got == doctest::Approx(sig / intf).epsilon(1e-9));
    }
}

TEST_CASE("adding an interferer never increases sir") {
    Prng rng(13);
    PathlossModel m = umi();
    Region r{1000, 1000, Boundary::torus};
    Emitter serving{{500, 500}, 40.0, 2.1e9};
    Vec2 user{600, 500};
    std::vector<Emitter> active;
    double prev = sir(user, serving, active, m, r);
    for (int i = 0; i < 40; ++i) {
        active.push_back({{rng.uniform(0, 1000), rng.uniform(0, 1000)}, 1.0, 2.4e9});
        double now = sir(user, serving, active, m, r);
        CHECK(now <= prev);
        prev = now;
    }
}

TEST_CASE("sir is bit-identical under a common power scaling") {
    // Exactly representable scaled powers keep the internal power ratios
    // bit-identical, so the whole computation reproduces.
    Prng rng(17);
    PathlossModel m = umi();
    Region r{1000, 1000, Boundary::torus};
    for (int scene = 0; scene < 200; ++scene) {
        Emitter serving{{rng.uniform(0, 1000), rng.uniform(0, 1000)},
                        static_cast<double>(rng.uniform_int(1, 100)), 2.1e9};
        Vec2 user{rng.uniform(0, 1000), rng.uniform(0, 1000)};
        std::vector<Emitter> active;
        int n = rng.uniform_int(1, 20);
        for (int i = 0; i < n; ++i) {
            active.push_back({{rng.uniform(0, 1000), rng.uniform(0, 1000)},
                              static_cast<double>(rng.uniform_int(1, 100)), 2.4e9});
        }
        double base = sir(user, serving, active, m, r);
        Emitter serving10 = serving;
        serving10.power_w *= 10.0;
        std::vector<Emitter> active10 = active;
        for (Emitter& e : active10) e.power_w *= 10.0;
        double scaled = sir(user, serving10, active10, m, r);
        CHECK(base == scaled);  // bitwise
    }
}

TEST_CASE("rate map basics") {
    RateMap map{20e6, 0.75, 0.1, 84e6};
    CHECK(rate(0.0, map) == 0.0);                       // below the floor
    CHECK(rate(kInterferenceFree, map) == 84e6);        // interference-free cap
    CHECK(rate(0.09, map) == 0.0);
    CHECK(rate(0.1, map) > 0.0);
}

TEST_CASE("truncated shannon value at 15 dB") {
    // 0.75 * 20 MHz * log2(1 + 10^1.5) = 75.419 Mbps, below the 84 cap.
    RateMap map{20e6, 0.75, 0.1, 84e6};
    double v = rate(std::pow(10.0, 1.5), map);
    CHECK(v == doctest::Approx(75.4189e6).epsilon(1e-4));
    RateMap low_cap{20e6, 0.75, 0.1, 65e6};
    CHECK(rate(std::pow(10.0, 1.5), low_cap) == 65e6);
}

TEST_CASE("rate is monotone nondecreasing in sir") {
    RateMap map{20e6, 0.75, 0.1, 84e6};
    Prng rng(19);
    for (int i = 0; i < 5000; ++i) {
        double a = rng.uniform(0.0, 1000.0);
        double b = a + rng.uniform(0.0, 100.0);
        CHECK(rate(b, map) >= rate(a, map));
    }
    CHECK(rate(kInterferenceFree, map) >= rate(1e12, map));
}

TEST_SUITE_END();
