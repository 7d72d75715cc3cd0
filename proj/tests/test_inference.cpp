#include <cmath>
#include <vector>

#include "doctest.h"

#include "coexsim/inference.hpp"
#include "coexsim/rng.hpp"

using namespace coexsim;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Pure power-law pathloss: gain = d^-alpha (intercept 0, unit constant).
PathlossModel power_law(double alpha) {
    PathlossModel m;
    m.intercept_db = 0.0;
    m.dist_slope_db = 10.0 * alpha;
    m.freq_slope_db = 0.0;
    m.min_distance_m = 1e-3;
    return m;
}

// Brute-force sensing draw: 2D PPP in an annulus around the sensor, full
// position sampling and direct power summation.
double annulus_power_2d(double lambda, double h, double r_max, double alpha, double power_w,
                        Prng& rng) {
    double area = kPi * (r_max * r_max - h * h);
    long n = rng.poisson(lambda * area);
    double total = 0.0;
    for (long i = 0; i < n; ++i) {
        double r = std::sqrt(h * h + rng.uniform() * (r_max * r_max - h * h));
        double th = rng.uniform(0.0, 2.0 * kPi);
        double x = r * std::cos(th);
        double y = r * std::sin(th);
        double d = std::sqrt(x * x + y * y);
        total += power_w * std::pow(d, -alpha);
    }
    return total;
}

}  // namespace

TEST_SUITE_BEGIN("inference");

TEST_CASE("q factor closed form and domain") {
    CHECK(q_factor(1.0, 4.0).value == doctest::Approx(std::sqrt(kPi)).epsilon(1e-12));
    CHECK(q_factor(1.0, 4.0).value == doctest::Approx(1.7725).epsilon(1e-4));
    CHECK_THROWS_WITH(q_factor(1.0, 2.0), "divergent interference regime");
    CHECK_THROWS(q_factor(1.0, 1.5));
    CHECK_THROWS(q_factor(0.0, 4.0));
}

TEST_CASE("q factor ratio identity") {
    Prng rng(3);
    for (int i = 0; i < 1000; ++i) {
        double alpha = rng.uniform(2.1, 6.0);
        double h = rng.uniform(1.0, 500.0);
        double d = rng.uniform(1.0, 500.0);
        double lhs = q_factor(h, alpha).value / q_factor(d, alpha).value;
        double rhs = std::pow(d / h, (alpha - 2.0) / 2.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("q factor decreases in the offset") {
    Prng rng(5);
    for (int i = 0; i < 1000; ++i) {
        double alpha = rng.uniform(2.1, 6.0);
        double h = rng.uniform(1.0, 400.0);
        CHECK(q_factor(h + rng.uniform(0.1, 100.0), alpha).value < q_factor(h, alpha).value);
    }
}

TEST_CASE("density estimate trivial cases") {
    SensorReading zero{0, 0.0, 50.0};
    CHECK(estimate_density(zero, 1.0, 4.0).lambda_hat == 0.0);

    SensorReading r{0, 1e-9, 50.0};
    double one = estimate_density(r, 1.0, 4.0).lambda_hat;
    double two = estimate_density(r, 2.0, 4.0).lambda_hat;
    CHECK(two == doctest::Approx(one / 2.0).epsilon(1e-12));
    CHECK_THROWS(estimate_density(r, 0.0, 4.0));
}

TEST_CASE("density estimate is strictly increasing in sensed power") {
    Prng rng(7);
    for (int i = 0; i < 500; ++i) {
        double p1 = rng.uniform(1e-12, 1e-6);
        double p2 = p1 * rng.uniform(1.001, 10.0);
        double alpha = rng.uniform(2.5, 5.0);
        double h = rng.uniform(10.0, 200.0);
        double l1 = estimate_density({0, p1, h}, 1.0, alpha).lambda_hat;
        double l2 = estimate_density({0, p2, h}, 1.0, alpha).lambda_hat;
        CHECK(l2 > l1);
    }
}

TEST_CASE("density estimator recovers the true ppp density") {
    // alpha 4, h 50 m, unit power, true density 1e-4 per m^2, 1e4 draws.
    const double alpha = 4.0, h = 50.0, lambda = 1e-4;
    const double r_max = h * std::pow(200.0, 1.0 / (alpha - 2.0));
    Prng rng(11);
    double sum = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        double pf = annulus_power_2d(lambda, h, r_max, alpha, 1.0, rng);
        sum += estimate_density({0, pf, h}, 1.0, alpha).lambda_hat;
    }
    double mean = sum / draws;
    CHECK(std::fabs(mean / lambda - 1.0) < 0.10);
}

TEST_CASE("sqrt estimator form stays proportional to sqrt of power") {
    SensorReading a{0, 4e-10, 50.0};
    SensorReading b{0, 1e-10, 50.0};
    double la = estimate_density(a, 1.0, 4.0, 1.0, EstimatorForm::sqrt_form).lambda_hat;
    double lb = estimate_density(b, 1.0, 4.0, 1.0, EstimatorForm::sqrt_form).lambda_hat;
    CHECK(la == doctest::Approx(2.0 * lb).epsilon(1e-12));
}

TEST_CASE("sir estimate trivial cases") {
    SensorReading r{0, 2e-9, 50.0};
    CHECK(estimate_sir(r, 1e-8, 50.0, 4.0) == doctest::Approx(1e-8 / 2e-9).epsilon(1e-12));
    SensorReading doubled{0, 4e-9, 50.0};
    CHECK(estimate_sir(doubled, 1e-8, 50.0, 4.0) ==
          doctest::Approx(0.5 * estimate_sir(r, 1e-8, 50.0, 4.0)).epsilon(1e-12));
    SensorReading silent{0, 0.0, 50.0};
    CHECK(is_interference_free(estimate_sir(silent, 1e-8, 50.0, 4.0)));
    CHECK_THROWS(estimate_sir(r, 1e-8, 0.0, 4.0));
    CHECK_THROWS(estimate_sir(r, 1e-8, -5.0, 4.0));
}

TEST_CASE("sir estimate self-consistency at d equal h") {
    Prng rng(13);
    for (int i = 0; i < 500; ++i) {
        double s = rng.uniform(1e-12, 1e-6);
        double pf = rng.uniform(1e-12, 1e-6);
        double h = rng.uniform(5.0, 300.0);
        double alpha = rng.uniform(2.2, 5.5);
        CHECK(estimate_sir({0, pf, h}, s, h, alpha) * pf == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("sir estimate decreases with distance and is scale invariant") {
    // The received signal strength itself falls as d^-alpha; with that in
    // place the estimated SIR decays like d^-2, strictly decreasing.
    const double alpha = 3.7;
    SensorReading r{0, 3e-9, 40.0};
    auto signal_at = [&](double d) { return 1e-2 * std::pow(d, -alpha); };
    double prev = estimate_sir(r, signal_at(10.0), 10.0, alpha);
    for (double d : {20.0, 40.0, 80.0, 160.0}) {
        double now = estimate_sir(r, signal_at(d), d, alpha);
        CHECK(now < prev);
        CHECK(now == doctest::Approx(prev / 4.0).epsilon(1e-9));  // d^-2 per doubling
        prev = now;
    }
    // Common factor on signal and sensed power cancels.
    SensorReading r8{0, 3e-9 * 8, 40.0};
    CHECK(estimate_sir(r8, 8e-8, 75.0, alpha) ==
          doctest::Approx(estimate_sir(r, 1e-8, 75.0, alpha)).epsilon(1e-12));
}

TEST_CASE("sir estimate tracks the monte carlo mean interference") {
    const double alpha = 4.0, h = 50.0, lambda = 1e-4;
    const double r_max = h * std::pow(200.0, 1.0 / (alpha - 2.0));
    Prng rng(17);
    const int draws = 1000;
    double sum_pf = 0.0;
    for (int i = 0; i < draws; ++i)
        sum_pf += annulus_power_2d(lambda, h, r_max, alpha, 1.0, rng);
    double mean_pf = sum_pf / draws;
    for (double d : {h / 2.0, h, 2.0 * h}) {
        double signal = std::pow(d, -alpha);
        double rd_max = d * std::pow(200.0, 1.0 / (alpha - 2.0));
        double sum_i = 0.0;
        for (int i = 0; i < draws; ++i)
            sum_i += annulus_power_2d(lambda, d, rd_max, alpha, 1.0, rng);
        double mc = signal / (sum_i / draws);
        double est = estimate_sir({0, mean_pf, h}, signal, d, alpha);
        double diff_db = std::fabs(10.0 * std::log10(est / mc));
        CHECK(diff_db < 3.0);
    }
}

TEST_CASE("sense power sums active co-band transmitters except the own cell") {
    Region region{2000, 2000, Boundary::torus};
    PathlossModel m{22.7, 36.7, 26.0, 1.0, 0.0};
    Prng rng(19);
    std::vector<Node> nodes;
    std::vector<double> powers, carriers;
    for (int i = 0; i < 100; ++i) {
        nodes.push_back({{rng.uniform(0, 2000), rng.uniform(0, 2000)}, 0, i});
        powers.push_back(rng.uniform(0.5, 40.0));
        carriers.push_back(2.1e9);
    }
    std::vector<bool> active(100);
    for (int i = 0; i < 100; ++i) active[static_cast<std::size_t>(i)] = rng.uniform() < 0.5;

    Vec2 sensor{1000, 1000};
    double got = sense_power(sensor, 7, nodes, active, powers, carriers, m, region);

    double expect = 0.0;
    for (int i = 0; i < 100; ++i) {
        if (!active[static_cast<std::size_t>(i)] || i == 7) continue;
        double d = wrap_distance(sensor, nodes[static_cast<std::size_t>(i)].pos, region);
        expect += powers[static_cast<std::size_t>(i)] *
                  std::pow(10.0, -pathloss_db(m, d, 2.1e9) / 10.0);
    }
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));

    std::vector<bool> idle(100, false);
    CHECK(sense_power(sensor, -1, nodes, idle, powers, carriers, m, region) == 0.0);

    std::vector<bool> only7(100, false);
    only7[7] = true;
    CHECK(sense_power(sensor, 7, nodes, only7, powers, carriers, m, region) == 0.0);
    double lone = sense_power(sensor, -1, nodes, only7, powers, carriers, m, region);
    double d7 = wrap_distance(sensor, nodes[7].pos, region);
    CHECK(lone == doctest::Approx(powers[7] * std::pow(10.0, -pathloss_db(m, d7, 2.1e9) / 10.0)));
}

TEST_CASE("tier activity trivial cases") {
    TierActivityInputs in;
    in.signature = {{1.0}};
    in.density_per_m2 = {1e-5};
    in.tx_power_w = {1.0};
    std::vector<SensorReading> zero{{0, 0.0, 50.0}};
    std::vector<double> a = estimate_tier_activity(zero, in, 4.0, 1.0);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == 0.0);

    // Single tier, single band: activity = lambda_hat over the known density,
    // clamped to [0, 1].
    double alpha = 4.0, h = 50.0;
    double q = q_factor(h, alpha).value;
    double target = 0.6;
    double pf = target * in.density_per_m2[0] * q * q;  // inverts the estimator
    std::vector<SensorReading> r{{0, pf, h}};
    std::vector<double> act = estimate_tier_activity(r, in, alpha, 1.0);
    CHECK(act[0] == doctest::Approx(0.6).epsilon(1e-9));

    std::vector<SensorReading> big{{0, pf * 10.0, h}};
    CHECK(estimate_tier_activity(big, in, alpha, 1.0)[0] == 1.0);
}

TEST_CASE("tier activity rejects non-separable signatures") {
    TierActivityInputs in;
    in.signature = {{1.0, 1.0}, {1.0, 1.0}};
    in.density_per_m2 = {1e-5, 1e-5};
    in.tx_power_w = {1.0, 1.0};
    std::vector<SensorReading> r{{0, 1e-9, 50.0}, {1, 1e-9, 50.0}};
    CHECK_THROWS_WITH(estimate_tier_activity(r, in, 4.0, 1.0), "tiers not separable");
}

TEST_CASE("three-tier activity round trip recovers the scenario fractions") {
    // Forward model a 3-tier scene at activities (0.50, 1.00, 0.25) over four
    // bands; the decomposition must land within +/-0.10 of each.
    const double alpha = 4.0, h = 50.0;
    TierActivityInputs in;
    in.signature = {{1.0, 0.6, 0.2, 0.0},
                    {0.3, 1.0, 0.5, 0.1},
                    {0.0, 0.4, 1.0, 0.6}};
    in.density_per_m2 = {3e-6, 30e-6, 300e-6};
    in.tx_power_w = {40.0, 0.25, 1.0};
    std::vector<double> truth{0.50, 1.00, 0.25};

    double q = q_factor(h, alpha).value;
    std::vector<SensorReading> readings;
    for (int f = 0; f < 4; ++f) {
        double weighted = 0.0;
        for (int t = 0; t < 3; ++t) {
            weighted += truth[static_cast<std::size_t>(t)] *
                        in.signature[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)] *
                        in.density_per_m2[static_cast<std::size_t>(t)] *
                        in.tx_power_w[static_cast<std::size_t>(t)];
        }
        // Invert the unit-power estimator: lambda_hat = pf / (q^2 P).
        readings.push_back({f, weighted * q * q, h});
    }
    std::vector<double> act = estimate_tier_activity(readings, in, alpha, 1.0);
    REQUIRE(act.size() == 3);
    for (int t = 0; t < 3; ++t) {
        CHECK(std::fabs(act[static_cast<std::size_t>(t)] - truth[static_cast<std::size_t>(t)]) <=
              0.10);
    }
}

TEST_CASE("analytic calibration matches a monte carlo fit") {
    PathlossModel m{22.7, 36.7, 26.0, 1.0, 0.0};
    double analytic = analytic_calibration(m, 2.1e9);
    double fitted = fit_calibration(m, 2.1e9, 40.0, 1e-4, 50.0, 4000, 77);
    CHECK(fitted == doctest::Approx(analytic).epsilon(0.10));
}

TEST_SUITE_END();
