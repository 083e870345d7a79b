#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "sinkwatch/error.hpp"
#include "sinkwatch/extensions.hpp"
#include "sinkwatch/phase.hpp"

using namespace sinkwatch;

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;

ExtensionParams scaled(int train, int target)
{
    ExtensionParams p;
    p.train_len = train;
    p.target_len = target;
    return p;
}
} // namespace

TEST_CASE("pe is the identity")
{
    const auto s = make_frequencies(10000.0, 44);
    const auto e = extend_pe(s);
    CHECK(e == s);
    const std::vector<double> v(44, 0.5);
    CHECK(rotate(v, 77, e).values == rotate(v, 77, s).values);
}

TEST_CASE("pi divides by the scale")
{
    const auto s = FrequencySpectrum::from_frequencies({1.0, 0.01}, 10000.0);
    CHECK(extend_pi(s, scaled(100, 100)).freqs == s.freqs);
    const auto h = extend_pi(s, scaled(100, 200));
    CHECK(h.freqs[0] == 0.5);
    CHECK(h.freqs[1] == 0.005);
    CHECK_THROWS_AS(extend_pi(s, scaled(200, 100)), ValidationError);

    // The PI kernel is the base kernel stretched by s. s = 4 keeps delta/s integral.
    const auto base = make_frequencies(10000.0, 44);
    const auto pi = extend_pi(base, scaled(100, 400));
    for (std::int64_t d : {0, 4, 40, 132, 1000, 4096}) {
        CHECK(std::abs(oracle::coherence(pi.freqs, d) - oracle::coherence(base.freqs, d / 4)) <= 1e-9);
    }
}

TEST_CASE("ntk rescales the base")
{
    const auto s4 = make_frequencies(10000.0, 4);
    const auto a = extend_ntk(s4, scaled(10, 10));
    CHECK(a.base == doctest::Approx(20000.0));
    CHECK(a.freqs[0] == 1.0);
    CHECK(a.freqs[1] == doctest::Approx(1.0 / std::sqrt(20000.0)).epsilon(1e-15));

    const auto b = extend_ntk(s4, scaled(10, 20));
    CHECK(b.freqs[1] == doctest::Approx(0.005).epsilon(1e-15));

    for (int d : {4, 8, 44}) CHECK(extend_ntk(make_frequencies(10000.0, d), scaled(132, 1024)).freqs[0] == 1.0);
    CHECK_THROWS_AS(extend_ntk(make_frequencies(10000.0, 2), scaled(10, 20)), ValidationError);
}

TEST_CASE("yarn ramp against a per-dimension hand computation")
{
    const auto p = scaled(132, 1024);
    const double s = p.scale();
    // One dimension at each regime: below alpha, at the ramp midpoint, above beta.
    const double mid = (p.yarn_alpha + p.yarn_beta) / 2.0;
    const std::vector<double> w{0.5 * kTau / 132.0, mid * kTau / 132.0, 40.0 * kTau / 132.0};
    const auto y = extend_yarn(FrequencySpectrum::from_frequencies(w), p);
    CHECK(y.freqs[0] == doctest::Approx(w[0] / s).epsilon(1e-14));
    CHECK(y.freqs[1] == doctest::Approx((w[1] + w[1] / s) / 2.0).epsilon(1e-14));
    CHECK(y.freqs[2] == doctest::Approx(w[2]).epsilon(1e-14));

    // Full default spectrum: recompute every cell independently.
    const auto base = make_frequencies(10000.0, 44);
    const auto got = extend_yarn(base, p);
    for (std::size_t j = 0; j < base.size(); ++j) {
        const long double r = 132.0L * base.freqs[j] / (2.0L * std::numbers::pi_v<long double>);
        long double g = (r - 1.0L) / 31.0L;
        g = g < 0 ? 0 : (g > 1 ? 1 : g);
        const long double ref = g * base.freqs[j] + (1 - g) * base.freqs[j] / (1024.0L / 132.0L);
        CHECK(got.freqs[j] == doctest::Approx(static_cast<double>(ref)).epsilon(1e-14));
    }

    auto bad = p;
    bad.yarn_alpha = 32.0;
    CHECK_THROWS_AS(extend_yarn(base, bad), ValidationError);
}

TEST_CASE("riflex picks the closest period and writes a long one")
{
    // Exactly one component has period 132.
    const auto s = FrequencySpectrum::from_frequencies({1.0, kTau / 132.0, 0.001});
    const auto [e, rep] = extend_riflex(s, scaled(132, 1024));
    CHECK(rep.zero_based_index == 1);
    CHECK(rep.component_index == 2);
    CHECK(rep.new_freq == doctest::Approx(kTau / 1024.0));
    CHECK(kTau / e.freqs[1] >= 132.0 * scaled(132, 1024).scale() - 1e-9);
    CHECK(e.freqs[0] == s.freqs[0]);
    CHECK(e.freqs[2] == s.freqs[2]);
}

TEST_CASE("riflex on the calibrated default spectrum")
{
    const auto [e, rep] = extend_riflex(make_frequencies(10000.0, 44), scaled(132, 1024));
    CHECK(rep.component_index == 8);
    CHECK(rep.period == doctest::Approx(117.735).epsilon(1e-4));
    CHECK(rep.period >= 113.0);
    CHECK(rep.period <= 123.0);
}

TEST_CASE("riflex ties resolve to the lowest index")
{
    const auto s = FrequencySpectrum::from_frequencies({1.0, kTau / 120.0, kTau / 120.0});
    CHECK(closest_period_component(s, 130.0) == 1);
    const auto z = FrequencySpectrum::from_frequencies({0.0, kTau / 500.0});
    CHECK(closest_period_component(z, 0.0) == 1);
}

TEST_CASE("riflex calibration brute force agrees with an independent scan")
{
    std::set<std::pair<int, bool>> expected;
    for (int d = 20; d <= 64; d += 2) {
        int best = 0;
        long double gap = 1e300L;
        for (int j = 0; j < d / 2; ++j) {
            const long double period = 2.0L * std::numbers::pi_v<long double> / oracle::freq(10000.0L, j, d);
            if (std::abs(period - 132.0L) < gap) {
                gap = std::abs(period - 132.0L);
                best = j;
            }
        }
        const long double period = 2.0L * std::numbers::pi_v<long double> / oracle::freq(10000.0L, best, d);
        for (bool one : {false, true}) {
            if ((one ? best + 1 : best) == 8 && period >= 113.0L && period <= 123.0L) expected.insert({d, one});
        }
    }
    const auto cal = calibrate_riflex(10000.0, 132.0, 8, 113.0, 123.0, 118.0);
    std::set<std::pair<int, bool>> got;
    for (const auto& m : cal.matches) got.insert({m.dim, m.one_based});
    CHECK(got == expected);
    CHECK(cal.candidates.size() == 2 * 23);
    REQUIRE(cal.found);
    CHECK(cal.chosen.dim == 44);
    CHECK(cal.chosen.one_based);
}

TEST_CASE("property: length, positivity, monotone shrink, riflex hamming distance 1")
{
    const auto p = scaled(132, 1024);
    for (int d : {4, 8, 44, 64}) {
        for (double b : {6000.0, 10000.0, 20000.0}) {
            const auto s = make_frequencies(b, d);
            for (auto m : all_methods()) {
                const auto e = apply_extension(m, s, p);
                REQUIRE(e.size() == s.size());
                for (std::size_t i = 0; i < s.size(); ++i) {
                    CHECK(e.freqs[i] > 0.0);
                    if (m == ExtensionMethod::PI || m == ExtensionMethod::NTK || m == ExtensionMethod::YaRN) {
                        CHECK(e.freqs[i] <= s.freqs[i]);
                    }
                }
            }
            const auto r = extend_riflex(s, p).first;
            int changed = 0;
            for (std::size_t i = 0; i < s.size(); ++i) changed += r.freqs[i] != s.freqs[i];
            CHECK(changed == 1);
        }
    }
}

TEST_CASE("method names round-trip and unknown names list the valid set")
{
    for (auto m : all_methods()) CHECK(parse_method(method_name(m)) == m);
    try {
        parse_method("rope2");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("pe,pi,ntk,yarn,riflex,lol") != std::string::npos);
    }
}
