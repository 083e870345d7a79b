#include <doctest.h>

#include "sinkwatch/error.hpp"
#include "sinkwatch/experiments.hpp"

using namespace sinkwatch;

namespace {

SimConfig short_config()
{
    SimConfig c;
    c.frames = 240;
    c.heads = 4;
    c.head_dim = 16;
    return c;
}

} // namespace

TEST_CASE("aggregate: Max is the maximum, Avg the mean")
{
    std::vector<RunMetrics> p(3);
    p[0].max_drop = 10.0;
    p[1].max_drop = 40.0;
    p[2].max_drop = 25.0;
    p[0].events = 1;
    p[2].events = 5;
    p[0].motion = 1.0;
    p[1].motion = 2.0;
    p[2].motion = 6.0;
    const auto s = aggregate(p);
    CHECK(s.max_drop == 40.0);
    CHECK(s.avg_drop == doctest::Approx(25.0));
    CHECK(s.mean_events == doctest::Approx(2.0));
    CHECK(s.motion == doctest::Approx(3.0));
    CHECK(s.prompts.size() == 3);
    CHECK_THROWS_AS(aggregate({}), ValidationError);
}

TEST_CASE("default collapse params use sinks + window warmup")
{
    CHECK(default_collapse_params(3).warmup == 35);
    CHECK(default_collapse_params(1).warmup == 33);
    CHECK(default_collapse_params(3).window == 32);
}

TEST_CASE("configure_method installs the extended spectrum on every head")
{
    MethodSetup setup;
    setup.extension.train_len = 132;
    setup.extension.target_len = 1024;
    const auto base = short_config();
    const auto pe = configure_method(base, ExtensionMethod::PE, setup);
    REQUIRE(pe.spectra_override.has_value());
    CHECK(pe.spectra_override->spectra.size() == 4);
    CHECK(pe.spectra_override->spectra[0] == make_frequencies(10000.0, 16));

    const auto pi = configure_method(base, ExtensionMethod::PI, setup);
    CHECK(pi.spectra_override->spectra[3] == extend_pi(make_frequencies(10000.0, 16), setup.extension));
    CHECK(pi.jitter.sigma == 0.0);

    const auto lol = configure_method(pi, ExtensionMethod::LoL, setup);
    CHECK(!lol.spectra_override.has_value());
    CHECK(lol.jitter.sigma == 0.8);
}

TEST_CASE("sweep kinds parse and unknown names fail")
{
    for (auto k : {SweepKind::Sigma, SweepKind::Ratio, SweepKind::Base, SweepKind::SingleDim}) {
        CHECK(parse_sweep_kind(sweep_kind_name(k)) == k);
    }
    CHECK_THROWS_AS(parse_sweep_kind("gamma"), ValidationError);
}

TEST_CASE("sweep validation and layout")
{
    const auto base = short_config();
    const std::vector<std::uint64_t> seeds{0, 1};
    MethodSetup setup;
    setup.extension.target_len = 240;
    CHECK_THROWS_AS(run_sweep(base, SweepKind::Sigma, std::vector<double>{}, seeds, setup), ValidationError);
    CHECK_THROWS_AS(run_sweep(base, SweepKind::Base, std::vector<double>{-1.0}, seeds, setup), ValidationError);
    CHECK_THROWS_AS(run_sweep(base, SweepKind::SingleDim, std::vector<double>{1.5}, seeds, setup), ValidationError);

    const std::vector<double> grid{0.0, 0.5};
    const auto rows = run_sweep(base, SweepKind::Sigma, grid, seeds, setup);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].value == 0.0);
    CHECK(rows[1].value == 0.0);
    CHECK(rows[2].value == 0.5);
    CHECK(rows[1].metrics.seed == 1);
    const auto means = sweep_means(rows, grid);
    CHECK(means[1] == doctest::Approx((rows[2].metrics.max_drop + rows[3].metrics.max_drop) / 2.0));

    // A cell must equal the same run done directly.
    auto c = base;
    c.jitter.sigma = 0.5;
    c.seed = 1;
    CHECK(rows[3].metrics.max_drop == run_seeds(c, std::vector<std::uint64_t>{1}, 1)[0].max_drop);
}

TEST_CASE("run_seeds is independent of the thread count")
{
    const auto base = short_config();
    const std::vector<std::uint64_t> seeds{4, 5, 6};
    const auto a = run_seeds(base, seeds, 1);
    const auto b = run_seeds(base, seeds, 3);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        CHECK(a[i].seed == seeds[i]);
        CHECK(a[i].max_drop == b[i].max_drop);
        CHECK(a[i].events == b[i].events);
        CHECK(a[i].motion == b[i].motion);
    }
}
