#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sharpen/errors.hpp"
#include "sharpen/resample.hpp"
#include "sharpen/rng.hpp"

using namespace sharpen;

TEST_CASE("ess examples") {
    const std::vector<double> w{0.8, 0.2};
    CHECK(ess(w) == doctest::Approx(1.0 / 0.68).epsilon(1e-12));
    CHECK(ess(w) == doctest::Approx(1.470588).epsilon(1e-6));
    const std::vector<double> u(10, 0.1);
    CHECK(ess(u) == doctest::Approx(10.0));
    const std::vector<double> one_hot{0.0, 1.0, 0.0};
    CHECK(ess(one_hot) == doctest::Approx(1.0));
    const std::vector<double> bad{0.5, 0.4};
    CHECK_THROWS_AS(ess(bad), InputError);
    const std::vector<double> neg{1.5, -0.5};
    CHECK_THROWS_AS(ess(neg), InputError);
}

TEST_CASE("property: ess lies in [1, N]") {
    CounterRng rng(5, StreamTag::kResample, {});
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(200));
        std::vector<double> w(n);
        for (double& x : w) x = std::pow(rng.uniform(), 4.0);
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        if (s == 0.0) continue;
        for (double& x : w) x /= s;
        const double e = ess(w);
        CHECK(e >= 1.0);
        CHECK(e <= n);
    }
}

TEST_CASE("systematic hand example") {
    // Cumulative (0.5, 0.6, 1.0); positions (0.5 + i)/3 = 0.1667, 0.5, 0.8333.
    const std::vector<double> w{0.5, 0.1, 0.4};
    CHECK(resample_systematic(w, 0.5) == std::vector<int>{0, 0, 2});
    const std::vector<double> u(4, 0.25);
    for (double u0 : {0.01, 0.3, 0.999}) CHECK(resample_systematic(u, u0) == std::vector<int>{0, 1, 2, 3});
    // Positions on a cumulative boundary take the lower index.
    CHECK(resample_systematic(u, 0.0) == std::vector<int>{0, 0, 1, 2});
    const std::vector<double> one_hot{0.0, 0.0, 1.0, 0.0};
    CHECK(resample_systematic(one_hot, 0.7) == std::vector<int>{2, 2, 2, 2});
    CHECK_THROWS_AS(resample_systematic(w, 1.0), InputError);
}

TEST_CASE("one-hot and uniform weights under every scheme") {
    CounterRng rng(11, StreamTag::kResample, {1});
    const std::vector<double> one_hot{0.0, 1.0, 0.0, 0.0, 0.0};
    const std::vector<double> u(6, 1.0 / 6.0);
    for (Resampler s : {Resampler::kSystematic, Resampler::kMultinomial, Resampler::kStratified, Resampler::kResidual}) {
        CHECK(resample(s, one_hot, rng) == std::vector<int>(5, 1));
        const auto a = resample(s, u, rng);
        CHECK(a.size() == 6);
        if (s != Resampler::kMultinomial) {
            // Every low-variance scheme keeps each uniform particle exactly once.
            CHECK(offspring_counts(a, 6) == std::vector<int>(6, 1));
        }
    }
}

TEST_CASE("resampler names round-trip") {
    for (Resampler s : {Resampler::kSystematic, Resampler::kMultinomial, Resampler::kStratified, Resampler::kResidual})
        CHECK(parse_resampler(to_string(s)) == s);
    CHECK_THROWS_AS(parse_resampler("bogus"), InputError);
}

TEST_CASE("property: offspring counts are unbiased") {
    const std::vector<double> w{0.05, 0.35, 0.1, 0.3, 0.2};
    const int n = static_cast<int>(w.size());
    const int trials = 100000;
    for (Resampler s : {Resampler::kSystematic, Resampler::kMultinomial, Resampler::kStratified, Resampler::kResidual}) {
        std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
        for (int t = 0; t < trials; ++t) {
            CounterRng rng(2024, StreamTag::kResample, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(t)});
            const auto counts = offspring_counts(resample(s, w, rng), n);
            for (int i = 0; i < n; ++i) {
                sum[i] += counts[i];
                sum_sq[i] += static_cast<double>(counts[i]) * counts[i];
            }
        }
        for (int i = 0; i < n; ++i) {
            const double mean = sum[i] / trials;
            const double var = std::max(sum_sq[i] / trials - mean * mean, 1e-12);
            const double se = std::sqrt(var / trials);
            INFO("scheme " << to_string(s) << " particle " << i);
            CHECK(std::abs(mean - n * w[i]) <= 3.0 * se + 1e-12);
        }
    }
}

TEST_CASE("property: ancestors are valid and sorted for ordered schemes") {
    CounterRng rng(77, StreamTag::kResample, {});
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(64));
        std::vector<double> w(n);
        for (double& x : w) x = rng.uniform();
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& x : w) x /= s;
        for (Resampler sch : {Resampler::kSystematic, Resampler::kMultinomial, Resampler::kStratified, Resampler::kResidual}) {
            const auto a = resample(sch, w, rng);
            REQUIRE(a.size() == static_cast<std::size_t>(n));
            for (int x : a) {
                CHECK(x >= 0);
                CHECK(x < n);
                CHECK(w[x] > 0.0);
            }
            if (sch == Resampler::kSystematic || sch == Resampler::kStratified)
                CHECK(std::is_sorted(a.begin(), a.end()));
        }
    }
}
