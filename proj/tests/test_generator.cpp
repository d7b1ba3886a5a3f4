#include <cmath>
#include <stdexcept>

#include "copsurv/generator.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace copsurv;
using namespace copsurv::testing;

namespace {

GeneratorNetwork degenerate_exp() {
    // One hidden unit, all raw parameters zero: phi(t) = exp(-t).
    return GeneratorNetwork({1});
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
    return g;
}

}  // namespace

TEST_CASE("generator eval basics") {
    GeneratorNetwork g = GeneratorNetwork::random({10, 10}, 42);
    CHECK(g.value(0.0) == 1.0);
    CHECK(g.value(std::numeric_limits<double>::infinity()) == 0.0);
    for (double t : {0.01, 0.5, 3.0, 40.0}) {
        const double v = g.value(t);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }

    GeneratorNetwork e = degenerate_exp();
    CHECK(e.value(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    CHECK_THROWS_AS(g.value(-0.5), std::invalid_argument);
    CHECK_THROWS_AS(g.value(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
    CHECK_THROWS_AS(g.deriv(1.0, 3), std::invalid_argument);
}

TEST_CASE("network equals its expanded exponential mixture") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        GeneratorNetwork g = GeneratorNetwork::random({4, 3}, seed);
        const ExpMixture m = expand_network(g);
        double coef_sum = 0.0;
        for (double c : m.coef) coef_sum += c;
        CHECK(coef_sum == doctest::Approx(1.0).epsilon(1e-12));
        for (double t : {0.0, 0.1, 0.7, 2.0, 9.0}) {
            CHECK(std::abs(g.value(t) - m.eval(t, 0)) < 1e-12);
            CHECK(std::abs(g.deriv(t, 1) - m.eval(t, 1)) < 1e-12);
            CHECK(std::abs(g.deriv(t, 2) - m.eval(t, 2)) < 1e-12);
        }
    }
    // The paper-scale network at a single point.
    GeneratorNetwork g = GeneratorNetwork::random({10, 10}, 7);
    const ExpMixture m = expand_network(g);
    CHECK(std::abs(g.value(2.0) - m.eval(2.0, 0)) < 1e-12);
}

TEST_CASE("derivatives: signs and finite differences") {
    GeneratorNetwork e = degenerate_exp();
    CHECK(e.deriv(0.0, 1) == doctest::Approx(-1.0).epsilon(1e-14));

    GeneratorNetwork g = GeneratorNetwork::random({10, 10}, 11);
    for (double t : log_grid(1e-3, 30.0, 100)) {
        CHECK(g.deriv(t, 1) <= 0.0);
        CHECK(g.deriv(t, 2) >= 0.0);
    }
    for (double t : {0.1, 1.0, 5.0}) {
        const double fd = central_diff([&](double s) { return g.value(s); }, t, 1e-6);
        CHECK(rel_err(g.deriv(t, 1), fd) < 1e-5);
        const double fd2 = central_diff([&](double s) { return g.deriv(s, 1); }, t, 1e-6);
        CHECK(rel_err(g.deriv(t, 2), fd2) < 1e-5);
    }
}

TEST_CASE("complete monotonicity up to fourth order") {
    for (std::uint64_t seed : {3u, 17u, 23u}) {
        GeneratorNetwork g = GeneratorNetwork::random({10, 10}, seed);
        for (double t : log_grid(1e-4, 50.0, 50)) {
            CHECK(g.value(t) >= 0.0);
            CHECK(g.deriv(t, 1) <= 1e-12);
            CHECK(g.deriv(t, 2) >= -1e-12);
            const double h = 0.25 * std::min(t, 4e-3 * std::max(t, 1.0));
            const double d3 =
                central_diff([&](double s) { return g.deriv(s, 2); }, t, h);
            CHECK(d3 <= 1e-12);
            const double d4 =
                second_central_diff([&](double s) { return g.deriv(s, 2); }, t, h);
            CHECK(d4 >= -1e-12);
        }
    }
}

TEST_CASE("derivative limit at zero is finite and negative") {
    for (std::uint64_t seed : {5u, 6u}) {
        GeneratorNetwork g = GeneratorNetwork::random({10, 10}, seed);
        const double d_tiny = g.deriv(1e-10, 1);
        const double d_small = g.deriv(1e-8, 1);
        CHECK(d_tiny < -1e-10);
        CHECK(std::abs(d_tiny - d_small) < 1e-4 * std::abs(d_small));
    }
}

TEST_CASE("inverse: exact endpoints, closed form, round trips") {
    GeneratorNetwork e = degenerate_exp();
    CHECK(e.inverse(1.0) == 0.0);
    CHECK(std::abs(e.inverse(std::exp(-3.0)) - 3.0) < 1e-10);

    GeneratorNetwork g = GeneratorNetwork::random({10, 10}, 29);
    for (double u : {0.01, 0.1, 0.5, 0.9, 0.999}) {
        const double t = g.inverse(u);
        CHECK(std::abs(g.value(t) - u) < 1e-10);
    }
    // Tiny arguments keep relative accuracy.
    for (double u : {1e-6, 1e-12}) {
        const double t = g.inverse(u);
        CHECK(std::abs(g.value(t) - u) < 1e-10 * u);
    }

    CHECK_THROWS_AS(g.inverse(0.0), std::invalid_argument);
    CHECK_THROWS_AS(g.inverse(1.5), std::invalid_argument);
    CHECK_THROWS_AS(g.inverse(-0.1), std::invalid_argument);
}

TEST_CASE("parameter gradients match finite differences") {
    GeneratorNetwork g = GeneratorNetwork::random({10, 10}, 31);
    const double t = 1.0;
    std::vector<double> dphi, dd1;
    g.param_grads(t, dphi, dd1);
    REQUIRE(dphi.size() == g.param_count());
    REQUIRE(dd1.size() == g.param_count());

    const std::vector<double> base = g.raw_params();
    const double h = 1e-6;
    GeneratorNetwork probe = g;
    for (std::size_t k = 0; k < base.size(); ++k) {
        std::vector<double> p = base;
        p[k] = base[k] + h;
        probe.set_raw_params(p);
        const double phi_hi = probe.value(t), d1_hi = probe.deriv(t, 1);
        p[k] = base[k] - h;
        probe.set_raw_params(p);
        const double phi_lo = probe.value(t), d1_lo = probe.deriv(t, 1);

        const double fd_phi = (phi_hi - phi_lo) / (2.0 * h);
        const double fd_d1 = (d1_hi - d1_lo) / (2.0 * h);
        if (std::abs(fd_phi) > 1e-9) CHECK(rel_err(dphi[k], fd_phi) < 1e-4);
        if (std::abs(fd_d1) > 1e-9) CHECK(rel_err(dd1[k], fd_d1) < 1e-4);
    }
}

TEST_CASE("gradients through a near-one-hot softmax row stay bounded") {
    GeneratorNetwork g({3, 2});
    std::vector<double> p = g.raw_params();
    // Push the first row of layer 2 towards one-hot at input 0.
    p[3 * 1 + 3 /*layer-1 raw_b*/ + 0] = 30.0;
    g.set_raw_params(p);
    std::vector<double> dphi, dd1;
    g.param_grads(0.7, dphi, dd1);
    for (double v : dphi) CHECK(std::isfinite(v));
    for (double v : dd1) CHECK(std::isfinite(v));
}

TEST_CASE("rate-parameter gradient sign for the degenerate network") {
    GeneratorNetwork e = degenerate_exp();
    // Parameter order for widths {1}: [phi_A (1), phi_B (1), output (1)].
    std::vector<double> dphi, dd1;
    for (double t : {0.5, 1.0, 2.0}) {
        e.param_grads(t, dphi, dd1);
        const double expected = -t * std::exp(0.0) * std::exp(-std::exp(0.0) * t);
        CHECK(dphi[1] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(dphi[1] < 0.0);
        // Single-entry softmax rows are constant; their raw grads vanish.
        CHECK(dphi[0] == 0.0);
        CHECK(dphi[2] == 0.0);
    }
}

TEST_CASE("row-stochastic invariant holds after updates") {
    GeneratorNetwork g = GeneratorNetwork::random({10, 10}, 53);
    std::vector<double> p = g.raw_params();
    for (double& v : p) v += 0.37;
    g.set_raw_params(p);  // refresh asserts the simplex invariant internally
    for (const auto& layer : g.mixing()) {
        const std::size_t width = g.widths()[&layer - g.mixing().data()];
        const std::size_t in = layer.size() / width;
        for (std::size_t i = 0; i < width; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < in; ++j) sum += layer[i * in + j];
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
    for (const auto& layer : g.rates()) {
        for (double b : layer) CHECK(b > 0.0);
    }
}

TEST_CASE("json round trip is exact") {
    GeneratorNetwork g = GeneratorNetwork::random({10, 10}, 61);
    const nlohmann::json j = g.to_json();
    const std::string text = j.dump();
    GeneratorNetwork r = GeneratorNetwork::from_json(nlohmann::json::parse(text));
    const auto a = g.raw_params(), b = r.raw_params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    CHECK(g.value(1.23) == r.value(1.23));
}
