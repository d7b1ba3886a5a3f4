#include <cmath>
#include <memory>
#include <stdexcept>

#include "copsurv/copula.hpp"
#include "copsurv/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace copsurv;
using namespace copsurv::testing;

namespace {

ArchimedeanCopula make_copula(CopulaFamily fam, double theta) {
    return ArchimedeanCopula(std::shared_ptr<Generator>(make_closed_form(fam, theta)));
}

ArchimedeanCopula make_network_copula(std::uint64_t seed) {
    return ArchimedeanCopula(
        std::make_shared<GeneratorNetwork>(GeneratorNetwork::random({10, 10}, seed)));
}

std::vector<ArchimedeanCopula> constructible_copulas() {
    std::vector<ArchimedeanCopula> out;
    for (double theta : {0.5, 2.0, 6.0}) out.push_back(make_copula(CopulaFamily::Clayton, theta));
    for (double theta : {-4.0, 1.0, 5.7, 20.0}) {
        out.push_back(make_copula(CopulaFamily::Frank, theta));
    }
    for (double theta : {1.0, 1.5, 2.0, 4.0}) out.push_back(make_copula(CopulaFamily::Gumbel, theta));
    out.push_back(make_copula(CopulaFamily::Independence, 0.0));
    out.push_back(make_network_copula(101));
    out.push_back(make_network_copula(202));
    return out;
}

// Kendall's tau of an Archimedean copula by quadrature:
// tau = 1 + 4 int_0^1 phi^{-1}(u) phi'(phi^{-1}(u)) du (midpoint rule).
double tau_by_quadrature(const ArchimedeanCopula& c, int n = 20000) {
    const Generator& g = c.generator();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = (i + 0.5) / n;
        const double t = g.inverse(u);
        sum += t * g.deriv(t, 1);
    }
    return 1.0 + 4.0 * sum / n;
}

}  // namespace

TEST_CASE("cdf values and axioms") {
    const auto indep = make_copula(CopulaFamily::Independence, 0.0);
    CHECK(indep.cdf(0.3, 0.7) == doctest::Approx(0.21).epsilon(1e-12));

    const auto clayton = make_copula(CopulaFamily::Clayton, 2.0);
    CHECK(clayton.cdf(0.5, 0.5) ==
          doctest::Approx(1.0 / std::sqrt(7.0)).epsilon(1e-12));

    for (const auto& c : constructible_copulas()) {
        for (double u : {0.0, 0.25, 0.5, 1.0}) {
            CHECK(std::abs(c.cdf(u, 1.0) - u) < 1e-10);
            CHECK(std::abs(c.cdf(1.0, u) - u) < 1e-10);
        }
        CHECK(c.cdf(0.37, 0.0) == 0.0);
        CHECK(c.cdf(0.0, 0.11) == 0.0);

        // 2-increasing on random rectangles.
        Rng rng(99);
        for (int k = 0; k < 50; ++k) {
            double u1 = rng.uniform(), u2 = rng.uniform();
            double v1 = rng.uniform(), v2 = rng.uniform();
            if (u1 > u2) std::swap(u1, u2);
            if (v1 > v2) std::swap(v1, v2);
            const double vol =
                c.cdf(u2, v2) - c.cdf(u1, v2) - c.cdf(u2, v1) + c.cdf(u1, v1);
            CHECK(vol >= -1e-12);
        }
    }
    CHECK_THROWS_AS(indep.cdf(-0.2, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(indep.cdf(0.2, 1.5), std::invalid_argument);
}

TEST_CASE("partial derivatives") {
    const auto indep = make_copula(CopulaFamily::Independence, 0.0);
    CHECK(indep.partial(0.4, 0.9, 1) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(indep.partial(0.4, 0.9, 2) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK_THROWS_AS(indep.partial(0.0, 0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(indep.partial(0.5, 0.5, 3), std::invalid_argument);

    // Finite-difference agreement with the cdf away from boundaries. The
    // five-point stencil keeps the oracle accurate even where the partial
    // is orders of magnitude below the cdf (strong-dependence corners).
    const auto fd5 = [](auto f, double x) {
        const double h = 1e-4;
        return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h);
    };
    for (const auto& c : constructible_copulas()) {
        for (double u : {0.2, 0.5, 0.8}) {
            for (double v : {0.3, 0.6, 0.9}) {
                const double fd1 = fd5([&](double s) { return c.cdf(s, v); }, u);
                CHECK(rel_err(c.partial(u, v, 1), fd1) < 1e-4);
                const double fd2 = fd5([&](double s) { return c.cdf(u, s); }, v);
                CHECK(rel_err(c.partial(u, v, 2), fd2) < 1e-4);
            }
        }
    }

    const auto clayton = make_copula(CopulaFamily::Clayton, 2.0);
    const double fd =
        (clayton.cdf(0.5 + 1e-6, 0.5) - clayton.cdf(0.5 - 1e-6, 0.5)) / 2e-6;
    CHECK(rel_err(clayton.partial(0.5, 0.5, 1), fd) < 1e-5);
}

TEST_CASE("partials tend to one at the upper corner for bounded-slope generators") {
    // Networks and the Clayton/Frank/Independence families have a finite
    // negative generator slope at zero, so both conditionals approach 1.
    std::vector<ArchimedeanCopula> cs;
    cs.push_back(make_copula(CopulaFamily::Clayton, 2.0));
    cs.push_back(make_copula(CopulaFamily::Frank, 5.7));
    cs.push_back(make_copula(CopulaFamily::Independence, 0.0));
    for (std::uint64_t s : {7u, 8u, 9u}) cs.push_back(make_network_copula(s));

    for (const auto& c : cs) {
        double prev1 = 0.0, prev2 = 0.0;
        for (double eps : {1e-3, 1e-5, 1e-7}) {
            const double u = 1.0 - eps;
            const double p1 = c.partial(u, u, 1);
            const double p2 = c.partial(u, u, 2);
            CHECK(p1 >= prev1);
            CHECK(p2 >= prev2);
            prev1 = p1;
            prev2 = p2;
        }
        CHECK(prev1 >= 1.0 - 1e-3);
        CHECK(prev2 >= 1.0 - 1e-3);
        CHECK(c.partial(1.0 - 1e-6, 1.0 - 1e-6, 1) >= 0.999);
    }
    // At v = 1 exactly the first partial is 1 for every generator.
    for (const auto& c : constructible_copulas()) {
        CHECK(c.partial(0.999999, 1.0, 1) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("gumbel upper-tail limit of the conditional") {
    // Unbounded generator slope at zero: the corner limit is 2^(1/theta - 1),
    // not 1, matching the family's upper tail dependence.
    for (double theta : {1.5, 2.0, 4.0}) {
        const auto c = make_copula(CopulaFamily::Gumbel, theta);
        const double limit = std::pow(2.0, 1.0 / theta - 1.0);
        CHECK(std::abs(c.partial(1.0 - 1e-7, 1.0 - 1e-7, 1) - limit) < 1e-3);
    }
}

TEST_CASE("density: values, integration, mixed finite differences") {
    const auto indep = make_copula(CopulaFamily::Independence, 0.0);
    CHECK(indep.density(0.2, 0.8) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(indep.density(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(indep.density(0.5, 1.0), std::invalid_argument);

    std::vector<ArchimedeanCopula> cs;
    cs.push_back(make_copula(CopulaFamily::Clayton, 2.0));
    cs.push_back(make_copula(CopulaFamily::Frank, 5.7));
    cs.push_back(make_copula(CopulaFamily::Gumbel, 2.0));
    cs.push_back(make_copula(CopulaFamily::Independence, 0.0));
    cs.push_back(make_network_copula(303));
    for (const auto& c : cs) {
        const int n = 200;
        double integral = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double d = c.density((i + 0.5) / n, (j + 0.5) / n);
                CHECK(d >= 0.0);
                integral += d;
            }
        }
        integral /= static_cast<double>(n) * n;
        CHECK(std::abs(integral - 1.0) < 1e-2);
    }

    const auto clayton = make_copula(CopulaFamily::Clayton, 2.0);
    const double h = 1e-4;
    const double mixed = (clayton.cdf(0.5 + h, 0.5 + h) - clayton.cdf(0.5 + h, 0.5 - h) -
                          clayton.cdf(0.5 - h, 0.5 + h) + clayton.cdf(0.5 - h, 0.5 - h)) /
                         (4.0 * h * h);
    CHECK(rel_err(clayton.density(0.5, 0.5), mixed) < 1e-3);
}

TEST_CASE("kendall tau closed forms and inverses") {
    CHECK(kendall_tau(CopulaFamily::Clayton, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kendall_tau(CopulaFamily::Gumbel, 1.0) == 0.0);
    CHECK(std::abs(kendall_tau(CopulaFamily::Frank, 1e-6)) < 1e-6);
    CHECK(kendall_tau(CopulaFamily::Independence, 0.0) == 0.0);

    for (double tau : {0.25, 0.5, 0.75}) {
        for (auto fam : {CopulaFamily::Clayton, CopulaFamily::Frank, CopulaFamily::Gumbel}) {
            const double theta = theta_from_tau(fam, tau);
            CHECK(kendall_tau(fam, theta) == doctest::Approx(tau).epsilon(1e-9));
        }
    }
    // Frank supports negative dependence.
    const double th_neg = theta_from_tau(CopulaFamily::Frank, -0.4);
    CHECK(th_neg < 0.0);
    CHECK(kendall_tau(CopulaFamily::Frank, th_neg) == doctest::Approx(-0.4).epsilon(1e-9));

    CHECK_THROWS_AS(theta_from_tau(CopulaFamily::Clayton, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(theta_from_tau(CopulaFamily::Clayton, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(theta_from_tau(CopulaFamily::Gumbel, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(kendall_tau(CopulaFamily::Clayton, -1.0), std::invalid_argument);

    // Debye function against an independent fixed-grid Simpson rule.
    for (double theta : {0.5, 2.0, 5.0, 12.0}) {
        const int n = 100000;  // even
        const double h = theta / n;
        double acc = 1.0;  // integrand at 0
        for (int i = 1; i < n; ++i) {
            const double t = i * h;
            acc += (i % 2 == 1 ? 4.0 : 2.0) * t / std::expm1(t);
        }
        acc += theta / std::expm1(theta);
        const double ref = acc * h / 3.0 / theta;
        CHECK(debye1(theta) == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("joint sampling recovers the analytic tau") {
    const auto indep = make_copula(CopulaFamily::Independence, 0.0);
    const auto pairs = indep.sample_joint(100000, 12345);
    // v equals the conditioning uniform exactly under independence.
    Rng rng(777);
    const auto p = indep.sample_pair(rng);
    Rng rng2(777);
    const double u = rng2.uniform(), w = rng2.uniform();
    CHECK(p[0] == u);
    CHECK(p[1] == w);
    CHECK(std::abs(empirical_kendall_tau(pairs)) < 0.01);

    const auto clayton = make_copula(CopulaFamily::Clayton, 2.0);
    CHECK(std::abs(empirical_kendall_tau(clayton.sample_joint(100000, 5)) - 0.5) < 0.02);

    const auto gumbel = make_copula(CopulaFamily::Gumbel, 2.0);
    CHECK(std::abs(empirical_kendall_tau(gumbel.sample_joint(100000, 6)) - 0.5) < 0.02);

    CHECK_THROWS_AS(indep.sample_joint(0, 1), std::invalid_argument);
}

TEST_CASE("network copula sampler matches its quadrature tau") {
    for (std::uint64_t seed : {11u, 12u}) {
        const auto c = make_network_copula(seed);
        const double tau_q = tau_by_quadrature(c);
        const double tau_hat = empirical_kendall_tau(c.sample_joint(10000, seed + 1));
        CHECK(std::abs(tau_hat - tau_q) < 0.05);
    }
}

TEST_CASE("conditional sampling round trips and dual paths") {
    const auto indep = make_copula(CopulaFamily::Independence, 0.0);
    CHECK(indep.sample_conditional(0.4, 0.33) == doctest::Approx(0.33).epsilon(1e-12));

    const auto clayton = make_copula(CopulaFamily::Clayton, 2.0);
    const double closed = clayton.sample_conditional(0.5, 0.5);
    const double rooted = clayton.conditional_by_rootfind(0.5, 0.5);
    CHECK(std::abs(closed - rooted) < 1e-9);
    const double theta = 2.0;
    const double hand =
        std::pow((std::pow(0.5, -theta / (1.0 + theta)) - 1.0) * std::pow(0.5, -theta) + 1.0,
                 -1.0 / theta);
    CHECK(closed == doctest::Approx(hand).epsilon(1e-12));

    std::vector<ArchimedeanCopula> cs;
    cs.push_back(make_copula(CopulaFamily::Clayton, 2.0));
    cs.push_back(make_copula(CopulaFamily::Frank, 5.7));
    cs.push_back(make_copula(CopulaFamily::Gumbel, 2.0));
    cs.push_back(make_copula(CopulaFamily::Independence, 0.0));
    cs.push_back(make_network_copula(404));
    for (const auto& c : cs) {
        for (int i = 1; i <= 5; ++i) {
            for (int j = 1; j <= 5; ++j) {
                const double u = i / 6.0, w = j / 6.0;
                const double v = c.sample_conditional(u, w);
                CHECK(std::abs(c.partial(u, v, 1) - w) < 1e-9);
            }
        }
    }
}

TEST_CASE("generator json dispatch covers every kind") {
    for (const auto& c : {make_copula(CopulaFamily::Clayton, 2.0),
                          make_copula(CopulaFamily::Frank, -3.0),
                          make_copula(CopulaFamily::Gumbel, 1.5),
                          make_copula(CopulaFamily::Independence, 0.0),
                          make_network_copula(55)}) {
        const auto j = c.generator().to_json();
        const auto restored = generator_from_json(nlohmann::json::parse(j.dump()));
        CHECK(restored->value(0.9) == c.generator().value(0.9));
        CHECK(restored->param_count() == c.generator().param_count());
    }
}
