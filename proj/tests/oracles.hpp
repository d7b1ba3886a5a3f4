// Independent test oracles: a symbolic exponential-mixture expansion of the
// generator network, finite-difference helpers, and a brute-force Kendall
// tau. These deliberately avoid the library's evaluation paths.
#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "copsurv/generator.hpp"

namespace copsurv::testing {

struct ExpMixture {
    std::vector<double> coef;
    std::vector<double> rate;

    double eval(double t, int deriv_order = 0) const {
        double sum = 0.0;
        for (std::size_t k = 0; k < coef.size(); ++k) {
            double term = coef[k] * std::exp(-rate[k] * t);
            for (int d = 0; d < deriv_order; ++d) term *= -rate[k];
            sum += term;
        }
        return sum;
    }
};

// Multiplies the layer recursion out into an explicit mixture
// sum_k a_k exp(-b_k t). Feasible for small widths only.
inline ExpMixture expand_network(const GeneratorNetwork& g) {
    std::vector<ExpMixture> prev(1);
    prev[0].coef = {1.0};
    prev[0].rate = {0.0};

    const auto& mix = g.mixing();
    const auto& rates = g.rates();
    int in_width = 1;
    for (int l = 0; l < g.depth(); ++l) {
        const int width = g.widths()[l];
        std::vector<ExpMixture> cur(width);
        for (int i = 0; i < width; ++i) {
            for (int j = 0; j < in_width; ++j) {
                const double a = mix[l][static_cast<std::size_t>(i) * in_width + j];
                for (std::size_t k = 0; k < prev[j].coef.size(); ++k) {
                    cur[i].coef.push_back(a * prev[j].coef[k]);
                    cur[i].rate.push_back(rates[l][i] + prev[j].rate[k]);
                }
            }
        }
        prev = std::move(cur);
        in_width = width;
    }

    ExpMixture out;
    const auto& w = g.output_weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t k = 0; k < prev[i].coef.size(); ++k) {
            out.coef.push_back(w[i] * prev[i].coef[k]);
            out.rate.push_back(prev[i].rate[k]);
        }
    }
    return out;
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double second_central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline double rel_err(double got, double want) {
    const double scale = std::max(std::abs(want), 1e-12);
    return std::abs(got - want) / scale;
}

// O(n^2) concordance count; pairs with a zero product are not discordant.
inline double brute_force_kendall_tau(const std::vector<std::pair<double, double>>& p) {
    long long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            const double prod = (p[i].first - p[j].first) * (p[i].second - p[j].second);
            if (prod < 0.0) {
                ++discordant;
            } else {
                ++concordant;
            }
        }
    }
    return static_cast<double>(concordant - discordant) /
           (0.5 * static_cast<double>(p.size()) * static_cast<double>(p.size() - 1));
}

}  // namespace copsurv::testing
