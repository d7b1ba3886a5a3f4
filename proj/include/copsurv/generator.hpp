#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "copsurv/rng.hpp"
#include "json.hpp"

namespace copsurv {

// phi and its first two derivatives in t at a single abscissa.
struct GeneratorPoint {
    double phi;
    double d1;
    double d2;
};

// Archimedean generator phi: [0,inf] -> [0,1], strictly decreasing,
// phi(0) = 1, phi(inf) = 0. Implementations are immutable during
// evaluation; all const methods are safe to call concurrently.
class Generator {
public:
    virtual ~Generator() = default;

    virtual GeneratorPoint point(double t) const = 0;

    double value(double t) const { return point(t).phi; }

    // phi'(t) (order 1) or phi''(t) (order 2).
    double deriv(double t, int order) const;

    // t with |phi(t) - u| < tol for u in (0,1]. Default implementation is
    // Newton with a maintained bisection bracket; closed-form families
    // override with the exact inverse.
    virtual double inverse(double u) const;

    virtual std::size_t param_count() const = 0;
    virtual std::vector<double> raw_params() const = 0;
    virtual void set_raw_params(const std::vector<double>& p) = 0;

    // dphi[k] = d phi(t) / d p_k and dd1[k] = d phi'(t) / d p_k for every
    // raw parameter p_k, in raw_params() order. Vectors are resized.
    virtual void param_grads(double t, std::vector<double>& dphi,
                             std::vector<double>& dd1) const = 0;

    virtual std::unique_ptr<Generator> clone() const = 0;
    virtual nlohmann::json to_json() const = 0;

protected:
    // Shared Newton/bisection inverse used by network generators.
    double inverse_newton(double u, double tol, int max_iter) const;
};

// Completely monotone generator network: each hidden unit is a negative
// exponential times a convex combination of the previous layer, so the
// whole network expands to a finite mixture sum_k a_k exp(-b_k t) with
// a_k >= 0, sum a_k = 1, b_k > 0.
//
// Raw parameterization: mixing rows go through softmax (row-stochastic),
// rates through exp (strictly positive). Raw parameter order is, per
// hidden layer, the row-major mixing matrix then the rate vector, followed
// by the output mixing weights.
class GeneratorNetwork final : public Generator {
public:
    // widths = H_1..H_L, all >= 1. Raw parameters start at zero (uniform
    // mixing, all rates 1).
    explicit GeneratorNetwork(std::vector<int> widths);

    // Raw mixing entries ~ U[0,1], raw rate entries ~ U(0,2).
    static GeneratorNetwork random(const std::vector<int>& widths, Rng& rng);
    static GeneratorNetwork random(const std::vector<int>& widths, std::uint64_t seed);

    GeneratorPoint point(double t) const override;
    double inverse(double u) const override;

    std::size_t param_count() const override { return n_params_; }
    std::vector<double> raw_params() const override;
    void set_raw_params(const std::vector<double>& p) override;

    void param_grads(double t, std::vector<double>& dphi,
                     std::vector<double>& dd1) const override;

    std::unique_ptr<Generator> clone() const override {
        return std::make_unique<GeneratorNetwork>(*this);
    }

    nlohmann::json to_json() const override;
    static GeneratorNetwork from_json(const nlohmann::json& j);

    int depth() const { return static_cast<int>(widths_.size()); }
    const std::vector<int>& widths() const { return widths_; }

    // Effective (post-reparameterization) weights, for inspection/tests:
    // mixing()[l] is row-major H_l x H_{l-1}, rates()[l] has length H_l.
    const std::vector<std::vector<double>>& mixing() const { return a_; }
    const std::vector<std::vector<double>>& rates() const { return b_; }
    const std::vector<double>& output_weights() const { return out_w_; }

private:
    void refresh_effective();

    std::vector<int> widths_;
    std::size_t n_params_ = 0;

    // Raw parameters.
    std::vector<std::vector<double>> raw_a_;  // per layer, row-major H_l x H_{l-1}
    std::vector<std::vector<double>> raw_b_;  // per layer, H_l
    std::vector<double> raw_out_;             // H_L

    // Effective parameters, recomputed on every parameter update.
    std::vector<std::vector<double>> a_;
    std::vector<std::vector<double>> b_;
    std::vector<double> out_w_;
};

}  // namespace copsurv
