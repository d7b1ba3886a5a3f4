#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace copsurv {

// Scalar log-risk psi(x) applied to covariates. Linear and MLP kinds are
// trainable; the sine kind is a fixed functional form used by the
// nonlinear synthetic data generator.
class RiskFunction {
public:
    enum class Kind { Linear, Mlp, Sine };

    static RiskFunction linear(std::vector<double> beta);
    static RiskFunction linear_zero(int dim);
    static RiskFunction mlp(int input_dim, std::vector<int> hidden, std::uint64_t init_seed);
    static RiskFunction sine(double amplitude, double frequency, double phase);

    Kind kind() const { return kind_; }
    int input_dim() const { return input_dim_; }

    double value(const std::vector<double>& x) const;
    // Fills dpsi (resized to param_count) with d psi / d w_k; returns psi.
    double value_with_grads(const std::vector<double>& x, std::vector<double>& dpsi) const;

    std::size_t param_count() const { return weights_.size(); }
    const std::vector<double>& params() const { return weights_; }
    void set_params(const std::vector<double>& w);

    nlohmann::json to_json() const;
    static RiskFunction from_json(const nlohmann::json& j);

private:
    RiskFunction() = default;

    Kind kind_ = Kind::Linear;
    int input_dim_ = 0;
    std::vector<int> hidden_;        // MLP only
    std::vector<double> weights_;    // trainable parameters (empty for sine)
    double amplitude_ = 0.0, frequency_ = 0.0, phase_ = 0.0;  // sine only
};

enum class MarginalFamily { WeibullCoxPH, LogNormal };

std::string marginal_family_name(MarginalFamily f);

// Parametric conditional survival marginal S(t|x) with density
// f(t|x) = -dS/dt. Trainable parameters are the raw vector
// [family params..., risk weights...] where positive quantities are kept
// in log space:
//   WeibullCoxPH: raw = [log nu, log rho];  S = exp(-(t/rho)^nu e^psi(x))
//   LogNormal:    raw = [mu0, log sigma];   log T ~ N(mu0 - psi(x), sigma^2)
class SurvivalMarginal {
public:
    static SurvivalMarginal weibull(double shape_nu, double scale_rho, RiskFunction risk);
    static SurvivalMarginal lognormal(double mu0, double sigma, RiskFunction risk);

    MarginalFamily family() const { return family_; }
    int covariate_dim() const { return risk_.input_dim(); }
    const RiskFunction& risk() const { return risk_; }

    double shape_nu() const;   // Weibull only
    double scale_rho() const;  // Weibull only
    double mu0() const;        // LogNormal only
    double sigma() const;      // LogNormal only

    double survival(double t, const std::vector<double>& x) const;
    double density(double t, const std::vector<double>& x) const;

    // t with S(t|x) = u, u in (0,1); the Weibull case is the inverse
    // transform used by the synthetic data generator.
    double inverse_survival(double u, const std::vector<double>& x) const;

    // S, f and their gradients w.r.t. every raw parameter.
    void eval_with_grads(double t, const std::vector<double>& x, double& surv, double& dens,
                         std::vector<double>& dsurv, std::vector<double>& ddens) const;

    std::size_t param_count() const { return 2 + risk_.param_count(); }
    std::vector<double> params() const;
    void set_params(const std::vector<double>& p);

    nlohmann::json to_json() const;
    static SurvivalMarginal from_json(const nlohmann::json& j);

private:
    SurvivalMarginal(MarginalFamily family, double raw0, double raw1, RiskFunction risk)
        : family_(family), raw0_(raw0), raw1_(raw1), risk_(std::move(risk)) {}

    void check_args(double t, const std::vector<double>& x) const;

    MarginalFamily family_;
    double raw0_;  // log nu | mu0
    double raw1_;  // log rho | log sigma
    RiskFunction risk_;
};

// Standard normal helpers (used by the log-normal family).
double normal_cdf(double x);
double normal_pdf(double x);
double inverse_normal_cdf(double p);

}  // namespace copsurv
