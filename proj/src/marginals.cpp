#include "copsurv/marginals.hpp"

#include <cmath>
#include <stdexcept>

#include "copsurv/rng.hpp"

namespace copsurv {

// ---------------------------------------------------------------------------
// RiskFunction
// ---------------------------------------------------------------------------

RiskFunction RiskFunction::linear(std::vector<double> beta) {
    if (beta.empty()) throw std::invalid_argument("linear risk needs >= 1 coefficient");
    RiskFunction r;
    r.kind_ = Kind::Linear;
    r.input_dim_ = static_cast<int>(beta.size());
    r.weights_ = std::move(beta);
    return r;
}

RiskFunction RiskFunction::linear_zero(int dim) {
    if (dim < 1) throw std::invalid_argument("linear risk needs dim >= 1");
    return linear(std::vector<double>(dim, 0.0));
}

RiskFunction RiskFunction::mlp(int input_dim, std::vector<int> hidden, std::uint64_t init_seed) {
    if (input_dim < 1) throw std::invalid_argument("mlp risk needs input_dim >= 1");
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("mlp hidden widths must be >= 1");
    }
    RiskFunction r;
    r.kind_ = Kind::Mlp;
    r.input_dim_ = input_dim;
    r.hidden_ = std::move(hidden);

    std::size_t n = 0;
    int in = input_dim;
    for (int h : r.hidden_) {
        n += static_cast<std::size_t>(h) * in + h;
        in = h;
    }
    n += in + 1;  // scalar output layer
    r.weights_.resize(n);

    Rng rng(init_seed);
    std::size_t k = 0;
    in = input_dim;
    auto init_layer = [&](int out) {
        const double s = 1.0 / std::sqrt(static_cast<double>(in));
        for (int i = 0; i < out * in; ++i) r.weights_[k++] = rng.uniform(-s, s);
        for (int i = 0; i < out; ++i) r.weights_[k++] = 0.0;
        in = out;
    };
    for (int h : r.hidden_) init_layer(h);
    init_layer(1);
    return r;
}

RiskFunction RiskFunction::sine(double amplitude, double frequency, double phase) {
    RiskFunction r;
    r.kind_ = Kind::Sine;
    r.input_dim_ = 1;
    r.amplitude_ = amplitude;
    r.frequency_ = frequency;
    r.phase_ = phase;
    return r;
}

void RiskFunction::set_params(const std::vector<double>& w) {
    if (w.size() != weights_.size()) {
        throw std::invalid_argument("risk function parameter size mismatch");
    }
    weights_ = w;
}

double RiskFunction::value(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_dim_) {
        throw std::invalid_argument("risk function covariate dim mismatch");
    }
    switch (kind_) {
        case Kind::Linear: {
            double s = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) s += weights_[j] * x[j];
            return s;
        }
        case Kind::Sine:
            return amplitude_ * std::sin(frequency_ * x[0] + phase_);
        case Kind::Mlp: {
            std::vector<double> act = x, next;
            std::size_t k = 0;
            int in = input_dim_;
            for (int h : hidden_) {
                next.assign(h, 0.0);
                for (int i = 0; i < h; ++i) {
                    double z = weights_[k + static_cast<std::size_t>(h) * in + i];
                    for (int j = 0; j < in; ++j) {
                        z += weights_[k + static_cast<std::size_t>(i) * in + j] * act[j];
                    }
                    next[i] = std::tanh(z);
                }
                k += static_cast<std::size_t>(h) * in + h;
                act.swap(next);
                in = h;
            }
            double psi = weights_[k + in];
            for (int j = 0; j < in; ++j) psi += weights_[k + j] * act[j];
            return psi;
        }
    }
    throw std::logic_error("unknown risk kind");
}

double RiskFunction::value_with_grads(const std::vector<double>& x,
                                      std::vector<double>& dpsi) const {
    if (static_cast<int>(x.size()) != input_dim_) {
        throw std::invalid_argument("risk function covariate dim mismatch");
    }
    dpsi.assign(weights_.size(), 0.0);
    switch (kind_) {
        case Kind::Linear: {
            double s = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                s += weights_[j] * x[j];
                dpsi[j] = x[j];
            }
            return s;
        }
        case Kind::Sine:
            return amplitude_ * std::sin(frequency_ * x[0] + phase_);
        case Kind::Mlp: {
            // Forward pass keeping pre-activation tape.
            std::vector<std::vector<double>> acts;  // post-activation per layer
            acts.push_back(x);
            std::size_t k = 0;
            int in = input_dim_;
            for (int h : hidden_) {
                std::vector<double> a(h);
                for (int i = 0; i < h; ++i) {
                    double z = 0.0;
                    for (int j = 0; j < in; ++j) z += weights_[k + static_cast<std::size_t>(i) * in + j] * acts.back()[j];
                    z += weights_[k + static_cast<std::size_t>(h) * in + i];
                    a[i] = std::tanh(z);
                }
                k += static_cast<std::size_t>(h) * in + h;
                acts.push_back(std::move(a));
                in = h;
            }
            double psi = weights_[k + in];  // output bias
            for (int j = 0; j < in; ++j) psi += weights_[k + j] * acts.back()[j];

            // Backward pass.
            std::vector<double> delta(in);
            for (int j = 0; j < in; ++j) {
                dpsi[k + j] = acts.back()[j];
                delta[j] = weights_[k + j];
            }
            dpsi[k + in] = 1.0;
            for (int l = static_cast<int>(hidden_.size()) - 1; l >= 0; --l) {
                const int h = hidden_[l];
                const int lin = (l == 0) ? input_dim_ : hidden_[l - 1];
                k -= static_cast<std::size_t>(h) * lin + h;
                std::vector<double> prev_delta(lin, 0.0);
                for (int i = 0; i < h; ++i) {
                    const double a = acts[l + 1][i];
                    const double dz = delta[i] * (1.0 - a * a);  // tanh'
                    dpsi[k + static_cast<std::size_t>(h) * lin + i] = dz;
                    for (int j = 0; j < lin; ++j) {
                        dpsi[k + static_cast<std::size_t>(i) * lin + j] = dz * acts[l][j];
                        prev_delta[j] += dz * weights_[k + static_cast<std::size_t>(i) * lin + j];
                    }
                }
                delta = std::move(prev_delta);
            }
            return psi;
        }
    }
    throw std::logic_error("unknown risk kind");
}

nlohmann::json RiskFunction::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case Kind::Linear:
            j["kind"] = "linear";
            j["beta"] = weights_;
            break;
        case Kind::Mlp:
            j["kind"] = "mlp";
            j["input_dim"] = input_dim_;
            j["hidden"] = hidden_;
            j["weights"] = weights_;
            break;
        case Kind::Sine:
            j["kind"] = "sine";
            j["amplitude"] = amplitude_;
            j["frequency"] = frequency_;
            j["phase"] = phase_;
            break;
    }
    return j;
}

RiskFunction RiskFunction::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        return linear(j.at("beta").get<std::vector<double>>());
    }
    if (kind == "mlp") {
        RiskFunction r = mlp(j.at("input_dim").get<int>(), j.at("hidden").get<std::vector<int>>(), 0);
        r.set_params(j.at("weights").get<std::vector<double>>());
        return r;
    }
    if (kind == "sine") {
        return sine(j.at("amplitude").get<double>(), j.at("frequency").get<double>(),
                    j.at("phase").get<double>());
    }
    throw std::invalid_argument("unknown risk kind: " + kind);
}

// ---------------------------------------------------------------------------
// Normal helpers
// ---------------------------------------------------------------------------

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Acklam's rational approximation refined by two Newton steps.
double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("inverse normal cdf argument must be in (0,1)");
    }
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double err = normal_cdf(x) - p;
        const double pdf = normal_pdf(x);
        if (pdf > 0.0) x -= err / pdf;
    }
    return x;
}

// ---------------------------------------------------------------------------
// SurvivalMarginal
// ---------------------------------------------------------------------------

std::string marginal_family_name(MarginalFamily f) {
    return f == MarginalFamily::WeibullCoxPH ? "weibull" : "lognormal";
}

SurvivalMarginal SurvivalMarginal::weibull(double shape_nu, double scale_rho, RiskFunction risk) {
    if (!(shape_nu > 0.0) || !(scale_rho > 0.0)) {
        throw std::invalid_argument("weibull requires nu > 0 and rho > 0");
    }
    return SurvivalMarginal(MarginalFamily::WeibullCoxPH, std::log(shape_nu),
                            std::log(scale_rho), std::move(risk));
}

SurvivalMarginal SurvivalMarginal::lognormal(double mu0, double sigma, RiskFunction risk) {
    if (!(sigma > 0.0)) throw std::invalid_argument("lognormal requires sigma > 0");
    return SurvivalMarginal(MarginalFamily::LogNormal, mu0, std::log(sigma), std::move(risk));
}

double SurvivalMarginal::shape_nu() const {
    if (family_ != MarginalFamily::WeibullCoxPH) throw std::logic_error("not a weibull marginal");
    return std::exp(raw0_);
}

double SurvivalMarginal::scale_rho() const {
    if (family_ != MarginalFamily::WeibullCoxPH) throw std::logic_error("not a weibull marginal");
    return std::exp(raw1_);
}

double SurvivalMarginal::mu0() const {
    if (family_ != MarginalFamily::LogNormal) throw std::logic_error("not a lognormal marginal");
    return raw0_;
}

double SurvivalMarginal::sigma() const {
    if (family_ != MarginalFamily::LogNormal) throw std::logic_error("not a lognormal marginal");
    return std::exp(raw1_);
}

void SurvivalMarginal::check_args(double t, const std::vector<double>& x) const {
    if (std::isnan(t) || t < 0.0) {
        throw std::invalid_argument("survival time must be nonnegative");
    }
    if (static_cast<int>(x.size()) != risk_.input_dim()) {
        throw std::invalid_argument("covariate dimension mismatch");
    }
}

double SurvivalMarginal::survival(double t, const std::vector<double>& x) const {
    check_args(t, x);
    const double psi = risk_.value(x);
    if (family_ == MarginalFamily::WeibullCoxPH) {
        const double nu = std::exp(raw0_), rho = std::exp(raw1_);
        return std::exp(-std::pow(t / rho, nu) * std::exp(psi));
    }
    if (t == 0.0) return 1.0;
    const double sigma = std::exp(raw1_);
    const double y = (std::log(t) - (raw0_ - psi)) / sigma;
    return 1.0 - normal_cdf(y);
}

double SurvivalMarginal::density(double t, const std::vector<double>& x) const {
    check_args(t, x);
    const double psi = risk_.value(x);
    if (family_ == MarginalFamily::WeibullCoxPH) {
        const double nu = std::exp(raw0_), rho = std::exp(raw1_);
        const double haz = nu / rho * std::pow(t / rho, nu - 1.0) * std::exp(psi);
        return std::exp(-std::pow(t / rho, nu) * std::exp(psi)) * haz;
    }
    if (t == 0.0) return 0.0;
    const double sigma = std::exp(raw1_);
    const double y = (std::log(t) - (raw0_ - psi)) / sigma;
    return normal_pdf(y) / (sigma * t);
}

double SurvivalMarginal::inverse_survival(double u, const std::vector<double>& x) const {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::invalid_argument("inverse survival argument must be in (0,1)");
    }
    if (static_cast<int>(x.size()) != risk_.input_dim()) {
        throw std::invalid_argument("covariate dimension mismatch");
    }
    const double psi = risk_.value(x);
    if (family_ == MarginalFamily::WeibullCoxPH) {
        const double nu = std::exp(raw0_), rho = std::exp(raw1_);
        return std::pow(-std::log(u) / std::exp(psi), 1.0 / nu) * rho;
    }
    const double sigma = std::exp(raw1_);
    return std::exp((raw0_ - psi) + sigma * inverse_normal_cdf(1.0 - u));
}

void SurvivalMarginal::eval_with_grads(double t, const std::vector<double>& x, double& surv,
                                       double& dens, std::vector<double>& dsurv,
                                       std::vector<double>& ddens) const {
    check_args(t, x);
    const std::size_t n = param_count();
    dsurv.assign(n, 0.0);
    ddens.assign(n, 0.0);

    std::vector<double> dpsi;
    const double psi = risk_.value_with_grads(x, dpsi);

    double ds_dpsi = 0.0, df_dpsi = 0.0;
    if (family_ == MarginalFamily::WeibullCoxPH) {
        const double nu = std::exp(raw0_), rho = std::exp(raw1_);
        const double z = t / rho;
        const double cumhaz = std::pow(z, nu) * std::exp(psi);
        const double haz = nu / rho * std::pow(z, nu - 1.0) * std::exp(psi);
        surv = std::exp(-cumhaz);
        dens = surv * haz;
        if (cumhaz > 0.0) {
            const double lz = std::log(z);
            dsurv[0] = -surv * cumhaz * nu * lz;
            dsurv[1] = surv * nu * cumhaz;
            ds_dpsi = -surv * cumhaz;
            ddens[0] = dsurv[0] * haz + surv * haz * (1.0 + nu * lz);
            ddens[1] = dsurv[1] * haz - surv * nu * haz;
            df_dpsi = surv * haz * (1.0 - cumhaz);
        } else {
            // t == 0: S is identically 1 and only the density moves. The
            // shape derivative is taken as its one-sided limit (zero).
            ddens[0] = 0.0;
            ddens[1] = -nu * dens;
            df_dpsi = dens;
        }
    } else {
        if (t == 0.0) {
            surv = 1.0;
            dens = 0.0;
        } else {
            const double sigma = std::exp(raw1_);
            const double y = (std::log(t) - (raw0_ - psi)) / sigma;
            const double pdfy = normal_pdf(y);
            surv = 1.0 - normal_cdf(y);
            dens = pdfy / (sigma * t);
            dsurv[0] = pdfy / sigma;           // d / d mu0
            dsurv[1] = pdfy * y;               // d / d log sigma
            ds_dpsi = -pdfy / sigma;
            ddens[0] = dens * y / sigma;
            ddens[1] = dens * (y * y - 1.0);
            df_dpsi = -dens * y / sigma;
        }
    }
    for (std::size_t k = 0; k < dpsi.size(); ++k) {
        dsurv[2 + k] = ds_dpsi * dpsi[k];
        ddens[2 + k] = df_dpsi * dpsi[k];
    }
}

std::vector<double> SurvivalMarginal::params() const {
    std::vector<double> p{raw0_, raw1_};
    const auto& rw = risk_.params();
    p.insert(p.end(), rw.begin(), rw.end());
    return p;
}

void SurvivalMarginal::set_params(const std::vector<double>& p) {
    if (p.size() != param_count()) {
        throw std::invalid_argument("marginal parameter size mismatch");
    }
    raw0_ = p[0];
    raw1_ = p[1];
    risk_.set_params(std::vector<double>(p.begin() + 2, p.end()));
}

nlohmann::json SurvivalMarginal::to_json() const {
    nlohmann::json j;
    j["family"] = marginal_family_name(family_);
    j["params"] = std::vector<double>{raw0_, raw1_};
    j["risk"] = risk_.to_json();
    return j;
}

SurvivalMarginal SurvivalMarginal::from_json(const nlohmann::json& j) {
    const std::string fam = j.at("family").get<std::string>();
    const auto raw = j.at("params").get<std::vector<double>>();
    if (raw.size() != 2) throw std::invalid_argument("marginal json: expected two family params");
    RiskFunction risk = RiskFunction::from_json(j.at("risk"));
    if (fam == "weibull") {
        return SurvivalMarginal(MarginalFamily::WeibullCoxPH, raw[0], raw[1], std::move(risk));
    }
    if (fam == "lognormal") {
        return SurvivalMarginal(MarginalFamily::LogNormal, raw[0], raw[1], std::move(risk));
    }
    throw std::invalid_argument("unknown marginal family: " + fam);
}

}  // namespace copsurv
