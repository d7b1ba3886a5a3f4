#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "copsurv/generator.hpp"
#include "copsurv/rng.hpp"

namespace copsurv {

enum class CopulaFamily { Clayton, Frank, Gumbel, Independence };

std::string family_name(CopulaFamily f);
CopulaFamily family_from_name(const std::string& name);

// Closed-form Archimedean generators. The outer generator phi maps
// [0,inf] -> [0,1]; the textbook tables usually list its inverse.
class ClosedFormGenerator : public Generator {
public:
    virtual CopulaFamily family() const = 0;
    virtual double theta() const = 0;

    // Conditional quantile v solving dC/du (u, v) = w when the family has
    // a closed form; families without one return nullopt and the copula
    // falls back to root finding.
    virtual std::optional<double> conditional_quantile(double u, double w) const {
        (void)u;
        (void)w;
        return std::nullopt;
    }

    nlohmann::json to_json() const override;
};

std::unique_ptr<ClosedFormGenerator> make_closed_form(CopulaFamily family, double theta);

// phi(t) = exp(-t)
class IndependenceGenerator final : public ClosedFormGenerator {
public:
    CopulaFamily family() const override { return CopulaFamily::Independence; }
    double theta() const override { return 0.0; }
    GeneratorPoint point(double t) const override;
    double inverse(double u) const override;
    std::optional<double> conditional_quantile(double u, double w) const override;
    std::size_t param_count() const override { return 0; }
    std::vector<double> raw_params() const override { return {}; }
    void set_raw_params(const std::vector<double>& p) override;
    void param_grads(double t, std::vector<double>& dphi,
                     std::vector<double>& dd1) const override;
    std::unique_ptr<Generator> clone() const override {
        return std::make_unique<IndependenceGenerator>(*this);
    }
};

// phi(t) = (1 + theta t)^(-1/theta), theta > 0
class ClaytonGenerator final : public ClosedFormGenerator {
public:
    explicit ClaytonGenerator(double theta);
    CopulaFamily family() const override { return CopulaFamily::Clayton; }
    double theta() const override { return theta_; }
    GeneratorPoint point(double t) const override;
    double inverse(double u) const override;
    std::optional<double> conditional_quantile(double u, double w) const override;
    std::size_t param_count() const override { return 1; }
    std::vector<double> raw_params() const override { return {theta_}; }
    void set_raw_params(const std::vector<double>& p) override;
    void param_grads(double t, std::vector<double>& dphi,
                     std::vector<double>& dd1) const override;
    std::unique_ptr<Generator> clone() const override {
        return std::make_unique<ClaytonGenerator>(*this);
    }

private:
    double theta_;
};

// phi(t) = -(1/theta) log(1 + exp(-t) (exp(-theta) - 1)), theta != 0
class FrankGenerator final : public ClosedFormGenerator {
public:
    explicit FrankGenerator(double theta);
    CopulaFamily family() const override { return CopulaFamily::Frank; }
    double theta() const override { return theta_; }
    GeneratorPoint point(double t) const override;
    double inverse(double u) const override;
    std::optional<double> conditional_quantile(double u, double w) const override;
    std::size_t param_count() const override { return 1; }
    std::vector<double> raw_params() const override { return {theta_}; }
    void set_raw_params(const std::vector<double>& p) override;
    void param_grads(double t, std::vector<double>& dphi,
                     std::vector<double>& dd1) const override;
    std::unique_ptr<Generator> clone() const override {
        return std::make_unique<FrankGenerator>(*this);
    }

private:
    double theta_;
};

// phi(t) = exp(-t^(1/theta)), theta >= 1
class GumbelGenerator final : public ClosedFormGenerator {
public:
    explicit GumbelGenerator(double theta);
    CopulaFamily family() const override { return CopulaFamily::Gumbel; }
    double theta() const override { return theta_; }
    GeneratorPoint point(double t) const override;
    double inverse(double u) const override;
    std::size_t param_count() const override { return 1; }
    std::vector<double> raw_params() const override { return {theta_}; }
    void set_raw_params(const std::vector<double>& p) override;
    void param_grads(double t, std::vector<double>& dphi,
                     std::vector<double>& dd1) const override;
    std::unique_ptr<Generator> clone() const override {
        return std::make_unique<GumbelGenerator>(*this);
    }

private:
    double theta_;
};

// Bivariate Archimedean copula C(u,v) = phi(phi^{-1}(u) + phi^{-1}(v)).
// Stateless view over an immutable generator; thread-safe.
class ArchimedeanCopula {
public:
    explicit ArchimedeanCopula(std::shared_ptr<const Generator> gen);

    double cdf(double u, double v) const;

    // dC/du_which; a conditional survival-type quantity in [0,1].
    double partial(double u, double v, int which) const;

    // Copula density phi''(a+b) / (phi'(a) phi'(b)).
    double density(double u, double v) const;

    // Conditional-distribution sampling: one (u,v) pair per call.
    std::array<double, 2> sample_pair(Rng& rng) const;
    std::vector<std::array<double, 2>> sample_joint(std::size_t n, std::uint64_t seed) const;

    // v with partial(u, v, 1) = w; closed form when the family has one.
    double sample_conditional(double u, double w) const;
    // Same quantity via bracketed Newton, regardless of family (used to
    // cross-check closed forms).
    double conditional_by_rootfind(double u, double w) const;

    const Generator& generator() const { return *gen_; }
    std::shared_ptr<const Generator> generator_ptr() const { return gen_; }

private:
    std::shared_ptr<const Generator> gen_;
};

// Closed-form Kendall's tau; Frank goes through the first Debye function.
double kendall_tau(CopulaFamily family, double theta);
double theta_from_tau(CopulaFamily family, double tau);
double debye1(double theta);

// Grid/scatter CSV files for contour and scatter plots:
// <prefix>_cdf.csv (u,v,C), <prefix>_logpdf.csv (u,v,log_density; grid is
// strictly interior), <prefix>_scatter.csv (u,v samples).
void export_copula_plot_data(const ArchimedeanCopula& copula,
                             const std::filesystem::path& dir,
                             const std::string& prefix, int resolution,
                             std::size_t scatter_n, std::uint64_t seed);

// Serialization entry point shared by network and closed-form generators.
std::shared_ptr<Generator> generator_from_json(const nlohmann::json& j);

}  // namespace copsurv
