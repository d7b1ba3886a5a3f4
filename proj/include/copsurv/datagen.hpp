#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "copsurv/copula.hpp"
#include "copsurv/likelihood.hpp"

namespace copsurv {

// Copula over latent (event, censoring) quantiles; tau = 0 degenerates to
// the independence copula for every family.
std::shared_ptr<Generator> make_tau_generator(CopulaFamily family, double tau);

struct SyntheticSpec {
    int n = 5000;
    int covariate_dim = 1;
    SurvivalMarginal event_marginal;
    SurvivalMarginal censor_marginal;
    CopulaFamily family = CopulaFamily::Independence;
    double theta = 0.0;
    std::uint64_t seed = 0;
    std::string name = "custom";

    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticSpec from_json(const nlohmann::json& j);
};

struct GroundTruth {
    std::vector<double> latent_event;
    std::vector<double> latent_censor;
    SurvivalMarginal event_marginal;   // the generating conditional survival
    SurvivalMarginal censor_marginal;
};

// Inverse-transform sampling through copula-linked quantiles: per record,
// draw (u1,u2) from the copula, map through the Weibull transforms, keep
// (x, min(T,U), 1[T<U]). Records use counter-based RNG substreams, so
// output is deterministic and order-independent.
std::pair<SurvivalDataset, GroundTruth> generate_synthetic(const SyntheticSpec& spec);

// Ten U[0,1] covariates with independently drawn linear risk coefficients.
SyntheticSpec linear_risk_spec(CopulaFamily family, double tau, int n, std::uint64_t seed);
// One U[0,1] covariate with sinusoidal risks.
SyntheticSpec nonlinear_risk_spec(CopulaFamily family, double tau, int n, std::uint64_t seed);

struct SemiSyntheticResult {
    SurvivalDataset data;
    SurvivalMarginal event_model;    // Weibull fit treating all outcomes as events
    SurvivalMarginal censor_model;   // same model with shape nu / 0.8
    std::vector<double> quantile_u;  // S_T(Y_i | x_i)
    std::vector<double> quantile_v;  // conditional censoring quantile
    std::vector<double> censor_times;
};

// Censoring induction for real regression data: fit a Weibull event model,
// tighten its shape for the censoring clone, then conditionally sample
// censoring quantiles from the copula and invert them to times.
SemiSyntheticResult induce_semisynthetic(const std::vector<std::vector<double>>& covariates,
                                         const std::vector<double>& outcomes,
                                         const ArchimedeanCopula& copula, std::uint64_t seed);

// Maximum-likelihood Weibull fit with all outcomes treated as events.
SurvivalMarginal fit_weibull_all_events(const std::vector<std::vector<double>>& covariates,
                                        const std::vector<double>& outcomes);

// CSV formats: data files carry x_0..x_{d-1},time,event; ground-truth files
// append latent_event,latent_censor.
void write_dataset_csv(const std::filesystem::path& path, const SurvivalDataset& data);
void write_ground_truth_csv(const std::filesystem::path& path, const SurvivalDataset& data,
                            const GroundTruth& truth);
SurvivalDataset read_dataset_csv(const std::filesystem::path& path);

// Header + numeric columns, last column is the outcome; malformed cells are
// reported with their line number.
std::pair<std::vector<std::vector<double>>, std::vector<double>> read_covariates_csv(
    const std::filesystem::path& path);

}  // namespace copsurv
