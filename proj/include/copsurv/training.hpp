#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "copsurv/likelihood.hpp"

namespace copsurv {

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 0.0;         // applied to marginal parameters
    double copula_weight_decay = 0.0;  // generator parameters default to none
    int batch_size = 512;
    int max_epochs = 1000;
    int patience = 10;  // epochs without validation improvement
    double train_frac = 0.5;
    double val_frac = 0.3;
    double test_frac = 0.2;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// Decoupled-weight-decay Adam with bias correction. Decay is multiplicative
// on the raw parameters ahead of the moment update.
class AdamW {
public:
    AdamW(std::size_t n_params, double beta1, double beta2, double eps);

    void step(std::vector<double>& params, const std::vector<double>& grad, double lr,
              const std::vector<double>& decay);
    void step(std::vector<double>& params, const std::vector<double>& grad, double lr,
              double decay);

    int step_count() const { return step_; }
    const std::vector<double>& moment1() const { return m_; }
    const std::vector<double>& moment2() const { return v_; }
    void restore(std::vector<double> m, std::vector<double> v, int step);

private:
    double beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    int step_ = 0;
};

enum class Objective { Dependent, IndependentFull, IndependentReduced };

std::string objective_name(Objective o);
Objective objective_from_name(const std::string& s);

struct EpochStats {
    int epoch;
    double train_ll;
    double val_ll;
};

struct DataSplit {
    std::vector<std::size_t> train, val, test;
};

// Deterministic shuffled split with the configured fractions.
DataSplit split_dataset(std::size_t n, const TrainConfig& cfg);

struct FitResult {
    std::shared_ptr<Generator> copula_gen;
    SurvivalMarginal event_marginal;
    SurvivalMarginal censor_marginal;
    Objective objective = Objective::Dependent;
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_ll = 0.0;
    double test_ll = 0.0;
    DataSplit split;
    std::size_t clamped_terms = 0;

    nlohmann::json checkpoint_json(const TrainConfig& cfg) const;
};

// Validation log-likelihood went non-finite; history up to the failing
// epoch rides along.
class TrainingDivergence : public std::runtime_error {
public:
    TrainingDivergence(std::string msg, std::vector<EpochStats> history)
        : std::runtime_error(std::move(msg)), history(std::move(history)) {}
    std::vector<EpochStats> history;
};

// Joint maximum-likelihood training of the copula generator and both
// marginals: fixed split, per-epoch shuffled mini-batches, one AdamW step
// per batch on the concatenated parameter vector, early stopping on the
// validation log-likelihood with best-snapshot restore.
FitResult fit(const SurvivalDataset& data, std::shared_ptr<Generator> copula_gen,
              SurvivalMarginal event_m, SurvivalMarginal censor_m, Objective objective,
              const TrainConfig& cfg);

// Marginal warm start: scale from the observed time mean, unit shape,
// zero risk weights.
SurvivalMarginal default_weibull_marginal(const SurvivalDataset& data, RiskFunction risk);
SurvivalMarginal default_lognormal_marginal(const SurvivalDataset& data, RiskFunction risk);

// Restore a trained model from checkpoint JSON.
struct Checkpoint {
    std::shared_ptr<Generator> copula_gen;
    SurvivalMarginal event_marginal;
    SurvivalMarginal censor_marginal;
    Objective objective;
    TrainConfig config;
    std::vector<EpochStats> history;
    int best_epoch;
    double best_val_ll;
    double test_ll;
};
Checkpoint checkpoint_from_json(const nlohmann::json& j);

}  // namespace copsurv
