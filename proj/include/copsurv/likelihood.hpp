#pragma once

#include <span>
#include <vector>

#include "copsurv/copula.hpp"
#include "copsurv/marginals.hpp"

namespace copsurv {

struct SurvivalRecord {
    std::vector<double> x;
    double time = 0.0;
    int event = 0;  // 1 = event observed, 0 = censored
};

class SurvivalDataset {
public:
    SurvivalDataset() = default;
    explicit SurvivalDataset(int covariate_dim) : dim_(covariate_dim) {}

    void add(SurvivalRecord r);

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    int covariate_dim() const { return dim_; }
    const SurvivalRecord& operator[](std::size_t i) const { return records_[i]; }
    const std::vector<SurvivalRecord>& records() const { return records_; }

    std::size_t n_events() const { return n_events_; }
    std::size_t n_censored() const { return records_.size() - n_events_; }
    double event_rate() const { return static_cast<double>(n_events_) / records_.size(); }

private:
    std::vector<SurvivalRecord> records_;
    int dim_ = -1;
    std::size_t n_events_ = 0;
};

// Survival probabilities and densities are floored here before logs.
inline constexpr double kLikelihoodFloor = 1e-300;

// Log-likelihood of one record under the dependent-censoring model:
// delta = 1: log f_T(t|x) + log dC/du1 at (S_T(t|x), S_U(t|x))
// delta = 0: log f_U(t|x) + log dC/du2 at the same point.
double loglik_dep(const ArchimedeanCopula& copula, const SurvivalMarginal& event_m,
                  const SurvivalMarginal& censor_m, const SurvivalRecord& rec);

// Independence log-likelihood; full = true keeps the censoring-marginal
// factors, full = false is the proportional reduced form.
double loglik_indep(const SurvivalMarginal& event_m, const SurvivalMarginal& censor_m,
                    const SurvivalRecord& rec, bool full);

struct BatchGrad {
    double mean_loglik = 0.0;
    std::vector<double> copula_grad;
    std::vector<double> event_grad;
    std::vector<double> censor_grad;
    std::size_t clamped_terms = 0;  // contributions hit by the floor guard
    bool clamp_warning = false;     // > 1% of batch terms clamped
};

// Mean dependent-censoring log-likelihood over the indexed records and its
// gradient w.r.t. every copula and marginal raw parameter. The inverse
// generator is differentiated implicitly:
//   d phi^{-1}(u)/dp = -(d phi/dp)(phi^{-1}(u)) / phi'(phi^{-1}(u)).
BatchGrad loglik_dep_grad(const ArchimedeanCopula& copula, const SurvivalMarginal& event_m,
                          const SurvivalMarginal& censor_m, const SurvivalDataset& data,
                          std::span<const std::size_t> idx);

// Mean independence log-likelihood and marginal gradients (copula_grad is
// empty; the independence copula has no parameters).
BatchGrad loglik_indep_grad(const SurvivalMarginal& event_m, const SurvivalMarginal& censor_m,
                            const SurvivalDataset& data, std::span<const std::size_t> idx,
                            bool full);

// Plain batch means without gradients (validation / reporting).
double mean_loglik_dep(const ArchimedeanCopula& copula, const SurvivalMarginal& event_m,
                       const SurvivalMarginal& censor_m, const SurvivalDataset& data,
                       std::span<const std::size_t> idx);
double mean_loglik_indep(const SurvivalMarginal& event_m, const SurvivalMarginal& censor_m,
                         const SurvivalDataset& data, std::span<const std::size_t> idx,
                         bool full);

}  // namespace copsurv
