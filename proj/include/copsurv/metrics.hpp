#pragma once

#include <utility>
#include <vector>

#include "copsurv/datagen.hpp"
#include "copsurv/likelihood.hpp"

namespace copsurv {

// Normalized integrated absolute error between the true and estimated
// conditional survival curves: per record, trapezoid-integrate |S - Shat|
// over [0, t_max] and divide by t_max, where t_max is the ground-truth
// 0.999 quantile of the event distribution; average over records.
double survival_l1(const SurvivalMarginal& truth, const SurvivalMarginal& estimated,
                   const SurvivalDataset& data, int grid_points = 512);

struct CalibrationBin {
    double mean_predicted = 0.0;
    double observed_rate = 0.0;
    std::size_t count = 0;
    std::size_t event_count = 0;
};

// Predicted event probability 1 - Shat(t_i | x_i) per record, grouped into
// equal-count quantile bins.
std::vector<CalibrationBin> calibration_curve(const SurvivalMarginal& estimated,
                                              const SurvivalDataset& data, int bins);

// Exact concordance-based Kendall tau-a via merge-sort inversion counting;
// only strictly discordant pairs count against concordance.
double empirical_kendall_tau(const std::vector<std::pair<double, double>>& pairs);
double empirical_kendall_tau(const std::vector<std::array<double, 2>>& pairs);

struct EvalReport {
    double survival_l1 = std::numeric_limits<double>::quiet_NaN();  // NaN when no ground truth
    bool has_ground_truth = false;
    std::vector<CalibrationBin> calibration;
    double learned_tau = std::numeric_limits<double>::quiet_NaN();
    double test_loglik = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_records = 0;

    nlohmann::json to_json() const;
};

}  // namespace copsurv
