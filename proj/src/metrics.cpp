#include "copsurv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace copsurv {

double survival_l1(const SurvivalMarginal& truth, const SurvivalMarginal& estimated,
                   const SurvivalDataset& data, int grid_points) {
    if (data.empty()) throw std::invalid_argument("survival_l1: empty dataset");
    if (grid_points < 2) throw std::invalid_argument("survival_l1: need >= 2 grid points");

    double total = 0.0;
    for (const auto& rec : data.records()) {
        const double t_max = truth.inverse_survival(1e-3, rec.x);
        const double h = t_max / (grid_points - 1);
        double integral = 0.0;
        for (int k = 0; k < grid_points; ++k) {
            const double t = k * h;
            const double diff = std::abs(truth.survival(t, rec.x) - estimated.survival(t, rec.x));
            integral += (k == 0 || k == grid_points - 1) ? 0.5 * diff : diff;
        }
        integral *= h;
        total += integral / t_max;
    }
    return total / static_cast<double>(data.size());
}

std::vector<CalibrationBin> calibration_curve(const SurvivalMarginal& estimated,
                                              const SurvivalDataset& data, int bins) {
    if (bins < 1) throw std::invalid_argument("calibration: bins must be >= 1");
    if (data.size() < static_cast<std::size_t>(bins)) {
        throw std::invalid_argument("calibration: fewer records than bins");
    }

    struct Pred {
        double p;
        int event;
    };
    std::vector<Pred> preds;
    preds.reserve(data.size());
    for (const auto& rec : data.records()) {
        preds.push_back({1.0 - estimated.survival(rec.time, rec.x), rec.event});
    }
    std::stable_sort(preds.begin(), preds.end(),
                     [](const Pred& a, const Pred& b) { return a.p < b.p; });

    // Equal-count quantile bins; the first (n % bins) bins take one extra.
    const std::size_t n = preds.size();
    const std::size_t base = n / bins;
    const std::size_t extra = n % bins;
    std::vector<CalibrationBin> out;
    out.reserve(bins);
    std::size_t pos = 0;
    for (int b = 0; b < bins; ++b) {
        const std::size_t len = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
        CalibrationBin bin;
        bin.count = len;
        double sum_p = 0.0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            sum_p += preds[i].p;
            bin.event_count += static_cast<std::size_t>(preds[i].event);
        }
        bin.mean_predicted = sum_p / static_cast<double>(len);
        bin.observed_rate = static_cast<double>(bin.event_count) / static_cast<double>(len);
        out.push_back(bin);
        pos += len;
    }
    return out;
}

namespace {

// Counts strict inversions in y with merge sort.
std::size_t count_inversions(std::vector<double>& y, std::vector<double>& scratch,
                             std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::size_t inv = count_inversions(y, scratch, lo, mid) + count_inversions(y, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (y[j] < y[i]) {
            inv += mid - i;  // y[i..mid) all strictly exceed y[j]
            scratch[k++] = y[j++];
        } else {
            scratch[k++] = y[i++];
        }
    }
    while (i < mid) scratch[k++] = y[i++];
    while (j < hi) scratch[k++] = y[j++];
    std::copy(scratch.begin() + lo, scratch.begin() + hi, y.begin() + lo);
    return inv;
}

}  // namespace

double empirical_kendall_tau(const std::vector<std::pair<double, double>>& pairs) {
    const std::size_t n = pairs.size();
    if (n < 2) throw std::invalid_argument("kendall tau needs >= 2 pairs");

    // Sort by x ascending with y ascending inside x-ties; strict y-descents
    // across the sequence are then exactly the discordant pairs.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pairs[a].first != pairs[b].first) return pairs[a].first < pairs[b].first;
        return pairs[a].second < pairs[b].second;
    });
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = pairs[order[i]].second;

    std::vector<double> scratch(n);
    const std::size_t discordant = count_inversions(y, scratch, 0, n);
    const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return (total - 2.0 * static_cast<double>(discordant)) / total;
}

double empirical_kendall_tau(const std::vector<std::array<double, 2>>& pairs) {
    std::vector<std::pair<double, double>> p;
    p.reserve(pairs.size());
    for (const auto& q : pairs) p.emplace_back(q[0], q[1]);
    return empirical_kendall_tau(p);
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["n_records"] = n_records;
    if (has_ground_truth) {
        j["survival_l1"] = survival_l1;
    } else {
        j["survival_l1_note"] = "no ground truth supplied; metric omitted";
    }
    if (std::isfinite(learned_tau)) j["learned_copula_tau"] = learned_tau;
    if (std::isfinite(test_loglik)) j["test_loglik"] = test_loglik;
    nlohmann::json cal = nlohmann::json::array();
    for (const auto& b : calibration) {
        cal.push_back({{"mean_predicted", b.mean_predicted},
                       {"observed_rate", b.observed_rate},
                       {"count", b.count},
                       {"event_count", b.event_count}});
    }
    j["calibration"] = cal;
    return j;
}

}  // namespace copsurv
