#include "copsurv/likelihood.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace copsurv {

namespace {

const double kLogFloor = std::log(kLikelihoodFloor);

double floored(double v) { return v < kLikelihoodFloor ? kLikelihoodFloor : v; }

double log_floored(double v, bool& clamped) {
    if (v < kLikelihoodFloor) {
        clamped = true;
        return kLogFloor;
    }
    return std::log(v);
}

void check_record(const SurvivalRecord& rec, const SurvivalMarginal& event_m,
                  const SurvivalMarginal& censor_m) {
    if (rec.event != 0 && rec.event != 1) {
        throw std::invalid_argument("record event indicator must be 0 or 1");
    }
    if (static_cast<int>(rec.x.size()) != event_m.covariate_dim() ||
        static_cast<int>(rec.x.size()) != censor_m.covariate_dim()) {
        throw std::invalid_argument("record covariate dimension mismatch");
    }
}

[[noreturn]] void report_nonfinite(const char* what, std::size_t record_index) {
    throw std::runtime_error(std::string("likelihood: non-finite ") + what + " at record " +
                             std::to_string(record_index));
}

}  // namespace

void SurvivalDataset::add(SurvivalRecord r) {
    if (!(r.time >= 0.0) || !std::isfinite(r.time)) {
        throw std::invalid_argument("record time must be finite and nonnegative");
    }
    if (r.event != 0 && r.event != 1) {
        throw std::invalid_argument("record event indicator must be 0 or 1");
    }
    if (dim_ < 0) dim_ = static_cast<int>(r.x.size());
    if (static_cast<int>(r.x.size()) != dim_) {
        throw std::invalid_argument("record covariate dimension mismatch");
    }
    n_events_ += static_cast<std::size_t>(r.event);
    records_.push_back(std::move(r));
}

double loglik_dep(const ArchimedeanCopula& copula, const SurvivalMarginal& event_m,
                  const SurvivalMarginal& censor_m, const SurvivalRecord& rec) {
    check_record(rec, event_m, censor_m);
    const Generator& gen = copula.generator();

    const double u1 = floored(event_m.survival(rec.time, rec.x));
    const double u2 = floored(censor_m.survival(rec.time, rec.x));
    const double a = gen.inverse(u1);
    const double b = gen.inverse(u2);
    const double d_sum = gen.deriv(a + b, 1);

    bool clamped = false;
    double ll;
    if (rec.event == 1) {
        const double f = event_m.density(rec.time, rec.x);
        ll = log_floored(f, clamped) + log_floored(-d_sum, clamped) -
             std::log(-gen.deriv(a, 1));
    } else {
        const double f = censor_m.density(rec.time, rec.x);
        ll = log_floored(f, clamped) + log_floored(-d_sum, clamped) -
             std::log(-gen.deriv(b, 1));
    }
    return ll;
}

double loglik_indep(const SurvivalMarginal& event_m, const SurvivalMarginal& censor_m,
                    const SurvivalRecord& rec, bool full) {
    check_record(rec, event_m, censor_m);
    bool clamped = false;
    if (rec.event == 1) {
        double ll = log_floored(event_m.density(rec.time, rec.x), clamped);
        if (full) ll += log_floored(censor_m.survival(rec.time, rec.x), clamped);
        return ll;
    }
    double ll = log_floored(event_m.survival(rec.time, rec.x), clamped);
    if (full) return log_floored(censor_m.density(rec.time, rec.x), clamped) + ll;
    return ll;
}

namespace {

// Shared state for one record's dependent-likelihood term.
struct DepTermWorkspace {
    std::vector<double> dS1, df1, dS2, df2;      // marginal param grads
    std::vector<double> dphi_a, dd1_a;           // generator param grads at a
    std::vector<double> dphi_b, dd1_b;
    std::vector<double> dphi_z, dd1_z;
};

// Accumulates the record's term and gradient contributions; returns the
// (possibly clamped) log-likelihood value.
double accumulate_dep_term(const ArchimedeanCopula& copula, const SurvivalMarginal& event_m,
                           const SurvivalMarginal& censor_m, const SurvivalRecord& rec,
                           std::size_t rec_index, DepTermWorkspace& ws,
                           std::vector<double>& g_cop, std::vector<double>& g_ev,
                           std::vector<double>& g_ce, std::size_t& clamped_terms) {
    const Generator& gen = copula.generator();
    const std::size_t n_cop = gen.param_count();

    double S1, f1, S2, f2;
    event_m.eval_with_grads(rec.time, rec.x, S1, f1, ws.dS1, ws.df1);
    censor_m.eval_with_grads(rec.time, rec.x, S2, f2, ws.dS2, ws.df2);
    const double u1 = floored(S1);
    const double u2 = floored(S2);

    const double a = gen.inverse(u1);
    const double b = gen.inverse(u2);
    const double z = a + b;
    const GeneratorPoint pa = gen.point(a);
    const GeneratorPoint pb = gen.point(b);
    const GeneratorPoint pz = gen.point(z);

    bool clamped = false;
    double ll;
    const double rz = pz.d2 / pz.d1;  // phi''/phi' at the sum

    // d loglik / d u1 and d u2 (chain targets for the marginal params).
    double gu1, gu2;
    double f_own;
    if (rec.event == 1) {
        f_own = f1;
        ll = log_floored(f1, clamped) + log_floored(-pz.d1, clamped) - std::log(-pa.d1);
        gu1 = (rz - pa.d2 / pa.d1) / pa.d1;
        gu2 = rz / pb.d1;
    } else {
        f_own = f2;
        ll = log_floored(f2, clamped) + log_floored(-pz.d1, clamped) - std::log(-pb.d1);
        gu1 = rz / pa.d1;
        gu2 = (rz - pb.d2 / pb.d1) / pb.d1;
    }
    if (clamped) ++clamped_terms;

    // Marginal gradients: density term plus the copula-partial chain.
    const double inv_f = 1.0 / floored(f_own);
    for (std::size_t k = 0; k < g_ev.size(); ++k) {
        double g = gu1 * ws.dS1[k];
        if (rec.event == 1) g += ws.df1[k] * inv_f;
        g_ev[k] += g;
    }
    for (std::size_t k = 0; k < g_ce.size(); ++k) {
        double g = gu2 * ws.dS2[k];
        if (rec.event == 0) g += ws.df2[k] * inv_f;
        g_ce[k] += g;
    }

    // Copula gradients: explicit dependence of phi' plus the implicit
    // dependence through the inverted arguments.
    if (n_cop > 0) {
        gen.param_grads(a, ws.dphi_a, ws.dd1_a);
        gen.param_grads(b, ws.dphi_b, ws.dd1_b);
        gen.param_grads(z, ws.dphi_z, ws.dd1_z);
        const double own_d1 = (rec.event == 1) ? pa.d1 : pb.d1;
        const double own_d2 = (rec.event == 1) ? pa.d2 : pb.d2;
        const auto& dd1_own = (rec.event == 1) ? ws.dd1_a : ws.dd1_b;
        for (std::size_t k = 0; k < n_cop; ++k) {
            const double da = -ws.dphi_a[k] / pa.d1;
            const double db = -ws.dphi_b[k] / pb.d1;
            const double d_own = (rec.event == 1) ? da : db;
            const double term_sum = (pz.d2 * (da + db) + ws.dd1_z[k]) / pz.d1;
            const double term_own = (own_d2 * d_own + dd1_own[k]) / own_d1;
            g_cop[k] += term_sum - term_own;
        }
    }

    if (!std::isfinite(ll)) report_nonfinite("log-likelihood", rec_index);
    return ll;
}

}  // namespace

BatchGrad loglik_dep_grad(const ArchimedeanCopula& copula, const SurvivalMarginal& event_m,
                          const SurvivalMarginal& censor_m, const SurvivalDataset& data,
                          std::span<const std::size_t> idx) {
    if (idx.empty()) throw std::invalid_argument("loglik batch must be nonempty");
    BatchGrad out;
    out.copula_grad.assign(copula.generator().param_count(), 0.0);
    out.event_grad.assign(event_m.param_count(), 0.0);
    out.censor_grad.assign(censor_m.param_count(), 0.0);

    DepTermWorkspace ws;
    double total = 0.0;
    auto all_finite = [](const std::vector<double>& v) {
        for (const double g : v) {
            if (!std::isfinite(g)) return false;
        }
        return true;
    };
    for (const std::size_t i : idx) {
        total += accumulate_dep_term(copula, event_m, censor_m, data[i], i, ws, out.copula_grad,
                                     out.event_grad, out.censor_grad, out.clamped_terms);
        if (!all_finite(out.copula_grad) || !all_finite(out.event_grad) ||
            !all_finite(out.censor_grad)) {
            report_nonfinite("gradient", i);
        }
    }

    const double inv_n = 1.0 / static_cast<double>(idx.size());
    out.mean_loglik = total * inv_n;
    for (double& g : out.copula_grad) g *= inv_n;
    for (double& g : out.event_grad) g *= inv_n;
    for (double& g : out.censor_grad) g *= inv_n;
    out.clamp_warning = out.clamped_terms * 100 > idx.size();
    return out;
}

BatchGrad loglik_indep_grad(const SurvivalMarginal& event_m, const SurvivalMarginal& censor_m,
                            const SurvivalDataset& data, std::span<const std::size_t> idx,
                            bool full) {
    if (idx.empty()) throw std::invalid_argument("loglik batch must be nonempty");
    BatchGrad out;
    out.event_grad.assign(event_m.param_count(), 0.0);
    out.censor_grad.assign(censor_m.param_count(), 0.0);

    std::vector<double> dS, df;
    double total = 0.0;
    for (const std::size_t i : idx) {
        const SurvivalRecord& rec = data[i];
        check_record(rec, event_m, censor_m);
        bool clamped = false;

        double S1, f1;
        event_m.eval_with_grads(rec.time, rec.x, S1, f1, dS, df);
        if (rec.event == 1) {
            total += log_floored(f1, clamped);
            const double inv = 1.0 / floored(f1);
            for (std::size_t k = 0; k < df.size(); ++k) out.event_grad[k] += df[k] * inv;
        } else {
            total += log_floored(S1, clamped);
            const double inv = 1.0 / floored(S1);
            for (std::size_t k = 0; k < dS.size(); ++k) out.event_grad[k] += dS[k] * inv;
        }
        if (full) {
            double S2, f2;
            censor_m.eval_with_grads(rec.time, rec.x, S2, f2, dS, df);
            if (rec.event == 0) {
                total += log_floored(f2, clamped);
                const double inv = 1.0 / floored(f2);
                for (std::size_t k = 0; k < df.size(); ++k) out.censor_grad[k] += df[k] * inv;
            } else {
                total += log_floored(S2, clamped);
                const double inv = 1.0 / floored(S2);
                for (std::size_t k = 0; k < dS.size(); ++k) out.censor_grad[k] += dS[k] * inv;
            }
        }
        if (clamped) ++out.clamped_terms;
    }

    const double inv_n = 1.0 / static_cast<double>(idx.size());
    out.mean_loglik = total * inv_n;
    for (double& g : out.event_grad) g *= inv_n;
    for (double& g : out.censor_grad) g *= inv_n;
    if (!std::isfinite(out.mean_loglik)) report_nonfinite("log-likelihood", idx[0]);
    out.clamp_warning = out.clamped_terms * 100 > idx.size();
    return out;
}

double mean_loglik_dep(const ArchimedeanCopula& copula, const SurvivalMarginal& event_m,
                       const SurvivalMarginal& censor_m, const SurvivalDataset& data,
                       std::span<const std::size_t> idx) {
    if (idx.empty()) throw std::invalid_argument("loglik batch must be nonempty");
    double total = 0.0;
    for (const std::size_t i : idx) total += loglik_dep(copula, event_m, censor_m, data[i]);
    return total / static_cast<double>(idx.size());
}

double mean_loglik_indep(const SurvivalMarginal& event_m, const SurvivalMarginal& censor_m,
                         const SurvivalDataset& data, std::span<const std::size_t> idx,
                         bool full) {
    if (idx.empty()) throw std::invalid_argument("loglik batch must be nonempty");
    double total = 0.0;
    for (const std::size_t i : idx) total += loglik_indep(event_m, censor_m, data[i], full);
    return total / static_cast<double>(idx.size());
}

}  // namespace copsurv
