#include "copsurv/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "copsurv/rng.hpp"

namespace copsurv {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (weight_decay < 0.0 || copula_weight_decay < 0.0) {
        throw std::invalid_argument("weight decay must be >= 0");
    }
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(test_frac > 0.0)) {
        throw std::invalid_argument("split fractions must be positive");
    }
    if (train_frac + val_frac + test_frac > 1.0 + 1e-12) {
        throw std::invalid_argument("split fractions must sum to at most 1");
    }
}

nlohmann::json TrainConfig::to_json() const {
    return nlohmann::json{{"learning_rate", learning_rate},
                          {"weight_decay", weight_decay},
                          {"copula_weight_decay", copula_weight_decay},
                          {"batch_size", batch_size},
                          {"max_epochs", max_epochs},
                          {"patience", patience},
                          {"train_frac", train_frac},
                          {"val_frac", val_frac},
                          {"test_frac", test_frac},
                          {"seed", seed},
                          {"beta1", beta1},
                          {"beta2", beta2},
                          {"eps", eps}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.copula_weight_decay = j.value("copula_weight_decay", c.copula_weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.train_frac = j.value("train_frac", c.train_frac);
    c.val_frac = j.value("val_frac", c.val_frac);
    c.test_frac = j.value("test_frac", c.test_frac);
    c.seed = j.value("seed", c.seed);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.validate();
    return c;
}

AdamW::AdamW(std::size_t n_params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n_params, 0.0), v_(n_params, 0.0) {}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grad, double lr,
                 const std::vector<double>& decay) {
    if (params.size() != m_.size() || grad.size() != m_.size() || decay.size() != m_.size()) {
        throw std::invalid_argument("adamw parameter/gradient size mismatch");
    }
    for (const double g : grad) {
        if (!std::isfinite(g)) throw std::runtime_error("adamw: non-finite gradient");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, step_);
    const double bc2 = 1.0 - std::pow(beta2_, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] *= 1.0 - lr * decay[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double m_hat = m_[i] / bc1;
        const double v_hat = v_[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grad, double lr,
                 double decay) {
    step(params, grad, lr, std::vector<double>(params.size(), decay));
}

void AdamW::restore(std::vector<double> m, std::vector<double> v, int step) {
    if (m.size() != m_.size() || v.size() != v_.size()) {
        throw std::invalid_argument("adamw restore size mismatch");
    }
    m_ = std::move(m);
    v_ = std::move(v);
    step_ = step;
}

std::string objective_name(Objective o) {
    switch (o) {
        case Objective::Dependent: return "dep";
        case Objective::IndependentFull: return "indep-full";
        case Objective::IndependentReduced: return "indep-reduced";
    }
    throw std::logic_error("unknown objective");
}

Objective objective_from_name(const std::string& s) {
    if (s == "dep") return Objective::Dependent;
    if (s == "indep-full") return Objective::IndependentFull;
    if (s == "indep-reduced") return Objective::IndependentReduced;
    throw std::invalid_argument("unknown objective: " + s);
}

DataSplit split_dataset(std::size_t n, const TrainConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(splitmix64(cfg.seed) ^ 0x535044ULL);  // split stream
    rng.shuffle(order);

    const auto n_train = static_cast<std::size_t>(cfg.train_frac * n);
    const auto n_val = static_cast<std::size_t>(cfg.val_frac * n);
    const auto n_test = std::min(n - n_train - n_val, static_cast<std::size_t>(cfg.test_frac * n));
    DataSplit s;
    s.train.assign(order.begin(), order.begin() + n_train);
    s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    s.test.assign(order.begin() + n_train + n_val, order.begin() + n_train + n_val + n_test);
    return s;
}

namespace {

struct JointParams {
    std::size_t n_cop, n_ev, n_ce;

    std::vector<double> gather(const Generator& gen, const SurvivalMarginal& ev,
                               const SurvivalMarginal& ce) const {
        std::vector<double> p = gen.raw_params();
        const auto pe = ev.params();
        const auto pc = ce.params();
        p.insert(p.end(), pe.begin(), pe.end());
        p.insert(p.end(), pc.begin(), pc.end());
        return p;
    }

    void scatter(const std::vector<double>& p, Generator& gen, SurvivalMarginal& ev,
                 SurvivalMarginal& ce) const {
        gen.set_raw_params({p.begin(), p.begin() + n_cop});
        ev.set_params({p.begin() + n_cop, p.begin() + n_cop + n_ev});
        ce.set_params({p.begin() + n_cop + n_ev, p.end()});
    }

    // Minimization gradient (negated log-likelihood) flattened to the
    // joint layout.
    std::vector<double> flatten_neg(const BatchGrad& g) const {
        std::vector<double> out;
        out.reserve(n_cop + n_ev + n_ce);
        auto push_neg = [&](const std::vector<double>& v, std::size_t expect) {
            if (!v.empty() && v.size() != expect) {
                throw std::logic_error("gradient layout mismatch");
            }
            for (double x : v) out.push_back(-x);
            if (v.empty()) out.resize(out.size() + expect, 0.0);
        };
        push_neg(g.copula_grad, n_cop);
        push_neg(g.event_grad, n_ev);
        push_neg(g.censor_grad, n_ce);
        return out;
    }
};

}  // namespace

FitResult fit(const SurvivalDataset& data, std::shared_ptr<Generator> copula_gen,
              SurvivalMarginal event_m, SurvivalMarginal censor_m, Objective objective,
              const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("fit: dataset is empty");
    if (data.n_events() == 0 || data.n_censored() == 0) {
        throw std::invalid_argument("fit: dataset needs both events and censorings");
    }
    if (!copula_gen) throw std::invalid_argument("fit: missing copula generator");

    const DataSplit split = split_dataset(data.size(), cfg);
    if (split.train.empty() || split.val.empty()) {
        throw std::invalid_argument("fit: train/validation splits are empty");
    }

    ArchimedeanCopula copula(copula_gen);
    const JointParams layout{copula_gen->param_count(), event_m.param_count(),
                             censor_m.param_count()};
    std::vector<double> params = layout.gather(*copula_gen, event_m, censor_m);

    std::vector<double> decay(params.size(), 0.0);
    for (std::size_t i = 0; i < layout.n_cop; ++i) decay[i] = cfg.copula_weight_decay;
    for (std::size_t i = layout.n_cop; i < params.size(); ++i) decay[i] = cfg.weight_decay;

    AdamW opt(params.size(), cfg.beta1, cfg.beta2, cfg.eps);

    FitResult res{std::move(copula_gen), std::move(event_m), std::move(censor_m)};
    res.objective = objective;
    res.best_val_ll = -std::numeric_limits<double>::infinity();
    res.split = split;
    // Aliases into the result so updates land in the returned objects.
    Generator& gen = *res.copula_gen;
    SurvivalMarginal& ev = res.event_marginal;
    SurvivalMarginal& ce = res.censor_marginal;

    auto eval_mean = [&](std::span<const std::size_t> idx) {
        switch (objective) {
            case Objective::Dependent:
                return mean_loglik_dep(copula, ev, ce, data, idx);
            case Objective::IndependentFull:
                return mean_loglik_indep(ev, ce, data, idx, true);
            case Objective::IndependentReduced:
                return mean_loglik_indep(ev, ce, data, idx, false);
        }
        throw std::logic_error("unknown objective");
    };

    auto batch_grad = [&](std::span<const std::size_t> idx) {
        switch (objective) {
            case Objective::Dependent:
                return loglik_dep_grad(copula, ev, ce, data, idx);
            case Objective::IndependentFull:
                return loglik_indep_grad(ev, ce, data, idx, true);
            case Objective::IndependentReduced:
                return loglik_indep_grad(ev, ce, data, idx, false);
        }
        throw std::logic_error("unknown objective");
    };

    Rng shuffle_rng(splitmix64(cfg.seed) ^ 0xba7c4e5u);
    std::vector<std::size_t> order = split.train;
    std::vector<double> best_params = params;
    int epochs_since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double train_ll_sum = 0.0;
        std::size_t train_terms = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len =
                std::min<std::size_t>(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            const BatchGrad g = batch_grad(batch);
            res.clamped_terms += g.clamped_terms;
            train_ll_sum += g.mean_loglik * static_cast<double>(len);
            train_terms += len;
            opt.step(params, layout.flatten_neg(g), cfg.learning_rate, decay);
            layout.scatter(params, gen, ev, ce);
        }

        const double train_ll = train_ll_sum / static_cast<double>(train_terms);
        const double val_ll = eval_mean(split.val);
        res.history.push_back({epoch, train_ll, val_ll});

        if (!std::isfinite(val_ll)) {
            throw TrainingDivergence(
                "training diverged: validation log-likelihood is not finite at epoch " +
                    std::to_string(epoch),
                res.history);
        }

        if (val_ll > res.best_val_ll) {
            res.best_val_ll = val_ll;
            res.best_epoch = epoch;
            best_params = params;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= cfg.patience) {
            break;
        }
    }

    params = best_params;
    layout.scatter(params, gen, ev, ce);
    res.test_ll = split.test.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : eval_mean(split.test);
    return res;
}

SurvivalMarginal default_weibull_marginal(const SurvivalDataset& data, RiskFunction risk) {
    double mean_t = 0.0;
    for (const auto& r : data.records()) mean_t += r.time;
    mean_t /= static_cast<double>(data.size());
    return SurvivalMarginal::weibull(1.0, std::max(mean_t, 1e-8), std::move(risk));
}

SurvivalMarginal default_lognormal_marginal(const SurvivalDataset& data, RiskFunction risk) {
    double mean = 0.0, var = 0.0;
    std::size_t n = 0;
    for (const auto& r : data.records()) {
        if (r.time > 0.0) {
            mean += std::log(r.time);
            ++n;
        }
    }
    mean /= std::max<std::size_t>(n, 1);
    for (const auto& r : data.records()) {
        if (r.time > 0.0) var += (std::log(r.time) - mean) * (std::log(r.time) - mean);
    }
    var /= std::max<std::size_t>(n, 1);
    return SurvivalMarginal::lognormal(mean, std::max(std::sqrt(var), 1e-3), std::move(risk));
}

nlohmann::json FitResult::checkpoint_json(const TrainConfig& cfg) const {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& e : history) {
        hist.push_back({{"epoch", e.epoch}, {"train_ll", e.train_ll}, {"val_ll", e.val_ll}});
    }
    return nlohmann::json{{"format", "copsurv-checkpoint-v1"},
                          {"objective", objective_name(objective)},
                          {"copula", copula_gen->to_json()},
                          {"event_marginal", event_marginal.to_json()},
                          {"censor_marginal", censor_marginal.to_json()},
                          {"config", cfg.to_json()},
                          {"history", hist},
                          {"best_epoch", best_epoch},
                          {"best_val_ll", best_val_ll},
                          {"test_ll", test_ll}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "copsurv-checkpoint-v1") {
        throw std::invalid_argument("unrecognized checkpoint format");
    }
    Checkpoint c{generator_from_json(j.at("copula")),
                 SurvivalMarginal::from_json(j.at("event_marginal")),
                 SurvivalMarginal::from_json(j.at("censor_marginal")),
                 objective_from_name(j.at("objective").get<std::string>()),
                 TrainConfig::from_json(j.at("config")),
                 {},
                 j.value("best_epoch", -1),
                 j.value("best_val_ll", 0.0),
                 j.value("test_ll", 0.0)};
    for (const auto& e : j.value("history", nlohmann::json::array())) {
        c.history.push_back({e.at("epoch").get<int>(), e.at("train_ll").get<double>(),
                             e.at("val_ll").get<double>()});
    }
    return c;
}

}  // namespace copsurv
