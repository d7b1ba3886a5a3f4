#include "copsurv/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "copsurv/training.hpp"

namespace copsurv {

std::shared_ptr<Generator> make_tau_generator(CopulaFamily family, double tau) {
    if (std::isnan(tau)) throw std::invalid_argument("tau must be a number");
    if (tau == 0.0 || family == CopulaFamily::Independence) {
        if (tau != 0.0) throw std::invalid_argument("independence has tau = 0");
        return std::make_shared<IndependenceGenerator>();
    }
    return std::shared_ptr<Generator>(make_closed_form(family, theta_from_tau(family, tau)));
}

void SyntheticSpec::validate() const {
    if (n < 1) throw std::invalid_argument("synthetic spec: n must be >= 1");
    if (covariate_dim < 1) throw std::invalid_argument("synthetic spec: dim must be >= 1");
    if (event_marginal.family() != MarginalFamily::WeibullCoxPH ||
        censor_marginal.family() != MarginalFamily::WeibullCoxPH) {
        throw std::invalid_argument("synthetic spec: marginals must be Weibull");
    }
    if (event_marginal.covariate_dim() != covariate_dim ||
        censor_marginal.covariate_dim() != covariate_dim) {
        throw std::invalid_argument("synthetic spec: risk dimension mismatch");
    }
    if (family != CopulaFamily::Independence) {
        make_closed_form(family, theta);  // theta domain check
    }
}

nlohmann::json SyntheticSpec::to_json() const {
    return nlohmann::json{{"name", name},
                          {"n", n},
                          {"covariate_dim", covariate_dim},
                          {"event_marginal", event_marginal.to_json()},
                          {"censor_marginal", censor_marginal.to_json()},
                          {"copula", family_name(family)},
                          {"theta", theta},
                          {"seed", seed}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
    SyntheticSpec s{j.at("n").get<int>(),
                    j.at("covariate_dim").get<int>(),
                    SurvivalMarginal::from_json(j.at("event_marginal")),
                    SurvivalMarginal::from_json(j.at("censor_marginal")),
                    family_from_name(j.at("copula").get<std::string>()),
                    j.value("theta", 0.0),
                    j.at("seed").get<std::uint64_t>(),
                    j.value("name", "custom")};
    s.validate();
    return s;
}

std::pair<SurvivalDataset, GroundTruth> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::shared_ptr<Generator> gen =
        spec.family == CopulaFamily::Independence
            ? std::shared_ptr<Generator>(std::make_shared<IndependenceGenerator>())
            : std::shared_ptr<Generator>(make_closed_form(spec.family, spec.theta));
    const ArchimedeanCopula copula(gen);

    SurvivalDataset data(spec.covariate_dim);
    GroundTruth truth{{}, {}, spec.event_marginal, spec.censor_marginal};
    truth.latent_event.reserve(spec.n);
    truth.latent_censor.reserve(spec.n);

    for (int i = 0; i < spec.n; ++i) {
        Rng rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(i));
        std::vector<double> x(spec.covariate_dim);
        for (double& xi : x) xi = rng.uniform();
        const auto uv = copula.sample_pair(rng);
        const double t_event = spec.event_marginal.inverse_survival(uv[0], x);
        const double t_censor = spec.censor_marginal.inverse_survival(uv[1], x);
        truth.latent_event.push_back(t_event);
        truth.latent_censor.push_back(t_censor);
        data.add({std::move(x), std::min(t_event, t_censor), t_event < t_censor ? 1 : 0});
    }
    return {std::move(data), std::move(truth)};
}

SyntheticSpec linear_risk_spec(CopulaFamily family, double tau, int n, std::uint64_t seed) {
    constexpr int dim = 10;
    Rng rng(splitmix64(seed) ^ 0xbe7aULL);  // risk-coefficient stream
    std::vector<double> beta_event(dim), beta_censor(dim);
    for (double& b : beta_event) b = rng.uniform();
    for (double& b : beta_censor) b = rng.uniform();

    SyntheticSpec s{n,
                    dim,
                    SurvivalMarginal::weibull(4.0, 14.0, RiskFunction::linear(beta_event)),
                    SurvivalMarginal::weibull(3.0, 16.0, RiskFunction::linear(beta_censor)),
                    tau == 0.0 ? CopulaFamily::Independence : family,
                    tau == 0.0 ? 0.0 : theta_from_tau(family, tau),
                    seed,
                    "linear-risk"};
    s.validate();
    return s;
}

SyntheticSpec nonlinear_risk_spec(CopulaFamily family, double tau, int n, std::uint64_t seed) {
    SyntheticSpec s{n,
                    1,
                    SurvivalMarginal::weibull(4.0, 17.0, RiskFunction::sine(2.0, M_PI, 0.0)),
                    SurvivalMarginal::weibull(3.0, 16.0, RiskFunction::sine(2.0, M_PI, 0.5)),
                    tau == 0.0 ? CopulaFamily::Independence : family,
                    tau == 0.0 ? 0.0 : theta_from_tau(family, tau),
                    seed,
                    "nonlinear-risk"};
    s.validate();
    return s;
}

SurvivalMarginal fit_weibull_all_events(const std::vector<std::vector<double>>& covariates,
                                        const std::vector<double>& outcomes) {
    if (covariates.size() != outcomes.size() || outcomes.empty()) {
        throw std::invalid_argument("weibull fit: covariate/outcome size mismatch");
    }
    const int dim = static_cast<int>(covariates.front().size());
    SurvivalDataset data(dim);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!(outcomes[i] > 0.0)) {
            throw std::invalid_argument("weibull fit: outcomes must be positive");
        }
        data.add({covariates[i], outcomes[i], 1});
    }

    SurvivalMarginal m = default_weibull_marginal(data, RiskFunction::linear_zero(dim));
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    // Full-batch AdamW on the all-event likelihood; two step-size stages.
    AdamW opt(m.param_count(), 0.9, 0.999, 1e-8);
    std::vector<double> params = m.params();
    const SurvivalMarginal dummy = m;  // censoring marginal is unused here
    for (int it = 0; it < 800; ++it) {
        const BatchGrad g = loglik_indep_grad(m, dummy, data, idx, false);
        std::vector<double> neg(g.event_grad.size());
        for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -g.event_grad[k];
        opt.step(params, neg, it < 500 ? 0.05 : 0.005, 0.0);
        m.set_params(params);
    }
    return m;
}

SemiSyntheticResult induce_semisynthetic(const std::vector<std::vector<double>>& covariates,
                                         const std::vector<double>& outcomes,
                                         const ArchimedeanCopula& copula, std::uint64_t seed) {
    SurvivalMarginal event_model = fit_weibull_all_events(covariates, outcomes);

    // Clone with reduced censoring-distribution variance (larger shape).
    SurvivalMarginal censor_model = event_model;
    std::vector<double> cp = censor_model.params();
    cp[0] = std::log(event_model.shape_nu() / 0.8);
    censor_model.set_params(cp);

    SemiSyntheticResult out{SurvivalDataset(static_cast<int>(covariates.front().size())),
                            std::move(event_model),
                            std::move(censor_model),
                            {},
                            {},
                            {}};
    out.quantile_u.reserve(outcomes.size());
    out.quantile_v.reserve(outcomes.size());
    out.censor_times.reserve(outcomes.size());

    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        Rng rng = Rng::substream(seed, i);
        const double u = out.event_model.survival(outcomes[i], covariates[i]);
        const double w = rng.uniform();
        const double v = copula.sample_conditional(u, w);
        const double t_censor = out.censor_model.inverse_survival(v, covariates[i]);
        out.quantile_u.push_back(u);
        out.quantile_v.push_back(v);
        out.censor_times.push_back(t_censor);
        out.data.add({covariates[i], std::min(outcomes[i], t_censor),
                      outcomes[i] < t_censor ? 1 : 0});
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& path) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": non-numeric cell '" + s + "'");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": non-numeric cell '" + s + "'");
    }
    return v;
}

}  // namespace

void write_dataset_csv(const std::filesystem::path& path, const SurvivalDataset& data) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (int j = 0; j < data.covariate_dim(); ++j) f << "x_" << j << ',';
    f << "time,event\n";
    for (const auto& r : data.records()) {
        for (const double xj : r.x) f << fmt(xj) << ',';
        f << fmt(r.time) << ',' << r.event << '\n';
    }
}

void write_ground_truth_csv(const std::filesystem::path& path, const SurvivalDataset& data,
                            const GroundTruth& truth) {
    if (truth.latent_event.size() != data.size() || truth.latent_censor.size() != data.size()) {
        throw std::invalid_argument("ground truth size mismatch");
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (int j = 0; j < data.covariate_dim(); ++j) f << "x_" << j << ',';
    f << "time,event,latent_event,latent_censor\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data[i];
        for (const double xj : r.x) f << fmt(xj) << ',';
        f << fmt(r.time) << ',' << r.event << ',' << fmt(truth.latent_event[i]) << ','
          << fmt(truth.latent_censor[i]) << '\n';
    }
}

SurvivalDataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error(path.string() + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 3) {
        throw std::runtime_error(path.string() + ": expected x_*,time,event columns");
    }
    // Accept trailing latent columns so ground-truth files load as datasets.
    std::size_t n_cols = header.size();
    std::size_t time_col = n_cols;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == "time") time_col = j;
    }
    if (time_col == n_cols || time_col + 1 >= n_cols || header[time_col + 1] != "event") {
        throw std::runtime_error(path.string() + ": header must contain time,event");
    }

    SurvivalDataset data(static_cast<int>(time_col));
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != n_cols) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(n_cols) + " fields");
        }
        SurvivalRecord r;
        r.x.resize(time_col);
        for (std::size_t j = 0; j < time_col; ++j) {
            r.x[j] = parse_number(fields[j], line_no, path.string());
        }
        r.time = parse_number(fields[time_col], line_no, path.string());
        const double ev = parse_number(fields[time_col + 1], line_no, path.string());
        if (ev != 0.0 && ev != 1.0) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": event must be 0 or 1");
        }
        r.event = static_cast<int>(ev);
        data.add(std::move(r));
    }
    if (data.empty()) throw std::runtime_error(path.string() + ": no records");
    return data;
}

std::pair<std::vector<std::vector<double>>, std::vector<double>> read_covariates_csv(
    const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error(path.string() + ": empty file");
    const std::size_t n_cols = split_csv_line(line).size();
    if (n_cols < 2) {
        throw std::runtime_error(path.string() + ": need >= 1 covariate plus the outcome");
    }

    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != n_cols) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(n_cols) + " fields");
        }
        std::vector<double> x(n_cols - 1);
        for (std::size_t j = 0; j + 1 < n_cols; ++j) {
            x[j] = parse_number(fields[j], line_no, path.string());
        }
        ys.push_back(parse_number(fields.back(), line_no, path.string()));
        xs.push_back(std::move(x));
    }
    if (ys.empty()) throw std::runtime_error(path.string() + ": no records");
    return {std::move(xs), std::move(ys)};
}

}  // namespace copsurv
