#include "copsurv/copula.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace copsurv {

namespace {

constexpr double kBoundaryEps = 1e-15;

double clamp_unit_interval(double x, const char* what) {
    if (std::isnan(x) || x < -kBoundaryEps || x > 1.0 + kBoundaryEps) {
        throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
    }
    if (x <= kBoundaryEps) return 0.0;
    if (x >= 1.0 - kBoundaryEps) return 1.0;
    return x;
}

void check_open_unit(double x, const char* what) {
    if (std::isnan(x) || x <= 0.0 || x >= 1.0) {
        throw std::invalid_argument(std::string(what) + " must lie in (0,1)");
    }
}

}  // namespace

std::string family_name(CopulaFamily f) {
    switch (f) {
        case CopulaFamily::Clayton: return "clayton";
        case CopulaFamily::Frank: return "frank";
        case CopulaFamily::Gumbel: return "gumbel";
        case CopulaFamily::Independence: return "independence";
    }
    throw std::logic_error("unknown copula family");
}

CopulaFamily family_from_name(const std::string& name) {
    if (name == "clayton") return CopulaFamily::Clayton;
    if (name == "frank") return CopulaFamily::Frank;
    if (name == "gumbel") return CopulaFamily::Gumbel;
    if (name == "independence") return CopulaFamily::Independence;
    throw std::invalid_argument("unknown copula family: " + name);
}

nlohmann::json ClosedFormGenerator::to_json() const {
    nlohmann::json j;
    j["kind"] = family_name(family());
    if (family() != CopulaFamily::Independence) j["theta"] = theta();
    return j;
}

std::unique_ptr<ClosedFormGenerator> make_closed_form(CopulaFamily family, double theta) {
    switch (family) {
        case CopulaFamily::Clayton: return std::make_unique<ClaytonGenerator>(theta);
        case CopulaFamily::Frank: return std::make_unique<FrankGenerator>(theta);
        case CopulaFamily::Gumbel: return std::make_unique<GumbelGenerator>(theta);
        case CopulaFamily::Independence: return std::make_unique<IndependenceGenerator>();
    }
    throw std::logic_error("unknown copula family");
}

// ---------------------------------------------------------------------------
// Independence
// ---------------------------------------------------------------------------

GeneratorPoint IndependenceGenerator::point(double t) const {
    if (std::isnan(t) || t < 0.0) {
        throw std::invalid_argument("generator argument must be nonnegative");
    }
    const double e = std::exp(-t);
    return {e, -e, e};
}

double IndependenceGenerator::inverse(double u) const {
    if (std::isnan(u) || u <= 0.0 || u > 1.0) {
        throw std::invalid_argument("generator inverse argument must be in (0,1]");
    }
    return -std::log(u);
}

std::optional<double> IndependenceGenerator::conditional_quantile(double u, double w) const {
    (void)u;
    return w;
}

void IndependenceGenerator::set_raw_params(const std::vector<double>& p) {
    if (!p.empty()) throw std::invalid_argument("independence generator has no parameters");
}

void IndependenceGenerator::param_grads(double, std::vector<double>& dphi,
                                        std::vector<double>& dd1) const {
    dphi.clear();
    dd1.clear();
}

// ---------------------------------------------------------------------------
// Clayton
// ---------------------------------------------------------------------------

ClaytonGenerator::ClaytonGenerator(double theta) : theta_(theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("clayton requires theta > 0");
}

GeneratorPoint ClaytonGenerator::point(double t) const {
    if (std::isnan(t) || t < 0.0) {
        throw std::invalid_argument("generator argument must be nonnegative");
    }
    if (std::isinf(t)) return {0.0, 0.0, 0.0};
    const double w = 1.0 + theta_ * t;
    const double phi = std::pow(w, -1.0 / theta_);
    const double d1 = -std::pow(w, -1.0 / theta_ - 1.0);
    const double d2 = (1.0 + theta_) * std::pow(w, -1.0 / theta_ - 2.0);
    return {phi, d1, d2};
}

double ClaytonGenerator::inverse(double u) const {
    if (std::isnan(u) || u <= 0.0 || u > 1.0) {
        throw std::invalid_argument("generator inverse argument must be in (0,1]");
    }
    return std::expm1(-theta_ * std::log(u)) / theta_;
}

std::optional<double> ClaytonGenerator::conditional_quantile(double u, double w) const {
    const double pw = std::pow(w, -theta_ / (1.0 + theta_)) - 1.0;
    return std::pow(pw * std::pow(u, -theta_) + 1.0, -1.0 / theta_);
}

void ClaytonGenerator::set_raw_params(const std::vector<double>& p) {
    if (p.size() != 1) throw std::invalid_argument("clayton takes one parameter");
    if (!(p[0] > 0.0)) throw std::invalid_argument("clayton requires theta > 0");
    theta_ = p[0];
}

void ClaytonGenerator::param_grads(double t, std::vector<double>& dphi,
                                   std::vector<double>& dd1) const {
    const GeneratorPoint p = point(t);
    const double w = 1.0 + theta_ * t;
    const double lw = std::log(w);
    dphi.assign(1, p.phi * (lw / (theta_ * theta_) - t / (theta_ * w)));
    dd1.assign(1, p.d1 * (lw / (theta_ * theta_) - (1.0 + 1.0 / theta_) * t / w));
}

// ---------------------------------------------------------------------------
// Frank
// ---------------------------------------------------------------------------

FrankGenerator::FrankGenerator(double theta) : theta_(theta) {
    if (theta == 0.0 || std::isnan(theta)) {
        throw std::invalid_argument("frank requires theta != 0");
    }
}

GeneratorPoint FrankGenerator::point(double t) const {
    if (std::isnan(t) || t < 0.0) {
        throw std::invalid_argument("generator argument must be nonnegative");
    }
    if (std::isinf(t)) return {0.0, 0.0, 0.0};
    const double q = std::exp(-t) * std::expm1(-theta_);
    const double pden = 1.0 + q;
    const double phi = -std::log1p(q) / theta_;
    const double d1 = q / (theta_ * pden);
    const double d2 = -q / (theta_ * pden * pden);
    return {phi, d1, d2};
}

double FrankGenerator::inverse(double u) const {
    if (std::isnan(u) || u <= 0.0 || u > 1.0) {
        throw std::invalid_argument("generator inverse argument must be in (0,1]");
    }
    return -std::log(std::expm1(-theta_ * u) / std::expm1(-theta_));
}

std::optional<double> FrankGenerator::conditional_quantile(double u, double w) const {
    const double a = std::exp(-theta_ * u);
    const double y = w * std::expm1(-theta_) / (a * (1.0 - w) + w);
    return -std::log1p(y) / theta_;
}

void FrankGenerator::set_raw_params(const std::vector<double>& p) {
    if (p.size() != 1) throw std::invalid_argument("frank takes one parameter");
    if (p[0] == 0.0 || std::isnan(p[0])) throw std::invalid_argument("frank requires theta != 0");
    theta_ = p[0];
}

void FrankGenerator::param_grads(double t, std::vector<double>& dphi,
                                 std::vector<double>& dd1) const {
    if (std::isnan(t) || t < 0.0) {
        throw std::invalid_argument("generator argument must be nonnegative");
    }
    const double th = theta_;
    const double q = std::exp(-t) * std::expm1(-th);
    const double pden = 1.0 + q;
    const double dq = -std::exp(-t - th);  // dq/dtheta
    dphi.assign(1, std::log1p(q) / (th * th) - dq / (th * pden));
    dd1.assign(1, dq / (th * pden) - q / (th * th * pden) - q * dq / (th * pden * pden));
}

// ---------------------------------------------------------------------------
// Gumbel
// ---------------------------------------------------------------------------

GumbelGenerator::GumbelGenerator(double theta) : theta_(theta) {
    if (!(theta >= 1.0)) throw std::invalid_argument("gumbel requires theta >= 1");
}

GeneratorPoint GumbelGenerator::point(double t) const {
    if (std::isnan(t) || t < 0.0) {
        throw std::invalid_argument("generator argument must be nonnegative");
    }
    if (std::isinf(t)) return {0.0, 0.0, 0.0};
    const double r = 1.0 / theta_;
    const double g = std::pow(t, r);
    const double phi = std::exp(-g);
    const double d1 = -phi * r * std::pow(t, r - 1.0);
    const double quad = r * r * std::pow(t, 2.0 * r - 2.0);
    const double lin = r - r * r;  // zero when theta == 1; skip the 0 * inf
    const double d2 = phi * (quad + (lin == 0.0 ? 0.0 : lin * std::pow(t, r - 2.0)));
    return {phi, d1, d2};
}

double GumbelGenerator::inverse(double u) const {
    if (std::isnan(u) || u <= 0.0 || u > 1.0) {
        throw std::invalid_argument("generator inverse argument must be in (0,1]");
    }
    return std::pow(-std::log(u), theta_);
}

void GumbelGenerator::set_raw_params(const std::vector<double>& p) {
    if (p.size() != 1) throw std::invalid_argument("gumbel takes one parameter");
    if (!(p[0] >= 1.0)) throw std::invalid_argument("gumbel requires theta >= 1");
    theta_ = p[0];
}

void GumbelGenerator::param_grads(double t, std::vector<double>& dphi,
                                  std::vector<double>& dd1) const {
    const GeneratorPoint p = point(t);
    if (t == 0.0) {
        // d phi / d theta -> 0 at the origin; d phi' / d theta diverges.
        dphi.assign(1, 0.0);
        dd1.assign(1, std::numeric_limits<double>::quiet_NaN());
        return;
    }
    const double th = theta_;
    const double g = std::pow(t, 1.0 / th);
    const double lt = std::log(t);
    dphi.assign(1, p.phi * g * lt / (th * th));
    dd1.assign(1, p.d1 * ((g - 1.0) * lt / (th * th) - 1.0 / th));
}

// ---------------------------------------------------------------------------
// ArchimedeanCopula
// ---------------------------------------------------------------------------

ArchimedeanCopula::ArchimedeanCopula(std::shared_ptr<const Generator> gen)
    : gen_(std::move(gen)) {
    if (!gen_) throw std::invalid_argument("copula requires a generator");
}

double ArchimedeanCopula::cdf(double u, double v) const {
    u = clamp_unit_interval(u, "copula cdf u");
    v = clamp_unit_interval(v, "copula cdf v");
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    const double t = gen_->inverse(u) + gen_->inverse(v);
    return std::clamp(gen_->value(t), 0.0, 1.0);
}

double ArchimedeanCopula::partial(double u, double v, int which) const {
    if (which != 1 && which != 2) {
        throw std::invalid_argument("copula partial: which must be 1 or 2");
    }
    if (std::isnan(u) || u <= 0.0 || u > 1.0 || std::isnan(v) || v <= 0.0 || v > 1.0) {
        throw std::invalid_argument("copula partial arguments must lie in (0,1]");
    }
    const double a = gen_->inverse(u);
    const double b = gen_->inverse(v);
    const double num = gen_->deriv(a + b, 1);
    const double den = gen_->deriv(which == 1 ? a : b, 1);
    return std::clamp(num / den, 0.0, 1.0);
}

double ArchimedeanCopula::density(double u, double v) const {
    check_open_unit(u, "copula density u");
    check_open_unit(v, "copula density v");
    const double a = gen_->inverse(u);
    const double b = gen_->inverse(v);
    const GeneratorPoint pa = gen_->point(a);
    const GeneratorPoint pb = gen_->point(b);
    return gen_->deriv(a + b, 2) / (pa.d1 * pb.d1);
}

std::array<double, 2> ArchimedeanCopula::sample_pair(Rng& rng) const {
    const double u = rng.uniform();
    const double w = rng.uniform();
    return {u, sample_conditional(u, w)};
}

std::vector<std::array<double, 2>> ArchimedeanCopula::sample_joint(std::size_t n,
                                                                   std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("sample_joint requires n >= 1");
    Rng rng(seed);
    std::vector<std::array<double, 2>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_pair(rng));
    return out;
}

double ArchimedeanCopula::sample_conditional(double u, double w) const {
    check_open_unit(u, "conditional u");
    check_open_unit(w, "conditional w");
    if (const auto* cf = dynamic_cast<const ClosedFormGenerator*>(gen_.get())) {
        if (auto v = cf->conditional_quantile(u, w)) return *v;
    }
    return conditional_by_rootfind(u, w);
}

double ArchimedeanCopula::conditional_by_rootfind(double u, double w) const {
    check_open_unit(u, "conditional u");
    check_open_unit(w, "conditional w");
    const double a = gen_->inverse(u);
    const double den = gen_->deriv(a, 1);

    // Solve phi'(a+s)/phi'(a) = w for s >= 0; the ratio decreases from 1
    // to 0, so a doubling bracket always exists.
    double s_lo = 0.0;
    double s_hi = 1.0;
    int expand = 0;
    while (gen_->deriv(a + s_hi, 1) / den > w) {
        s_lo = s_hi;
        s_hi *= 2.0;
        if (++expand > 1100) {
            throw std::runtime_error("conditional sampling: failed to bracket");
        }
    }

    double s = 0.5 * (s_lo + s_hi);
    for (int it = 0; it < 200; ++it) {
        const GeneratorPoint p = gen_->point(a + s);
        const double resid = p.d1 / den - w;
        if (std::abs(resid) < 1e-12) return gen_->value(s);
        if (resid > 0.0) {
            s_lo = s;
        } else {
            s_hi = s;
        }
        const double slope = p.d2 / den;  // negative
        double s_next = (slope < 0.0) ? s - resid / slope
                                      : std::numeric_limits<double>::quiet_NaN();
        if (!(s_next > s_lo && s_next < s_hi)) {
            s_next = 0.5 * (s_lo + s_hi);
        }
        if (s_next == s) return gen_->value(s);
        s = s_next;
    }
    throw std::runtime_error("conditional sampling: no convergence");
}

// ---------------------------------------------------------------------------
// Kendall's tau
// ---------------------------------------------------------------------------

namespace {

double debye1_integrand(double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); }

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = debye1_integrand(lm);
    const double frm = debye1_integrand(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double debye1(double theta) {
    if (theta == 0.0) return 1.0;
    const double x = std::abs(theta);
    const double fa = debye1_integrand(0.0);
    const double fb = debye1_integrand(x);
    const double fm = debye1_integrand(0.5 * x);
    const double whole = x / 6.0 * (fa + 4.0 * fm + fb);
    const double integral = adaptive_simpson(0.0, x, fa, fm, fb, whole, 1e-13, 48);
    const double d = integral / x;
    return theta > 0.0 ? d : d + 0.5 * x;  // D1(-x) = D1(x) + x/2
}

double kendall_tau(CopulaFamily family, double theta) {
    switch (family) {
        case CopulaFamily::Clayton:
            if (!(theta > 0.0)) throw std::invalid_argument("clayton requires theta > 0");
            return theta / (theta + 2.0);
        case CopulaFamily::Gumbel:
            if (!(theta >= 1.0)) throw std::invalid_argument("gumbel requires theta >= 1");
            return (theta - 1.0) / theta;
        case CopulaFamily::Frank: {
            if (theta == 0.0 || std::isnan(theta)) {
                throw std::invalid_argument("frank requires theta != 0");
            }
            if (std::abs(theta) < 1e-5) return theta / 9.0;  // small-theta limit
            return 1.0 + 4.0 / theta * (debye1(theta) - 1.0);
        }
        case CopulaFamily::Independence:
            return 0.0;
    }
    throw std::logic_error("unknown copula family");
}

double theta_from_tau(CopulaFamily family, double tau) {
    switch (family) {
        case CopulaFamily::Clayton:
            if (!(tau > 0.0 && tau < 1.0)) {
                throw std::invalid_argument("clayton requires tau in (0,1)");
            }
            return 2.0 * tau / (1.0 - tau);
        case CopulaFamily::Gumbel:
            if (!(tau >= 0.0 && tau < 1.0)) {
                throw std::invalid_argument("gumbel requires tau in [0,1)");
            }
            return 1.0 / (1.0 - tau);
        case CopulaFamily::Frank: {
            if (std::isnan(tau) || tau == 0.0 || std::abs(tau) >= 0.99) {
                throw std::invalid_argument("frank requires tau in (-0.99,0.99) \\ {0}");
            }
            const double target = std::abs(tau);
            double lo = 1e-8, hi = 745.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (kendall_tau(CopulaFamily::Frank, mid) < target) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo < 1e-12 * std::max(1.0, lo)) break;
            }
            const double theta = 0.5 * (lo + hi);
            return tau > 0.0 ? theta : -theta;
        }
        case CopulaFamily::Independence:
            if (tau != 0.0) throw std::invalid_argument("independence has tau = 0");
            return 0.0;
    }
    throw std::logic_error("unknown copula family");
}

// ---------------------------------------------------------------------------
// Plot-data export
// ---------------------------------------------------------------------------

namespace {

void write_csv_header(std::ofstream& f, const char* header, const std::filesystem::path& p) {
    if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
    f << header << "\n";
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

void export_copula_plot_data(const ArchimedeanCopula& copula, const std::filesystem::path& dir,
                             const std::string& prefix, int resolution, std::size_t scatter_n,
                             std::uint64_t seed) {
    if (resolution < 2) throw std::invalid_argument("plot export needs resolution >= 2");
    std::filesystem::create_directories(dir);

    {
        const auto path = dir / (prefix + "_cdf.csv");
        std::ofstream f(path);
        write_csv_header(f, "u,v,cdf", path);
        for (int i = 0; i < resolution; ++i) {
            const double u = static_cast<double>(i) / (resolution - 1);
            for (int j = 0; j < resolution; ++j) {
                const double v = static_cast<double>(j) / (resolution - 1);
                f << fmt(u) << ',' << fmt(v) << ',' << fmt(copula.cdf(u, v)) << '\n';
            }
        }
    }
    {
        const auto path = dir / (prefix + "_logpdf.csv");
        std::ofstream f(path);
        write_csv_header(f, "u,v,log_density", path);
        for (int i = 0; i < resolution; ++i) {
            const double u = (i + 1.0) / (resolution + 1.0);
            for (int j = 0; j < resolution; ++j) {
                const double v = (j + 1.0) / (resolution + 1.0);
                f << fmt(u) << ',' << fmt(v) << ','
                  << fmt(std::log(copula.density(u, v))) << '\n';
            }
        }
    }
    {
        const auto path = dir / (prefix + "_scatter.csv");
        std::ofstream f(path);
        write_csv_header(f, "u,v", path);
        for (const auto& p : copula.sample_joint(scatter_n, seed)) {
            f << fmt(p[0]) << ',' << fmt(p[1]) << '\n';
        }
    }
}

std::shared_ptr<Generator> generator_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "network") {
        return std::make_shared<GeneratorNetwork>(GeneratorNetwork::from_json(j));
    }
    const CopulaFamily family = family_from_name(kind);
    const double theta =
        family == CopulaFamily::Independence ? 0.0 : j.at("theta").get<double>();
    return std::shared_ptr<Generator>(make_closed_form(family, theta));
}

}  // namespace copsurv
