#include "copsurv/generator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace copsurv {

namespace {

void check_time_arg(double t) {
    if (std::isnan(t) || t < 0.0) {
        throw std::invalid_argument("generator argument must be nonnegative");
    }
}

void softmax_row(const double* raw, double* out, int n) {
    double m = raw[0];
    for (int j = 1; j < n; ++j) m = std::max(m, raw[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        out[j] = std::exp(raw[j] - m);
        sum += out[j];
    }
    for (int j = 0; j < n; ++j) out[j] /= sum;
}

// grad_raw[k] = a_k * (grad_a[k] - sum_j grad_a[j] a_j)
void softmax_backward(const double* a, const double* grad_a, double* grad_raw, int n) {
    double dot = 0.0;
    for (int j = 0; j < n; ++j) dot += grad_a[j] * a[j];
    for (int j = 0; j < n; ++j) grad_raw[j] += a[j] * (grad_a[j] - dot);
}

}  // namespace

double Generator::deriv(double t, int order) const {
    check_time_arg(t);
    if (order == 1) return point(t).d1;
    if (order == 2) return point(t).d2;
    throw std::invalid_argument("derivative order must be 1 or 2");
}

double Generator::inverse(double u) const { return inverse_newton(u, 1e-12, 200); }

double Generator::inverse_newton(double u, double tol, int max_iter) const {
    if (std::isnan(u) || u <= 0.0 || u > 1.0) {
        throw std::invalid_argument("generator inverse argument must be in (0,1]");
    }
    if (u == 1.0) return 0.0;
    // Relative residual target; keeps the inverse well conditioned for tiny
    // u, where an absolute tolerance would stop far from the root.
    const double resid_tol = std::max(u * tol, 1e-315);

    // Bracket [t_lo, t_hi] with phi(t_lo) >= u >= phi(t_hi).
    double t_lo = 0.0;
    double t_hi = 1.0;
    int expand = 0;
    while (value(t_hi) > u) {
        t_lo = t_hi;
        t_hi *= 2.0;
        if (++expand > 1100) {
            throw std::runtime_error("generator inverse: failed to bracket");
        }
    }

    double t = 0.5 * (t_lo + t_hi);
    for (int it = 0; it < max_iter; ++it) {
        const GeneratorPoint p = point(t);
        const double resid = p.phi - u;
        if (std::abs(resid) < resid_tol) return t;
        if (resid > 0.0) {
            t_lo = t;
        } else {
            t_hi = t;
        }
        double t_next = (p.d1 < 0.0) ? t - resid / p.d1
                                     : std::numeric_limits<double>::quiet_NaN();
        if (!(t_next > t_lo && t_next < t_hi)) {
            t_next = 0.5 * (t_lo + t_hi);  // Newton left the bracket; bisect
        }
        if (t_next == t) return t;  // bracket exhausted at fp resolution
        t = t_next;
    }
    throw std::runtime_error("generator inverse: no convergence after max iterations");
}

GeneratorNetwork::GeneratorNetwork(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.empty()) throw std::invalid_argument("generator network needs >= 1 hidden layer");
    for (int h : widths_) {
        if (h < 1) throw std::invalid_argument("generator network widths must be >= 1");
    }
    int prev = 1;
    for (std::size_t l = 0; l < widths_.size(); ++l) {
        const int h = widths_[l];
        raw_a_.emplace_back(static_cast<std::size_t>(h) * prev, 0.0);
        raw_b_.emplace_back(h, 0.0);
        n_params_ += static_cast<std::size_t>(h) * prev + h;
        prev = h;
    }
    raw_out_.assign(widths_.back(), 0.0);
    n_params_ += raw_out_.size();
    refresh_effective();
}

GeneratorNetwork GeneratorNetwork::random(const std::vector<int>& widths, Rng& rng) {
    GeneratorNetwork g(widths);
    for (auto& layer : g.raw_a_) {
        for (double& v : layer) v = rng.uniform(0.0, 1.0);
    }
    for (auto& layer : g.raw_b_) {
        for (double& v : layer) v = rng.uniform(0.0, 2.0);
    }
    for (double& v : g.raw_out_) v = rng.uniform(0.0, 1.0);
    g.refresh_effective();
    return g;
}

GeneratorNetwork GeneratorNetwork::random(const std::vector<int>& widths, std::uint64_t seed) {
    Rng rng(seed);
    return random(widths, rng);
}

void GeneratorNetwork::refresh_effective() {
    a_.resize(raw_a_.size());
    b_.resize(raw_b_.size());
    int prev = 1;
    for (std::size_t l = 0; l < widths_.size(); ++l) {
        const int h = widths_[l];
        a_[l].resize(raw_a_[l].size());
        b_[l].resize(h);
        for (int i = 0; i < h; ++i) {
            softmax_row(&raw_a_[l][static_cast<std::size_t>(i) * prev],
                        &a_[l][static_cast<std::size_t>(i) * prev], prev);
            double row_sum = 0.0;
            for (int j = 0; j < prev; ++j) row_sum += a_[l][static_cast<std::size_t>(i) * prev + j];
            if (std::abs(row_sum - 1.0) > 1e-12) {
                throw std::runtime_error("generator network: mixing row drifted off the simplex");
            }
            b_[l][i] = std::exp(raw_b_[l][i]);
            if (!(b_[l][i] > 0.0)) {
                throw std::runtime_error("generator network: rate must be positive");
            }
        }
        prev = h;
    }
    out_w_.resize(raw_out_.size());
    softmax_row(raw_out_.data(), out_w_.data(), static_cast<int>(raw_out_.size()));
    double row_sum = 0.0;
    for (double w : out_w_) row_sum += w;
    if (std::abs(row_sum - 1.0) > 1e-12) {
        throw std::runtime_error("generator network: output row drifted off the simplex");
    }
}

GeneratorPoint GeneratorNetwork::point(double t) const {
    check_time_arg(t);
    if (std::isinf(t)) return {0.0, 0.0, 0.0};

    std::vector<double> h(1, 1.0), h1(1, 0.0), h2(1, 0.0);
    std::vector<double> nh, nh1, nh2;
    int prev = 1;
    for (std::size_t l = 0; l < widths_.size(); ++l) {
        const int width = widths_[l];
        nh.assign(width, 0.0);
        nh1.assign(width, 0.0);
        nh2.assign(width, 0.0);
        for (int i = 0; i < width; ++i) {
            const double* row = &a_[l][static_cast<std::size_t>(i) * prev];
            double s = 0.0, s1 = 0.0, s2 = 0.0;
            for (int j = 0; j < prev; ++j) {
                s += row[j] * h[j];
                s1 += row[j] * h1[j];
                s2 += row[j] * h2[j];
            }
            const double bi = b_[l][i];
            const double q = std::exp(-bi * t);
            nh[i] = q * s;
            nh1[i] = q * (s1 - bi * s);
            nh2[i] = q * (s2 - 2.0 * bi * s1 + bi * bi * s);
        }
        h.swap(nh);
        h1.swap(nh1);
        h2.swap(nh2);
        prev = width;
    }

    GeneratorPoint out{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < out_w_.size(); ++i) {
        out.phi += out_w_[i] * h[i];
        out.d1 += out_w_[i] * h1[i];
        out.d2 += out_w_[i] * h2[i];
    }
    // At t = 0 every exponential factor is exactly 1 and every unit is a
    // convex combination of ones; return the exact limit rather than the
    // rounded softmax sums.
    if (t == 0.0) out.phi = 1.0;
    return out;
}

double GeneratorNetwork::inverse(double u) const { return inverse_newton(u, 1e-12, 200); }

std::vector<double> GeneratorNetwork::raw_params() const {
    std::vector<double> p;
    p.reserve(n_params_);
    for (std::size_t l = 0; l < widths_.size(); ++l) {
        p.insert(p.end(), raw_a_[l].begin(), raw_a_[l].end());
        p.insert(p.end(), raw_b_[l].begin(), raw_b_[l].end());
    }
    p.insert(p.end(), raw_out_.begin(), raw_out_.end());
    return p;
}

void GeneratorNetwork::set_raw_params(const std::vector<double>& p) {
    if (p.size() != n_params_) {
        throw std::invalid_argument("generator network: parameter vector size mismatch");
    }
    std::size_t k = 0;
    for (std::size_t l = 0; l < widths_.size(); ++l) {
        for (double& v : raw_a_[l]) v = p[k++];
        for (double& v : raw_b_[l]) v = p[k++];
    }
    for (double& v : raw_out_) v = p[k++];
    refresh_effective();
}

void GeneratorNetwork::param_grads(double t, std::vector<double>& dphi,
                                   std::vector<double>& dd1) const {
    check_time_arg(t);
    dphi.assign(n_params_, 0.0);
    dd1.assign(n_params_, 0.0);
    if (std::isinf(t)) return;

    const std::size_t n_layers = widths_.size();

    // Forward pass, keeping the per-layer tape.
    std::vector<std::vector<double>> hs(n_layers + 1), h1s(n_layers + 1);
    std::vector<std::vector<double>> ss(n_layers), s1s(n_layers), qs(n_layers);
    hs[0] = {1.0};
    h1s[0] = {0.0};
    int prev = 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int width = widths_[l];
        ss[l].assign(width, 0.0);
        s1s[l].assign(width, 0.0);
        qs[l].assign(width, 0.0);
        hs[l + 1].assign(width, 0.0);
        h1s[l + 1].assign(width, 0.0);
        for (int i = 0; i < width; ++i) {
            const double* row = &a_[l][static_cast<std::size_t>(i) * prev];
            double s = 0.0, s1 = 0.0;
            for (int j = 0; j < prev; ++j) {
                s += row[j] * hs[l][j];
                s1 += row[j] * h1s[l][j];
            }
            const double bi = b_[l][i];
            const double q = std::exp(-bi * t);
            ss[l][i] = s;
            s1s[l][i] = s1;
            qs[l][i] = q;
            hs[l + 1][i] = q * s;
            h1s[l + 1][i] = q * (s1 - bi * s);
        }
        prev = width;
    }

    // Raw-parameter offsets matching raw_params() order.
    std::vector<std::size_t> a_off(n_layers), b_off(n_layers);
    std::size_t off = 0;
    prev = 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        a_off[l] = off;
        off += raw_a_[l].size();
        b_off[l] = off;
        off += raw_b_[l].size();
        prev = widths_[l];
    }
    const std::size_t out_off = off;

    // Backward pass; adjoint channels (g, g1) track d target / d h and
    // d target / d h'. seed_d1 selects the target: phi (false) or phi' (true).
    auto backward = [&](bool seed_d1, std::vector<double>& grad) {
        const int last = widths_.back();
        std::vector<double> g(last, 0.0), g1(last, 0.0);
        std::vector<double> grad_out(last, 0.0);
        for (int i = 0; i < last; ++i) {
            if (seed_d1) {
                g1[i] = out_w_[i];
                grad_out[i] = h1s[n_layers][i];
            } else {
                g[i] = out_w_[i];
                grad_out[i] = hs[n_layers][i];
            }
        }
        softmax_backward(out_w_.data(), grad_out.data(), &grad[out_off], last);

        for (std::size_t lp1 = n_layers; lp1 >= 1; --lp1) {
            const std::size_t l = lp1 - 1;
            const int width = widths_[l];
            const int in_w = (l == 0) ? 1 : widths_[l - 1];
            std::vector<double> gp(in_w, 0.0), g1p(in_w, 0.0);
            for (int i = 0; i < width; ++i) {
                const double gi = g[i], g1i = g1[i];
                if (gi == 0.0 && g1i == 0.0) continue;
                const double bi = b_[l][i];
                const double q = qs[l][i];
                const double hi = hs[l + 1][i];
                const double h1i = h1s[l + 1][i];
                const double* row = &a_[l][static_cast<std::size_t>(i) * in_w];

                // d target / d B_i, chained through B = exp(raw).
                const double grad_b = gi * (-t * hi) + g1i * (-t * h1i - q * ss[l][i]);
                grad[b_off[l] + i] += grad_b * bi;

                // d target / d A_{i,:}, chained through the row softmax.
                std::vector<double> grad_a(in_w, 0.0);
                for (int j = 0; j < in_w; ++j) {
                    grad_a[j] = gi * q * hs[l][j] +
                                g1i * q * (h1s[l][j] - bi * hs[l][j]);
                    gp[j] += (gi - g1i * bi) * q * row[j];
                    g1p[j] += g1i * q * row[j];
                }
                softmax_backward(row, grad_a.data(),
                                 &grad[a_off[l] + static_cast<std::size_t>(i) * in_w], in_w);
            }
            g.swap(gp);
            g1.swap(g1p);
        }
    };

    backward(false, dphi);
    backward(true, dd1);
}

nlohmann::json GeneratorNetwork::to_json() const {
    nlohmann::json j;
    j["kind"] = "network";
    j["depth"] = depth();
    j["widths"] = widths_;
    j["phi_A"] = raw_a_;
    j["phi_B"] = raw_b_;
    j["output_phi_A"] = raw_out_;
    return j;
}

GeneratorNetwork GeneratorNetwork::from_json(const nlohmann::json& j) {
    GeneratorNetwork g(j.at("widths").get<std::vector<int>>());
    const auto phi_a = j.at("phi_A").get<std::vector<std::vector<double>>>();
    const auto phi_b = j.at("phi_B").get<std::vector<std::vector<double>>>();
    const auto out = j.at("output_phi_A").get<std::vector<double>>();
    if (phi_a.size() != g.raw_a_.size() || phi_b.size() != g.raw_b_.size() ||
        out.size() != g.raw_out_.size()) {
        throw std::invalid_argument("generator network json: layer count mismatch");
    }
    for (std::size_t l = 0; l < phi_a.size(); ++l) {
        if (phi_a[l].size() != g.raw_a_[l].size() || phi_b[l].size() != g.raw_b_[l].size()) {
            throw std::invalid_argument("generator network json: layer size mismatch");
        }
        g.raw_a_[l] = phi_a[l];
        g.raw_b_[l] = phi_b[l];
    }
    g.raw_out_ = out;
    g.refresh_effective();
    return g;
}

}  // namespace copsurv
