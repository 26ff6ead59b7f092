#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "abslab/classifier.hpp"
#include "abslab/nonlinearity.hpp"
#include "abslab/numerics.hpp"

namespace abslab {

struct FlowError : std::runtime_error {
    explicit FlowError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FlowValue {
    double value = 0.0;
    bool underflowed_to_zero = false;
};

// ---------------------------------------------------------------------------
// phi_a: the decreasing solution of phi' + f(phi) = 0, phi(0) = a.
// Adaptive implicit midpoint with step doubling; steps are accepted only if
// the decrease property 0 <= phi1 <= phi0 holds.
// ---------------------------------------------------------------------------

namespace detail_flow {

inline double implicit_midpoint_step(const Nonlinearity& nl, double phi0, double dt) {
    auto g = [&](double p1) { return p1 + dt * nl.f(0.5 * (phi0 + p1)) - phi0; };
    std::function<double(double)> dg;
    if (nl.has_fprime())
        dg = [&nl, dt, phi0](double p1) { return 1.0 + 0.5 * dt * nl.fprime(0.5 * (phi0 + p1)); };
    return solve_increasing(g, dg, 0.0, phi0, 1e-15);
}

}  // namespace detail_flow

inline FlowValue flow(const Nonlinearity& nl, double a, double t, double step_rtol = 1e-12) {
    if (!(a > 0.0)) throw FlowError("flow: a > 0 required");
    if (t < 0.0) throw FlowError("flow: t >= 0 required");
    FlowValue out;
    if (t == 0.0) {
        out.value = a;
        return out;
    }
    double phi = a;
    double s = 0.0;
    const double fa = nl.f(a);
    double dt = fa > 0.0 ? 0.01 * a / fa : t;
    dt = std::min(dt, t);
    int rejected = 0;
    while (s < t) {
        if (phi < 1e-300) {
            out.value = 0.0;
            out.underflowed_to_zero = true;
            return out;
        }
        dt = std::min(dt, t - s);
        const double big = detail_flow::implicit_midpoint_step(nl, phi, dt);
        const double h1 = detail_flow::implicit_midpoint_step(nl, phi, 0.5 * dt);
        const double h2 = detail_flow::implicit_midpoint_step(nl, h1, 0.5 * dt);
        const double err = std::abs(big - h2) / std::max(std::abs(h2), 1e-300);
        if (err <= step_rtol || dt <= 1e-15 * (s + 1.0)) {
            phi = h2;
            s += dt;
            const double grow = err > 0.0 ? 0.9 * std::cbrt(step_rtol / err) : 2.0;
            dt *= std::clamp(grow, 0.3, 2.0);
        } else {
            dt *= std::max(0.9 * std::cbrt(step_rtol / err), 0.2);
            if (++rejected > 100000) throw FlowError("flow: step control stalled");
        }
    }
    out.value = phi;
    return out;
}

// two-path consistency: |flow(flow(a,t),s) - flow(a,t+s)| / flow(a,t+s)
inline double semigroup_check(const Nonlinearity& nl, double a, double t, double s) {
    FlowValue mid = flow(nl, a, t);
    if (mid.underflowed_to_zero) return 0.0;
    FlowValue two = flow(nl, mid.value, s);
    FlowValue one = flow(nl, a, t + s);
    if (one.value == 0.0) return std::abs(two.value - one.value);
    return std::abs(two.value - one.value) / one.value;
}

// ---------------------------------------------------------------------------
// The maximal flow phi_inf, defined by inverting G(x) = int_x^inf ds/f(s).
// Exists iff the tail integral J is finite.  The table spans
// [1e-8, table_top]; below G(table_top) the evaluator reports saturation.
// ---------------------------------------------------------------------------

struct PhiInfValue {
    double value = 0.0;
    bool saturated = false;  // true when phi_inf(t) exceeds ~1e300
};

// int_{y0}^inf e^{y} / f(e^y) dy evaluated on the log-substituted ladder
// w = ln y; slowly decaying power tails in y become geometric in w, so the
// value converges to quadrature accuracy even for weakly superlinear f.
inline double log_tail_integral(const Nonlinearity& nl, double y0) {
    if (!(y0 >= 1.0)) throw FlowError("log_tail_integral: y0 >= 1 required");
    auto g = [&nl](double w) {
        const double y = std::exp(w);
        return y * std::exp(nl.ln_s_over_f(y));  // Jacobian dy = y dw
    };
    TailLadderOptions opt;
    opt.quad_rtol = 1e-13;
    opt.max_rungs = 64;  // covers y up to y0 * 2^64
    auto lr = tail_ladder(g, std::log(y0), opt);
    if (lr.verdict != Ternary::Finite)
        throw FlowError("log_tail_integral: tail of 1/f not integrable");
    return lr.value;
}

class ScalarFlow {
public:
    static ScalarFlow build(const Nonlinearity& nl) {
        IntegralVerdict j = tail_integral_J(nl);
        if (j.finite != Ternary::Finite)
            throw FlowError("flow does not exist: the tail integral of 1/f is not finite");
        return ScalarFlow(nl);
    }

    const Nonlinearity& nl() const { return nl_; }

    // G(x) = int_x^inf ds/f(s) for x within the table range
    double G(double x) const {
        const auto& xs = table_x_;
        if (x < xs.front() || x > xs.back() * (1 + 1e-12))
            throw FlowError("G: argument outside the table range");
        size_t j = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
        if (j >= xs.size()) j = xs.size() - 1;
        // G(x) = G(x_j) + int_x^{x_j} ds/f
        auto q = integrate([this](double y) { return std::exp(nl_.ln_s_over_f(y)); },
                           std::log(x), std::log(xs[j]), 1e-12);
        return table_G_[j] + q.value;
    }

    double t_saturation() const { return table_G_.back(); }
    double t_floor_time() const { return table_G_.front(); }  // G at the lower node

    PhiInfValue phi_infinity(double t) const {
        if (!(t > 0.0)) throw FlowError("phi_infinity: t > 0 required");
        PhiInfValue out;
        if (t <= table_G_.back()) {
            out.value = table_x_.back();
            out.saturated = true;
            return out;
        }
        if (t >= table_G_.front()) {
            // beyond the table floor the flow keeps decaying; extend from the node
            double x = table_x_.front();
            FlowValue fv = flow(nl_, x, t - table_G_.front(), 1e-12);
            out.value = fv.value;
            return out;
        }
        // locate the bracketing segment: G decreasing in x
        size_t lo = 0, hi = table_x_.size() - 1;
        while (hi - lo > 1) {
            const size_t mid = (lo + hi) / 2;
            if (table_G_[mid] >= t)
                lo = mid;
            else
                hi = mid;
        }
        // solve G(x) = t on [x_lo, x_hi] via the local increasing map
        // g(y) = int_{x_lo}^{e^y} ds/f - (G(x_lo) - t)
        const double target = table_G_[lo] - t;
        const double ylo = std::log(table_x_[lo]), yhi = std::log(table_x_[hi]);
        auto seg = [this, ylo](double y) {
            return integrate([this](double z) { return std::exp(nl_.ln_s_over_f(z)); }, ylo, y,
                             1e-13)
                .value;
        };
        auto g = [&](double y) { return seg(y) - target; };
        std::function<double(double)> dg = [this](double y) {
            return std::exp(nl_.ln_s_over_f(y));
        };
        const double y = solve_increasing(g, dg, ylo, yhi, 1e-14);
        out.value = std::exp(y);
        return out;
    }

private:
    explicit ScalarFlow(const Nonlinearity& nl) : nl_(nl) {
        const int n = 400;
        const double x_lo = 1e-8;
        const double x_hi = nl.table_top();
        table_x_.resize(n);
        table_G_.resize(n);
        const double l0 = std::log(x_lo), l1 = std::log(x_hi);
        for (int i = 0; i < n; ++i) table_x_[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
        // tail beyond the top node
        auto g = [this](double y) { return std::exp(nl_.ln_s_over_f(y)); };
        double acc = log_tail_integral(nl, l1);
        table_G_[n - 1] = acc;
        for (int i = n - 2; i >= 0; --i) {
            auto q = integrate(g, std::log(table_x_[i]), std::log(table_x_[i + 1]), 1e-12);
            acc += q.value;
            table_G_[i] = acc;
        }
    }

    Nonlinearity nl_;
    std::vector<double> table_x_;  // increasing
    std::vector<double> table_G_;  // decreasing
};

// ---------------------------------------------------------------------------
// theta_k(t) = int_0^t h(k C* tau^{-N/2}) dtau with C* = (4 pi)^{-N/2},
// and the lower-envelope constants fitted from h.
// ---------------------------------------------------------------------------

inline double c_star(int N) { return std::pow(4.0 * kPi, -0.5 * N); }

inline double theta_k(const Nonlinearity& nl, double k, int N, double t) {
    if (!(k > 0.0)) throw FlowError("theta_k: k > 0 required");
    if (!(t >= 0.0)) throw FlowError("theta_k: t >= 0 required");
    if (t == 0.0) return 0.0;
    ThetaIntegral th = theta_integral(nl, k * c_star(N), N, t);
    if (th.verdict != Ternary::Finite)
        throw FlowError("theta_k: integrand diverges at tau -> 0 (weak singularity fails)");
    return th.value;
}

// k C* t^{-N/2} exp(-theta_k(t) - x^2/(4 t)), computed in log space
inline double dirac_lower_envelope(const Nonlinearity& nl, double k, int N, double x, double t) {
    const double th = theta_k(nl, k, N, t);
    const double ln_env =
        std::log(k) + std::log(c_star(N)) - 0.5 * N * std::log(t) - th - x * x / (4.0 * t);
    if (ln_env < -700.0) return 0.0;
    return std::exp(ln_env);
}

struct ThetaEnvelope {
    double k = 0.0;
    int N = 0;
    double M = 0.0;      // h(r) <= M ln^beta r on the fit range
    double beta = 0.0;
    double M_beta = 0.0; // 2^{beta-1} M
    double c1 = 0.0;     // exp(-(M N^beta / 2) int_0^1 ln^beta(1/tau) dtau)
    double log_integral = 0.0;  // int_0^1 (ln(1/tau))^beta dtau

    double theta(const Nonlinearity& nl, double t) const { return theta_k(nl, k, N, t); }

    // right-hand side of the theta bound for t in (0,1)
    double bound(double t) const {
        return M_beta * t * std::pow(std::log(k), beta) +
               0.5 * M * std::pow(static_cast<double>(N), beta) * log_integral;
    }
};

inline ThetaEnvelope make_theta_envelope(const Nonlinearity& nl, double k, int N) {
    ThetaEnvelope env;
    env.k = k;
    env.N = N;
    // least squares of ln h(r) against ln ln r over r in [1e3, 1e12]
    std::vector<double> xs, ys;
    const int n = 60;
    for (int i = 0; i < n; ++i) {
        const double r = std::pow(10.0, 3.0 + 9.0 * i / (n - 1));
        xs.push_back(std::log(std::log(r)));
        ys.push_back(std::log(nl.h(r)));
    }
    LineFit fit = fit_line(xs, ys);
    env.beta = fit.slope;
    // inflate M so the fit is a genuine upper bound on the sample
    env.M = std::exp(fit.intercept + fit.max_residual * 1.0000001);
    env.M_beta = std::pow(2.0, env.beta - 1.0) * env.M;
    // int_0^1 (ln(1/tau))^beta dtau = int_0^inf z^beta e^-z dz, computed
    // numerically rather than through the Gamma identity
    env.log_integral =
        integrate([b = env.beta](double z) { return std::pow(z, b) * std::exp(-z); }, 0.0, 700.0,
                  1e-11)
            .value;
    env.c1 = std::exp(-0.5 * env.M * std::pow(static_cast<double>(N), env.beta) * env.log_integral);
    return env;
}

// ---------------------------------------------------------------------------
// Plot-ready rows: t, phi_inf, phi_a for each listed a, theta_k for each k
// ---------------------------------------------------------------------------

struct FlowTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline FlowTable flow_table(const Nonlinearity& nl, int N, const std::vector<double>& ts,
                            const std::vector<double>& as, const std::vector<double>& ks) {
    FlowTable tab;
    tab.header.push_back("t");
    bool have_flow = tail_integral_J(nl).finite == Ternary::Finite;
    std::unique_ptr<ScalarFlow> sf;
    if (have_flow) sf = std::make_unique<ScalarFlow>(ScalarFlow::build(nl));
    tab.header.push_back("phi_inf");
    for (double a : as) tab.header.push_back("phi_a=" + std::to_string(a));
    for (double k : ks) tab.header.push_back("theta_k=" + std::to_string(k));
    for (double t : ts) {
        std::vector<double> row;
        row.push_back(t);
        if (sf) {
            auto p = sf->phi_infinity(t);
            row.push_back(p.saturated ? std::numeric_limits<double>::infinity() : p.value);
        } else {
            row.push_back(std::numeric_limits<double>::infinity());
        }
        for (double a : as) row.push_back(flow(nl, a, t).value);
        for (double k : ks) row.push_back(theta_k(nl, k, N, t));
        tab.rows.push_back(std::move(row));
    }
    return tab;
}

}  // namespace abslab
