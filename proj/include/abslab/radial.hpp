#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "abslab/classifier.hpp"
#include "abslab/nonlinearity.hpp"
#include "abslab/numerics.hpp"
#include "abslab/scalar_flow.hpp"

namespace abslab {

// Stationary radial problems: global profiles w_a of
//   -w'' - (N-1)/r w' + f(w) = 0,  w(0) = a,  w'(0) = 0,
// boundary blow-up solutions on balls, and the one-dimensional singular
// profile Phi with -Phi'' + f(Phi) = 0, Phi(0+) = infinity.

struct RadialError : std::runtime_error {
    explicit RadialError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RadialNonConvergence : RadialError {
    std::vector<double> last_iterate, previous_iterate;
    RadialNonConvergence(const std::string& msg, std::vector<double> last,
                         std::vector<double> prev)
        : RadialError(msg), last_iterate(std::move(last)), previous_iterate(std::move(prev)) {}
};

enum class ProfileKind { Global, BallBlowup, SingularPhi };

struct RadialProfile {
    ProfileKind kind = ProfileKind::Global;
    double a_or_R = 0.0;  // center value (Global) or ball radius (BallBlowup)
    int N = 0;
    std::vector<double> r;
    std::vector<double> w;
    double residual_norm = 0.0;
    std::optional<double> blowup_radius;

    double at(double rq) const {
        if (rq <= r.front()) return w.front();
        if (rq >= r.back()) return w.back();
        size_t i = std::upper_bound(r.begin(), r.end(), rq) - r.begin() - 1;
        const double t = (rq - r[i]) / (r[i + 1] - r[i]);
        return w[i] * (1 - t) + w[i + 1] * t;
    }
};

namespace detail_rad {

inline constexpr double kBlowupCap = 1e12;

// sup-norm of the discrete radial residual measured with quartic-fit
// five-point derivatives; a plain 3-point stencil is dominated by its own
// truncation error once the profile steepens
inline double residual_sup(const Nonlinearity& nl, const std::vector<double>& r,
                           const std::vector<double>& w, int N) {
    const int n = static_cast<int>(r.size());
    double sup = 0.0;
    for (int i = 2; i + 2 < n; ++i) {
        const std::vector<double> nodes(r.begin() + i - 2, r.begin() + i + 3);
        auto w1 = fd_weights(nodes, r[i], 1);
        auto w2 = fd_weights(nodes, r[i], 2);
        double d1 = 0.0, d2 = 0.0;
        for (int j = 0; j < 5; ++j) {
            d1 += w1[j] * w[i - 2 + j];
            d2 += w2[j] * w[i - 2 + j];
        }
        const double res = -d2 - (N - 1) / r[i] * d1 + nl.f(w[i]);
        sup = std::max(sup, std::abs(res));
    }
    return sup;
}

struct OutwardTrace {
    std::vector<double> r, w, v;
    bool hit_cap = false;
    double r_cap = 0.0;
};

// Adaptive RK4 march of (w, v), v = w'; h_base scales every step so halving
// it is a genuine resolution refinement.
inline OutwardTrace integrate_outward(const Nonlinearity& nl, double a, int N, double h_base,
                                      double r_limit, double cap = kBlowupCap) {
    OutwardTrace tr;
    auto rhs = [&](double r, double w, double v, double& dw, double& dv) {
        dw = v;
        dv = (r < 1e-14) ? nl.f(w) / N : nl.f(w) - (N - 1) / r * v;
    };
    // series start: w = a + a h(a) r^2 / (2N)
    const double r0 = std::min(1e-4, 1e-4 * r_limit);
    double r = r0;
    double w = a + a * nl.h(a) * r0 * r0 / (2.0 * N);
    double v = a * nl.h(a) * r0 / N;
    tr.r.push_back(0.0);
    tr.w.push_back(a);
    tr.v.push_back(0.0);
    while (r < r_limit) {
        tr.r.push_back(r);
        tr.w.push_back(w);
        tr.v.push_back(v);
        if (w >= cap) {
            tr.hit_cap = true;
            tr.r_cap = r;
            return tr;
        }
        // step limited by curvature and relative growth
        const double fw = nl.f(w);
        double dr = h_base;
        if (v > 0.0) dr = std::min(dr, 0.02 * h_base / 1e-2 * w / v);  // dln w <= 2 h_base
        if (fw > 0.0) dr = std::min(dr, 2.0 * h_base * std::sqrt(w / fw));
        dr = std::min(dr, r_limit - r + 1e-15);
        double k1w, k1v, k2w, k2v, k3w, k3v, k4w, k4v;
        rhs(r, w, v, k1w, k1v);
        rhs(r + 0.5 * dr, w + 0.5 * dr * k1w, v + 0.5 * dr * k1v, k2w, k2v);
        rhs(r + 0.5 * dr, w + 0.5 * dr * k2w, v + 0.5 * dr * k2v, k3w, k3v);
        rhs(r + dr, w + dr * k3w, v + dr * k3v, k4w, k4v);
        w += dr / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
        v += dr / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        r += dr;
        if (!std::isfinite(w) || !std::isfinite(v)) {
            tr.hit_cap = true;
            tr.r_cap = r;
            return tr;
        }
    }
    tr.r.push_back(r);
    tr.w.push_back(w);
    tr.v.push_back(v);
    return tr;
}

}  // namespace detail_rad

// int_U^inf ds / sqrt(2 F(s)), on the log-substituted ladder (geometric
// convergence even for weakly superlinear f)
inline double phi_radius_quadrature(const Nonlinearity& nl, double U) {
    if (!(U > 0.0)) throw RadialError("phi_radius_quadrature: U > 0 required");
    const double half_ln2 = 0.5 * std::log(2.0);
    auto integrand_y = [&nl, half_ln2](double y) {
        // e^y / sqrt(2 F(e^y))
        if (!nl.has_log_eval() && y > std::log(nl.table_top())) return 0.0;
        return std::exp(y - 0.5 * nl.ln_F_of_exp(y) - half_ln2);
    };
    if (!nl.has_log_eval()) {
        // expressions are only cached up to table_top; require a dead tail there
        const double ytop = std::log(nl.table_top());
        if (integrand_y(0.9 * ytop) > 1e-200)
            throw RadialError("phi_radius_quadrature: expression antiderivative range exhausted");
    }
    const double yU = std::log(U);
    double head = 0.0;
    double anchor = std::max(yU, 1.0);
    if (yU < 1.0) {
        head = integrate(integrand_y, yU, 1.0, 1e-11).value;
    }
    auto g = [&](double wv) {
        const double y = std::exp(wv);
        return y * integrand_y(y);
    };
    TailLadderOptions opt;
    opt.quad_rtol = 1e-12;
    opt.max_rungs = 64;
    auto lr = tail_ladder(g, std::log(anchor), opt);
    if (lr.verdict != Ternary::Finite)
        throw RadialError("phi_radius_quadrature: Keller-Osserman integral not finite");
    return head + lr.value;
}

struct BlowupRadiusResult {
    double value = std::numeric_limits<double>::infinity();
    bool is_infinite = false;
};

inline BlowupRadiusResult blowup_radius(const Nonlinearity& nl, double a, int N,
                                        double h_base = 0.01) {
    if (!(a > 0.0)) throw RadialError("blowup_radius: a > 0 required");
    const Ternary ko = tail_integral_KO(nl).finite;
    // under Keller-Osserman the 1-D comparison profile blows up within
    // ~phi_radius_quadrature(a) of the origin; the radial drag costs an O(1)
    // factor, so 10x is a safe march limit
    double r_limit = 80.0 / std::sqrt(std::max(nl.h(a), 0.01));
    if (ko == Ternary::Finite)
        r_limit = std::max(20.0, 10.0 * phi_radius_quadrature(nl, a));
    auto tr = detail_rad::integrate_outward(nl, a, N, h_base, r_limit);
    if (tr.hit_cap) {
        if (ko == Ternary::Infinite)
            throw RadialError(
                "blowup_radius: profile reached the cap but the Keller-Osserman verdict is "
                "infinite (solver and classifier disagree)");
        BlowupRadiusResult res;
        res.value = tr.r_cap + phi_radius_quadrature(nl, detail_rad::kBlowupCap);
        res.is_infinite = false;
        return res;
    }
    if (ko == Ternary::Infinite) {
        BlowupRadiusResult res;
        res.is_infinite = true;
        return res;
    }
    throw RadialError("blowup_radius: no blow-up before r_limit yet Keller-Osserman holds; "
                      "increase the integration range");
}

// Global profile by Picard iteration of
//   w(r) = w(r_j) + int_{r_j}^r s^{1-N} [ r_j^{N-1} w'(r_j)
//                                         + int_{r_j}^s t^{N-1} f(w) dt ] ds
// marched over windows short enough to contract.
inline RadialProfile solve_global_radial(const Nonlinearity& nl, double a, int N, double r_max,
                                         double h_cap = 0.004) {
    if (!(a > 0.0)) throw RadialError("solve_global_radial: a > 0 required");
    // the profile must exist on [0, r_max]: under Keller-Osserman it blows up
    // at a finite radius, which must lie beyond r_max
    const Ternary ko = tail_integral_KO(nl).finite;
    if (ko == Ternary::Finite) {
        auto br = blowup_radius(nl, a, N);
        if (!br.is_infinite && br.value <= r_max)
            throw RadialError(
                "solve_global_radial: profile blows up at r = " + std::to_string(br.value) +
                " before r_max; use solve_ball_blowup instead");
    }

    RadialProfile prof;
    prof.kind = ProfileKind::Global;
    prof.a_or_R = a;
    prof.N = N;
    prof.r.push_back(0.0);
    prof.w.push_back(a);

    double anchor_r = 0.0;
    double anchor_w = a;
    double anchor_v = 0.0;  // w'(anchor)
    while (anchor_r < r_max - 1e-12) {
        // window sized for contraction: sup f' L^2 / (2N) < 0.5
        double fp = nl.has_fprime() ? nl.fprime(anchor_w * 2.0 + 1.0)
                                    : (nl.f(anchor_w * 2.0 + 1.0) / (anchor_w * 2.0 + 1.0));
        fp = std::max(fp, 1e-6);
        double L = std::sqrt(static_cast<double>(N) / fp);
        L = std::min({L, r_max - anchor_r, 1.0});
        // graded spacing within the window
        const double h = std::min(h_cap, 0.1 / std::sqrt(1.0 + nl.h(anchor_w)));
        const int n = std::max(4, static_cast<int>(std::ceil(L / h)) + 1);
        std::vector<double> rw(n), cur(n, anchor_w), next(n), inner(n), outer(n);
        for (int i = 0; i < n; ++i) rw[i] = anchor_r + L * i / (n - 1);

        bool converged = false;
        std::vector<double> prev_it;
        int it = 0;
        for (; it < 200; ++it) {
            // inner(s) = int_{anchor}^s t^{N-1} f(w) dt  (trapezoid)
            inner[0] = 0.0;
            for (int i = 1; i < n; ++i) {
                const double t0 = rw[i - 1], t1 = rw[i];
                inner[i] = inner[i - 1] + 0.5 * (t1 - t0) *
                                              (std::pow(t0, N - 1) * nl.f(cur[i - 1]) +
                                               std::pow(t1, N - 1) * nl.f(cur[i]));
            }
            // outer(r) = int_{anchor}^r s^{1-N} (A + inner(s)) ds
            const double A = std::pow(anchor_r, N - 1) * anchor_v;
            auto integ = [&](int i) {
                const double s = rw[i];
                if (s < 1e-300) return 0.0;
                return std::pow(s, 1 - N) * (A + inner[i]);
            };
            outer[0] = 0.0;
            for (int i = 1; i < n; ++i) {
                // s^{1-N} is singular at s=0 only when A>0, which cannot
                // happen for the first window (anchor at the origin)
                double left = rw[i - 1] < 1e-300 ? 0.0 : integ(i - 1);
                outer[i] = outer[i - 1] + 0.5 * (rw[i] - rw[i - 1]) * (left + integ(i));
            }
            double diff = 0.0;
            for (int i = 0; i < n; ++i) {
                next[i] = anchor_w + outer[i];
                diff = std::max(diff, std::abs(next[i] - cur[i]) / (1.0 + std::abs(next[i])));
                if (next[i] > detail_rad::kBlowupCap)
                    throw RadialError(
                        "solve_global_radial: blow-up detected inside the window; use "
                        "solve_ball_blowup");
            }
            prev_it = cur;
            cur = next;
            if (diff < 1e-12) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw RadialNonConvergence("solve_global_radial: Picard stalled after 200 iterations",
                                       cur, prev_it);
        for (int i = 1; i < n; ++i) {
            prof.r.push_back(rw[i]);
            prof.w.push_back(cur[i]);
        }
        // derivative at the window end from the converged integral identity
        const double A = std::pow(anchor_r, N - 1) * anchor_v;
        anchor_v = (A + inner[n - 1]) * std::pow(rw[n - 1], 1 - N);
        anchor_r = rw[n - 1];
        anchor_w = cur[n - 1];
    }
    prof.residual_norm = detail_rad::residual_sup(nl, prof.r, prof.w, N);
    double fmax = 0.0;
    for (double wv : prof.w) fmax = std::max(fmax, nl.f(wv));
    if (!(prof.residual_norm < 1e-6 * (1.0 + fmax)))
        throw RadialError("solve_global_radial: residual " + std::to_string(prof.residual_norm) +
                          " exceeds tolerance");
    return prof;
}

inline RadialProfile solve_ball_blowup(const Nonlinearity& nl, double R, int N,
                                       double h_base = 0.005) {
    if (!(R > 0.0)) throw RadialError("solve_ball_blowup: R > 0 required");
    if (tail_integral_KO(nl).finite != Ternary::Finite)
        throw RadialError(
            "solve_ball_blowup: no boundary blow-up solution (Keller-Osserman fails)");
    // R(a) is decreasing in a: expand the bracket then bisect on ln a
    double lo = 1e-6, hi = 1e6;
    auto radius = [&](double a) { return blowup_radius(nl, a, N, h_base).value; };
    while (radius(lo) < R && lo > 1e-290) lo *= 1e-3;
    while (radius(hi) > R && hi < 1e290) hi *= 1e3;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (radius(mid) > R)
            lo = mid;
        else
            hi = mid;
        if (hi / lo - 1.0 < 1e-10) break;
    }
    const double a = std::sqrt(lo * hi);
    if (std::abs(radius(a) - R) > 1e-6 * R)
        throw RadialError("solve_ball_blowup: bisection failed to match the radius");

    RadialProfile prof;
    prof.kind = ProfileKind::BallBlowup;
    prof.a_or_R = R;
    prof.N = N;
    prof.blowup_radius = R;
    const double r_edge = R * (1.0 - 1e-6);
    auto tr = detail_rad::integrate_outward(nl, a, N, h_base, r_edge,
                                            std::numeric_limits<double>::infinity());
    prof.r = tr.r;
    prof.w = tr.w;
    prof.residual_norm = detail_rad::residual_sup(nl, prof.r, prof.w, N);
    return prof;
}

// Phi(r) through the zero-energy first integral Phi' = -sqrt(2 F(Phi)):
// r(Phi) = int_Phi^inf ds / sqrt(2 F(s)); the decaying branch is inverted by
// bisection + Newton in ln Phi.
inline double singular_profile_phi(const Nonlinearity& nl, double r) {
    if (!(r > 0.0)) throw RadialError("singular_profile_phi: r > 0 required");
    if (tail_integral_KO(nl).finite != Ternary::Finite)
        throw RadialError("singular_profile_phi: Keller-Osserman condition fails");
    const double ytop = std::log(nl.table_top());
    const double r_top = phi_radius_quadrature(nl, nl.table_top());
    if (r <= r_top)
        throw RadialError("singular_profile_phi: Phi(r) exceeds the representable range");
    // g(y) = r - r_of(e^y) is increasing in y
    auto g = [&](double y) { return r - phi_radius_quadrature(nl, std::exp(y)); };
    std::function<double(double)> dg = [&](double y) {
        const double phi = std::exp(y);
        return phi * std::exp(-0.5 * nl.lnF(phi) - 0.5 * std::log(2.0));
    };
    double ylo = std::log(1e-10);
    if (g(ylo) > 0.0) {
        // extend downward: profile has decayed below 1e-10
        while (g(ylo) > 0.0 && ylo > std::log(1e-290)) ylo -= 10.0;
    }
    const double y = solve_increasing(g, dg, ylo, ytop, 1e-12);
    return std::exp(y);
}

}  // namespace abslab
