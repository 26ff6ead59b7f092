#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace abslab {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

// ---------------------------------------------------------------------------
// Gauss7/Kronrod15 adaptive quadrature
// ---------------------------------------------------------------------------

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
    long evals = 0;
};

namespace detail {
// abscissa, Gauss-7 weight, Kronrod-15 weight
inline constexpr double kGK15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529}};
}  // namespace detail

template <class F>
inline QuadResult gk15(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double y0 = f(mid);
    double g7 = detail::kGK15[0][1] * y0;
    double k15 = detail::kGK15[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * detail::kGK15[i][0];
        const double yi = f(mid + dx) + f(mid - dx);
        g7 += detail::kGK15[i][1] * yi;
        k15 += detail::kGK15[i][2] * yi;
    }
    g7 *= half;
    k15 *= half;
    QuadResult r;
    r.value = k15;
    r.error = std::pow(200.0 * std::abs(g7 - k15), 1.5);
    r.evals = 15;
    r.converged = std::isfinite(k15);
    return r;
}

// Adaptive bisection on an interval stack. Throws nothing; inspect `converged`.
template <class F>
inline QuadResult integrate(F&& f, double a, double b, double rtol = 1e-11,
                            double atol = 0.0, int max_intervals = 8000) {
    QuadResult total;
    if (!(b > a)) {
        total.converged = true;
        return total;
    }
    struct Seg {
        double a, b, value, error;
    };
    std::vector<Seg> stack;
    auto first = gk15(f, a, b);
    total.evals += first.evals;
    if (!std::isfinite(first.value)) {
        total.value = first.value;
        return total;
    }
    stack.push_back({a, b, first.value, first.error});
    double value_estimate = first.value;
    KahanSum done;
    double done_err = 0.0;
    int splits = 0;
    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        const double tol_total = std::max(atol, rtol * std::abs(value_estimate));
        const double budget = tol_total * (s.b - s.a) / (b - a);
        if (s.error <= budget || s.error <= 1e-16 * std::abs(s.value) ||
            (s.b - s.a) < 5e-15 * (std::abs(s.a) + std::abs(s.b) + 1e-300)) {
            done.add(s.value);
            done_err += s.error;
            continue;
        }
        if (++splits > max_intervals) {
            done.add(s.value);
            done_err += s.error;
            for (const Seg& rest : stack) {
                done.add(rest.value);
                done_err += rest.error;
            }
            total.value = done.sum;
            total.error = done_err;
            total.converged = false;
            return total;
        }
        const double m = 0.5 * (s.a + s.b);
        auto left = gk15(f, s.a, m);
        auto right = gk15(f, m, s.b);
        total.evals += left.evals + right.evals;
        if (!std::isfinite(left.value) || !std::isfinite(right.value)) {
            total.value = std::numeric_limits<double>::quiet_NaN();
            total.converged = false;
            return total;
        }
        value_estimate += left.value + right.value - s.value;
        stack.push_back({s.a, m, left.value, left.error});
        stack.push_back({m, s.b, right.value, right.error});
    }
    total.value = done.sum;
    total.error = done_err;
    total.converged = done_err <= std::max(atol, rtol * std::abs(done.sum)) * 50.0 + 1e-300;
    return total;
}

// ---------------------------------------------------------------------------
// Improper-integral ladder over [y0, infinity)
//
// The integrand is sampled on rungs [y0 + m*dy, y0 + (m+1)*dy].  With
// dy = ln 2 and y = ln s this is the dyadic truncation ladder on s in
// [s0 * 2^m, s0 * 2^(m+1)].  Classification:
//   - increments growing            -> infinite
//   - geometric decay (ratio < 0.9) -> finite, geometric tail
//   - power decay in the rung index -> finite iff exponent > 1, with the
//     boundary band +-0.05 reported undecided
// ---------------------------------------------------------------------------

enum class Ternary { Finite, Infinite, Undecided };

inline const char* to_string(Ternary t) {
    switch (t) {
        case Ternary::Finite: return "finite";
        case Ternary::Infinite: return "infinite";
        case Ternary::Undecided: return "undecided";
    }
    return "?";
}

struct TailLadderResult {
    Ternary verdict = Ternary::Undecided;
    double value = std::numeric_limits<double>::quiet_NaN();  // when finite
    double tail_exponent = std::numeric_limits<double>::quiet_NaN();
    double confidence = 0.0;
    int rungs_used = 0;
    std::string note;
};

struct TailLadderOptions {
    double dy = 0.6931471805599453;  // ln 2
    int min_rungs = 12;
    int max_rungs = 512;
    double geometric_ratio = 0.9;    // ratio below this: geometric tail
    double exponent_margin = 0.05;   // undecided band around the critical slope 1
    double growth_ratio = 1.02;      // increments growing: divergent
    double quad_rtol = 1e-12;
    double converge_rel = 1e-16;     // stop when a rung adds less than this
};

// g: integrand in the ladder variable y (already includes any Jacobian).
inline TailLadderResult tail_ladder(const std::function<double(double)>& g, double y0,
                                    const TailLadderOptions& opt = {}) {
    TailLadderResult res;
    std::vector<double> inc;
    KahanSum partial;
    int m = 0;
    for (; m < opt.max_rungs; ++m) {
        const double a = y0 + m * opt.dy;
        const double b = a + opt.dy;
        auto q = integrate(g, a, b, opt.quad_rtol, 0.0, 2000);
        if (!std::isfinite(q.value) || q.value > 1e290) {
            // integrand overflow: increments exploded before the cap
            res.verdict = Ternary::Infinite;
            res.rungs_used = m;
            res.confidence = 1.0;
            res.note = "integrand overflow during ladder";
            return res;
        }
        if (q.value < 0.0) q.value = std::max(q.value, 0.0);  // guard tiny negatives
        inc.push_back(q.value);
        partial.add(q.value);
        if (m >= opt.min_rungs) {
            // early exit when the tail is clearly dead
            if (q.value <= opt.converge_rel * std::max(partial.sum, 1e-300) &&
                inc[m - 1] <= opt.converge_rel * std::max(partial.sum, 1e-300)) {
                ++m;
                break;
            }
            // early exit when increments are clearly exploding
            if (m >= 6) {
                bool exploding = true;
                for (int j = m - 4; j < m; ++j)
                    if (!(inc[j + 1] > inc[j] * 2.0)) exploding = false;
                if (exploding && partial.sum > 1e200) {
                    res.verdict = Ternary::Infinite;
                    res.rungs_used = m + 1;
                    res.confidence = 1.0;
                    res.note = "increments exploding";
                    return res;
                }
            }
        }
    }
    res.rungs_used = m;
    const int n = static_cast<int>(inc.size());
    if (n < 6) {
        res.note = "too few rungs";
        return res;
    }

    // trailing window statistics
    const int w = std::min(10, n / 2);
    double ratio_geo = 0.0;
    int ratio_cnt = 0;
    bool growing = true;
    for (int j = n - w; j + 1 < n; ++j) {
        if (inc[j] > 0.0 && inc[j + 1] > 0.0) {
            ratio_geo += std::log(inc[j + 1] / inc[j]);
            ++ratio_cnt;
        }
        if (!(inc[j + 1] >= inc[j] * opt.growth_ratio)) growing = false;
    }
    const double mean_ratio = ratio_cnt > 0 ? std::exp(ratio_geo / ratio_cnt) : 0.0;

    const double total_so_far = partial.sum;
    const double last = inc[n - 1];

    if (last <= opt.converge_rel * std::max(total_so_far, 1e-300)) {
        res.verdict = Ternary::Finite;
        res.value = total_so_far;
        res.tail_exponent = std::numeric_limits<double>::infinity();
        res.confidence = 1.0;
        res.note = "tail exhausted";
        return res;
    }
    if (growing && ratio_cnt > 0) {
        res.verdict = Ternary::Infinite;
        res.confidence = std::min(1.0, (mean_ratio - 1.0) * 10.0 + 0.5);
        res.note = "increments growing";
        return res;
    }
    if (mean_ratio > 0.0 && mean_ratio < opt.geometric_ratio) {
        res.verdict = Ternary::Finite;
        res.value = total_so_far + last * mean_ratio / (1.0 - mean_ratio);
        res.tail_exponent = std::numeric_limits<double>::infinity();
        res.confidence = 1.0;
        res.note = "geometric tail";
        return res;
    }

    // power-law window fit: ln inc = c - p ln(y) over the last rungs, with y
    // the ladder variable measured from the origin of the power scale
    const int wfit = std::min(std::max(8, n / 4), n - 2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int j = n - wfit; j < n; ++j) {
        if (inc[j] <= 0.0) continue;
        const double yv_var = y0 + (j + 1) * opt.dy;
        if (!(yv_var > 0.0)) continue;
        const double x = std::log(yv_var);
        const double yv = std::log(inc[j]);
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
        ++cnt;
    }
    if (cnt < 4) {
        res.note = "increments vanish irregularly";
        return res;
    }
    const double denom = cnt * sxx - sx * sx;
    const double slope = (cnt * sxy - sx * sy) / denom;
    const double p = -slope;
    res.tail_exponent = p;
    if (p > 1.0 + opt.exponent_margin) {
        res.verdict = Ternary::Finite;
        // int_{y_end}^inf c y^-p dy  ~  (inc_last/dy) * y_end / (p - 1)
        const double y_end = y0 + n * opt.dy;
        res.value = total_so_far + (last / opt.dy) * y_end / (p - 1.0);
        res.confidence = std::min(1.0, (p - 1.0 - opt.exponent_margin) * 4.0 + 0.3);
        res.note = "power tail";
    } else if (p < 1.0 - opt.exponent_margin) {
        res.verdict = Ternary::Infinite;
        res.confidence = std::min(1.0, (1.0 - opt.exponent_margin - p) * 4.0 + 0.3);
        res.note = "sub-critical decay";
    } else {
        res.verdict = Ternary::Undecided;
        res.confidence = 0.0;
        res.note = "tail exponent within the critical band";
    }
    return res;
}

// ---------------------------------------------------------------------------
// Scalar root finding on monotone increasing functions
// ---------------------------------------------------------------------------

// Safeguarded Newton/bisection for increasing g with g(lo) <= 0 <= g(hi).
// Pass an empty `dg` to get secant steps.
inline double solve_increasing(const std::function<double(double)>& g,
                               const std::function<double(double)>& dg, double lo, double hi,
                               double xrtol = 1e-14, int max_iter = 200) {
    double glo = g(lo);
    double ghi = g(hi);
    if (glo > 0.0 || ghi < 0.0) throw NumericError("solve_increasing: root not bracketed");
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    double x = 0.5 * (lo + hi);
    double gx = g(x);
    double x_prev = hi, g_prev = ghi;
    for (int it = 0; it < max_iter; ++it) {
        if (gx == 0.0) return x;
        if (gx > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        double deriv = dg ? dg(x) : (gx - g_prev) / (x - x_prev);
        x_prev = x;
        g_prev = gx;
        double step;
        if (std::isfinite(deriv) && deriv > 0.0) {
            step = x - gx / deriv;
        } else {
            step = 0.5 * (lo + hi);
        }
        if (!(step > lo && step < hi)) step = 0.5 * (lo + hi);
        if (std::abs(step - x) <= xrtol * (std::abs(x) + 1e-300)) return step;
        x = step;
        gx = g(x);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Monotone piecewise-cubic interpolation (Fritsch–Carlson)
// ---------------------------------------------------------------------------

class MonotoneInterp {
public:
    MonotoneInterp() = default;
    MonotoneInterp(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw NumericError("MonotoneInterp: bad input");
        d_.resize(n);
        std::vector<double> slope(n - 1);
        for (size_t i = 0; i + 1 < n; ++i) slope[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        d_[0] = slope[0];
        d_[n - 1] = slope[n - 2];
        for (size_t i = 1; i + 1 < n; ++i) {
            if (slope[i - 1] * slope[i] <= 0.0) {
                d_[i] = 0.0;
            } else {
                const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
                d_[i] = 3.0 * (h0 + h1) /
                        ((2.0 * h1 + h0) / slope[i - 1] + (h1 + 2.0 * h0) / slope[i]);
            }
        }
    }

    double operator()(double xq) const {
        const size_t n = x_.size();
        if (xq <= x_.front()) return y_.front() + d_.front() * (xq - x_.front());
        if (xq >= x_.back()) return y_.back() + d_.back() * (xq - x_.back());
        size_t i = std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin() - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = (xq - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return y_[i] * (2 * t3 - 3 * t2 + 1) + h * d_[i] * (t3 - 2 * t2 + t) +
               y_[i + 1] * (-2 * t3 + 3 * t2) + h * d_[i + 1] * (t3 - t2);
    }

    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }

private:
    std::vector<double> x_, y_, d_;
};

// ---------------------------------------------------------------------------
// Misc small helpers
// ---------------------------------------------------------------------------

inline double log_add_exp(double la, double lb) {
    if (la == -std::numeric_limits<double>::infinity()) return lb;
    if (lb == -std::numeric_limits<double>::infinity()) return la;
    const double m = std::max(la, lb);
    return m + std::log1p(std::exp(std::min(la, lb) - m));
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double max_residual = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 2 || y.size() != n) throw NumericError("fit_line: bad input");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    const double denom = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    for (size_t i = 0; i < n; ++i)
        f.max_residual = std::max(f.max_residual, std::abs(y[i] - f.intercept - f.slope * x[i]));
    return f;
}

// Aitken delta-squared extrapolation of a monotone sequence tail; returns the
// last value when the update is degenerate.  The extrapolated jump is capped
// at `max_gain` times the last increment.
inline double aitken_limit(const std::vector<double>& u, double max_gain = 50.0) {
    const size_t n = u.size();
    if (n < 3) return n ? u.back() : std::numeric_limits<double>::quiet_NaN();
    const double d1 = u[n - 2] - u[n - 3];
    const double d2 = u[n - 1] - u[n - 2];
    if (!(d1 != 0.0) || !std::isfinite(d1) || !std::isfinite(d2)) return u.back();
    const double rho = d2 / d1;
    if (rho <= 0.0 || rho >= 1.0) return u.back();
    const double gain = std::min(rho / (1.0 - rho), max_gain);
    return u.back() + d2 * gain;
}

// Fornberg finite-difference weights: derivative of order m at x0 from the
// given nodes (B. Fornberg, Math. Comp. 51, 1988).
inline std::vector<double> fd_weights(const std::vector<double>& nodes, double x0, int m) {
    const int n = static_cast<int>(nodes.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

inline double sphere_area(int N) {
    // omega_N = 2 pi^{N/2} / Gamma(N/2)
    if (N == 1) return 2.0;
    if (N == 2) return 2.0 * kPi;
    if (N == 3) return 4.0 * kPi;
    return 2.0 * std::pow(kPi, 0.5 * N) / std::tgamma(0.5 * N);
}

}  // namespace abslab
