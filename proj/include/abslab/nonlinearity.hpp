#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abslab/expr.hpp"
#include "abslab/numerics.hpp"

namespace abslab {

enum class NlKind { Power, LogAbsorption, Expression };

struct NlError : std::runtime_error {
    explicit NlError(const std::string& msg) : std::runtime_error(msg) {}
};

// Absorption term f: continuous, nondecreasing, f(0) = 0, positive for u > 0.
// Immutable after construction; the antiderivative table is built eagerly, so
// values can be shared across threads freely.
class Nonlinearity {
public:
    static Nonlinearity power(double beta) {
        if (!(beta > 0.0)) throw NlError("power family needs beta > 0");
        return Nonlinearity(std::make_shared<Impl>(NlKind::Power, beta, nullptr,
                                                   "power(" + fmt(beta) + ")"));
    }

    static Nonlinearity log_absorption(double alpha) {
        if (!(alpha > 0.0)) throw NlError("log family needs alpha > 0");
        return Nonlinearity(std::make_shared<Impl>(NlKind::LogAbsorption, alpha, nullptr,
                                                   "log(" + fmt(alpha) + ")"));
    }

    static Nonlinearity expression(expr::NodePtr ast, std::string text) {
        return Nonlinearity(
            std::make_shared<Impl>(NlKind::Expression, 0.0, std::move(ast), std::move(text)));
    }

    NlKind kind() const { return impl_->kind; }
    double param() const { return impl_->param; }
    const std::string& name() const { return impl_->name; }
    const expr::Node* ast() const { return impl_->ast.get(); }

    double f(double u) const {
        if (u <= 0.0) return 0.0;
        switch (impl_->kind) {
            case NlKind::Power: return std::pow(u, 1.0 + impl_->param);
            case NlKind::LogAbsorption:
                return u * std::pow(std::log1p(u), impl_->param);
            case NlKind::Expression: return expr::eval(*impl_->ast, u);
        }
        return 0.0;
    }

    // h(u) = f(u)/u
    double h(double u) const {
        if (u <= 0.0) return 0.0;
        switch (impl_->kind) {
            case NlKind::Power: return std::pow(u, impl_->param);
            case NlKind::LogAbsorption: return std::pow(std::log1p(u), impl_->param);
            case NlKind::Expression: return expr::eval(*impl_->ast, u) / u;
        }
        return 0.0;
    }

    bool has_fprime() const { return impl_->kind != NlKind::Expression; }

    double fprime(double u) const {
        if (u <= 0.0) u = 0.0;
        switch (impl_->kind) {
            case NlKind::Power: return (1.0 + impl_->param) * std::pow(u, impl_->param);
            case NlKind::LogAbsorption: {
                const double l = std::log1p(u);
                if (l == 0.0) return 0.0;
                return std::pow(l, impl_->param) +
                       impl_->param * u * std::pow(l, impl_->param - 1.0) / (1.0 + u);
            }
            case NlKind::Expression: {
                // central difference; callers that need guaranteed monotone
                // solves use the derivative-free path instead
                const double step = 1e-6 * (std::abs(u) + 1e-6);
                return (f(u + step) - f(std::max(u - step, 0.0))) / (u - std::max(u - step, 0.0) + step);
            }
        }
        return 0.0;
    }

    // Families evaluate ln f(e^y) without overflow for y up to ~690.
    bool has_log_eval() const { return impl_->kind != NlKind::Expression; }

    double ln_f_of_exp(double y) const {
        switch (impl_->kind) {
            case NlKind::Power: return (1.0 + impl_->param) * y;
            case NlKind::LogAbsorption: return y + impl_->param * std::log(softplus(y));
            case NlKind::Expression: {
                const double s = std::exp(y);
                const double v = f(s);
                return std::log(v);
            }
        }
        return -std::numeric_limits<double>::infinity();
    }

    // ln F(e^y) valid for arbitrary y.  Families switch to the asymptotic
    // expansion beyond the cached range: for f = u ln^a(u+1),
    //   F(s) = (s^2/2) ln^a(s) [1 - (a/2)/ln s + (a(a-1)/4)/ln^2 s - ...].
    double ln_F_of_exp(double y) const {
        const double ytop = std::log(table_top());
        if (y <= ytop) return lnF(std::exp(y));
        switch (impl_->kind) {
            case NlKind::Power:
                return (2.0 + impl_->param) * y - std::log(2.0 + impl_->param);
            case NlKind::LogAbsorption: {
                const double a = impl_->param;
                double series = 1.0, term = 1.0;
                for (int kk = 1; kk <= 10; ++kk) {
                    term *= -(a - (kk - 1)) / (2.0 * y);
                    series += term;
                    if (std::abs(term) < 1e-16) break;
                }
                return 2.0 * y - std::log(2.0) + a * std::log(y) + std::log(series);
            }
            case NlKind::Expression:
                throw NumericError("ln_F_of_exp: expression antiderivative range exhausted");
        }
        return 0.0;
    }

    // ln h(e^y) and ln(e^y / f(e^y)), formed without the cancellation that
    // direct subtraction suffers for huge y
    double ln_h_of_exp(double y) const {
        switch (impl_->kind) {
            case NlKind::Power: return impl_->param * y;
            case NlKind::LogAbsorption: return impl_->param * std::log(softplus(y));
            case NlKind::Expression: return ln_f_of_exp(y) - y;
        }
        return -std::numeric_limits<double>::infinity();
    }

    double ln_s_over_f(double y) const { return -ln_h_of_exp(y); }

    // F(s) = int_0^s f.  Cached cumulative table plus a local refinement from
    // the nearest node below s; the positive-segment accumulation keeps the
    // relative error at quadrature level.
    double F(double s) const {
        const double lf = lnF(s);
        if (lf > 708.0) throw NumericError("F(s) exceeds the representable range");
        return std::exp(lf);
    }

    double lnF(double s) const {
        if (s <= 0.0) return -std::numeric_limits<double>::infinity();
        const auto& T = impl_->table;
        if (s <= T.s.front()) {
            auto q = integrate([this](double x) { return f(x); }, 0.0, s, 1e-12);
            return std::log(q.value);
        }
        if (s >= T.s.back()) {
            if (s > T.s.back() * (1.0 + 1e-12))
                throw NumericError("F(s): argument beyond the cached range of " + impl_->name);
            return T.lnF.back();
        }
        size_t j = std::upper_bound(T.s.begin(), T.s.end(), s) - T.s.begin() - 1;
        const double seg = ln_segment(std::log(T.s[j]), std::log(s));
        return log_add_exp(T.lnF[j], seg);
    }

    // Largest s for which f and F are evaluable (1e300 for the families).
    double table_top() const { return impl_->table.s.back(); }

    bool operator==(const Nonlinearity& o) const { return impl_ == o.impl_; }

private:
    static double softplus(double y) { return y > 40.0 ? y : std::log1p(std::exp(y)); }

    static std::string fmt(double v) {
        std::ostringstream os;
        os.precision(10);
        os << v;
        return os.str();
    }

    struct FTable {
        std::vector<double> s;    // geometric nodes
        std::vector<double> lnF;  // ln F at nodes
    };

    struct Impl {
        NlKind kind;
        double param;
        expr::NodePtr ast;
        std::string name;
        FTable table;

        Impl(NlKind k, double p, expr::NodePtr a, std::string n)
            : kind(k), param(p), ast(std::move(a)), name(std::move(n)) {
            build_table();
        }

        double feval(double u) const {
            if (u <= 0.0) return 0.0;
            switch (kind) {
                case NlKind::Power: return std::pow(u, 1.0 + param);
                case NlKind::LogAbsorption: return u * std::pow(std::log1p(u), param);
                case NlKind::Expression: return expr::eval(*ast, u);
            }
            return 0.0;
        }

        double lam(double y) const {  // ln of the y-space integrand e^y f(e^y)
            switch (kind) {
                case NlKind::Power: return y + (1.0 + param) * y;
                case NlKind::LogAbsorption: return 2.0 * y + param * std::log(softplus(y));
                case NlKind::Expression: {
                    const double v = feval(std::exp(y));
                    return y + std::log(v);
                }
            }
            return -std::numeric_limits<double>::infinity();
        }

        // ln of int_{ya}^{yb} e^{lam(y)} dy by scaled GK15 panels
        double ln_seg(double ya, double yb) const {
            const int panels = std::max(1, static_cast<int>(std::ceil((yb - ya) / 0.4)));
            double acc = -std::numeric_limits<double>::infinity();
            for (int p = 0; p < panels; ++p) {
                const double a = ya + (yb - ya) * p / panels;
                const double b = ya + (yb - ya) * (p + 1) / panels;
                const double m = std::max(lam(a), std::max(lam(0.5 * (a + b)), lam(b)));
                if (m == -std::numeric_limits<double>::infinity()) continue;
                auto q = integrate([this, m](double y) { return std::exp(lam(y) - m); }, a, b,
                                   1e-12);
                if (q.value > 0.0) acc = log_add_exp(acc, m + std::log(q.value));
            }
            return acc;
        }

        void build_table() {
            double s_top = 1e300;
            if (kind == NlKind::Expression) {
                // find the largest power of ten where f evaluates finite
                s_top = 1e300;
                while (s_top > 1e12) {
                    double v;
                    try {
                        v = feval(s_top);
                    } catch (const expr::EvalError&) {
                        v = std::numeric_limits<double>::infinity();
                    }
                    if (std::isfinite(v)) break;
                    s_top /= 1e10;
                }
            }
            const double s_lo = 1e-12;
            const int n = 640;
            table.s.resize(n);
            table.lnF.resize(n);
            const double l0 = std::log(s_lo), l1 = std::log(s_top);
            for (int i = 0; i < n; ++i) table.s[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
            auto q0 = integrate([this](double x) { return feval(x); }, 0.0, s_lo, 1e-12);
            double acc = q0.value > 0.0 ? std::log(q0.value) : -std::numeric_limits<double>::infinity();
            table.lnF[0] = acc;
            int filled = 1;
            for (int i = 1; i < n; ++i) {
                double seg;
                try {
                    seg = ln_seg(std::log(table.s[i - 1]), std::log(table.s[i]));
                } catch (const expr::EvalError&) {
                    break;
                }
                if (!std::isfinite(seg) && seg > 0.0) break;  // overflowed segment
                acc = log_add_exp(acc, seg);
                if (!std::isfinite(acc)) break;
                table.lnF[i] = acc;
                filled = i + 1;
            }
            table.s.resize(filled);
            table.lnF.resize(filled);
        }
    };

    explicit Nonlinearity(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

    double ln_segment(double ya, double yb) const { return impl_->ln_seg(ya, yb); }

    std::shared_ptr<const Impl> impl_;
};

// ---------------------------------------------------------------------------
// Validation and parsing
// ---------------------------------------------------------------------------

namespace detail_nl {

// Matches u^c  ->  Power(c-1), and u*ln(u+1)^a (either order) -> Log(a).
inline std::optional<Nonlinearity> recognize_family(const expr::Node& n) {
    using expr::Op;
    auto is_var = [](const expr::Node& x) { return x.op == Op::Var; };
    auto is_ln_u1 = [&](const expr::Node& x) {
        if (x.op != Op::Ln) return false;
        const expr::Node& a = *x.lhs;
        return a.op == Op::Add &&
               ((a.lhs->op == Op::Var && a.rhs->op == Op::Const && a.rhs->value == 1.0) ||
                (a.rhs->op == Op::Var && a.lhs->op == Op::Const && a.lhs->value == 1.0));
    };
    if (n.op == Op::Pow && is_var(*n.lhs) && n.rhs->op == Op::Const && n.rhs->value > 1.0)
        return Nonlinearity::power(n.rhs->value - 1.0);
    if (n.op == Op::Mul) {
        const expr::Node* var = nullptr;
        const expr::Node* other = nullptr;
        if (is_var(*n.lhs)) {
            var = n.lhs.get();
            other = n.rhs.get();
        } else if (is_var(*n.rhs)) {
            var = n.rhs.get();
            other = n.lhs.get();
        }
        if (var && other) {
            if (is_ln_u1(*other)) return Nonlinearity::log_absorption(1.0);
            if (other->op == Op::Pow && is_ln_u1(*other->lhs) && other->rhs->op == Op::Const &&
                other->rhs->value > 0.0)
                return Nonlinearity::log_absorption(other->rhs->value);
        }
    }
    return std::nullopt;
}

inline void validate_probe_grid(const std::function<double(double)>& fe) {
    double f0;
    try {
        f0 = fe(0.0);
    } catch (const expr::EvalError& e) {
        throw NlError(std::string("f(0) not evaluable: ") + e.what());
    }
    double f1;
    try {
        f1 = fe(1.0);
    } catch (const expr::EvalError& e) {
        throw NlError(std::string("f(1) not evaluable: ") + e.what());
    }
    const double scale = 1.0 + std::abs(f1);
    if (!(std::abs(f0) <= 1e-9 * scale))
        throw NlError("domain error: f(0) = " + std::to_string(f0) + " (must vanish)");
    double prev = 0.0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const double s = std::pow(10.0, -6.0 + 18.0 * i / (n - 1));
        double v;
        try {
            v = fe(s);
        } catch (const expr::EvalError& e) {
            throw NlError(std::string("domain error at u=") + std::to_string(s) + ": " + e.what());
        }
        if (s >= 10.0 && std::isinf(v)) break;  // fast growth overflowing is tolerated
        if (!(v > 0.0) || !std::isfinite(v))
            throw NlError("domain error: f not positive/finite at u=" + std::to_string(s));
        if (v < prev * (1.0 - 1e-9))
            throw NlError("domain error: f decreasing near u=" + std::to_string(s));
        prev = v;
    }
}

// shorthand families: "power(BETA)" / "log(ALPHA)"
inline std::optional<Nonlinearity> parse_shorthand(const std::string& text) {
    auto try_one = [&](const std::string& head) -> std::optional<double> {
        size_t i = 0;
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (text.compare(i, head.size(), head) != 0) return std::nullopt;
        i += head.size();
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size() || text[i] != '(') return std::nullopt;
        const size_t close = text.find(')', i);
        if (close == std::string::npos) return std::nullopt;
        size_t tail = close + 1;
        while (tail < text.size() && std::isspace(static_cast<unsigned char>(text[tail]))) ++tail;
        if (tail != text.size()) return std::nullopt;
        try {
            return std::stod(text.substr(i + 1, close - i - 1));
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    if (auto b = try_one("power")) return Nonlinearity::power(*b);
    if (auto a = try_one("log")) return Nonlinearity::log_absorption(*a);
    return std::nullopt;
}

}  // namespace detail_nl

inline Nonlinearity parse_nonlinearity(const std::string& text) {
    if (text.size() > 4096) throw NlError("expression too long");
    if (auto family = detail_nl::parse_shorthand(text)) return *family;
    expr::NodePtr ast = expr::parse(text);  // throws ParseError with byte offset
    if (auto family = detail_nl::recognize_family(*ast)) return *family;
    const expr::Node& ref = *ast;
    detail_nl::validate_probe_grid([&ref](double u) { return expr::eval(ref, u); });
    return Nonlinearity::expression(std::move(ast), text);
}

// ---------------------------------------------------------------------------
// Structural conditions (C1)-(C3)
// ---------------------------------------------------------------------------

enum class Verdict { Holds, Fails, Undecided };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Holds: return "holds";
        case Verdict::Fails: return "fails";
        case Verdict::Undecided: return "undecided";
    }
    return "?";
}

struct Witness {
    double s = 0.0;
    double quantity = 0.0;
};

struct ConditionReport {
    Verdict verdict = Verdict::Undecided;
    std::vector<Witness> witnesses;
    std::string note;
};

struct StructuralReport {
    ConditionReport c1, c2, c3;
    std::optional<double> c3_beta;
};

struct RatioProbe {
    double liminf_estimate = 0.0;
    double limsup_estimate = 0.0;
};

// f(r) / (r ln^alpha r) on a geometric grid r in [1e2, 1e12]; running
// min/max over the last decade estimate the liminf/limsup.
inline RatioProbe ratio_probe(const Nonlinearity& nl, double alpha) {
    RatioProbe p;
    p.liminf_estimate = std::numeric_limits<double>::infinity();
    p.limsup_estimate = 0.0;
    const int n = 160;
    for (int i = 0; i < n; ++i) {
        const double r = std::pow(10.0, 2.0 + 10.0 * i / (n - 1));
        if (r < 1e11) continue;  // last decade only
        const double q = nl.h(r) / std::pow(std::log(r), alpha);
        p.liminf_estimate = std::min(p.liminf_estimate, q);
        p.limsup_estimate = std::max(p.limsup_estimate, q);
    }
    return p;
}

inline StructuralReport structural_conditions(const Nonlinearity& nl) {
    StructuralReport rep;

    // (C1): h increasing on the probe grid with the limit checks
    {
        const int n = 200;
        bool monotone = true;
        Witness bad{};
        double prev = -1.0;
        for (int i = 0; i < n; ++i) {
            const double s = std::pow(10.0, -6.0 + 18.0 * i / (n - 1));
            const double hv = nl.h(s);
            if (i > 0 && hv < prev * (1.0 - 1e-9)) {
                monotone = false;
                bad = {s, hv};
                break;
            }
            prev = hv;
        }
        const double h_lo = nl.h(1e-6);
        const double h_hi = nl.h(1e12);
        rep.c1.witnesses.push_back({1e-6, h_lo});
        rep.c1.witnesses.push_back({1e12, h_hi});
        if (!monotone) {
            rep.c1.verdict = Verdict::Fails;
            rep.c1.witnesses.push_back(bad);
            rep.c1.note = "h not increasing";
        } else if (h_lo < 1e-3 && h_hi > 1e3) {
            rep.c1.verdict = Verdict::Holds;
        } else if (h_lo > 1e-1 || h_hi < 1e1) {
            rep.c1.verdict = Verdict::Fails;
            rep.c1.note = "h limits wrong";
        } else {
            rep.c1.verdict = Verdict::Undecided;
            rep.c1.note = "h limits inconclusive on the probe grid";
        }
    }

    // (C2): nonnegative second differences at relative step 1e-4
    {
        bool convex = true;
        Witness bad{};
        double worst = 0.0;
        for (int i = 0; i < 120; ++i) {
            const double s = std::pow(10.0, -4.0 + 14.0 * i / 119.0);
            const double d = 1e-4 * s;
            const double second = nl.f(s + d) - 2.0 * nl.f(s) + nl.f(s - d);
            const double scale = std::abs(nl.f(s)) * 1e-11 + 1e-300;
            if (second < -scale && second < worst) {
                worst = second;
                convex = false;
                bad = {s, second};
            }
        }
        if (convex) {
            rep.c2.verdict = Verdict::Holds;
            rep.c2.witnesses.push_back({1.0, nl.f(1.0 + 1e-4) - 2 * nl.f(1.0) + nl.f(1.0 - 1e-4)});
        } else {
            rep.c2.verdict = Verdict::Fails;
            rep.c2.witnesses.push_back(bad);
            rep.c2.note = "negative second difference";
        }
    }

    // (C3): liminf hypothesis probed at alpha in {2.5, 3}; when it holds, the
    // conclusion needs some beta in (1,2] with a bounded limsup.  Finite-grid
    // heuristic: "vanishes" below 1e-3, "bounded" below 1e3; the largest
    // bounded beta among {1.25, 1.5, 2} is reported.
    {
        const RatioProbe p25 = ratio_probe(nl, 2.5);
        const RatioProbe p30 = ratio_probe(nl, 3.0);
        const bool hyp_clear = p25.liminf_estimate < 1e-3 && p30.liminf_estimate < 1e-3;
        const bool hyp_fails = p25.liminf_estimate > 10.0 || p30.liminf_estimate > 10.0 ||
                               (p25.liminf_estimate >= 1e-3 && p30.liminf_estimate >= 1e-3);
        std::optional<double> beta_found;
        for (double beta : {2.0, 1.5, 1.25}) {
            const RatioProbe pb = ratio_probe(nl, beta);
            if (pb.limsup_estimate < 1e3) {
                beta_found = beta;
                rep.c3.witnesses.push_back({beta, pb.limsup_estimate});
                break;
            }
        }
        rep.c3.witnesses.push_back({2.5, p25.liminf_estimate});
        if (hyp_clear) {
            if (beta_found) {
                rep.c3.verdict = Verdict::Holds;
                rep.c3_beta = beta_found;
            } else {
                rep.c3.verdict = Verdict::Fails;
                rep.c3.note = "liminf vanishes but no bounded beta probe";
            }
        } else if (hyp_fails) {
            rep.c3.verdict = Verdict::Holds;  // hypothesis fails, condition vacuous
            rep.c3.note = "hypothesis not satisfied (vacuously true)";
            rep.c3_beta = beta_found;
        } else {
            rep.c3.verdict = Verdict::Undecided;
            rep.c3.note = "liminf probes inconclusive";
        }
    }
    return rep;
}

}  // namespace abslab
