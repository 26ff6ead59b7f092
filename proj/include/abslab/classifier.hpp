#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abslab/nonlinearity.hpp"
#include "abslab/numerics.hpp"

namespace abslab {

// Numerical decision of the improper-integral conditions on f and the k->inf
// regime they imply.  All tail integrals run on the dyadic ladder of
// tail_ladder(); see that header for the finite/infinite decision rule.

enum class ConditionName { A8, A10_J, A12_KO, KON_L, I1 };

inline const char* to_string(ConditionName c) {
    switch (c) {
        case ConditionName::A8: return "weak_singularity";
        case ConditionName::A10_J: return "tail_J";
        case ConditionName::A12_KO: return "keller_osserman";
        case ConditionName::KON_L: return "kon_L";
        case ConditionName::I1: return "dirac_admissibility";
    }
    return "?";
}

struct IntegralVerdict {
    ConditionName name = ConditionName::A10_J;
    Ternary finite = Ternary::Undecided;
    double value_if_finite = std::numeric_limits<double>::quiet_NaN();
    double tail_exponent_estimate = std::numeric_limits<double>::quiet_NaN();
    double confidence = 0.0;
    std::string note;
};

enum class Regime { BlowupEverywhere, FlowLimit, MinimalSingular, Undecided };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::BlowupEverywhere: return "blowup_everywhere";
        case Regime::FlowLimit: return "flow_limit";
        case Regime::MinimalSingular: return "minimal_singular";
        case Regime::Undecided: return "undecided";
    }
    return "?";
}

struct ClassificationReport {
    std::vector<IntegralVerdict> verdicts;
    Regime regime = Regime::Undecided;
    int dimension = 0;
    std::string warning;

    const IntegralVerdict* find(ConditionName c) const {
        for (const auto& v : verdicts)
            if (v.name == c) return &v;
        return nullptr;
    }
};

namespace detail_cl {

inline IntegralVerdict from_ladder(ConditionName name, const TailLadderResult& lr) {
    IntegralVerdict v;
    v.name = name;
    v.finite = lr.verdict;
    if (lr.verdict == Ternary::Finite) v.value_if_finite = lr.value;
    v.tail_exponent_estimate = lr.tail_exponent;
    v.confidence = lr.confidence;
    v.note = lr.note;
    return v;
}

// Integrands in the ladder variable y = ln s, formed without the cancellation
// that y - ln f(e^y) suffers for huge y.  Expression-kind f values beyond the
// cached range are clamped to the top node; f is nondecreasing, so this only
// perturbs rungs far below the convergence cutoff.
inline double j_integrand(const Nonlinearity& nl, double y) {
    const double ytop = std::log(nl.table_top());
    if (y <= ytop) return std::exp(nl.ln_s_over_f(y));
    return std::exp(y - nl.ln_f_of_exp(ytop));
}

inline double l_integrand(const Nonlinearity& nl, double y) {
    const double ytop = std::log(nl.table_top());
    if (y <= ytop) return std::exp(0.5 * nl.ln_s_over_f(y));
    return std::exp(0.5 * (y - nl.ln_f_of_exp(ytop)));
}

inline double ln_F_clamped(const Nonlinearity& nl, double y) {
    const double s = std::exp(std::min(y, std::log(nl.table_top())));
    return nl.lnF(s);
}

}  // namespace detail_cl

// (A10): int_1^inf ds/f(s)
inline IntegralVerdict tail_integral_J(const Nonlinearity& nl) {
    auto g = [&nl](double y) { return detail_cl::j_integrand(nl, y); };
    return detail_cl::from_ladder(ConditionName::A10_J, tail_ladder(g, 0.0));
}

// (A12) F-form: int_1^inf ds/sqrt(F(s))
inline IntegralVerdict keller_osserman_F(const Nonlinearity& nl) {
    auto g = [&nl](double y) { return std::exp(y - 0.5 * detail_cl::ln_F_clamped(nl, y)); };
    return detail_cl::from_ladder(ConditionName::A12_KO, tail_ladder(g, 0.0));
}

// L-form: int_1^inf ds/sqrt(s f(s))
inline IntegralVerdict kon_L(const Nonlinearity& nl) {
    auto g = [&nl](double y) { return detail_cl::l_integrand(nl, y); };
    return detail_cl::from_ladder(ConditionName::KON_L, tail_ladder(g, 0.0));
}

// (A12) decided by both routes; when f is convex the two must agree, otherwise
// the F-form wins and a warning is recorded in the note.
inline IntegralVerdict tail_integral_KO(const Nonlinearity& nl) {
    IntegralVerdict vf = keller_osserman_F(nl);
    IntegralVerdict vl = kon_L(nl);
    if (vf.finite != Ternary::Undecided && vl.finite != Ternary::Undecided &&
        vf.finite != vl.finite) {
        vf.note += "; warning: L-form disagrees (" + std::string(to_string(vl.finite)) + ")";
        vf.confidence *= 0.5;
    }
    return vf;
}

// (A8): int_1^inf s^{-2-2/N} f(s) ds
inline IntegralVerdict weak_singularity(const Nonlinearity& nl, int N) {
    if (N < 2) throw NumericError("weak_singularity: N >= 2 required");
    const double q = 2.0 / N;
    auto g = [&nl, q](double y) {
        // e^{-(1+2/N) y} f(e^y) = exp(ln h(e^y) - (2/N) y)
        const double ytop = std::log(nl.table_top());
        if (y <= ytop) return std::exp(nl.ln_h_of_exp(y) - q * y);
        return std::exp(nl.ln_f_of_exp(ytop) - (1.0 + q) * y);
    };
    return detail_cl::from_ladder(ConditionName::A8, tail_ladder(g, 0.0));
}

// f(r)/(r ln^alpha r) scanned over the top decade of [1e2, 1e12]
inline RatioProbe asymptotic_probe(const Nonlinearity& nl, double alpha) {
    return ratio_probe(nl, alpha);
}

// ---------------------------------------------------------------------------
// theta-type integrals: int_0^T h(A tau^{-N/2}) dtau.
// Ladder in z = ln(T/tau); divergence at tau -> 0 is the ladder's growth
// branch.  This is the integrability test behind (I1) and the theta_k
// machinery of the parabolic lower envelope.
// ---------------------------------------------------------------------------

struct ThetaIntegral {
    Ternary verdict = Ternary::Undecided;
    double value = std::numeric_limits<double>::quiet_NaN();
    double tail_exponent = std::numeric_limits<double>::quiet_NaN();
};

inline ThetaIntegral theta_integral(const Nonlinearity& nl, double A, int N, double T) {
    ThetaIntegral out;
    if (!(T > 0.0) || !(A > 0.0)) {
        out.verdict = Ternary::Finite;
        out.value = 0.0;
        return out;
    }
    const double lnA = std::log(A);
    const double lnT = std::log(T);
    // integrand in z: T e^{-z} h(A (T e^{-z})^{-N/2})
    auto g = [&nl, lnA, lnT, N, T](double z) {
        const double ln_r = lnA - 0.5 * N * (lnT - z);
        double ln_h;
        if (nl.has_log_eval() || ln_r < 700.0) {
            ln_h = nl.ln_h_of_exp(ln_r);
        } else {
            return std::numeric_limits<double>::infinity();
        }
        return std::exp(std::log(T) - z + ln_h);
    };
    TailLadderOptions opt;
    opt.max_rungs = 700;
    auto lr = tail_ladder(g, 0.0, opt);
    out.verdict = lr.verdict;
    out.tail_exponent = lr.tail_exponent;
    if (lr.verdict == Ternary::Finite) out.value = lr.value;
    return out;
}

// ---------------------------------------------------------------------------
// (I1): I = int_0^1 int_{B_R} f(k E(x,t)) dx dt, radially reduced by
// rho = r / sqrt(t) and evaluated with the inner time integral flattened in
// log tau; the split at rho = 1 mirrors the admissibility estimate.
// ---------------------------------------------------------------------------

inline IntegralVerdict dirac_admissibility(const Nonlinearity& nl, int N, double k, double R) {
    if (!(k > 0.0) || !(R > 0.0)) throw NumericError("dirac_admissibility: k, R > 0 required");
    IntegralVerdict v;
    v.name = ConditionName::I1;
    const double Cstar = std::pow(4.0 * kPi, -0.5 * N);
    const double A0 = k * Cstar;

    // integrability of the inner time integral decides the verdict
    ThetaIntegral probe = theta_integral(nl, A0, N, 1.0);
    v.finite = probe.verdict;
    v.tail_exponent_estimate = probe.tail_exponent;
    v.confidence = probe.verdict == Ternary::Undecided ? 0.0 : 0.9;
    if (probe.verdict != Ternary::Finite) {
        v.note = "inner time integral fails integrability at t->0";
        return v;
    }

    const double omega = sphere_area(N);
    // rho <= 1 block
    auto inner1 = [&](double rho) {
        const double damp = std::exp(-0.25 * rho * rho);
        const double T = std::min(1.0, R * R / std::max(rho * rho, 1e-300));
        ThetaIntegral th = theta_integral(nl, A0 * damp, N, T);
        return std::pow(rho, N - 1) * damp * th.value;
    };
    auto q1 = integrate(inner1, 0.0, 1.0, 1e-8);
    // rho > 1 block, t capped by the domain truncation R^2/rho^2
    auto inner2 = [&](double rho) {
        const double damp = std::exp(-0.25 * rho * rho);
        if (damp == 0.0) return 0.0;
        const double T = std::min(1.0, R * R / (rho * rho));
        ThetaIntegral th = theta_integral(nl, A0 * damp, N, T);
        return std::pow(rho, N - 1) * damp * th.value;
    };
    const double rho_max = std::sqrt(4.0 * 705.0);
    auto q2 = integrate(inner2, 1.0, rho_max, 1e-8);

    v.value_if_finite = k * Cstar * omega * (q1.value + q2.value);
    v.note = "I1 via the log-flattened time integral";
    return v;
}

// ---------------------------------------------------------------------------
// Regime routing
// ---------------------------------------------------------------------------

inline ClassificationReport classify(const Nonlinearity& nl, int N) {
    ClassificationReport rep;
    rep.dimension = N;
    IntegralVerdict a8 = weak_singularity(nl, N);
    IntegralVerdict j = tail_integral_J(nl);
    IntegralVerdict ko = tail_integral_KO(nl);
    IntegralVerdict l = kon_L(nl);
    rep.verdicts = {a8, j, ko, l};

    if (j.finite == Ternary::Infinite) {
        rep.regime = Regime::BlowupEverywhere;
    } else if (j.finite == Ternary::Finite && ko.finite == Ternary::Infinite) {
        rep.regime = Regime::FlowLimit;
    } else if (ko.finite == Ternary::Finite && a8.finite == Ternary::Finite) {
        rep.regime = Regime::MinimalSingular;
    } else {
        rep.regime = Regime::Undecided;
        if (ko.finite == Ternary::Finite && a8.finite == Ternary::Infinite)
            rep.warning = "Keller-Osserman holds but the weak singularity condition fails";
    }
    return rep;
}

}  // namespace abslab
