#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "abslab/radial.hpp"

using namespace abslab;

TEST_CASE("global radial profile: closed forms") {
    SECTION("f = u, N = 3: w = sinh(r)/r") {
        auto lin = parse_nonlinearity("u");
        auto prof = solve_global_radial(lin, 1.0, 3, 3.0);
        CHECK(prof.at(1.0) == Catch::Approx(std::sinh(1.0)).epsilon(1e-6));
        double worst = 0.0;
        for (size_t i = 1; i < prof.r.size(); ++i) {
            const double exact = std::sinh(prof.r[i]) / prof.r[i];
            worst = std::max(worst, std::abs(prof.w[i] - exact) / exact);
        }
        CHECK(worst < 1e-6);
    }
    SECTION("f = u, N = 2: w = I0(r)") {
        auto lin = parse_nonlinearity("u");
        auto prof = solve_global_radial(lin, 1.0, 2, 3.0);
        for (double r : {0.5, 1.0, 2.0, 2.9}) {
            CHECK(prof.at(r) == Catch::Approx(std::cyl_bessel_i(0.0, r)).epsilon(1e-6));
        }
    }
}

TEST_CASE("global radial profile: growth bounds") {
    struct Combo {
        const char* nl;
        double a;
        int N;
        double r_max;
    };
    const Combo combos[] = {{"u", 1.0, 3, 3.0},        {"log(0.5)", 1.0, 3, 4.0},
                            {"log(1.5)", 1.0, 3, 5.0}, {"log(1.5)", 2.0, 3, 4.0},
                            {"log(1.8)", 0.5, 2, 4.0}, {"u", 1.0, 2, 3.0}};
    for (const auto& c : combos) {
        INFO("nl=" << c.nl << " a=" << c.a << " N=" << c.N);
        auto nl = parse_nonlinearity(c.nl);
        auto prof = solve_global_radial(nl, c.a, c.N, c.r_max);
        const double ah = c.a * nl.h(c.a);
        // w(r) >= a + a h(a) r^2 / (2N) at every node
        for (size_t i = 0; i < prof.r.size(); ++i) {
            CHECK(prof.w[i] >= c.a + ah * prof.r[i] * prof.r[i] / (2.0 * c.N) - 1e-9 * prof.w[i]);
        }
        // discrete w'(r) >= a h(a) r / N - tol at interior nodes
        for (size_t i = 1; i + 1 < prof.r.size(); ++i) {
            const double d =
                (prof.w[i + 1] - prof.w[i - 1]) / (prof.r[i + 1] - prof.r[i - 1]);
            CHECK(d >= ah * prof.r[i] / c.N - 1e-6 * (1.0 + d));
        }
        // increasing in r
        for (size_t i = 1; i < prof.r.size(); ++i) CHECK(prof.w[i] >= prof.w[i - 1] * (1 - 1e-12));
    }
}

TEST_CASE("global radial profile: lower bound holds for u^2 within the blow-up radius") {
    auto nl = Nonlinearity::power(1.0);
    auto prof = solve_global_radial(nl, 1.0, 3, 1.0);
    CHECK(prof.at(1.0) >= 1.0 + 1.0 / 6.0);
}

TEST_CASE("global radial profile: ordering in a, and the shooting oracle") {
    auto nl = Nonlinearity::log_absorption(1.5);
    auto p1 = solve_global_radial(nl, 1.0, 3, 4.0);
    auto p2 = solve_global_radial(nl, 2.0, 3, 4.0);
    for (double r = 0.0; r <= 4.0; r += 0.25) CHECK(p1.at(r) <= p2.at(r) * (1 + 1e-10));

    // independent oracle: high-order outward shooting at fine resolution
    auto tr = detail_rad::integrate_outward(nl, 2.0, 3, 5e-4, 4.0);
    double worst = 0.0;
    for (size_t i = 0; i < tr.r.size(); i += 7) {
        const double wq = p2.at(tr.r[i]);
        worst = std::max(worst, std::abs(wq - tr.w[i]) / (1.0 + tr.w[i]));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("global radial profile: errors") {
    SECTION("blow-up before r_max is refused with advice") {
        CHECK_THROWS_AS(solve_global_radial(Nonlinearity::power(1.0), 1.0, 3, 10.0), RadialError);
    }
    SECTION("residual norm is reported and small") {
        auto prof = solve_global_radial(Nonlinearity::log_absorption(1.5), 1.0, 3, 4.0);
        double fmax = 0.0;
        auto nl = Nonlinearity::log_absorption(1.5);
        for (double wv : prof.w) fmax = std::max(fmax, nl.f(wv));
        CHECK(prof.residual_norm < 1e-6 * (1.0 + fmax));
    }
}

TEST_CASE("blow-up radius") {
    auto u2 = Nonlinearity::power(1.0);
    SECTION("strictly decreasing in a") {
        const double r1 = blowup_radius(u2, 1.0, 3).value;
        const double r10 = blowup_radius(u2, 10.0, 3).value;
        const double r100 = blowup_radius(u2, 100.0, 3).value;
        CHECK(r1 > r10);
        CHECK(r10 > r100);
    }
    SECTION("self-convergence under resolution halving") {
        const double rh = blowup_radius(u2, 1.0, 3, 0.01).value;
        const double rh2 = blowup_radius(u2, 1.0, 3, 0.005).value;
        CHECK(std::abs(rh - rh2) <= 1e-4 * rh2);
    }
    SECTION("scaling law w_R = R^-2 W(r/R) for f = u^2") {
        // R(a) = sqrt(kappa / a): R(1)^2 * 1 = R(4)^2 * 4
        const double r1 = blowup_radius(u2, 1.0, 3).value;
        const double r4 = blowup_radius(u2, 4.0, 3).value;
        CHECK(r1 * r1 == Catch::Approx(4.0 * r4 * r4).epsilon(1e-5));
    }
    SECTION("infinity flag when Keller-Osserman fails") {
        auto res = blowup_radius(Nonlinearity::log_absorption(1.5), 1.0, 3);
        CHECK(res.is_infinite);
    }
}

TEST_CASE("ball blow-up solutions") {
    auto u2 = Nonlinearity::power(1.0);
    SECTION("unit ball, N=3: steep at the edge, finite at the center") {
        auto prof = solve_ball_blowup(u2, 1.0, 3);
        CHECK(prof.at(0.99) > 1e4);
        CHECK(prof.w.front() < 1e3);
        CHECK(prof.blowup_radius.has_value());
        CHECK(*prof.blowup_radius == Catch::Approx(1.0).epsilon(1e-6));
    }
    SECTION("center value decays as R grows") {
        const double w5 = solve_ball_blowup(u2, 5.0, 3).w.front();
        const double w10 = solve_ball_blowup(u2, 10.0, 3).w.front();
        const double w20 = solve_ball_blowup(u2, 20.0, 3).w.front();
        CHECK(w5 > w10);
        CHECK(w10 > w20);
        CHECK(w20 < 0.05);  // kappa/400 with kappa ~ 15.7
    }
    SECTION("monotone in R nodewise") {
        auto pa = solve_ball_blowup(u2, 2.0, 3);
        auto pb = solve_ball_blowup(u2, 3.0, 3);
        for (double r = 0.0; r < 1.9; r += 0.1) CHECK(pa.at(r) >= pb.at(r) * (1 - 1e-6));
    }
    SECTION("refused when Keller-Osserman fails") {
        CHECK_THROWS_AS(solve_ball_blowup(Nonlinearity::log_absorption(1.5), 1.0, 3),
                        RadialError);
    }
}

TEST_CASE("singular profile Phi") {
    SECTION("closed form for f = u^2: Phi = 6/r^2") {
        auto u2 = Nonlinearity::power(1.0);
        for (double r : {0.1, 0.5, 1.0, 5.0, 10.0}) {
            CHECK(singular_profile_phi(u2, r) == Catch::Approx(6.0 / (r * r)).epsilon(1e-6));
        }
    }
    SECTION("decays monotonically to zero") {
        auto nl = Nonlinearity::log_absorption(3.0);
        double prev = std::numeric_limits<double>::infinity();
        for (double r : {0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
            const double phi = singular_profile_phi(nl, r);
            CHECK(phi < prev);
            prev = phi;
        }
        CHECK(prev < 1e-2);
    }
    SECTION("stencil residual for log(3) at r = 0.5") {
        auto nl = Nonlinearity::log_absorption(3.0);
        const double r = 0.5, hh = 3e-4;
        const double pm = singular_profile_phi(nl, r - hh);
        const double p0 = singular_profile_phi(nl, r);
        const double pp = singular_profile_phi(nl, r + hh);
        const double second = (pp - 2.0 * p0 + pm) / (hh * hh);
        const double res = -second + nl.f(p0);
        CHECK(std::abs(res) < 1e-4 * nl.f(p0));
    }
    SECTION("supersolution along rays: radial operator residual is nonnegative") {
        // -Phi'' - (N-1)/r Phi' + f(Phi) = -(N-1)/r Phi' >= 0 since Phi' <= 0
        auto nl = Nonlinearity::log_absorption(3.0);
        const int N = 3;
        for (double r : {0.5, 1.0, 2.0}) {
            const double hh = 3e-4 * r;
            const double pm = singular_profile_phi(nl, r - hh);
            const double p0 = singular_profile_phi(nl, r);
            const double pp = singular_profile_phi(nl, r + hh);
            const double second = (pp - 2.0 * p0 + pm) / (hh * hh);
            const double first = (pp - pm) / (2.0 * hh);
            const double res = -second - (N - 1) / r * first + nl.f(p0);
            CHECK(res >= -1e-4 * nl.f(p0));
        }
    }
    SECTION("refused when Keller-Osserman fails") {
        CHECK_THROWS_AS(singular_profile_phi(Nonlinearity::log_absorption(1.5), 1.0),
                        RadialError);
    }
}
