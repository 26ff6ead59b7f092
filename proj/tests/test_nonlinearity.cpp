#include <catch2/catch_amalgamated.hpp>

#include "abslab/classifier.hpp"
#include "abslab/nonlinearity.hpp"

using namespace abslab;

namespace {

// Independent antiderivative oracle: composite 32-panel Gauss-Kronrod applied
// twice at doubled resolution, no shared code path with Nonlinearity::F.
double oracle_F(const Nonlinearity& nl, double s, int panels) {
    KahanSum acc;
    for (int p = 0; p < panels; ++p) {
        const double a = s * p / panels;
        const double b = s * (p + 1) / panels;
        acc.add(gk15([&nl](double x) { return nl.f(x); }, a, b).value);
    }
    return acc.sum;
}

}  // namespace

TEST_CASE("parse_nonlinearity recognizes families and rejects bad f") {
    auto p = parse_nonlinearity("u^2");
    CHECK(p.kind() == NlKind::Power);
    CHECK(p.param() == Catch::Approx(1.0));
    CHECK(p.f(3.0) == Catch::Approx(9.0).epsilon(1e-14));

    auto l = parse_nonlinearity("u*ln(u+1)^2");
    CHECK(l.kind() == NlKind::LogAbsorption);
    CHECK(l.param() == Catch::Approx(2.0));
    CHECK(l.f(0.0) == 0.0);

    CHECK(parse_nonlinearity("power(1.5)").kind() == NlKind::Power);
    CHECK(parse_nonlinearity("log(3)").param() == Catch::Approx(3.0));
    CHECK(parse_nonlinearity("ln(u+1)*u").kind() == NlKind::LogAbsorption);

    CHECK_THROWS_AS(parse_nonlinearity("u - 1"), NlError);      // f(0) = -1
    CHECK_THROWS_AS(parse_nonlinearity("1/(u+1)"), NlError);    // f(0) != 0
    CHECK_THROWS_AS(parse_nonlinearity("u*)"), expr::ParseError);

    auto e = parse_nonlinearity("u^2+u^3");
    CHECK(e.kind() == NlKind::Expression);
    CHECK(e.f(2.0) == Catch::Approx(12.0).epsilon(1e-14));
}

TEST_CASE("antiderivative F against closed forms and the quadrature oracle") {
    SECTION("power closed form") {
        auto nl = Nonlinearity::power(1.0);  // f = u^2, F = s^3/3
        CHECK(nl.F(3.0) == Catch::Approx(9.0).epsilon(1e-10));
        CHECK(nl.F(0.0) == 0.0);
        auto nl2 = Nonlinearity::power(0.5);  // F = s^2.5/2.5
        CHECK(nl2.F(5.0) == Catch::Approx(std::pow(5.0, 2.5) / 2.5).epsilon(1e-10));
    }
    SECTION("log family vs oracle") {
        auto nl = Nonlinearity::log_absorption(2.0);
        const double got = nl.F(10.0);
        const double want = oracle_F(nl, 10.0, 64);
        const double want2 = oracle_F(nl, 10.0, 128);
        CHECK(std::abs(want - want2) <= 1e-10 * want);  // oracle self-consistent
        CHECK(got == Catch::Approx(want).epsilon(1e-8));
    }
    SECTION("expression vs oracle") {
        auto nl = parse_nonlinearity("u^2+u^3");
        const double got = nl.F(4.0);
        const double want = oracle_F(nl, 4.0, 128);
        CHECK(got == Catch::Approx(want).epsilon(1e-8));
    }
    SECTION("two quadrature orders agree on a grid") {
        for (const char* t : {"log(1.5)", "u^2", "u*exp(u)"}) {
            auto nl = parse_nonlinearity(t);
            for (double s : {0.01, 0.5, 1.0, 7.5, 42.0, 300.0}) {
                INFO(t << " at s=" << s);
                const double a = oracle_F(nl, s, 48);
                const double b = oracle_F(nl, s, 96);
                const double f = nl.F(s);
                CHECK(std::abs(a - b) <= 1e-9 * std::abs(a));
                CHECK(f == Catch::Approx(a).epsilon(1e-8));
            }
        }
    }
    SECTION("huge-argument lnF for the families") {
        auto nl = Nonlinearity::power(1.0);
        // ln F(1e200) = 3 * ln(1e200) - ln 3
        CHECK(nl.lnF(1e200) ==
              Catch::Approx(3.0 * std::log(1e200) - std::log(3.0)).epsilon(1e-9));
        auto lg = Nonlinearity::log_absorption(3.0);
        // F(s) ~ s^2 ln^3(s} / 2 at huge s: check the leading order only
        const double l = lg.lnF(1e250);
        const double lead = 2.0 * std::log(1e250) + 3.0 * std::log(std::log(1e250)) - std::log(2.0);
        CHECK(l == Catch::Approx(lead).epsilon(2e-3));
    }
}

TEST_CASE("h is f/s to machine accuracy") {
    for (const char* t : {"log(2)", "u^2", "u^2+u^3", "u*exp(u)"}) {
        auto nl = parse_nonlinearity(t);
        for (int i = 0; i < 40; ++i) {
            const double s = std::pow(10.0, -6.0 + 12.0 * i / 39.0);
            const double f = nl.f(s);
            if (!std::isfinite(f)) continue;
            CHECK(std::abs(nl.h(s) * s - f) <= 1e-12 * std::abs(f));
        }
    }
}

TEST_CASE("structural conditions") {
    SECTION("power: c1 and c2 hold") {
        auto rep = structural_conditions(Nonlinearity::power(1.0));
        CHECK(rep.c1.verdict == Verdict::Holds);
        CHECK(rep.c2.verdict == Verdict::Holds);
        CHECK(!rep.c1.witnesses.empty());
    }
    SECTION("log(3): c1, c2, c3 hold with beta = 2") {
        auto rep = structural_conditions(Nonlinearity::log_absorption(3.0));
        CHECK(rep.c1.verdict == Verdict::Holds);
        CHECK(rep.c2.verdict == Verdict::Holds);
        CHECK(rep.c3.verdict == Verdict::Holds);
        REQUIRE(rep.c3_beta.has_value());
        CHECK(*rep.c3_beta == Catch::Approx(2.0));
    }
    SECTION("log(1.5): c3 holds with a bona fide beta") {
        auto rep = structural_conditions(Nonlinearity::log_absorption(1.5));
        CHECK(rep.c3.verdict == Verdict::Holds);
        REQUIRE(rep.c3_beta.has_value());
        CHECK(*rep.c3_beta >= 1.25);
    }
    SECTION("linear f: c1 fails (h constant)") {
        auto rep = structural_conditions(parse_nonlinearity("u"));
        CHECK(rep.c1.verdict == Verdict::Fails);
    }
    SECTION("every decided verdict carries a witness") {
        for (const char* t : {"u^2", "log(3)", "u"}) {
            auto rep = structural_conditions(parse_nonlinearity(t));
            for (const ConditionReport* c : {&rep.c1, &rep.c2}) {
                if (c->verdict != Verdict::Undecided) CHECK(!c->witnesses.empty());
            }
        }
    }
}
