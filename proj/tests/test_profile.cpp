#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "qmem/errors.hpp"
#include "qmem/profile.hpp"

using namespace qmem;
using doctest::Approx;

namespace {

bool has_failure(const ValidationReport& rep, std::string_view tag) {
    for (const auto& f : rep.failures)
        if (f.find(tag) != std::string::npos) return true;
    return false;
}

std::filesystem::path temp_csv(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST_CASE("exponential rate values") {
    const auto p = InputProfile::exponential(0.036);
    CHECK(p.rate(0.0) == Approx(0.036).epsilon(1e-15));
    CHECK(p.rate(1.0 / 0.036) == Approx(0.036 / std::numbers::e).epsilon(1e-12));
    CHECK(p.rate(1.0 / 0.036) == Approx(0.013243).epsilon(1e-4));
    CHECK_THROWS_AS(p.rate(-1e-3), DomainError);
}

TEST_CASE("gaussian peaks at its centre") {
    const auto p = InputProfile::gaussian(0.1533, 4.0);
    CHECK(p.rate(p.center()) == Approx(0.1533).epsilon(1e-14));
    CHECK(p.sigma() == Approx(1.0 / (0.1533 * std::sqrt(2.0 * std::numbers::pi))).epsilon(1e-14));
    CHECK(p.rate(p.center() - 0.3) < p.rate(p.center()));
    CHECK(p.rate(p.center() + 0.3) < p.rate(p.center()));
    CHECK(p.rate(1.7) == Approx(oracle::gauss_rate(0.1533, 4.0, 1.7)).epsilon(1e-13));
}

TEST_CASE("total excitation against quadrature oracles") {
    CHECK(total_excitation(InputProfile::exponential(0.1), INFINITY) == Approx(1.0).epsilon(1e-10));
    const auto g = InputProfile::gaussian(0.1533, 4.0);
    const double expected = 1.0 - 0.5 * std::erfc(4.0 / std::numbers::sqrt2);
    CHECK(total_excitation(g, INFINITY) == Approx(expected).epsilon(1e-10));
    const double simpson =
        oracle::simpson([](double t) { return oracle::gauss_rate(0.1533, 4.0, t); }, 0.0,
                        (4.0 + 12.0) * g.sigma(), 200000);
    CHECK(std::abs(total_excitation(g, INFINITY) - simpson) < 1e-10);
    CHECK(total_excitation(g, 0.0) == 0.0);
    CHECK(total_excitation(g, g.center()) == Approx(g.cumulative(g.center())).epsilon(1e-11));
}

TEST_CASE("cumulative and tail are complementary") {
    for (const auto& p : {InputProfile::exponential(0.2), InputProfile::gaussian(0.3, 5.0)}) {
        for (double t : {0.0, 0.5, 3.0, 17.0, 60.0}) {
            CHECK(p.cumulative(t) + p.tail(t) + p.truncation_deficit() ==
                  Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("validation of built-in and tabulated profiles") {
    CHECK(validate(InputProfile::exponential(0.036)).ok());
    CHECK(validate(InputProfile::gaussian(0.1533)).ok());

    std::vector<TableSample> neg;
    for (int k = 0; k <= 400; ++k) {
        const double t = 0.05 * k;
        neg.push_back({t, k == 10 ? -1e-3 : std::exp(-t)});
    }
    CHECK(has_failure(validate(InputProfile::tabulated(neg)), "nonnegativity"));

    std::vector<TableSample> doubled;
    for (int k = 0; k <= 2000; ++k) {
        const double t = 0.02 * k;
        doubled.push_back({t, 2.0 * std::exp(-t)});
    }
    const auto rep = validate(InputProfile::tabulated(doubled));
    CHECK(has_failure(rep, "normalization"));
    CHECK(rep.total_excitation == Approx(2.0).epsilon(1e-4));
}

TEST_CASE("tabulated samples reproduce the underlying profile") {
    const double r = 0.1;
    const auto e = InputProfile::exponential(r);
    std::vector<TableSample> s;
    const double h = 0.01 / r;
    for (int k = 0; k * h <= 40.0 / r; ++k) s.push_back({k * h, e.rate(k * h)});
    const auto t = InputProfile::tabulated(s);
    for (double tau : {0.013, 3.3, 9.99, 27.1, 120.0}) {
        CHECK(t.rate(tau) == Approx(e.rate(tau)).epsilon(1e-4));
    }

    const auto g = InputProfile::gaussian(0.1533);
    std::vector<TableSample> gs;
    const double hg = g.sigma() / 50.0;
    for (int k = 0; k * hg <= 12.0 * g.sigma(); ++k) gs.push_back({k * hg, g.rate(k * hg)});
    const auto tg = InputProfile::tabulated(gs);
    for (double tau : {1.0, g.center(), g.center() + 0.77 * g.sigma(), 9.0 * g.sigma()}) {
        CHECK(tg.rate(tau) == Approx(g.rate(tau)).epsilon(1e-4));
    }
    CHECK(tg.rate(13.0 * g.sigma()) == 0.0);
}

TEST_CASE("tabulated interpolant never goes negative on nonnegative data") {
    std::vector<TableSample> s{{0.0, 0.0}, {1.0, 0.0}, {1.1, 1.0}, {1.2, 0.0}, {3.0, 0.0}};
    const auto p = InputProfile::tabulated(s);
    for (int k = 0; k <= 3000; ++k) CHECK(p.rate(k * 1e-3) >= 0.0);
}

TEST_CASE("gaussian lead constraints") {
    CHECK_THROWS_AS(InputProfile::gaussian(0.1533, 3.5), DomainError);
    CHECK_NOTHROW(InputProfile::gaussian(0.1533, 3.5, true));
    CHECK_THROWS_AS(InputProfile::gaussian(0.1533, 2.9, true), DomainError);
    CHECK_THROWS_AS(InputProfile::exponential(0.0), DomainError);
    CHECK_THROWS_AS(InputProfile::exponential(-0.1), DomainError);
}

TEST_CASE("profile literals") {
    const auto e = parse_profile_literal("exp:r=0.036");
    CHECK(e.kind() == ProfileKind::Exponential);
    CHECK(e.peak_rate() == 0.036);

    const auto g = parse_profile_literal("gauss:r=0.1533,n=5");
    CHECK(g.kind() == ProfileKind::Gaussian);
    CHECK(g.lead() == 5.0);
    CHECK(parse_profile_literal("gauss:r=0.1533").lead() == 4.0);
    CHECK(parse_profile_literal("gauss:sigma=2").sigma() == 2.0);

    CHECK_THROWS_AS(parse_profile_literal("exp"), DomainError);
    CHECK_THROWS_AS(parse_profile_literal("exp:r=abc"), DomainError);
    CHECK_THROWS_AS(parse_profile_literal("exp:rate=0.1"), DomainError);
    CHECK_THROWS_AS(parse_profile_literal("exp:r=0.1,r=0.2"), DomainError);
    CHECK_THROWS_AS(parse_profile_literal("gauss:r=0.1,n=3.5"), DomainError);
    CHECK_THROWS_AS(parse_profile_literal("sech:r=0.1"), DomainError);
    CHECK_THROWS_AS(parse_profile_literal("table:"), DomainError);

    const auto path = temp_csv("qmem_profile_literal.csv", "tau,r_in\n0,1\n1,0.5\n2,0\n");
    const auto t = parse_profile_literal("table:" + path.string());
    CHECK(t.kind() == ProfileKind::Tabulated);
    CHECK(t.samples().size() == 3);
    CHECK(t.rate(1.0) == Approx(0.5));
    std::filesystem::remove(path);
}

TEST_CASE("tabulated constructor rejects malformed samples") {
    CHECK_THROWS_AS(InputProfile::tabulated({{0.0, 1.0}}), DomainError);
    CHECK_THROWS_AS(InputProfile::tabulated({{0.0, 1.0}, {0.0, 2.0}}), DomainError);
    CHECK_THROWS_AS(InputProfile::tabulated({{-1.0, 1.0}, {0.0, 2.0}}), DomainError);
    CHECK_THROWS_AS(InputProfile::tabulated({{0.0, NAN}, {1.0, 2.0}}), DomainError);
}
