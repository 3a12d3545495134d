#include <doctest.h>

#include <random>

#include "gtf/chart.hpp"
#include "gtf/lie.hpp"
#include "oracles.hpp"

using namespace gtf;

namespace {

FieldPtr make_field(std::vector<std::string> comps, std::vector<std::string> vars,
                    double half = 50) {
    SymbolTable s;
    s.vars = std::move(vars);
    std::vector<ExprPtr> es;
    for (const auto& c : comps) es.push_back(parse_expr(c, s));
    return std::make_shared<AnalyticField>(es, Box::cube(static_cast<int>(s.vars.size()), half));
}

}  // namespace

TEST_CASE("bracket of a field with itself vanishes") {
    auto v = make_field({"cos(x1)", "-sin(x1)"}, {"x1", "x2"});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int i = 0; i < 10; ++i) {
        Vec x(2);
        x << d(rng), d(rng);
        CHECK(lie_bracket(*v, *v, x).norm() <= 1e-14);
    }
}

TEST_CASE("double-integrator bracket equals the hand computation") {
    System sys = make_registry_system("integrator2");
    Vec x(2);
    x << 0.3, -1.1;
    Vec br = lie_bracket(*sys.a, *sys.b, x);
    CHECK(br[0] == doctest::Approx(-1.0));
    CHECK(br[1] == doctest::Approx(0.0));
    // Finite-difference cross-check of the same bracket.
    auto f = [&](const Vec& y) { return sys.a->value(y); };
    auto g = [&](const Vec& y) { return sys.b->value(y); };
    Mat Ja = oracle::fd_jacobian(f, x);
    Mat Jb = oracle::fd_jacobian(g, x);
    Vec want = Jb * sys.a->value(x) - Ja * sys.b->value(x);
    CHECK((br - want).norm() <= 1e-6);
}

TEST_CASE("example fields bracket to the first coordinate direction") {
    auto v1 = make_field({"cos(x1)", "-sin(x1)"}, {"x1", "x2"});
    auto v2 = make_field({"sin(x1)", "cos(x1)"}, {"x1", "x2"});
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-3, 3);
    for (int i = 0; i < 12; ++i) {
        Vec x(2);
        x << d(rng), d(rng);
        Vec br = lie_bracket(*v1, *v2, x);
        CHECK(std::abs(br[0] - 1.0) <= 1e-11);
        CHECK(std::abs(br[1]) <= 1e-11);
    }
}

TEST_CASE("bracket antisymmetry is exact") {
    auto v = make_field({"sin(x1*x2)", "x1^2"}, {"x1", "x2"});
    auto w = make_field({"tanh(x2)", "cos(x1)"}, {"x1", "x2"});
    Vec x(2);
    x << 0.4, -0.8;
    Vec a = lie_bracket(*v, *w, x);
    Vec b = lie_bracket(*w, *v, x);
    CHECK((a + b).norm() == 0.0);
}

TEST_CASE("iterated brackets of the triple integrator") {
    System sys = make_registry_system("integrator3");
    Vec x(3);
    x << 0.2, -0.4, 1.0;
    Vec b0 = ad_pow(sys, 0, x);
    CHECK((b0 - sys.b->value(x)).norm() == 0.0);
    Vec b1 = ad_pow(sys, 1, x);
    CHECK(b1[0] == doctest::Approx(0.0));
    CHECK(b1[1] == doctest::Approx(-1.0));
    CHECK(b1[2] == doctest::Approx(0.0));
    Vec b2 = ad_pow(sys, 2, x);
    CHECK(b2[0] == doctest::Approx(1.0));
    CHECK(b2[1] == doctest::Approx(0.0));
    CHECK(b2[2] == doctest::Approx(0.0));
}

TEST_CASE("constant first field reduces the bracket to one term") {
    auto a = make_field({"1", "2"}, {"x1", "x2"});
    auto b = make_field({"x1 * x2", "sin(x1)"}, {"x1", "x2"});
    Vec x(2);
    x << 0.5, 0.3;
    Vec br = lie_bracket(*a, *b, x);
    auto g = [&](const Vec& y) { return b->value(y); };
    Vec want = oracle::fd_jacobian(g, x) * a->value(x);
    CHECK((br - want).norm() <= 1e-6);
}

TEST_CASE("jacobi identity on registry fields") {
    System sys = make_registry_system("integrator3");
    auto u = sys.a;
    auto v = sys.b;
    auto w = make_field({"sin(x2)", "x3^2", "tanh(x1)"}, {"x1", "x2", "x3"});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1, 1);
    for (int i = 0; i < 5; ++i) {
        Vec x(3);
        x << d(rng), d(rng), d(rng);
        auto uv = std::make_shared<BracketField>(u, v);
        auto vw = std::make_shared<BracketField>(v, w);
        auto wu = std::make_shared<BracketField>(w, u);
        Vec total = lie_bracket(*u, *vw, x) + lie_bracket(*v, *wu, x) + lie_bracket(*w, *uv, x);
        CHECK(total.norm() <= 1e-8);
    }
}

TEST_CASE("distribution samples: full rank for the triple integrator") {
    System sys = make_registry_system("integrator3");
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int i = 0; i < 5; ++i) {
        Vec x(3);
        x << d(rng), d(rng), d(rng);
        DistributionSample ds = delta_basis(sys, x, 2);
        CHECK(ds.regular);
        CHECK(ds.sigma_min >= 1.0 - 1e-9);
    }
    Vec x0 = Vec::Zero(3);
    DistributionSample d0 = delta_basis(sys, x0, 0);
    CHECK(d0.regular);  // single column b != 0
}

TEST_CASE("singular example degenerates on the z2 = 0 line") {
    System sys = make_registry_system("ex9-singular");
    Vec x(2);
    x << 0.7, 0.0;
    DistributionSample ds = delta_basis(sys, x, 1);
    CHECK(!ds.regular);
    // And on the interior of the band as well.
    Vec mid(2);
    mid << 1.0, 0.5;
    CHECK(!delta_basis(sys, mid, 1).regular);
    // Below the band the bracket basis is regular.
    Vec low(2);
    low << 0.7, -0.5;
    CHECK(delta_basis(sys, low, 1).regular);
}

TEST_CASE("condition (A) checks") {
    System sys = make_registry_system("integrator2");
    std::vector<Vec> samples;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int i = 0; i < 10; ++i) {
        Vec x(2);
        x << d(rng), d(rng);
        samples.push_back(x);
    }
    std::vector<double> grid;
    for (int i = -16; i <= 16; ++i) grid.push_back(0.25 * i);

    ConditionEntry ok = check_condition_A(sys, samples, grid, 2.0);
    CHECK(ok.pass);

    // Bounded gain fails reach evidence for R = 2.
    SymbolTable cs;
    cs.vars = {"x1", "x2", "u"};
    System bounded = sys;
    bounded.beta = std::make_shared<ScalarGain>(parse_expr("tanh(u)", cs), 2);
    CHECK(!check_condition_A(bounded, samples, grid, 2.0).pass);

    // Vanishing channel fails with a witness.
    System degenerate = sys;
    SymbolTable ss;
    ss.vars = {"x1", "x2"};
    degenerate.b = std::make_shared<AnalyticField>(
        std::vector<ExprPtr>{parse_expr("0", ss), parse_expr("0", ss)}, sys.box);
    ConditionEntry bad = check_condition_A(degenerate, samples, grid, 2.0);
    CHECK(!bad.pass);
    CHECK(bad.witness.size() == 2);
}

TEST_CASE("involutivity residuals") {
    System sys = make_registry_system("integrator3");
    std::vector<Vec> samples;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int i = 0; i < 100; ++i) {
        Vec x(3);
        x << d(rng), d(rng), d(rng);
        samples.push_back(x);
    }
    // Single field: trivially involutive.
    ConditionEntry one = check_involutivity({sys.b}, samples);
    CHECK(one.pass);
    CHECK(one.worst_residual <= 1e-15);

    // Coordinate fields commute.
    Vec e1 = Vec::Zero(3), e2 = Vec::Zero(3);
    e1[0] = 1;
    e2[1] = 1;
    auto f1 = std::make_shared<ConstantField>(e1, sys.box);
    auto f2 = std::make_shared<ConstantField>(e2, sys.box);
    CHECK(check_involutivity({f1, f2}, samples).worst_residual <= 1e-15);

    // {b, ad_a b} for the triple integrator: both constant.
    auto adb = std::make_shared<BracketField>(sys.a, sys.b);
    ConditionEntry lvl = check_involutivity({sys.b, adb}, samples);
    CHECK(lvl.worst_residual <= 1e-9);
}

TEST_CASE("orbit generators live in the bracket span") {
    IntegratorSettings s;
    std::mt19937_64 rng(7);

    System i3 = make_registry_system("integrator3");
    Vec x0 = Vec::Zero(3);
    OrbitSampleResult orb = orbit_generators(i3, x0, 1, 50, rng, s);
    CHECK(orb.generators.size() + orb.discarded == 50);
    DistributionSample ds = delta_basis(i3, x0, 1);
    CHECK(span_residual(ds.basis, orb.generators) <= 1e-7);

    System i2 = make_registry_system("integrator2");
    Vec y0 = Vec::Zero(2);
    OrbitSampleResult orb2 = orbit_generators(i2, y0, 1, 50, rng, s);
    DistributionSample ds2 = delta_basis(i2, y0, 1);
    CHECK(span_residual(ds2.basis, orb2.generators) <= 1e-7);

    // All-zero durations give the zero generator.
    FlowSequence seq = {{i2.b, 0.0}};
    Vec q = inverse_flow_sequence(seq, y0, s);
    Vec g = pushforward(seq, q, i2.a->value(q), s) - i2.a->value(y0);
    CHECK(g.norm() == 0.0);
}

TEST_CASE("regular point search") {
    System i2 = make_registry_system("integrator2");
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> d(-1, 1);
    auto sampler = [&]() {
        Vec x(2);
        x << d(rng), d(rng);
        return x;
    };
    Vec p = find_regular_point(i2, sampler, 16);
    CHECK(delta_basis(i2, p, 1).regular);

    // Sampling the singular line only must fail.
    System ex9 = make_registry_system("ex9-singular");
    auto line_sampler = [&]() {
        Vec x(2);
        x << d(rng), 0.0;
        return x;
    };
    CHECK_THROWS_AS(find_regular_point(ex9, line_sampler, 12), SolverError);

    // A band below zero succeeds.
    std::uniform_real_distribution<double> zneg(-1.0, -0.1);
    auto band_sampler = [&]() {
        Vec x(2);
        x << d(rng), zneg(rng);
        return x;
    };
    Vec q = find_regular_point(ex9, band_sampler, 24);
    CHECK(delta_basis(ex9, q, 1).regular);
    // Analytic derivative of the lower branch is nonzero there.
    double z2 = q[1];
    double df = 5 * std::pow(z2, 4) * std::sin(z2) + std::pow(z2, 5) * std::cos(z2);
    CHECK(std::abs(df) > 1e-4);
}

TEST_CASE("full condition report on registry systems") {
    IntegratorSettings s;
    std::mt19937_64 rng(9);
    System i3 = make_registry_system("integrator3");
    ConditionReport rep = check_conditions(i3, 12, rng, s, 12);
    CHECK(rep.all_pass());
    std::string json = rep.to_json();
    CHECK(json.find("\"condition\"") != std::string::npos);

    System ex9 = make_registry_system("ex9-singular");
    ConditionReport rep9 = check_conditions(ex9, 12, rng, s, 12);
    CHECK(rep9.all_pass());  // singular witnesses are informational
}
