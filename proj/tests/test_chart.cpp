#include <doctest.h>

#include <random>

#include "gtf/chart.hpp"
#include "gtf/lie.hpp"
#include "oracles.hpp"

using namespace gtf;

namespace {

std::vector<FieldPtr> axis_frame(int n, const Box& box) {
    std::vector<FieldPtr> f;
    for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        e[i] = 1.0;
        f.push_back(std::make_shared<ConstantField>(e, box));
    }
    return f;
}

CanonicalChart strip_chart() {
    System strip = make_registry_system("example31-strip");
    IntegratorSettings s;
    s.rtol = 1e-12;
    s.atol = 1e-14;
    return CanonicalChart(Vec::Zero(2), strip.frame, s);
}

}  // namespace

TEST_CASE("zero coordinates map to the base point") {
    System i3 = make_registry_system("integrator3");
    CanonicalChart chart(Vec::Zero(3), axis_frame(3, i3.box));
    CHECK((chart.forward(Vec::Zero(3)) - chart.base()).norm() == 0.0);

    CanonicalChart sc = strip_chart();
    CHECK((sc.forward(Vec::Zero(2)) - sc.base()).norm() <= 1e-12);
}

TEST_CASE("commuting constant frame acts by translation") {
    System i3 = make_registry_system("integrator3");
    Vec base(3);
    base << 0.5, -1.0, 2.0;
    CanonicalChart chart(base, axis_frame(3, i3.box));
    Vec c(3);
    c << 0.1, 0.2, -0.3;
    CHECK((chart.forward(c) - (base + c)).norm() <= 1e-12);
    Vec x(3);
    x << 0.9, -0.9, 2.2;
    CHECK((chart.inverse(x) - (x - base)).norm() <= 1e-12);
    CHECK((chart.inverse(base)).norm() == 0.0);
}

TEST_CASE("strip chart roundtrip and Newton convergence") {
    CanonicalChart chart = strip_chart();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> d(-1.5, 1.5);
    for (int i = 0; i < 100; ++i) {
        Vec c(2);
        c << d(rng), d(rng);
        Vec x = chart.forward(c);
        Vec back = chart.inverse(x);
        CHECK((back - c).norm() <= 1e-8);
        CHECK((chart.forward(back) - x).norm() <= 1e-10);
    }
}

TEST_CASE("forward jacobian columns match finite differences") {
    CanonicalChart chart = strip_chart();
    Vec c(2);
    c << 0.4, -0.7;
    auto fj = chart.forward_jac(c, true);
    auto f = [&](const Vec& cc) { return chart.forward(cc); };
    Mat J_fd = oracle::fd_jacobian(f, c);
    CHECK((fj.J_tau - J_fd).norm() <= 1e-6);

    // J_xi: derivative with respect to the base point.
    auto g = [&](const Vec& b) {
        CanonicalChart moved(b, chart.frame(), chart.settings());
        return moved.forward(c);
    };
    Mat Jxi_fd = oracle::fd_jacobian(g, chart.base());
    CHECK((fj.J_xi - Jxi_fd).norm() <= 1e-6);
}

TEST_CASE("canonical verification on the double integrator") {
    System i2 = make_registry_system("integrator2");
    Vec xstar = Vec::Zero(2);
    auto frame = constant_bracket_frame(i2, xstar);
    CanonicalChart chart(xstar, frame);
    chart.size_box(i2.box);
    std::mt19937_64 rng(3);
    CanonicalReport rep = verify_canonical(chart, i2, 40, rng);
    CHECK(rep.worst_residual <= 1e-7);

    // Swapped frame order: the input direction leads, leaves are wrong.
    std::vector<FieldPtr> swapped = {frame[1], frame[0]};
    CanonicalChart badchart(xstar, swapped);
    badchart.set_coord_box(chart.coord_box());
    CanonicalReport bad = verify_canonical(badchart, i2, 40, rng);
    CHECK(bad.worst_residual > 1e-2);
    CHECK(bad.witness_i >= 1);
}

TEST_CASE("frame nesting matches the bracket levels at the base") {
    System i3 = make_registry_system("integrator3");
    Vec xstar(3);
    xstar << 0.3, 0.1, -0.2;
    auto frame = constant_bracket_frame(i3, xstar);
    CanonicalChart chart(xstar, frame);
    CHECK(frame_nesting_residual(chart, i3) <= 1e-9);
}

TEST_CASE("leaf tangents stay in the nested distributions") {
    CanonicalChart chart = strip_chart();
    System strip = make_registry_system("example31-strip");
    const int n = 2;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Vec c(2);
        c << d(rng), d(rng);
        auto fj = chart.forward_jac(c);
        // Varying the last coordinate must stay inside Delta_0 = span b.
        Vec tangent = fj.J_tau.col(n - 1);
        Vec b = strip.b->value(fj.x);
        Mat P = b * b.transpose() / b.squaredNorm();
        Vec resid = tangent - P * tangent;
        CHECK(resid.norm() / tangent.norm() <= 1e-6);
    }
}

TEST_CASE("triangularize the double integrator in its bracket chart") {
    System i2 = make_registry_system("integrator2");
    Vec xstar = Vec::Zero(2);
    CanonicalChart chart(xstar, constant_bracket_frame(i2, xstar));
    chart.size_box(i2.box);
    std::vector<Vec> grid;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            Vec c(2);
            c << 0.3 * i, 0.3 * j;
            grid.push_back(c);
        }
    TriangularizeReport rep = triangularize(chart, i2, grid);
    CHECK(rep.max_offdiag <= 1e-8);
    CHECK(rep.min_gn == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("triangularize the singular system (already triangular)") {
    System ex9 = make_registry_system("ex9-singular");
    Vec xstar(2);
    xstar << 0.5, -0.8;
    CanonicalChart chart(xstar, constant_bracket_frame(ex9, xstar));
    chart.set_coord_box(Vec::Constant(2, 1.0));
    std::vector<Vec> grid;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            Vec c(2);
            c << 0.25 * i, 0.25 * j;
            grid.push_back(c);
        }
    TriangularizeReport rep = triangularize(chart, ex9, grid);
    CHECK(rep.max_offdiag <= 1e-8);
}

TEST_CASE("strip system triangularizes back to the singular example") {
    System strip = make_registry_system("example31-strip");
    System ex9 = make_registry_system("ex9-singular");
    CanonicalChart chart = strip_chart();
    chart.set_coord_box(Vec::Constant(2, 2.0));
    std::vector<Vec> grid;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            Vec c(2);
            c << 0.45 * i, 0.45 * j;
            grid.push_back(c);
        }
    TriangularizeReport rep = triangularize(chart, strip, grid);
    for (size_t g = 0; g < rep.grid.size(); ++g) {
        Vec zeta = rep.grid[g];
        double want_f1 = ex9.a->value(zeta)[0];
        CHECK(std::abs(rep.drift_rows[g][0] - want_f1) <= 1e-6);
        CHECK(std::abs(rep.drift_rows[g][1]) <= 1e-6);          // second drift row is zero
        CHECK(std::abs(rep.gn[g] - 1.0) <= 1e-6);               // g2 = 1
    }
}

TEST_CASE("chart family: moving base with time derivative") {
    System i3 = make_registry_system("integrator3");
    // Base curve: a smooth arc.
    auto z = quintic_hermite(0.0, Vec::Zero(3), Vec::Ones(3), 1.0, Vec::Ones(3),
                             -0.5 * Vec::Ones(3), 0.3 * Vec::Ones(3));
    Vec xstar = Vec::Zero(3);
    ChartFamily fam(z, constant_bracket_frame(i3, xstar));
    CHECK(fam.constant_frame());

    Vec x(3);
    x << 0.4, 0.3, 0.1;
    double t = 0.37;
    auto ev = fam.eval(t, x);
    // d phi/d t by finite differences in t.
    const double h = 1e-6;
    Vec cp = fam.eval(t + h, x).coords, cm = fam.eval(t - h, x).coords;
    CHECK((ev.dphi_dt - (cp - cm) / (2 * h)).norm() <= 1e-6);
    // coords consistency with chart_at.
    CanonicalChart snap = fam.chart_at(t);
    CHECK((snap.inverse(x) - ev.coords).norm() <= 1e-10);
}

TEST_CASE("chart family with a genuinely moving nonconstant frame") {
    System strip = make_registry_system("example31-strip");
    Vec z0(2), z1v(2);
    z0 << -0.3, 0.2;
    z1v << 0.4, -0.5;
    auto z = quintic_hermite(0.0, z0, Vec::Ones(2), 1.0, z1v, Vec::Zero(2),
                             0.5 * (z0 + z1v));
    IntegratorSettings s;
    s.rtol = 1e-12;
    s.atol = 1e-14;
    ChartFamily fam(z, strip.frame, s);
    CHECK(!fam.constant_frame());

    double t = 0.6;
    Vec x = z->eval(t) + 0.05 * Vec::Ones(2);
    Vec seed = Vec::Zero(2);
    auto ev = fam.eval(t, x, &seed);
    const double h = 1e-5;
    Vec cp = fam.eval(t + h, x, &seed).coords;
    Vec cm = fam.eval(t - h, x, &seed).coords;
    CHECK((ev.dphi_dt - (cp - cm) / (2 * h)).norm() <= 1e-5);
    // grads * J_tau = identity.
    CHECK((ev.grads * ev.J_tau - Mat::Identity(2, 2)).norm() <= 1e-9);
}

TEST_CASE("box sizing keeps corners well-conditioned") {
    System i2 = make_registry_system("integrator2");
    CanonicalChart chart(Vec::Zero(2), constant_bracket_frame(i2, Vec::Zero(2)));
    chart.size_box(i2.box);
    CHECK(chart.coord_box().minCoeff() > 0.0);
    // Forward determinant bounded away from zero across the box.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        Vec c(2);
        c << d(rng) * chart.coord_box()[0], d(rng) * chart.coord_box()[1];
        auto fj = chart.forward_jac(c);
        CHECK(std::abs(fj.J_tau.determinant()) > 1e-6);
    }
}
