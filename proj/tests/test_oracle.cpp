#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <smartcd/oracle.hpp>

#include "helpers.hpp"

using namespace smartcd;

TEST_CASE("grid minimizer finds simple optima")
{
    auto [x1, v1] = grid_minimize_scalar([](double u) { return (u - 3.0) * (u - 3.0); },
                                         0.0, 5.0, 1e-3);
    CHECK(x1 == Catch::Approx(3.0).margin(1e-3));

    auto [x2, v2] = grid_minimize_scalar(
        [](double u) { return std::abs(u) + 0.5 * (u - 2.0) * (u - 2.0); }, -3.0, 3.0,
        1e-3);
    CHECK(x2 == Catch::Approx(1.0).margin(1e-3)); // soft-threshold of 2 by 1

    auto [x3, v3] = grid_minimize_scalar([](double) { return 7.0; }, -1.0, 1.0, 0.5);
    CHECK(x3 == -1.0);
    CHECK(v3 == 7.0);

    CHECK_THROWS_AS(grid_minimize_scalar([](double u) { return u; }, 1.0, 0.0, 0.1),
                    std::invalid_argument);
}

TEST_CASE("finite differences recover simple gradients")
{
    Vector x{1.0, 2.0};
    Vector g = finite_diff_gradient(
        [](const Vector& u) { return 0.5 * (u[0] * u[0] + u[1] * u[1]); }, x);
    CHECK(g[0] == Catch::Approx(1.0).margin(1e-8));
    CHECK(g[1] == Catch::Approx(2.0).margin(1e-8));

    Vector w{3.0, -0.5};
    Vector gl = finite_diff_gradient([&](const Vector& u) { return dot(w, u); }, x);
    CHECK(gl[0] == Catch::Approx(3.0).margin(1e-9));
    CHECK(gl[1] == Catch::Approx(-0.5).margin(1e-9));

    CHECK_THROWS_AS(finite_diff_gradient(
                        [](const Vector&) { return std::numeric_limits<double>::quiet_NaN(); },
                        x),
                    std::invalid_argument);
}

TEST_CASE("long run reference approaches the lp optimum")
{
    ProblemSpec prob = degenerate_lp(10, 200);
    ReferenceSolution sol = long_run_reference(prob, 100000);
    CHECK(sol.objective == Catch::Approx(2.0).margin(1e-4));
    CHECK(sol.method == "long-run-deterministic");
    CHECK(sol.accuracy >= 0.0);
}

TEST_CASE("long run reference matches the normal equations when lambda is zero")
{
    ProblemSpec prob = synthetic_tv_instance(10, 20, 0.0, 0.5, 9);
    // large beta1 keeps the smoothing term out of the step size on this
    // smooth-only instance
    ReferenceSolution sol = long_run_reference(prob, 200000, 100.0);

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(20, 10);
    for (const auto& t : prob.f.matrix().triplets()) m(t.row, t.col) = t.value;
    Eigen::VectorXd b(20);
    for (int j = 0; j < 20; ++j) b(j) = prob.f.rhs()[static_cast<std::size_t>(j)];
    Eigen::VectorXd xls = (m.transpose() * m).ldlt().solve(m.transpose() * b);
    for (int j = 0; j < 10; ++j) {
        CHECK(sol.x[static_cast<std::size_t>(j)] == Catch::Approx(xls(j)).margin(1e-6));
    }
}

TEST_CASE("long run reference keeps a nonuniform g aligned with its coordinates")
{
    // the lp's g acts on the last coordinate only; collapsing the partition to
    // one block must not move the constraint to another coordinate
    ProblemSpec prob = degenerate_lp(5, 10);
    ReferenceSolution sol = long_run_reference(prob, 50000);
    CHECK(sol.x.back() >= -1e-12);
    CHECK(sol.x.back() == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("a zero objective returns the start point")
{
    auto part = BlockPartition::scalar_blocks(2);
    BlockSparseMatrix a(1, part, {{0, 0, 1.0}, {0, 1, 1.0}});
    ProblemSpec prob{SmoothPart::zero(part),
                     SeparablePart::all_zero(2),
                     ConjugateProxPart::l1(0.0, 1),
                     a,
                     part,
                     {0.25, -0.75},
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};
    ReferenceSolution sol = long_run_reference(prob, 100);
    CHECK(sol.x == prob.x0);
}

TEST_CASE("doubling the budget never worsens the reference objective")
{
    ProblemSpec prob = synthetic_tv_instance(12, 8, 0.01, 0.5, 2);
    ReferenceSolution half = long_run_reference(prob, 50000);
    ReferenceSolution full = long_run_reference(prob, 100000);
    CHECK(full.objective <= half.objective + 1e-12);
}
