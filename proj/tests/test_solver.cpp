#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <smartcd/smartcd.hpp>

#include "helpers.hpp"

using namespace smartcd;
using namespace smartcd::testing;

TEST_CASE("reference and efficient variants follow the same trajectory")
{
    Rng meta(101);
    for (int trial = 0; trial < 5; ++trial) {
        const bool multi = trial % 2 == 1;
        const auto h_case = static_cast<HCase>(trial % 3);
        ProblemSpec prob = random_instance(meta, 6 + trial, multi, h_case);

        SolverConfig cfg;
        cfg.regime = regime_for(prob);
        cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
        cfg.alpha = trial % 2 == 0 ? 0.0 : 1.0;

        ReferenceRun ref(prob, cfg);
        EfficientRun eff(prob, cfg);
        for (int k = 0; k < 800; ++k) {
            ref.step();
            eff.step();
            if (k % 100 == 99) {
                CHECK(max_rel_diff(eff.xbar(), ref.xbar()) < 1e-8);
            }
        }
        CHECK(max_rel_diff(eff.xbar(), ref.xbar()) < 1e-8);
    }
}

TEST_CASE("a zero objective leaves the iterate at the start point")
{
    auto part = BlockPartition::scalar_blocks(3);
    BlockSparseMatrix a(2, part, {{0, 0, 1.0}, {1, 2, -1.0}});
    ProblemSpec prob{SmoothPart::zero(part),
                     SeparablePart::all_zero(3),
                     ConjugateProxPart::l1(0.0, 2),
                     a,
                     part,
                     {1.0, -2.0, 0.5},
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};
    SolverConfig cfg;
    cfg.variant = Variant::reference;
    ReferenceRun solver(prob, cfg);
    for (int k = 0; k < 50; ++k) solver.step();
    CHECK(solver.xbar() == prob.x0);
    CHECK(solver.xtilde() == prob.x0);
}

TEST_CASE("single block reference step is the accelerated prox gradient step")
{
    auto part = BlockPartition::single_block(2);
    BlockSparseMatrix m(2, part, {{0, 0, 1.0}, {1, 1, 2.0}});
    BlockSparseMatrix a(1, part, {{0, 0, 1.0}, {0, 1, 1.0}});
    Vector b{1.0, 0.0};
    ProblemSpec prob{SmoothPart::least_squares(m, b),
                     SeparablePart::l1(0.1, 2),
                     ConjugateProxPart::l1(0.5, 1),
                     a,
                     part,
                     {0.5, -0.5},
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};
    SolverConfig cfg;
    cfg.variant = Variant::reference;
    cfg.beta1 = 2.0;
    ReferenceRun solver(prob, cfg);
    // tau0 = 1, so xhat^0 = x0 and the step is the full smoothed prox step
    REQUIRE(solver.tau0() == Catch::Approx(1.0));
    const double b0 = solver.b0()[0];
    CHECK(b0 == Catch::Approx(lipschitz_B(prob.f.lhat()[0], a.block_norm(0), 2.0)));
    Vector ydot(1, 0.0);
    SmoothingContext ctx(2.0, ydot, prob.h);
    Vector ystar = smoothed_dual(ctx, a.multiply(prob.x0));
    Vector grad = grad_f_full(prob.f, prob.x0);
    Vector aty = a.block_transpose_dot(0, ystar);
    Vector v(2);
    for (std::size_t j = 0; j < 2; ++j) v[j] = prob.x0[j] - (grad[j] + aty[j]) / b0;
    Vector expect = prob.g.prox_range(0, {v.data(), 2}, 1.0 / b0);

    solver.step();
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(solver.xtilde()[j] == Catch::Approx(expect[j]).margin(1e-14));
        CHECK(solver.xbar()[j] == Catch::Approx(expect[j]).margin(1e-14));
    }
}

TEST_CASE("first efficient step leaves u untouched")
{
    Rng meta(55);
    ProblemSpec prob = random_instance(meta, 5, false, HCase::l1);
    SolverConfig cfg;
    cfg.regime = Regime::lipschitz;
    EfficientRun solver(prob, cfg);
    solver.step();
    for (double u : solver.state().u) CHECK(u == 0.0);
    CHECK(solver.state().k == 1);
}

TEST_CASE("efficient residuals track the exact products")
{
    Rng meta(56);
    ProblemSpec prob = random_instance(meta, 8, true, HCase::equality);
    SolverConfig cfg;
    cfg.regime = Regime::constrained;
    cfg.seed = 3;
    EfficientRun solver(prob, cfg);
    for (int k = 0; k < 300; ++k) solver.step();
    const auto& st = solver.state();
    CHECK(max_rel_diff(st.r_u_h, prob.A.multiply(st.u)) < 1e-8);
    CHECK(max_rel_diff(st.r_z_h, prob.A.multiply(st.ztilde)) < 1e-8);
    CHECK(max_rel_diff(st.r_u_f, prob.f.matrix().multiply(st.u)) < 1e-8);
    CHECK(max_rel_diff(st.r_z_f, prob.f.matrix().multiply(st.ztilde)) < 1e-8);
    CHECK(st.c >= 0.0);
    CHECK(st.c <= 1.0);
}

TEST_CASE("constrained dual step closed form")
{
    Vector ydot{0.5, -0.5};
    Vector c{1.0, 2.0};
    CHECK(constrained_dual_step(ydot, 3.0, c, c) == ydot);
    Vector zero(2, 0.0);
    Vector out = constrained_dual_step(zero, 1.0, {3.0, 1.0}, {1.0, 2.0});
    CHECK(out == Vector{2.0, -1.0});

    auto eq = ConjugateProxPart::equality(c);
    SmoothingContext ctx(0.7, ydot, eq);
    Vector u{2.0, -3.0};
    Vector a = smoothed_dual(ctx, u);
    Vector b = constrained_dual_step(ydot, 0.7, u, c);
    for (std::size_t j = 0; j < 2; ++j) CHECK(a[j] == Catch::Approx(b[j]).margin(1e-15));
}

TEST_CASE("g zero mode single step matches the hand computed affine map")
{
    // f(x) = (1/2)(x1 + 2 x2)^2, h equality with A = [1 -1], c = [1]
    auto part = BlockPartition::scalar_blocks(2);
    BlockSparseMatrix m(1, part, {{0, 0, 1.0}, {0, 1, 2.0}});
    BlockSparseMatrix a(1, part, {{0, 0, 1.0}, {0, 1, -1.0}});
    ProblemSpec prob{SmoothPart::least_squares(m, {0.0}),
                     SeparablePart::all_zero(2),
                     ConjugateProxPart::equality({1.0}),
                     a,
                     part,
                     {1.0, 1.0},
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};
    SolverConfig cfg;
    cfg.variant = Variant::reference;
    cfg.g_zero_mode = true;
    cfg.regime = Regime::constrained;
    cfg.beta1 = 2.0;
    cfg.seed = 17;
    ReferenceRun solver(prob, cfg);
    REQUIRE(solver.tau0() == Catch::Approx(1.0));

    Rng rng(17);
    const int i = solver.sampler().sample(rng); // same draw the solver will take
    const double q_i = solver.sampler().q()[static_cast<std::size_t>(i)];
    // xhat^0 = x0; y* = (A x0 - c)/beta1; gradient of the sampled coordinate
    const double ystar = (0.0 - 1.0) / 2.0;
    const double mx = 3.0; // m x0
    const double grad_i = (i == 0 ? 1.0 : 2.0) * mx + (i == 0 ? 1.0 : -1.0) * ystar;
    const double b_i = prob.f.lhat()[static_cast<std::size_t>(i)] +
                       a.block_norm(i) * a.block_norm(i) / 2.0;
    const double xt_new = prob.x0[static_cast<std::size_t>(i)] - (q_i / (1.0 * b_i)) * grad_i;

    solver.step();
    CHECK(solver.xtilde()[static_cast<std::size_t>(i)] ==
          Catch::Approx(xt_new).margin(1e-14));
    // xbar^1 = xhat^0 + (tau0/q_i)(xtilde^1 - xtilde^0) on the sampled block
    CHECK(solver.xbar()[static_cast<std::size_t>(i)] ==
          Catch::Approx(prob.x0[static_cast<std::size_t>(i)] +
                        (1.0 / q_i) * (xt_new - prob.x0[static_cast<std::size_t>(i)]))
              .margin(1e-14));
}

TEST_CASE("g zero mode with one block reduces to the plain reference step")
{
    auto part = BlockPartition::single_block(3);
    Rng meta(58);
    BlockSparseMatrix m = random_matrix(meta, 4, part);
    BlockSparseMatrix a = random_matrix(meta, 2, part);
    Vector b{1.0, -1.0, 0.5, 0.0};
    ProblemSpec prob{SmoothPart::least_squares(m, b),
                     SeparablePart::all_zero(3),
                     ConjugateProxPart::l1(0.4, 2),
                     a,
                     part,
                     {0.1, 0.2, 0.3},
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};
    SolverConfig plain;
    plain.variant = Variant::reference;
    SolverConfig gz = plain;
    gz.g_zero_mode = true;
    ReferenceRun r1(prob, plain), r2(prob, gz);
    for (int k = 0; k < 200; ++k) {
        r1.step();
        r2.step();
    }
    CHECK(max_rel_diff(r2.xbar(), r1.xbar()) < 1e-12);
}

TEST_CASE("averaging coefficients form a convex combination of the z history")
{
    Rng meta(59);
    ProblemSpec prob = random_instance(meta, 7, true, HCase::l1);
    SolverConfig cfg;
    cfg.regime = Regime::lipschitz;
    cfg.seed = 5;
    cfg.variant = Variant::reference;
    ReferenceRun solver(prob, cfg);
    const double tau0 = solver.tau0();

    std::vector<Vector> history{solver.xtilde()};
    std::vector<double> gamma{1.0};
    const int kmax = 200;
    for (int k = 0; k < kmax; ++k) {
        const double tau = solver.tau();
        solver.step();
        history.push_back(solver.xtilde());
        // gamma^{k+1,l} = (1 - tau_k) gamma^{k,l} for l < k,
        // the l = k weight picks up tau_k (1 - 1/tau0), and l = k+1 gets tau_k/tau0
        for (auto& gl : gamma) gl *= 1.0 - tau;
        gamma.back() += tau - tau / tau0;
        gamma.push_back(tau / tau0);

        double sum = 0.0;
        for (double gl : gamma) {
            CHECK(gl >= -1e-12);
            sum += gl;
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-10));

        Vector combo(history[0].size(), 0.0);
        for (std::size_t l = 0; l < gamma.size(); ++l) {
            for (std::size_t j = 0; j < combo.size(); ++j) {
                combo[j] += gamma[l] * history[l][j];
            }
        }
        CHECK(max_rel_diff(combo, solver.xbar()) < 1e-8);
    }
}

TEST_CASE("restart resets the momentum bookkeeping")
{
    Rng meta(60);
    ProblemSpec prob = random_instance(meta, 6, false, HCase::equality);
    SolverConfig cfg;
    cfg.regime = Regime::constrained;
    cfg.beta1 = 1.5;

    SECTION("restart at k = 0 is idempotent on the primal state")
    {
        EfficientRun solver(prob, cfg);
        const double tau0 = solver.tau0();
        Vector ax0 = prob.A.multiply(prob.x0);
        solver.restart();
        const auto& st = solver.state();
        CHECK(st.c == 1.0);
        CHECK(st.tau == tau0);
        CHECK(st.beta_next == cfg.beta1);
        for (double u : st.u) CHECK(u == 0.0);
        // ydot moves to the current dual point y*(A x0)
        Vector expect = constrained_dual_step(Vector(ax0.size(), 0.0), cfg.beta1, ax0,
                                              prob.h.target());
        for (std::size_t j = 0; j < expect.size(); ++j) {
            CHECK(st.ydot[j] == Catch::Approx(expect[j]).margin(1e-14));
        }
    }
    SECTION("residual consistency holds after a mid-run restart")
    {
        EfficientRun solver(prob, cfg);
        for (int k = 0; k < 137; ++k) solver.step();
        solver.restart();
        const auto& st = solver.state();
        for (double r : st.r_u_h) CHECK(r == 0.0);
        for (double r : st.r_u_f) CHECK(r == 0.0);
        CHECK(max_rel_diff(st.r_z_h, prob.A.multiply(st.ztilde)) < 1e-8);
        for (int k = 0; k < 137; ++k) solver.step();
        solver.refresh_residuals();
        CHECK(std::isfinite(metrics(prob, solver.xbar()).objective));
    }
}

TEST_CASE("restart speeds up a strongly convex constrained quadratic")
{
    // full-rank least squares with one linear equality constraint
    const int p = 12;
    auto part = BlockPartition::scalar_blocks(p);
    Rng meta(61);
    std::vector<Triplet> entries;
    for (int j = 0; j < p; ++j) {
        entries.push_back({j, j, 1.0 + uniform01(meta)});
        entries.push_back({(j + 1) % p, j, 0.3 * gaussian(meta)});
    }
    BlockSparseMatrix m(p, part, entries);
    Vector b(static_cast<std::size_t>(p));
    for (auto& v : b) v = gaussian(meta);
    std::vector<Triplet> row;
    for (int j = 0; j < p; ++j) row.push_back({0, j, 1.0});
    BlockSparseMatrix a(1, part, row);
    ProblemSpec prob{SmoothPart::least_squares(m, b),
                     SeparablePart::all_zero(p),
                     ConjugateProxPart::equality({1.0}),
                     a,
                     part,
                     Vector(static_cast<std::size_t>(p), 0.0),
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};

    auto iterations_to_feasibility = [&](std::optional<long> period) {
        SolverConfig cfg;
        cfg.regime = Regime::constrained;
        cfg.max_iterations = 40000;
        cfg.checkpoint_every = p;
        cfg.restart_period = period;
        cfg.seed = 2;
        RunResult res = run(prob, cfg);
        for (const auto& rec : res.trace.records) {
            if (rec.feasibility <= 1e-6) return rec.k;
        }
        return cfg.max_iterations + 1;
    };
    CHECK(iterations_to_feasibility(p) < iterations_to_feasibility(std::nullopt));
}

TEST_CASE("run handles a zero iteration budget")
{
    Rng meta(62);
    ProblemSpec prob = random_instance(meta, 5, false, HCase::l1);
    SolverConfig cfg;
    cfg.regime = Regime::lipschitz;
    cfg.max_iterations = 0;
    RunResult res = run(prob, cfg);
    CHECK(res.x == prob.x0);
    REQUIRE(res.trace.records.size() == 1);
    CHECK(res.trace.records[0].k == 0);
}

TEST_CASE("trace records are well formed")
{
    Rng meta(63);
    ProblemSpec prob = random_instance(meta, 6, false, HCase::l1);
    SolverConfig cfg;
    cfg.regime = Regime::lipschitz;
    cfg.max_iterations = 100;
    cfg.checkpoint_every = 7;
    RunResult res = run(prob, cfg);
    long prev = -1;
    double prev_beta = std::numeric_limits<double>::infinity();
    for (const auto& rec : res.trace.records) {
        CHECK(rec.k > prev);
        prev = rec.k;
        CHECK(std::isnan(rec.subopt));       // no known optimum
        CHECK(std::isnan(rec.feasibility));  // lipschitz h has no equality residual
        CHECK(rec.beta < prev_beta + 1e-15);
        prev_beta = rec.beta;
        CHECK(rec.epoch == Catch::Approx(static_cast<double>(rec.k) / prob.partition.n()));
    }
}

TEST_CASE("trace csv is deterministic apart from wall time")
{
    Rng meta(64);
    ProblemSpec prob = random_instance(meta, 6, true, HCase::equality);
    SolverConfig cfg;
    cfg.regime = Regime::constrained;
    cfg.max_iterations = 500;
    cfg.seed = 99;

    auto csv_without_wall = [&]() {
        RunResult res = run(prob, cfg);
        std::ostringstream out;
        res.trace.write_csv(out);
        std::string all = out.str();
        std::string kept;
        std::size_t pos = 0;
        while (pos < all.size()) {
            std::size_t eol = all.find('\n', pos);
            std::string line = all.substr(pos, eol - pos);
            kept += line.substr(0, line.rfind(','));
            kept += '\n';
            pos = eol + 1;
        }
        return kept;
    };
    CHECK(csv_without_wall() == csv_without_wall());
}

TEST_CASE("invalid configurations are refused")
{
    Rng meta(65);
    ProblemSpec l1_prob = random_instance(meta, 5, false, HCase::l1);
    ProblemSpec eq_prob = random_instance(meta, 5, false, HCase::equality);
    SolverConfig cfg;

    cfg.regime = Regime::lipschitz;
    CHECK_THROWS_AS(run(eq_prob, cfg), std::invalid_argument);
    cfg.regime = Regime::constrained;
    CHECK_THROWS_AS(run(l1_prob, cfg), std::invalid_argument);

    cfg.regime = Regime::lipschitz;
    cfg.g_zero_mode = true; // g is l1, not zero
    CHECK_THROWS_AS(run(l1_prob, cfg), std::invalid_argument);
    cfg.g_zero_mode = false;

    cfg.variant = Variant::reference;
    cfg.restart_period = 10;
    CHECK_THROWS_AS(run(l1_prob, cfg), std::invalid_argument);
    cfg.restart_period.reset();

    cfg.beta1 = 0.0;
    CHECK_THROWS_AS(run(l1_prob, cfg), std::invalid_argument);
    cfg.beta1 = 1.0;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(run(l1_prob, cfg), std::invalid_argument);
    cfg.alpha = 0.0;
    cfg.max_iterations = -1;
    CHECK_THROWS_AS(run(l1_prob, cfg), std::invalid_argument);
}

TEST_CASE("the efficient variant refuses a single block")
{
    auto part = BlockPartition::single_block(2);
    BlockSparseMatrix a(1, part, {{0, 0, 1.0}, {0, 1, 1.0}});
    ProblemSpec prob{SmoothPart::zero(part),
                     SeparablePart::all_zero(2),
                     ConjugateProxPart::l1(0.5, 1),
                     a,
                     part,
                     {0.0, 0.0},
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};
    SolverConfig cfg;
    cfg.regime = Regime::lipschitz;
    CHECK_THROWS_AS(EfficientRun(prob, cfg), std::invalid_argument);
}

TEST_CASE("constrained runs respect the dual lower bound on the lp")
{
    ProblemSpec prob = degenerate_lp(10, 200);
    SolverConfig cfg;
    cfg.regime = Regime::constrained;
    cfg.max_iterations = 20000;
    cfg.checkpoint_every = 500;
    RunResult res = run(prob, cfg);
    // stationarity gives the dual certificate y = (-2, -2/d, ..., -2/d)
    const double d = 200.0;
    const double ynorm = std::sqrt(4.0 + 4.0 / d);
    for (const auto& rec : res.trace.records) {
        CHECK(rec.objective - 2.0 >= -ynorm * rec.feasibility - 1e-9);
    }
}
