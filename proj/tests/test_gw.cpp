#include "lrot/gw.hpp"

#include "lrot/lot.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace lrot;

namespace {

GwProblem random_factored_problem(Index n, Index m, Index r, std::mt19937_64& rng)
{
    const Matrix A = oracles::random_matrix(n, r, rng, -1.0, 1.0);
    const Matrix B = oracles::random_matrix(m, r, rng, -1.0, 1.0);
    return GwProblem::factored(A, B, Histogram::uniform(n), Histogram::uniform(m));
}

GwProblem densify(const GwProblem& prob)
{
    return GwProblem::dense(prob.D.to_dense(), prob.Dp.to_dense(), prob.a, prob.b);
}

}  // namespace

TEST_CASE("gw_sup_diff")
{
    Matrix D(2, 2), Dp(2, 2);
    D << 0, 1, 1, 0;
    Dp << 0, 1, 1, 0;
    CHECK(gw_sup_diff(D, Dp) == doctest::Approx(1.0));
    Dp.setConstant(5.0);
    CHECK(gw_sup_diff(D, Dp) == doctest::Approx(25.0));
}

TEST_CASE("gw_energy_bruteforce pinned values")
{
    const Histogram u2 = Histogram::uniform(2);

    SUBCASE("matched spaces under the identity alignment")
    {
        Matrix D(2, 2);
        D << 0.0, 0.7, 0.7, 0.0;
        const GwProblem prob = GwProblem::dense(D, D, u2, u2);
        const Matrix P = 0.5 * Matrix::Identity(2, 2);
        CHECK(gw_energy_bruteforce(prob, P) == doctest::Approx(0.0));
    }
    SUBCASE("2x2 product coupling")
    {
        Matrix D(2, 2);
        D << 0, 1, 1, 0;
        const GwProblem prob = GwProblem::dense(D, D, u2, u2);
        const Matrix P = Matrix::Constant(2, 2, 0.25);
        CHECK(gw_energy_bruteforce(prob, P) == doctest::Approx(0.5));
    }
    SUBCASE("constant similarity vanishes for any coupling")
    {
        std::mt19937_64 rng(81);
        const GwProblem prob =
            GwProblem::dense(Matrix::Constant(3, 3, 2.0), Matrix::Constant(4, 4, 2.0),
                             Histogram::uniform(3), Histogram::uniform(4));
        Matrix P = oracles::random_matrix(3, 4, rng);
        P /= P.sum();
        CHECK(gw_energy_bruteforce(prob, P) == doctest::Approx(0.0));
    }
    SUBCASE("size guard")
    {
        const Index n = 120;
        const GwProblem prob = GwProblem::dense(Matrix::Zero(n, n), Matrix::Zero(n, n),
                                                Histogram::uniform(n), Histogram::uniform(n));
        CHECK_THROWS_AS(gw_energy_bruteforce(prob, Matrix::Zero(n, n)),
                        std::invalid_argument);
    }
}

TEST_CASE("gw_energy_fast equals the quadruple sum on feasible couplings")
{
    std::mt19937_64 rng(82);
    for (int trial = 0; trial < 40; ++trial) {
        const Index n = 3 + static_cast<Index>(rng() % 6);
        const Index m = 3 + static_cast<Index>(rng() % 6);
        auto inst = oracles::random_feasible_coupling(n, m, rng);

        const Matrix A = oracles::random_matrix(n, 2, rng, -1.0, 1.0);
        const Matrix B = oracles::random_matrix(m, 2, rng, -1.0, 1.0);
        const GwProblem fact = GwProblem::factored(A, B, inst.a, inst.b);
        const GwProblem dense = densify(fact);

        const double brute = gw_energy_bruteforce(dense, inst.P);
        CHECK(gw_energy_fast(dense, inst.P) == doctest::Approx(brute).epsilon(1e-10));
        CHECK(gw_energy_fast(fact, inst.P) == doctest::Approx(brute).epsilon(1e-10));
        CHECK(gw_energy_general(dense, inst.P) == doctest::Approx(brute).epsilon(1e-10));
    }
}

TEST_CASE("gw_energy_fast rejects infeasible couplings")
{
    std::mt19937_64 rng(83);
    const GwProblem prob = random_factored_problem(4, 4, 2, rng);
    Matrix P = oracles::random_matrix(4, 4, rng);
    P /= 2.0 * P.sum();  // wrong mass
    CHECK_THROWS_AS(gw_energy_fast(prob, P), std::invalid_argument);
}

TEST_CASE("trace identity <D P D', P> = Tr(G G^T)")
{
    std::mt19937_64 rng(84);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 4, m = 5;
        const Matrix A = oracles::random_matrix(n, 3, rng, -1.0, 1.0);
        const Matrix B = oracles::random_matrix(m, 3, rng, -1.0, 1.0);
        const Matrix D = A * A.transpose();
        const Matrix Dp = B * B.transpose();
        const Matrix P = oracles::random_matrix(n, m, rng);
        const Matrix G = A.transpose() * P * B;
        const double direct = (D * P * Dp).cwiseProduct(P).sum();
        const double traced = (G * G.transpose()).trace();
        CHECK(traced == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("psi-lift identity for the squared similarity")
{
    std::mt19937_64 rng(85);
    const Index n = 6;
    const Matrix A = oracles::random_matrix(n, 2, rng, -1.0, 1.0);
    const Matrix D = A * A.transpose();
    const Histogram a = oracles::random_histogram(n, rng);
    const GwProblem fact = GwProblem::factored(A, A, a, a);
    const GwProblem dense = GwProblem::dense(D, D, a, a);
    const Matrix P = a.w() * a.w().transpose();
    CHECK(gw_energy_fast(fact, P) ==
          doctest::Approx(gw_energy_fast(dense, P)).epsilon(1e-12));
}

TEST_CASE("energy of a factored coupling avoids assembling it")
{
    std::mt19937_64 rng(86);
    const Index n = 6;
    const GwProblem prob = random_factored_problem(n, n, 2, rng);
    const FactoredCoupling fc = init_factors(prob.a, prob.b, 3, 2);
    const double direct = gw_energy_fast(densify(prob), assemble_coupling(fc));
    CHECK(gw_energy_fast(prob, fc) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("gw_energy_lipschitz_check")
{
    std::mt19937_64 rng(87);
    const Index n = 4;
    const Matrix A = oracles::random_matrix(n, 2, rng, -1.0, 1.0);
    const Matrix D = A * A.transpose();

    SUBCASE("equal couplings give (0, 0)")
    {
        Matrix P = oracles::random_matrix(n, n, rng);
        P /= P.sum();
        const auto check = gw_energy_lipschitz_check(D, D, P, P);
        CHECK(check.lhs == doctest::Approx(0.0));
        CHECK(check.rhs == doctest::Approx(0.0));
    }
    SUBCASE("bound holds over random simplex pairs")
    {
        for (int trial = 0; trial < 1000; ++trial) {
            Matrix P1 = oracles::random_matrix(n, n, rng, 0.0, 1.0);
            Matrix P2 = oracles::random_matrix(n, n, rng, 0.0, 1.0);
            P1 /= P1.sum();
            P2 /= P2.sum();
            const auto check = gw_energy_lipschitz_check(D, D, P1, P2);
            CHECK(check.lhs <= check.rhs);
        }
    }
    SUBCASE("constant similarity gives zero lhs")
    {
        Matrix P1 = oracles::random_matrix(n, n, rng);
        Matrix P2 = oracles::random_matrix(n, n, rng);
        P1 /= P1.sum();
        P2 /= P2.sum();
        const Matrix Dc = Matrix::Constant(n, n, 3.0);
        const auto check = gw_energy_lipschitz_check(Dc, Dc, P1, P2);
        CHECK(check.lhs == doctest::Approx(0.0));
    }
}

TEST_CASE("gw_mirror_descent")
{
    std::mt19937_64 rng(88);

    SUBCASE("constant similarity keeps the product coupling")
    {
        const Index n = 3;
        const GwProblem prob =
            GwProblem::dense(Matrix::Constant(n, n, 1.0), Matrix::Constant(n, n, 2.0),
                             Histogram::uniform(n), Histogram::uniform(n));
        GwSchedule sched;
        sched.outer_iterations = 5;
        sched.steps = {0.5};
        sched.sinkhorn_precisions = {1e-10};
        const auto res = gw_mirror_descent(prob, sched);
        const Matrix expect = prob.a.w() * prob.b.w().transpose();
        CHECK((res.coupling - expect).lpNorm<1>() <= 1e-8);
    }
    SUBCASE("identical spaces end below the product-coupling energy")
    {
        const Index n = 3;
        Matrix pts(n, 1);
        pts << 0.0, 1.0, 3.0;
        Matrix D(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                D(i, j) = std::abs(pts(i, 0) - pts(j, 0));
        const Histogram u = Histogram::uniform(n);
        const GwProblem prob = GwProblem::dense(D, D, u, u);
        GwSchedule sched;
        sched.outer_iterations = 40;
        sched.sinkhorn_precisions = {1e-10};
        const auto res = gw_mirror_descent(prob, sched);
        const double product_energy =
            gw_energy_bruteforce(prob, u.w() * u.w().transpose());
        CHECK(res.energy < product_energy);
    }
    SUBCASE("energy trace is nonincreasing within slack")
    {
        const Index n = 5;
        const GwProblem prob = densify(random_factored_problem(n, n, 2, rng));
        GwSchedule sched;
        sched.outer_iterations = 25;
        sched.sinkhorn_precisions = {1e-9};
        const auto res = gw_mirror_descent(prob, sched);
        for (size_t i = 1; i < res.report.objective.size(); ++i)
            CHECK(res.report.objective[i] <=
                  res.report.objective[i - 1] + 10.0 * 1e-9);
    }
}

TEST_CASE("gw_quadratic agrees with the dense path iteration by iteration")
{
    std::mt19937_64 rng(89);
    const Index n = 6;
    const GwProblem fact = random_factored_problem(n, n, 2, rng);
    const GwProblem dense = densify(fact);
    GwSchedule sched;
    sched.outer_iterations = 12;
    sched.sinkhorn_precisions = {1e-9};

    const auto res_f = gw_quadratic(fact, sched);
    const auto res_d = gw_mirror_descent(dense, sched);
    CHECK((res_f.coupling - res_d.coupling).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(res_f.energy == doctest::Approx(res_d.energy).epsilon(1e-8));
    REQUIRE(res_f.report.objective.size() == res_d.report.objective.size());
    for (size_t i = 0; i < res_f.report.objective.size(); ++i)
        CHECK(res_f.report.objective[i] ==
              doctest::Approx(res_d.report.objective[i]).epsilon(1e-8));
}

TEST_CASE("gw_quadratic on matched spaces drives the energy down")
{
    std::mt19937_64 rng(90);
    const Index n = 8;
    const Matrix A = oracles::random_matrix(n, 2, rng, -1.0, 1.0);
    const Histogram u = Histogram::uniform(n);
    const GwProblem prob = GwProblem::factored(A, A, u, u);
    GwSchedule sched;
    sched.outer_iterations = 30;
    sched.sinkhorn_precisions = {1e-9};
    const auto res = gw_quadratic(prob, sched);
    const double product_energy =
        gw_energy_bruteforce(densify(prob), u.w() * u.w().transpose());
    CHECK(res.energy <= 0.5 * product_energy);
}

TEST_CASE("gw_schedule_from_target")
{
    SUBCASE("single iteration takes the base branch")
    {
        const auto sched = gw_schedule_from_target(0.5, 1, 1.0, 2.0, 1.0, 4, 4);
        REQUIRE(sched.sinkhorn_precisions.size() == 1);
        // delta_0 = delta / (2 L I) on both branches
        const double delta0 = 0.5 / 2.0;
        const double mu0 =
            1.0 * delta0 * delta0 /
            (200.0 * (2.0 + 1.0 + std::log(2.0 * 4 / (delta0 * delta0))));
        CHECK(sched.sinkhorn_precisions[0] == doctest::Approx(mu0).epsilon(1e-14));
        CHECK(sched.steps[0] == doctest::Approx(1.0));
    }
    SUBCASE("R equal to eps keeps the precision sequence constant")
    {
        const auto sched = gw_schedule_from_target(0.3, 4, 1.0, 1.5, 1.5, 5, 5);
        for (size_t l = 1; l < sched.sinkhorn_precisions.size(); ++l)
            CHECK(sched.sinkhorn_precisions[l] ==
                  doctest::Approx(sched.sinkhorn_precisions[0]));
    }
    SUBCASE("closed-form golden values")
    {
        const auto sched = gw_schedule_from_target(0.1, 2, 1.0, 2.0, 1.0, 4, 4);
        REQUIRE(sched.sinkhorn_precisions.size() == 2);
        // delta_l = min(0.025, 0.025 / 2^{2-(l+1)})
        const double d0 = 0.0125, d1 = 0.025;
        const double mu0 =
            d0 * d0 / (200.0 * (3.0 + std::log(8.0 / (d0 * d0))));
        const double mu1 =
            d1 * d1 / (200.0 * (3.0 + std::log(8.0 / (d1 * d1))));
        CHECK(sched.sinkhorn_precisions[0] == doctest::Approx(mu0).epsilon(1e-14));
        CHECK(sched.sinkhorn_precisions[1] == doctest::Approx(mu1).epsilon(1e-14));
    }
    SUBCASE("invalid inputs")
    {
        CHECK_THROWS_AS(gw_schedule_from_target(0.1, 2, 1.0, 2.0, 0.0, 4, 4),
                        std::invalid_argument);
        CHECK_THROWS_AS(gw_schedule_from_target(0.0, 2, 1.0, 2.0, 1.0, 4, 4),
                        std::invalid_argument);
    }
}

TEST_CASE("theorem schedule tracks the high-precision oracle run")
{
    std::mt19937_64 rng(91);
    const Index n = 10;
    const Matrix A = oracles::random_matrix(n, 2, rng, -0.5, 0.5);
    const Matrix B = oracles::random_matrix(n, 2, rng, -0.5, 0.5);
    const Histogram u = Histogram::uniform(n);
    const GwProblem prob = GwProblem::factored(A, B, u, u);

    const Matrix D = prob.D.to_dense();
    const Matrix Dp = prob.Dp.to_dense();
    const double L = gw_sup_diff(D, Dp);
    const double R = 4.0 * CostOperator::dense(D).spectral_norm(50) *
                     CostOperator::dense(Dp).spectral_norm(50);
    const double eps = 1.0;
    const double delta = 0.1;
    const long I = 3;

    GwSchedule theorem = gw_schedule_from_target(delta, I, L, R, eps, n, n);
    GwSchedule oracle = theorem;
    oracle.sinkhorn_precisions = {1e-12};

    const auto approx = gw_quadratic(prob, theorem);
    const auto exact = gw_quadratic(prob, oracle);
    CHECK(std::abs(approx.energy - exact.energy) <= delta);
    CHECK((approx.coupling - exact.coupling).lpNorm<1>() <= delta / (2.0 * L));
}

TEST_CASE("gw_fixed_smoothness closed form")
{
    CHECK(gw_fixed_smoothness(Vector::Constant(2, 0.5), 0.0, 2) == doctest::Approx(0.0));
    CHECK(gw_fixed_smoothness(Vector::Constant(2, 0.5), 1.0, 2) == doctest::Approx(48.0));
    const double base = gw_fixed_smoothness(Vector::Constant(2, 0.5), 1.0, 2);
    Vector g(2);
    g << 0.25, 0.75;
    CHECK(gw_fixed_smoothness(g, 1.0, 2) == doctest::Approx(2.0 * base));
    CHECK_THROWS_AS(gw_fixed_smoothness(Vector::Zero(2), 1.0, 2), std::invalid_argument);
}

TEST_CASE("fixed-marginal GW gradient matches finite differences")
{
    std::mt19937_64 rng(92);
    const Index n = 5, r = 2;
    const GwProblem prob = random_factored_problem(n, n, 2, rng);
    const FactoredCoupling fc = init_factors(prob.a, prob.b, r, 9);
    const Vector g = fc.g;

    const auto grad = gw_lowrank_gradient(prob, fc.Q, fc.R, g);

    const GwProblem dense = densify(prob);
    auto energy = [&](const Vector& z) {
        oracles::TripleDims d{n, n, r};
        Matrix Q, R;
        Vector gz;
        oracles::unflatten(d, z, Q, R, gz);
        const Matrix P = Q * g.cwiseInverse().asDiagonal() * R.transpose();
        return gw_energy_general(dense, P);
    };
    Vector z0 = oracles::flatten(fc.Q, fc.R, g);
    const Vector fd = oracles::central_diff(energy, z0, 1e-6);
    const Vector an = oracles::flatten(grad.q, grad.r, Vector::Zero(r));
    for (Index i = 0; i < static_cast<Index>(n * r * 2); ++i)
        CHECK(an[i] == doctest::Approx(fd[i]).epsilon(1e-5));
}

TEST_CASE("gw_lowrank_fixed_marginal")
{
    std::mt19937_64 rng(93);

    SUBCASE("rank one pins the product coupling")
    {
        const GwProblem prob = random_factored_problem(5, 5, 2, rng);
        GwLowRankConfig cfg;
        cfg.max_outer = 5;
        cfg.gamma = 1.0;
        const auto res = gw_lowrank_fixed_marginal(prob, Histogram::uniform(1), cfg);
        const Matrix P = res.Q * res.R.transpose() / 1.0;
        const Matrix expect = prob.a.w() * prob.b.w().transpose();
        CHECK((P - expect).lpNorm<1>() <= 1e-7);
        const double product_energy = gw_energy_bruteforce(densify(prob), expect);
        CHECK(res.energy == doctest::Approx(product_energy).epsilon(1e-6));
    }
    SUBCASE("matched spaces with full rank beat the product coupling")
    {
        const Index n = 6;
        const Matrix A = oracles::random_matrix(n, 2, rng, -1.0, 1.0);
        const Histogram u = Histogram::uniform(n);
        const GwProblem prob = GwProblem::factored(A, A, u, u);
        GwLowRankConfig cfg;
        cfg.max_outer = 60;
        cfg.seed = 3;
        const auto res = gw_lowrank_fixed_marginal(prob, Histogram::uniform(n), cfg);
        const double product_energy =
            gw_energy_bruteforce(densify(prob), u.w() * u.w().transpose());
        CHECK(res.energy <= product_energy + 1e-12);
    }
    SUBCASE("assembled iterates keep the outer marginals")
    {
        const Index n = 6, r = 3;
        const GwProblem prob = random_factored_problem(n, n, 2, rng);
        GwLowRankConfig cfg;
        cfg.max_outer = 10;
        cfg.sinkhorn_tol = 1e-9;
        cfg.gamma = 0.5;
        const auto res = gw_lowrank_fixed_marginal(prob, Histogram::uniform(r), cfg);
        const Vector g = Vector::Constant(r, 1.0 / static_cast<double>(r));
        const Matrix P = res.Q * g.cwiseInverse().asDiagonal() * res.R.transpose();
        CHECK((P.rowwise().sum() - prob.a.w()).lpNorm<1>() <= 1e-8);
        for (double v : res.report.marginal_violation)
            CHECK(v <= 2.0 * 1e-9 * 1.01);
    }
}
