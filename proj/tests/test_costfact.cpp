#include "lrot/costfact.hpp"

#include "lrot/kernels.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace lrot;

namespace {

PointCloud cloud(const Matrix& pts, Metric metric = Metric::Euclidean, double p = 2.0)
{
    return PointCloud{pts, metric, p};
}

}  // namespace

TEST_CASE("sqeuclid_factorization")
{
    SUBCASE("single identical point gives a zero matrix")
    {
        Matrix one = Matrix::Zero(1, 3);
        const CostOperator op = sqeuclid_factorization(cloud(one), cloud(one));
        CHECK(op.factor_dim() == 5);
        CHECK(op.to_dense()(0, 0) == doctest::Approx(0.0));
    }
    SUBCASE("hand-checked 1-D clouds")
    {
        Matrix X(2, 1), Y(2, 1);
        X << 0.0, 1.0;
        Y << 0.0, 2.0;
        const Matrix D = sqeuclid_factorization(cloud(X), cloud(Y)).to_dense();
        Matrix expect(2, 2);
        expect << 0.0, 4.0, 1.0, 1.0;
        CHECK((D - expect).lpNorm<Eigen::Infinity>() <= 1e-14);
    }
    SUBCASE("matches the dense pairwise oracle on random clouds")
    {
        std::mt19937_64 rng(71);
        const Matrix X = oracles::random_matrix(20, 3, rng, -2.0, 2.0);
        const Matrix Y = oracles::random_matrix(17, 3, rng, -2.0, 2.0);
        const Matrix D = sqeuclid_factorization(cloud(X), cloud(Y)).to_dense();
        const Matrix ref = kernels::serial::pairwise_sqeuclid(X, Y);
        CHECK((D - ref).lpNorm<Eigen::Infinity>() <= 1e-12 * ref.maxCoeff());
    }
    SUBCASE("dimension mismatch is rejected")
    {
        CHECK_THROWS_AS(
            sqeuclid_factorization(cloud(Matrix::Zero(2, 2)), cloud(Matrix::Zero(2, 3))),
            std::invalid_argument);
    }
}

TEST_CASE("pnorm_cost")
{
    SUBCASE("p = 2 is the square root of the squared-Euclidean matrix")
    {
        std::mt19937_64 rng(72);
        const Matrix X = oracles::random_matrix(6, 2, rng, -1.0, 1.0);
        const Matrix Y = oracles::random_matrix(5, 2, rng, -1.0, 1.0);
        const Matrix C2 = pnorm_cost(cloud(X), cloud(Y), 2.0).to_dense();
        const Matrix D = sqeuclid_factorization(cloud(X), cloud(Y)).to_dense();
        CHECK((C2.array().square() - D.array()).abs().maxCoeff() <= 1e-12);
    }
    SUBCASE("identical clouds have a zero diagonal")
    {
        std::mt19937_64 rng(73);
        const Matrix X = oracles::random_matrix(5, 2, rng);
        const Matrix C = pnorm_cost(cloud(X), cloud(X), 1.5).to_dense();
        CHECK(C.diagonal().lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("hand value at p = 1.5")
    {
        Matrix X = Matrix::Zero(1, 2);
        Matrix Y = Matrix::Ones(1, 2);
        const Matrix C = pnorm_cost(cloud(X), cloud(Y), 1.5).to_dense();
        CHECK(C(0, 0) == doctest::Approx(std::pow(2.0, 2.0 / 3.0)));
    }
    SUBCASE("p below one is rejected")
    {
        CHECK_THROWS_AS(pnorm_cost(cloud(Matrix::Zero(1, 1)), cloud(Matrix::Zero(1, 1)), 0.5),
                        std::invalid_argument);
    }
}

TEST_CASE("factorization_error")
{
    std::mt19937_64 rng(74);

    SUBCASE("exact factorization reports zero error")
    {
        const Matrix M = oracles::random_matrix(6, 2, rng);
        const Matrix N = oracles::random_matrix(5, 2, rng);
        const Matrix D = M * N.transpose();
        const auto err = factorization_error(D, M, N);
        CHECK(err.frob_err_sq <= 1e-20);
        CHECK(err.best_rank_r_err_sq >= 0.0);
    }
    SUBCASE("rank-one matrix with its exact SVD factors")
    {
        const Vector u = oracles::random_positive_vector(6, rng);
        const Vector v = oracles::random_positive_vector(4, rng);
        const Matrix D = u * v.transpose();
        const auto err = factorization_error(D, Matrix(u), Matrix(v));
        CHECK(err.frob_err_sq <= 1e-20);
        CHECK(err.best_rank_r_err_sq <= 1e-20);
    }
    SUBCASE("never beats the SVD truncation")
    {
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix D = oracles::random_matrix(10, 8, rng, -1.0, 1.0);
            const Matrix M = oracles::random_matrix(10, 3, rng, -1.0, 1.0);
            const Matrix N = oracles::random_matrix(8, 3, rng, -1.0, 1.0);
            const auto err = factorization_error(D, M, N);
            CHECK(err.frob_err_sq >= err.best_rank_r_err_sq - 1e-12);
        }
    }
}

TEST_CASE("lr_distance")
{
    std::mt19937_64 rng(75);

    SUBCASE("identical points give an exactly recoverable zero matrix")
    {
        const Matrix X = Matrix::Ones(12, 2);
        const auto res = lr_distance(cloud(X), cloud(X), 2, 0.25, 1);
        CHECK(res.degenerate_sampling);
        CHECK((res.M * res.N.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
    SUBCASE("output dimensions and evaluation budget")
    {
        const Index n = 40, m = 35, r = 3;
        const double gamma = 0.25;
        const Matrix X = oracles::random_matrix(n, 2, rng, -1.0, 1.0);
        const Matrix Y = oracles::random_matrix(m, 2, rng, -1.0, 1.0);
        const auto res = lr_distance(cloud(X), cloud(Y), r, gamma, 7);
        CHECK(res.M.rows() == n);
        CHECK(res.M.cols() == r);
        CHECK(res.N.rows() == m);
        CHECK(res.N.cols() == r);
        const auto t = static_cast<long>(r / gamma);
        CHECK(res.metric_evaluations <= 4 * (n + m) * t * t);
    }
    SUBCASE("frobenius bound against the dense SVD oracle")
    {
        const Index n = 40, r = 4;
        const double gamma = 0.2;
        const Matrix X = oracles::random_matrix(n, 2, rng, -1.0, 1.0);
        const Matrix Y = oracles::random_matrix(n, 2, rng, -1.0, 1.0);
        const Matrix D = kernels::serial::pairwise_pnorm(X, Y, 2.0);
        int hold = 0;
        const int runs = 20;
        for (int seed = 0; seed < runs; ++seed) {
            const auto res = lr_distance(cloud(X), cloud(Y), r, gamma, seed);
            const auto err = factorization_error(D, res.M, res.N);
            if (err.frob_err_sq <=
                err.best_rank_r_err_sq + gamma * D.squaredNorm() + 1e-12)
                ++hold;
        }
        CHECK(hold >= runs - 1);
    }
    SUBCASE("graph metric through a wrapped distance matrix")
    {
        const Matrix X = oracles::random_matrix(16, 2, rng, -1.0, 1.0);
        Matrix W = kernels::serial::pairwise_sqeuclid(X, X);
        kernels::serial::floyd_warshall(W);
        const auto res = lr_distance(
            [&W](Index i, Index j) { return W(i, j); }, 16, 16, 2, 0.25, 3);
        CHECK(res.M.rows() == 16);
        CHECK(res.N.rows() == 16);
    }
    SUBCASE("invalid sampling budget is rejected")
    {
        const Matrix X = oracles::random_matrix(5, 2, rng);
        CHECK_THROWS_AS(lr_distance(cloud(X), cloud(X), 3, 0.25, 1),
                        std::invalid_argument);  // t = 12 > n = 5
        CHECK_THROWS_AS(lr_distance(cloud(X), cloud(X), 2, 3.0, 1),
                        std::invalid_argument);  // t = 0 < r
    }
}

TEST_CASE("metric_between")
{
    std::mt19937_64 rng(76);
    const Matrix X = oracles::random_matrix(4, 2, rng);
    const Matrix Y = oracles::random_matrix(4, 2, rng);

    const auto d_euc = metric_between(cloud(X), cloud(Y));
    CHECK(d_euc(1, 2) == doctest::Approx((X.row(1) - Y.row(2)).norm()));

    const auto d_sq = metric_between(cloud(X, Metric::SqEuclidean),
                                     cloud(Y, Metric::SqEuclidean));
    CHECK(d_sq(0, 3) == doctest::Approx((X.row(0) - Y.row(3)).squaredNorm()));

    const auto d_p = metric_between(cloud(X, Metric::PNorm, 1.5),
                                    cloud(Y, Metric::PNorm, 1.5));
    CHECK(d_p(2, 2) ==
          doctest::Approx(kernels::serial::pairwise_pnorm(X, Y, 1.5)(2, 2)));

    CHECK_THROWS_AS(metric_between(cloud(X, Metric::GraphShortestPath),
                                   cloud(Y, Metric::GraphShortestPath)),
                    std::invalid_argument);
}
