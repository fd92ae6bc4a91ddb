#include "lrot/costfact.hpp"

#include "lrot/kernels.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace lrot {

namespace {

constexpr double kProbFloor = 1e-30;

}  // namespace

MetricFn metric_between(const PointCloud& X, const PointCloud& Y)
{
    require(X.dim() == Y.dim(), "metric_between: dimension mismatch");
    require(X.metric == Y.metric, "metric_between: clouds carry different metrics");
    // captured by value so the evaluator outlives its cloud arguments
    switch (X.metric) {
    case Metric::Euclidean:
        return [px = X.points, py = Y.points](Index i, Index j) {
            return (px.row(i) - py.row(j)).norm();
        };
    case Metric::SqEuclidean:
        return [px = X.points, py = Y.points](Index i, Index j) {
            return (px.row(i) - py.row(j)).squaredNorm();
        };
    case Metric::PNorm: {
        const double p = X.p;
        require(p >= 1.0, "metric_between: p must be >= 1");
        return [px = X.points, py = Y.points, p](Index i, Index j) {
            double acc = 0.0;
            for (Index k = 0; k < px.cols(); ++k)
                acc += std::pow(std::abs(px(i, k) - py(j, k)), p);
            return std::pow(acc, 1.0 / p);
        };
    }
    case Metric::GraphShortestPath:
        break;
    }
    throw std::invalid_argument(
        "metric_between: graph clouds have no pointwise metric; wrap the "
        "precomputed distance matrix in a MetricFn");
}

CostOperator sqeuclid_factorization(const PointCloud& X, const PointCloud& Y)
{
    require(X.dim() == Y.dim(), "sqeuclid_factorization: dimension mismatch");
    const Index n = X.size(), m = Y.size(), d = X.dim();
    Matrix A(n, d + 2), B(m, d + 2);
    A.col(0) = X.points.rowwise().squaredNorm();
    A.col(1) = Vector::Ones(n);
    A.rightCols(d) = -2.0 * X.points;
    B.col(0) = Vector::Ones(m);
    B.col(1) = Y.points.rowwise().squaredNorm();
    B.rightCols(d) = Y.points;
    return CostOperator::factored(std::move(A), std::move(B));
}

CostOperator pnorm_cost(const PointCloud& X, const PointCloud& Y, double p)
{
    require(p >= 1.0, "pnorm_cost: p must be >= 1");
    return CostOperator::dense(kernels::pairwise_pnorm(X.points, Y.points, p));
}

namespace {

// First nonzero entry of each column made nonnegative.
void fix_signs(Matrix& U)
{
    for (Index j = 0; j < U.cols(); ++j) {
        for (Index i = 0; i < U.rows(); ++i) {
            if (U(i, j) != 0.0) {
                if (U(i, j) < 0.0)
                    U.col(j) = -U.col(j);
                break;
            }
        }
    }
}

std::vector<Index> sample_indices(std::mt19937_64& rng, const Vector& weights, Index count)
{
    std::discrete_distribution<Index> dist(weights.data(), weights.data() + weights.size());
    std::vector<Index> out(static_cast<size_t>(count));
    for (auto& idx : out)
        idx = dist(rng);
    return out;
}

}  // namespace

LrDistanceResult lr_distance(const MetricFn& d, Index n, Index m, Index r,
                             double gamma, unsigned long seed)
{
    require(r >= 1, "lr_distance: rank must be >= 1");
    require(gamma > 0.0, "lr_distance: gamma must be positive");
    const Index t = static_cast<Index>(std::floor(static_cast<double>(r) / gamma));
    require(t >= r, "lr_distance: t = floor(r/gamma) must be >= r");
    require(t <= std::min(n, m), "lr_distance: t = floor(r/gamma) exceeds min(n,m)");

    LrDistanceResult res;
    long evals = 0;
    auto dist = [&](Index i, Index j) {
        ++evals;
        return d(i, j);
    };

    std::mt19937_64 rng(seed);
    const Index i_star = std::uniform_int_distribution<Index>(0, n - 1)(rng);
    const Index j_star = std::uniform_int_distribution<Index>(0, m - 1)(rng);

    // Row sampling probabilities from the two anchors.
    Vector row_anchor(m);
    for (Index j = 0; j < m; ++j)
        row_anchor[j] = dist(i_star, j);
    const double anchor_sq = row_anchor[j_star] * row_anchor[j_star];
    const double anchor_mean_sq = row_anchor.squaredNorm() / static_cast<double>(m);
    Vector p(n);
    for (Index i = 0; i < n; ++i) {
        const double dij = dist(i, j_star);
        p[i] = dij * dij + anchor_sq + anchor_mean_sq;
    }
    const double p_total = p.sum();
    if (p_total <= 0.0) {
        res.degenerate_sampling = true;
        p.setConstant(1.0 / static_cast<double>(n));
    } else {
        p /= p_total;
    }

    const auto rows = sample_indices(rng, p, t);
    Matrix S(t, m);
    for (Index k = 0; k < t; ++k) {
        const double scale =
            std::max(std::sqrt(static_cast<double>(t) * p[rows[static_cast<size_t>(k)]]),
                     kProbFloor);
        for (Index j = 0; j < m; ++j)
            S(k, j) = dist(rows[static_cast<size_t>(k)], j) / scale;
    }

    // Column resampling by squared norm.
    Vector q = S.colwise().squaredNorm().transpose();
    const double q_total = q.sum();
    if (q_total <= 0.0)
        q.setConstant(1.0 / static_cast<double>(m));
    else
        q /= q_total;
    const auto cols = sample_indices(rng, q, t);
    Matrix W(t, t);
    for (Index k = 0; k < t; ++k) {
        const double scale =
            std::max(std::sqrt(static_cast<double>(t) * q[cols[static_cast<size_t>(k)]]),
                     kProbFloor);
        W.col(k) = S.col(cols[static_cast<size_t>(k)]) / scale;
    }

    Eigen::BDCSVD<Matrix> svd_w(W, Eigen::ComputeThinU);
    Matrix U1 = svd_w.matrixU();
    fix_signs(U1);
    Matrix N0 = U1.leftCols(r);  // t x r
    const double wn_norm = (W.transpose() * N0).norm();
    res.N = S.transpose() * N0 / std::max(wn_norm, kProbFloor);  // m x r

    // Regression step on a uniform column sample.
    std::uniform_int_distribution<Index> uniform_col(0, m - 1);
    std::vector<Index> reg_cols(static_cast<size_t>(t));
    for (auto& idx : reg_cols)
        idx = uniform_col(rng);
    Matrix Dt(n, t);
    const double sqrt_t = std::sqrt(static_cast<double>(t));
    for (Index k = 0; k < t; ++k)
        for (Index i = 0; i < n; ++i)
            Dt(i, k) = dist(i, reg_cols[static_cast<size_t>(k)]) / sqrt_t;

    Eigen::BDCSVD<Matrix> svd_g(res.N.transpose() * res.N,
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix U2 = svd_g.matrixU();
    fix_signs(U2);
    const Vector sv = svd_g.singularValues();
    const double sv_floor = std::max(sv[0] * 1e-12, kProbFloor);
    for (Index j = 0; j < U2.cols(); ++j)
        U2.col(j) /= std::max(sv[j], sv_floor);

    Matrix Nt(r, t);  // sampled columns of N^T
    for (Index k = 0; k < t; ++k)
        Nt.col(k) = res.N.row(reg_cols[static_cast<size_t>(k)]).transpose();
    const Matrix Bs = U2.transpose() * Nt / sqrt_t;  // r x t
    Matrix gram = Bs * Bs.transpose();
    const double ridge = 1e-12 * gram.trace() / static_cast<double>(t);
    gram.diagonal().array() += ridge;
    const Matrix A = gram.ldlt().solve(Matrix::Identity(r, r));
    const Matrix Z = A * Bs * Dt.transpose();  // r x n
    res.M = Z.transpose() * U2.transpose();    // n x r

    res.metric_evaluations = evals;
    return res;
}

LrDistanceResult lr_distance(const PointCloud& X, const PointCloud& Y, Index r,
                             double gamma, unsigned long seed)
{
    return lr_distance(metric_between(X, Y), X.size(), Y.size(), r, gamma, seed);
}

FactorizationError factorization_error(const Matrix& D, const Matrix& M, const Matrix& N)
{
    require(M.rows() == D.rows() && N.rows() == D.cols() && M.cols() == N.cols(),
            "factorization_error: shape mismatch");
    FactorizationError err;
    err.frob_err_sq = (D - M * N.transpose()).squaredNorm();
    Eigen::BDCSVD<Matrix> svd(D);
    const Vector sv = svd.singularValues();
    double tail = 0.0;
    for (Index k = M.cols(); k < sv.size(); ++k)
        tail += sv[k] * sv[k];
    err.best_rank_r_err_sq = tail;
    return err;
}

}  // namespace lrot
