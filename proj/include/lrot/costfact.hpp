#pragma once

#include "lrot/core.hpp"

#include <functional>

namespace lrot {

enum class Metric {
    Euclidean,
    SqEuclidean,
    PNorm,              // exponent carried by PointCloud::p
    GraphShortestPath,  // distances come from a precomputed dense matrix
};

struct PointCloud {
    Matrix points;  // one point per row
    Metric metric = Metric::Euclidean;
    double p = 2.0;

    Index size() const { return points.rows(); }
    Index dim() const { return points.cols(); }
};

// Pointwise metric between two clouds; GraphShortestPath clouds cannot be
// evaluated this way and are wrapped via a MetricFn over a dense matrix.
using MetricFn = std::function<double(Index, Index)>;
MetricFn metric_between(const PointCloud& X, const PointCloud& Y);

// Exact factorization of the squared Euclidean distance matrix:
// D = p 1^T + 1 q^T - 2 X Y^T = A B^T with A = [p, 1, -2X], B = [1, q, Y],
// inner dimension dim + 2.
CostOperator sqeuclid_factorization(const PointCloud& X, const PointCloud& Y);

// Dense p-norm cost, p >= 1.
CostOperator pnorm_cost(const PointCloud& X, const PointCloud& Y, double p);

struct LrDistanceResult {
    Matrix M;  // n x r
    Matrix N;  // m x r
    long metric_evaluations = 0;
    bool degenerate_sampling = false;  // all-zero row probabilities; uniform fallback
};

// Sublinear randomized factorization of a distance matrix: row sampling
// biased by anchor distances, column resampling by squared norm, SVD of
// the doubly-sampled sketch, then a sampled regression for the left
// factor. With t = floor(r/gamma) samples the result satisfies
// ||D - M N^T||_F^2 <= ||D - D_r||_F^2 + gamma ||D||_F^2 with probability
// at least 0.99.
LrDistanceResult lr_distance(const MetricFn& d, Index n, Index m, Index r,
                             double gamma, unsigned long seed);
LrDistanceResult lr_distance(const PointCloud& X, const PointCloud& Y, Index r,
                             double gamma, unsigned long seed);

struct FactorizationError {
    double frob_err_sq = 0.0;         // ||D - M N^T||_F^2
    double best_rank_r_err_sq = 0.0;  // ||D - D_r||_F^2 by dense SVD truncation
};
FactorizationError factorization_error(const Matrix& D, const Matrix& M, const Matrix& N);

}  // namespace lrot
