#pragma once

#include "lrot/common.hpp"

namespace lrot::kernels {

// Data-parallel inner loops shared by the solvers. Every kernel has a
// serial reference implementation in kernels::serial used by the tests
// and the benchmark target; results are identical (same per-element
// arithmetic, fixed accumulation order) for any thread count.

// K = exp(-M / eps), entry-wise.
Matrix exp_neg_scaled(const Matrix& M, double eps);

// exp(-gamma * M - coeff * log(max(F, floor))), entry-wise.
// This is the mirror-descent kernel map: with coeff = gamma*eps - 1 it
// turns a gradient block M and the current factor F into the next
// scaling kernel F^(1-gamma*eps) * exp(-gamma*M).
Matrix md_factor(const Matrix& M, const Matrix& F, double gamma, double coeff,
                 double floor = 1e-200);

// Pairwise squared Euclidean distances between row-point clouds.
Matrix pairwise_sqeuclid(const Matrix& X, const Matrix& Y);

// Pairwise p-norm distances, p >= 1 (fractional p allowed).
Matrix pairwise_pnorm(const Matrix& X, const Matrix& Y, double p);

// Quadruple-sum Gromov-Wasserstein energy
//   sum_{i,i',j,j'} (D[i,i'] - Dp[j,j'])^2 P[i,j] P[i',j'].
// Accumulation is per-(i,j) row partials summed in index order, so the
// value does not depend on the thread count.
double gw_energy_quad(const Matrix& D, const Matrix& Dp, const Matrix& P);

// All-pairs shortest paths, in place. W holds edge weights (inf for
// missing edges); on return W[i,j] is the shortest-path distance.
void floyd_warshall(Matrix& W);

// Row- and column-wise log(sum(exp(.))) with max-shift.
Vector logsumexp_rows(const Matrix& M);
Vector logsumexp_cols(const Matrix& M);

namespace serial {

Matrix exp_neg_scaled(const Matrix& M, double eps);
Matrix md_factor(const Matrix& M, const Matrix& F, double gamma, double coeff,
                 double floor = 1e-200);
Matrix pairwise_sqeuclid(const Matrix& X, const Matrix& Y);
Matrix pairwise_pnorm(const Matrix& X, const Matrix& Y, double p);
double gw_energy_quad(const Matrix& D, const Matrix& Dp, const Matrix& P);
void floyd_warshall(Matrix& W);
Vector logsumexp_rows(const Matrix& M);
Vector logsumexp_cols(const Matrix& M);

}  // namespace serial

}  // namespace lrot::kernels
