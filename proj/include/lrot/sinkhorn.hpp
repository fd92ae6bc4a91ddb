#pragma once

#include "lrot/core.hpp"

namespace lrot {

// Positive diagonal scalings; Diag(u) K Diag(v) is the implied coupling.
struct ScalingPair {
    Vector u;
    Vector v;
    long iterations = 0;
    double violation = 0.0;
};

struct SinkhornOptions {
    long max_iterations = 1'000'000;
    // The stopping quantity costs a matvec pair, so it is checked
    // periodically rather than every iteration.
    int check_every = 10;
    bool log_domain = false;  // stabilized variant for small eps
    // When set, the stopping quantity observed at each check is appended.
    std::vector<double>* violation_trace = nullptr;
};

// Alternating scaling iterations v <- b / K^T u, u <- a / K v until
// ||u . Kv - a||_1 + ||v . K^T u - b||_1 < delta. The kernel must be
// entry-wise positive (or factored with positive factors). u0 is a warm
// start; pass ones when none is available.
ScalingPair sinkhorn(const CostOperator& K, const Histogram& a, const Histogram& b,
                     double delta, const Vector& u0, const SinkhornOptions& opts = {});
ScalingPair sinkhorn(const CostOperator& K, const Histogram& a, const Histogram& b,
                     double delta, const SinkhornOptions& opts = {});

struct EntropicOtResult {
    Matrix coupling;  // rounded onto the transport polytope
    double cost = 0.0;                   // <C, P>
    double regularized_objective = 0.0;  // <C, P> - eps H(P)
    SolverReport report;
};

// Entropic OT: forms K = exp(-C/eps), runs Sinkhorn to precision delta,
// rounds the scaled kernel onto Pi(a,b).
EntropicOtResult entropic_ot(const CostOperator& C, const Histogram& a,
                             const Histogram& b, double eps, double delta,
                             const SinkhornOptions& opts = {});

// Rounds a nonnegative matrix with approximate marginals onto Pi(a,b):
// rows are scaled down to at most a, columns to at most b, and the
// remaining mass is filled with the rank-one correction
// err_a err_b^T / ||err_a||_1. The output is feasible to round-off and
// ||P - round(P)||_1 is at most the marginal violation of P.
Matrix round_to_polytope(const Matrix& P, const Histogram& a, const Histogram& b);

}  // namespace lrot
