#pragma once

#include "lrot/core.hpp"
#include "lrot/sinkhorn.hpp"

#include <vector>

namespace lrot {

// Pair of intra-space similarity matrices with their marginals. Factored
// operators are PSD by construction (D = A A^T).
struct GwProblem {
    CostOperator D;   // n x n
    CostOperator Dp;  // m x m
    Histogram a;
    Histogram b;

    static GwProblem dense(Matrix D, Matrix Dp, Histogram a, Histogram b);
    static GwProblem factored(Matrix A, Matrix B, Histogram a, Histogram b);
    bool is_factored() const { return D.is_factored(); }
};

struct GwSchedule {
    long outer_iterations = 30;  // I
    // Per-iteration Sinkhorn precisions mu_l; a single entry is reused.
    std::vector<double> sinkhorn_precisions{1e-9};
    // Step sizes gamma_l; empty means the constant 1/(2L) default. In
    // fixed-epsilon mode gamma_l = 1/epsilon.
    std::vector<double> steps;
    bool warm_start = true;  // carry (u, v) across outer iterations

    double precision_at(long l) const
    {
        if (sinkhorn_precisions.empty())
            return 1e-9;
        const size_t i = std::min(static_cast<size_t>(l), sinkhorn_precisions.size() - 1);
        return sinkhorn_precisions[i];
    }
    double step_at(long l, double fallback) const
    {
        if (steps.empty())
            return fallback;
        return steps[std::min(static_cast<size_t>(l), steps.size() - 1)];
    }
};

struct GwResult {
    Matrix coupling;
    double energy = 0.0;
    SolverReport report;
};

// sup over entry pairs of |D_ik - D'_jl|^2, the energy Lipschitz constant.
double gw_sup_diff(const Matrix& D, const Matrix& Dp);

// Exact quadruple sum; guarded to n*m <= 10^4.
double gw_energy_bruteforce(const GwProblem& prob, const Matrix& P);

// Quadratic-time energy via
//   E(P) = <f(D) a, a> + <f(D') b, b> - 2 <D P D', P>,   f(x) = x^2,
// valid for P with marginals (a, b); feasibility is asserted to 1e-6.
// On factored problems <D P D', P> = Tr(G G^T) with G = A^T P B and the
// squared similarity acts through the psi-lift f(D) = A~ A~^T.
double gw_energy_fast(const GwProblem& prob, const Matrix& P);
double gw_energy_fast(const GwProblem& prob, const FactoredCoupling& P);

// Energy of an arbitrary nonnegative matrix, using its own marginals in
// place of (a, b); equals the quadruple sum for every P.
double gw_energy_general(const GwProblem& prob, const Matrix& P);

// Entropic mirror descent on dense similarity matrices, initialized at
// a b^T. Each step solves the entropic OT subproblem with cost
// -4 D P D' - (1/gamma) log P to the scheduled precision.
GwResult gw_mirror_descent(const GwProblem& prob, const GwSchedule& schedule);

// Same iteration on factored problems, forming the cost through
// G = A^T P B in O(n^2 r); Sinkhorn warm-started across iterations.
GwResult gw_quadratic(const GwProblem& prob, const GwSchedule& schedule);

// Precision schedule of the quadratic-time approximation theorem:
//   delta_l = min(delta/(2LI), delta/(2LI (R/eps)^{I-(l+1)}))
//   mu_l = eps delta_l^2 / (200 [R + 1 + log(2 max(n,m)/delta_l^2)]).
GwSchedule gw_schedule_from_target(double delta, long I, double L, double R,
                                   double eps, Index n, Index m);

// L_LR = 8 ||1/g||_inf L (r+1); default step 1/(2 L_LR).
double gw_fixed_smoothness(const Vector& g, double L, Index r);

struct GwLowRankConfig {
    long max_outer = 100;
    double gamma = 0.0;  // <= 0: 1/(2 L_LR)
    double sinkhorn_tol = 1e-9;
    unsigned long seed = 0;
    SinkhornOptions sinkhorn;
};

struct GwLowRankResult {
    Matrix Q;
    Matrix R;
    double energy = 0.0;
    SolverReport report;
};

// Fixed-inner-marginal low-rank GW: mirror descent on
// (Q, R) in Pi_{a,g} x Pi_{b,g} with P = Q Diag(1/g) R^T kept factored;
// each step solves two entropic OT subproblems with costs
//   C1 = C~ R Diag(1/g) - (1/gamma) log Q,   C~ = -4 A A^T P B B^T,
//   C2 = C~^T Q Diag(1/g) - (1/gamma) log R.
GwLowRankResult gw_lowrank_fixed_marginal(const GwProblem& prob, const Histogram& g,
                                          const GwLowRankConfig& cfg);

// Gradient blocks (2 L(P) R Diag(1/g), 2 L(P)^T Q Diag(1/g)) of the
// fixed-marginal energy, where L(P)_ij = sum_{i'j'} (D_ii' - D'_jj')^2 P_i'j'.
struct GwLowRankGradient {
    Matrix q;
    Matrix r;
};
GwLowRankGradient gw_lowrank_gradient(const GwProblem& prob, const Matrix& Q,
                                      const Matrix& R, const Vector& g);

// Both sides of the energy Lipschitz bound |E(P1) - E(P2)| <= 2 L ||P1 - P2||_1
// for P1, P2 in the simplex of n x m matrices.
struct LipschitzCheck {
    double lhs = 0.0;
    double rhs = 0.0;
};
LipschitzCheck gw_energy_lipschitz_check(const Matrix& D, const Matrix& Dp,
                                         const Matrix& P1, const Matrix& P2);

}  // namespace lrot
