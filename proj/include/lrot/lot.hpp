#pragma once

#include "lrot/core.hpp"

#include <vector>

namespace lrot {

// Mirror-descent kernel triple; all blocks strictly positive.
struct KernelTriple {
    Matrix xi1;  // n x r
    Matrix xi2;  // m x r
    Vector xi3;  // r
};

enum class StepRule {
    Theoretical,  // constant 1/(2 L_{eps,alpha}), spectral norm by power iteration
    Constant,     // user-supplied gamma
    Sequence,     // user-supplied schedule, repeated last value past the end
};

struct LotConfig {
    Index rank = 2;
    double epsilon = 0.0;
    double alpha = 1e-5;  // lower bound on g; must satisfy alpha <= 1/rank
    double inner_tol = -1.0;  // <0: 1e-9 when eps > 0, 1e-7 when eps == 0
    long max_outer = 2000;
    long max_inner_sweeps = 100'000;
    double stop_delta = 1e-7;
    StepRule step_rule = StepRule::Theoretical;
    double gamma = 0.0;               // StepRule::Constant
    std::vector<double> gamma_seq;    // StepRule::Sequence
    unsigned long seed = 0;
    int power_iterations = 30;

    double effective_inner_tol() const
    {
        return inner_tol >= 0.0 ? inner_tol : (epsilon > 0.0 ? 1e-9 : 1e-7);
    }
    void validate() const;
};

struct LotResult {
    FactoredCoupling coupling;
    double cost = 0.0;  // <C, Q Diag(1/g) R^T>
    SolverReport report;
};

// KL projection onto C1(a,b,r,alpha): rows of Q scaled to a, rows of R
// scaled to b, g clamped at alpha.
FactoredCoupling project_c1(const KernelTriple& xi, const Histogram& a,
                            const Histogram& b, double alpha);

// KL projection onto C2(r): g = (g~ . Q~^T 1 . R~^T 1)^(1/3), columns of
// Q and R rescaled to share the inner marginal g.
FactoredCoupling project_c2(const KernelTriple& xi);

// Dykstra's algorithm with KL projections onto C1(a,b,r,alpha) and C2(r),
// run on the scaling vectors only. Stops when the row-marginal residual
// sum_i ||u_i . xi_i v_i - p_i||_1 falls below delta.
struct DykstraResult {
    FactoredCoupling coupling;
    long sweeps = 0;
    double violation = 0.0;
};
DykstraResult lr_dykstra(const KernelTriple& xi, const Histogram& a, const Histogram& b,
                         double alpha, double delta, long max_sweeps = 100'000);

// L_{eps,alpha} = sqrt(3 (2 ||C||_2^2 / alpha^4 + ((eps + 2||C||_2)/alpha^3)^2)).
// The default mirror-descent step is 1 / (2 L).
double smoothness_constant(double eps, double alpha, double cost_spectral_norm);

// Builds the MD kernels
//   xi1 = exp(-gamma C R Diag(1/g) - (gamma eps - 1) log Q)
//   xi2 = exp(-gamma C^T Q Diag(1/g) - (gamma eps - 1) log R)
//   xi3 = exp(gamma w / g^2 - (gamma eps - 1) log g), w = diag(Q^T C R).
// Uses factored matvecs C R and C^T Q when C is factored.
KernelTriple build_kernel_triple(const CostOperator& C, const FactoredCoupling& fc,
                                 double gamma, double eps);

// Objective <C, Q Diag(1/g) R^T> - eps (H(Q) + H(R) + H(g)).
double lot_objective(const CostOperator& C, const FactoredCoupling& fc, double eps);

// Gradient blocks of the objective (entropy normalized as sum x log x):
//   (C R Diag(1/g) + eps (log Q + 1),
//    C^T Q Diag(1/g) + eps (log R + 1),
//    -diag(Q^T C R)/g^2 + eps (log g + 1)).
struct LotGradient {
    Matrix q;
    Matrix r;
    Vector g;
};
LotGradient lot_gradient(const CostOperator& C, const FactoredCoupling& fc, double eps);

// Stationarity criterion: symmetric Bregman divergence of the entropy
// between consecutive iterates, divided by gamma^2. Zero exactly at a
// fixed point; the mass terms of the two KL halves cancel.
double delta_criterion(const FactoredCoupling& current, const FactoredCoupling& next,
                       double gamma);

// Non-trivial initial point in C1(a,b,r) /\ C2(r) with g = 1/r: a seeded
// Dirichlet perturbation mixed so that the marginals are exact and the
// point is not the rank-one fixed point a g^T.
FactoredCoupling init_factors(const Histogram& a, const Histogram& b, Index rank,
                              unsigned long seed);
// Same construction for a prescribed inner marginal g.
FactoredCoupling init_factors_with_g(const Histogram& a, const Histogram& b,
                                     const Vector& g, unsigned long seed);

// Low-rank OT by mirror descent with the Dykstra inner loop.
LotResult lot_solve(const CostOperator& C, const Histogram& a, const Histogram& b,
                    const LotConfig& cfg);

}  // namespace lrot
