#pragma once

#include "lrot/lot.hpp"
#include "lrot/sinkhorn.hpp"

namespace lrot {

struct FixedMarginalResult {
    Matrix Q;
    Matrix R;
    double cost = 0.0;
    SolverReport report;
};

struct FixedMarginalConfig {
    double epsilon = 0.0;
    double gamma = 0.0;          // <= 0: use 1/L_eps from fixed_marginal_smoothness
    double sinkhorn_tol = 1e-9;  // delta_S for the two inner entropic solves
    double stop_delta = 1e-7;
    long max_outer = 2000;
    unsigned long seed = 0;
    int power_iterations = 30;
    SinkhornOptions sinkhorn;
};

// Mirror descent on (Q, R) in Pi_{a,g} x Pi_{b,g} with a prescribed inner
// marginal g. Each step solves two entropic OT subproblems with costs
//   C1 = C R Diag(1/g) + (eps - 1/gamma) log Q
//   C2 = C^T Q Diag(1/g) + (eps - 1/gamma) log R.
// Errors out on the trivial fixed point Q = a g^T, R = b g^T.
FixedMarginalResult lot_fixed_marginal(const CostOperator& C, const Histogram& a,
                                       const Histogram& b, const Histogram& g,
                                       const FixedMarginalConfig& cfg);

// L_eps = sqrt(2 (||C||_2^2 ||Diag(1/g)||_2^2 + eps^2)); default step 1/L_eps.
double fixed_marginal_smoothness(double eps, const Vector& g, double cost_spectral_norm);

// Iterative Bregman projections between the closure of C1(a,b,r) and
// C2(r); no lower bound on g. Same stopping rule as lr_dykstra.
DykstraResult lr_ibp(const KernelTriple& xi, const Histogram& a, const Histogram& b,
                     double delta, long max_sweeps = 100'000);

// Mirror descent with the IBP inner loop and no alpha clamp. The alpha
// field of the config is ignored except for validation of the rank.
LotResult lot_ibp_solve(const CostOperator& C, const Histogram& a, const Histogram& b,
                        const LotConfig& cfg);

}  // namespace lrot
