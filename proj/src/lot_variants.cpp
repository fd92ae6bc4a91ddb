#include "lrot/lot_variants.hpp"

#include "lrot/kernels.hpp"

#include <chrono>
#include <cmath>

namespace lrot {

namespace {

constexpr double kLogFloor = 1e-200;
constexpr double kTrivialTol = 1e-12;

bool positive_finite(const Vector& x)
{
    return x.allFinite() && (x.array() > 0.0).all();
}

void check_not_trivial(const Matrix& Q, const Matrix& R, const Histogram& a,
                       const Histogram& b, const Vector& g)
{
    if (g.size() < 2)
        return;  // the rank-one polytope is the single point a g^T
    const double dq = (Q - a.w() * g.transpose()).lpNorm<Eigen::Infinity>();
    const double dr = (R - b.w() * g.transpose()).lpNorm<Eigen::Infinity>();
    if (dq < kTrivialTol && dr < kTrivialTol)
        throw SolverError(
            "lot_fixed_marginal: iterate hit the trivial fixed point Q = a g^T, "
            "R = b g^T; re-seed the initialization");
}

}  // namespace

double fixed_marginal_smoothness(double eps, const Vector& g, double cost_spectral_norm)
{
    require((g.array() > 0.0).all(), "fixed_marginal_smoothness: g must be positive");
    require(eps >= 0.0 && cost_spectral_norm >= 0.0,
            "fixed_marginal_smoothness: negative input");
    const double dinv = 1.0 / g.minCoeff();
    const double c = cost_spectral_norm * dinv;
    return std::sqrt(2.0 * (c * c + eps * eps));
}

FixedMarginalResult lot_fixed_marginal(const CostOperator& C, const Histogram& a,
                                       const Histogram& b, const Histogram& g,
                                       const FixedMarginalConfig& cfg)
{
    require(C.rows() == a.size() && C.cols() == b.size(),
            "lot_fixed_marginal: shape mismatch");
    g.require_positive("lot_fixed_marginal");
    a.require_positive("lot_fixed_marginal");
    b.require_positive("lot_fixed_marginal");
    require(cfg.epsilon >= 0.0, "lot_fixed_marginal: epsilon must be nonnegative");
    const auto start = std::chrono::steady_clock::now();

    double gamma = cfg.gamma;
    if (gamma <= 0.0) {
        const double L = fixed_marginal_smoothness(
            cfg.epsilon, g.w(), C.spectral_norm(cfg.power_iterations));
        require(L > 0.0, "lot_fixed_marginal: zero smoothness constant; supply gamma");
        gamma = 1.0 / L;
    }
    const double coeff = gamma * cfg.epsilon - 1.0;
    const Vector inv_g = g.w().cwiseInverse();

    FactoredCoupling fc = init_factors_with_g(a, b, g.w(), cfg.seed);
    check_not_trivial(fc.Q, fc.R, a, b, g.w());

    FixedMarginalResult res;
    for (long k = 0; k < cfg.max_outer; ++k) {
        const Matrix grad_q = C.apply_mat(fc.R) * inv_g.asDiagonal();
        const Matrix grad_r = C.apply_t_mat(fc.Q) * inv_g.asDiagonal();
        const Matrix K1 = kernels::md_factor(grad_q, fc.Q, gamma, coeff, kLogFloor);
        const Matrix K2 = kernels::md_factor(grad_r, fc.R, gamma, coeff, kLogFloor);

        auto s1 = sinkhorn(CostOperator::dense(K1), a, g, cfg.sinkhorn_tol,
                           cfg.sinkhorn);
        Matrix Qn = s1.u.asDiagonal() * K1 * s1.v.asDiagonal();
        auto s2 = sinkhorn(CostOperator::dense(K2), b, g, cfg.sinkhorn_tol,
                           cfg.sinkhorn);
        Matrix Rn = s2.u.asDiagonal() * K2 * s2.v.asDiagonal();

        FactoredCoupling next{std::move(Qn), std::move(Rn), g.w()};
        const double delta_k = delta_criterion(fc, next, gamma);
        fc = std::move(next);
        check_not_trivial(fc.Q, fc.R, a, b, g.w());

        res.report.objective.push_back(
            C.inner_factored(fc.Q, fc.R, g.w()) -
            cfg.epsilon * (entropy(fc.Q) + entropy(fc.R)));
        res.report.delta.push_back(delta_k);
        res.report.marginal_violation.push_back(s1.violation + s2.violation);
        res.report.inner_iterations.push_back(s1.iterations + s2.iterations);
        if (delta_k < cfg.stop_delta) {
            res.report.converged = true;
            break;
        }
    }
    res.cost = C.inner_factored(fc.Q, fc.R, g.w());
    res.Q = std::move(fc.Q);
    res.R = std::move(fc.R);
    res.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

DykstraResult lr_ibp(const KernelTriple& xi, const Histogram& a, const Histogram& b,
                     double delta, long max_sweeps)
{
    require((xi.xi1.array() > 0.0).all() && (xi.xi2.array() > 0.0).all() &&
                (xi.xi3.array() > 0.0).all(),
            "lr_ibp: kernel triple must be strictly positive");
    const Index r = xi.xi3.size();
    require(xi.xi1.cols() == r && xi.xi2.cols() == r, "lr_ibp: rank mismatch");
    require(xi.xi1.rows() == a.size() && xi.xi2.rows() == b.size(),
            "lr_ibp: shape mismatch");
    require(delta > 0.0, "lr_ibp: delta must be positive");

    Vector v1 = Vector::Ones(r), v2 = Vector::Ones(r);
    Vector g = xi.xi3;
    Vector u1(a.size()), u2(b.size());
    double violation = std::numeric_limits<double>::infinity();
    for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
        u1 = a.w().cwiseQuotient(xi.xi1 * v1);
        u2 = b.w().cwiseQuotient(xi.xi2 * v2);
        const Vector xt1 = xi.xi1.transpose() * u1;
        const Vector xt2 = xi.xi2.transpose() * u2;
        g = (g.array() * (v1.cwiseProduct(xt1)).array() * (v2.cwiseProduct(xt2)).array())
                .pow(1.0 / 3.0);
        v1 = g.cwiseQuotient(xt1);
        v2 = g.cwiseQuotient(xt2);
        if (!positive_finite(u1) || !positive_finite(u2) || !positive_finite(v1) ||
            !positive_finite(v2) || !positive_finite(g))
            throw SolverError("lr_ibp: numerical underflow", violation, sweep);

        violation = (u1.cwiseProduct(xi.xi1 * v1) - a.w()).lpNorm<1>() +
                    (u2.cwiseProduct(xi.xi2 * v2) - b.w()).lpNorm<1>();
        if (violation < delta) {
            DykstraResult res;
            res.coupling.Q = u1.asDiagonal() * xi.xi1 * v1.asDiagonal();
            res.coupling.R = u2.asDiagonal() * xi.xi2 * v2.asDiagonal();
            res.coupling.g = g;
            res.sweeps = sweep;
            res.violation = violation;
            return res;
        }
    }
    throw SolverError("lr_ibp: iteration cap exceeded", violation, max_sweeps);
}

LotResult lot_ibp_solve(const CostOperator& C, const Histogram& a, const Histogram& b,
                        const LotConfig& cfg)
{
    cfg.validate();
    require(C.rows() == a.size() && C.cols() == b.size(), "lot_ibp_solve: shape mismatch");
    a.require_positive("lot_ibp_solve");
    b.require_positive("lot_ibp_solve");
    const auto start = std::chrono::steady_clock::now();

    double theoretical_gamma = 0.0;
    if (cfg.step_rule == StepRule::Theoretical) {
        const double L = smoothness_constant(cfg.epsilon, cfg.alpha,
                                             C.spectral_norm(cfg.power_iterations));
        require(L > 0.0, "lot_ibp_solve: zero smoothness constant; supply a step size");
        theoretical_gamma = 1.0 / (2.0 * L);
    }
    auto step_at = [&](long k) {
        switch (cfg.step_rule) {
        case StepRule::Theoretical:
            return theoretical_gamma;
        case StepRule::Constant:
            return cfg.gamma;
        case StepRule::Sequence:
            return cfg.gamma_seq[std::min<size_t>(static_cast<size_t>(k),
                                                  cfg.gamma_seq.size() - 1)];
        }
        return cfg.gamma;
    };

    const double inner_tol = cfg.effective_inner_tol();
    LotResult res;
    FactoredCoupling fc = init_factors(a, b, cfg.rank, cfg.seed);
    for (long k = 0; k < cfg.max_outer; ++k) {
        const double gamma = step_at(k);
        const KernelTriple xi = build_kernel_triple(C, fc, gamma, cfg.epsilon);
        DykstraResult inner = lr_ibp(xi, a, b, inner_tol, cfg.max_inner_sweeps);
        const double delta_k = delta_criterion(fc, inner.coupling, gamma);
        fc = std::move(inner.coupling);

        res.report.objective.push_back(lot_objective(C, fc, cfg.epsilon));
        res.report.delta.push_back(delta_k);
        res.report.marginal_violation.push_back(
            (fc.Q.rowwise().sum() - a.w()).lpNorm<1>() +
            (fc.R.rowwise().sum() - b.w()).lpNorm<1>());
        res.report.inner_iterations.push_back(inner.sweeps);
        if (delta_k < cfg.stop_delta) {
            res.report.converged = true;
            break;
        }
    }
    res.cost = C.inner_factored(fc.Q, fc.R, fc.g);
    res.coupling = std::move(fc);
    res.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace lrot
