#include "lrot/gw.hpp"

#include "lrot/kernels.hpp"
#include "lrot/lot.hpp"

#include <chrono>
#include <cmath>
#include <functional>

namespace lrot {

namespace {

constexpr double kLogFloor = 1e-200;
constexpr double kFeasTol = 1e-6;

void check_square(const GwProblem& prob)
{
    require(prob.D.rows() == prob.D.cols() && prob.Dp.rows() == prob.Dp.cols(),
            "GwProblem: similarity matrices must be square");
    require(prob.D.rows() == prob.a.size() && prob.Dp.rows() == prob.b.size(),
            "GwProblem: marginal sizes do not match the similarity matrices");
}

// Rows of the psi-lift: vec(a_i a_i^T), so that f(D) = A~ A~^T.
Matrix psi_lift(const Matrix& A)
{
    const Index n = A.rows(), r = A.cols();
    Matrix out(n, r * r);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < r; ++k)
            for (Index l = 0; l < r; ++l)
                out(i, k * r + l) = A(i, k) * A(i, l);
    return out;
}

// E(P) given explicit marginals mu = P 1 and nu = P^T 1.
double energy_with_marginals(const GwProblem& prob, const Matrix& P, const Vector& mu,
                             const Vector& nu)
{
    if (prob.is_factored()) {
        const Matrix& A = prob.D.factor_a();
        const Matrix& B = prob.Dp.factor_a();
        const Vector lifted_a = psi_lift(A).transpose() * mu;
        const Vector lifted_b = psi_lift(B).transpose() * nu;
        const Matrix G = A.transpose() * P * B;
        return lifted_a.squaredNorm() + lifted_b.squaredNorm() -
               2.0 * (G * G.transpose()).trace();
    }
    const Matrix D = prob.D.to_dense();
    const Matrix Dp = prob.Dp.to_dense();
    const double term_a = mu.dot(D.array().square().matrix() * mu);
    const double term_b = nu.dot(Dp.array().square().matrix() * nu);
    const double cross = (D * P * Dp).cwiseProduct(P).sum();
    return term_a + term_b - 2.0 * cross;
}

}  // namespace

GwProblem GwProblem::dense(Matrix D, Matrix Dp, Histogram a, Histogram b)
{
    GwProblem prob{CostOperator::dense(std::move(D)), CostOperator::dense(std::move(Dp)),
                   std::move(a), std::move(b)};
    check_square(prob);
    return prob;
}

GwProblem GwProblem::factored(Matrix A, Matrix B, Histogram a, Histogram b)
{
    Matrix At = A, Bt = B;
    GwProblem prob{CostOperator::factored(std::move(A), std::move(At)),
                   CostOperator::factored(std::move(B), std::move(Bt)), std::move(a),
                   std::move(b)};
    check_square(prob);
    return prob;
}

double gw_sup_diff(const Matrix& D, const Matrix& Dp)
{
    const double hi = std::max(D.maxCoeff() - Dp.minCoeff(), Dp.maxCoeff() - D.minCoeff());
    const double span = std::max(hi, 0.0);
    return span * span;
}

double gw_energy_bruteforce(const GwProblem& prob, const Matrix& P)
{
    check_square(prob);
    require(P.rows() * P.cols() <= 10'000,
            "gw_energy_bruteforce: problem too large for the quartic loop");
    return kernels::gw_energy_quad(prob.D.to_dense(), prob.Dp.to_dense(), P);
}

double gw_energy_fast(const GwProblem& prob, const Matrix& P)
{
    check_square(prob);
    require(P.rows() == prob.a.size() && P.cols() == prob.b.size(),
            "gw_energy_fast: coupling shape mismatch");
    const auto rep = validate_coupling(P, prob.a, prob.b, kFeasTol);
    require(rep.feasible, "gw_energy_fast: coupling marginals deviate from (a, b)");
    return energy_with_marginals(prob, P, prob.a.w(), prob.b.w());
}

double gw_energy_fast(const GwProblem& prob, const FactoredCoupling& fc)
{
    check_square(prob);
    const Vector mu = fc.Q * fc.g.cwiseInverse().asDiagonal() * (fc.R.colwise().sum().transpose());
    const Vector nu = fc.R * fc.g.cwiseInverse().asDiagonal() * (fc.Q.colwise().sum().transpose());
    require((mu - prob.a.w()).lpNorm<1>() + (nu - prob.b.w()).lpNorm<1>() < kFeasTol,
            "gw_energy_fast: coupling marginals deviate from (a, b)");
    if (prob.is_factored()) {
        const Matrix& A = prob.D.factor_a();
        const Matrix& B = prob.Dp.factor_a();
        const Vector lifted_a = psi_lift(A).transpose() * prob.a.w();
        const Vector lifted_b = psi_lift(B).transpose() * prob.b.w();
        const Matrix G = (A.transpose() * fc.Q) * fc.g.cwiseInverse().asDiagonal() *
                         (fc.R.transpose() * B);
        return lifted_a.squaredNorm() + lifted_b.squaredNorm() -
               2.0 * (G * G.transpose()).trace();
    }
    return energy_with_marginals(prob, assemble_coupling(fc), prob.a.w(), prob.b.w());
}

double gw_energy_general(const GwProblem& prob, const Matrix& P)
{
    check_square(prob);
    require(P.rows() == prob.a.size() && P.cols() == prob.b.size(),
            "gw_energy_general: coupling shape mismatch");
    return energy_with_marginals(prob, P, P.rowwise().sum(),
                                 P.colwise().sum().transpose());
}

namespace {

// Shared MD loop; the two public solvers differ only in how the gradient
// -4 D P D' is evaluated.
GwResult gw_md_loop(const GwProblem& prob, const GwSchedule& schedule,
                    const std::function<Matrix(const Matrix&)>& neg_grad4)
{
    require(schedule.outer_iterations >= 1, "gw: schedule needs at least one iteration");
    const auto start = std::chrono::steady_clock::now();

    const Matrix D = prob.D.to_dense();
    const Matrix Dp = prob.Dp.to_dense();
    const double L = gw_sup_diff(D, Dp);
    const double fallback_gamma = L > 0.0 ? 1.0 / (2.0 * L) : 1.0;

    GwResult res;
    Matrix P = prob.a.w() * prob.b.w().transpose();
    Vector u0 = Vector::Ones(prob.a.size());
    for (long l = 0; l < schedule.outer_iterations; ++l) {
        const double gamma = schedule.step_at(l, fallback_gamma);
        require(gamma > 0.0, "gw: step sizes must be positive");
        const double mu = schedule.precision_at(l);
        // kernel exp(-gamma (C~ - (1/gamma) log P)) = P . exp(4 gamma D P D')
        const Matrix M = neg_grad4(P);  // -4 D P D'
        const Matrix K = kernels::md_factor(M, P, gamma, -1.0, kLogFloor);
        auto scaling = sinkhorn(CostOperator::dense(K), prob.a, prob.b, mu, u0);
        P = scaling.u.asDiagonal() * K * scaling.v.asDiagonal();
        if (schedule.warm_start)
            u0 = scaling.u;

        res.report.objective.push_back(gw_energy_general(prob, P));
        res.report.delta.push_back(scaling.violation);
        res.report.marginal_violation.push_back(scaling.violation);
        res.report.inner_iterations.push_back(scaling.iterations);
    }
    res.report.converged = true;
    res.energy = res.report.objective.back();
    res.coupling = std::move(P);
    res.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace

GwResult gw_mirror_descent(const GwProblem& prob, const GwSchedule& schedule)
{
    check_square(prob);
    require(!prob.is_factored(), "gw_mirror_descent: expects dense similarity matrices");
    const Matrix D = prob.D.to_dense();
    const Matrix Dp = prob.Dp.to_dense();
    return gw_md_loop(prob, schedule,
                      [&](const Matrix& P) { return Matrix(-4.0 * D * P * Dp); });
}

GwResult gw_quadratic(const GwProblem& prob, const GwSchedule& schedule)
{
    check_square(prob);
    require(prob.is_factored(), "gw_quadratic: expects factored similarity matrices");
    const Matrix& A = prob.D.factor_a();
    const Matrix& B = prob.Dp.factor_a();
    return gw_md_loop(prob, schedule, [&](const Matrix& P) {
        const Matrix G = A.transpose() * P * B;
        return Matrix(-4.0 * (A * G) * B.transpose());
    });
}

GwSchedule gw_schedule_from_target(double delta, long I, double L, double R,
                                   double eps, Index n, Index m)
{
    require(delta > 0.0 && delta <= 1.0, "gw_schedule_from_target: delta must lie in (0,1]");
    require(I >= 1, "gw_schedule_from_target: I must be >= 1");
    require(eps > 0.0, "gw_schedule_from_target: eps must be positive");
    require(L > 0.0 && R >= 0.0, "gw_schedule_from_target: invalid constants");

    GwSchedule sched;
    sched.outer_iterations = I;
    sched.sinkhorn_precisions.clear();
    sched.steps.assign(static_cast<size_t>(I), 1.0 / eps);
    const double alpha = R / eps;
    const double base = delta / (2.0 * L * static_cast<double>(I));
    const double maxnm = static_cast<double>(std::max(n, m));
    for (long l = 0; l < I; ++l) {
        const double power = std::pow(alpha, static_cast<double>(I - (l + 1)));
        const double delta_l = std::min(base, base / power);
        const double mu_l =
            eps * delta_l * delta_l /
            (200.0 * (R + 1.0 + std::log(2.0 * maxnm / (delta_l * delta_l))));
        require(mu_l > 0.0 && mu_l < 1.0,
                "gw_schedule_from_target: mu fell outside (0,1); adjust delta or eps");
        sched.sinkhorn_precisions.push_back(mu_l);
    }
    return sched;
}

double gw_fixed_smoothness(const Vector& g, double L, Index r)
{
    require((g.array() > 0.0).all(), "gw_fixed_smoothness: g must be positive");
    require(L >= 0.0 && r >= 1, "gw_fixed_smoothness: invalid inputs");
    return 8.0 * (1.0 / g.minCoeff()) * L * static_cast<double>(r + 1);
}

GwLowRankGradient gw_lowrank_gradient(const GwProblem& prob, const Matrix& Q,
                                      const Matrix& R, const Vector& g)
{
    check_square(prob);
    const Matrix D = prob.D.to_dense();
    const Matrix Dp = prob.Dp.to_dense();
    const Vector inv_g = g.cwiseInverse();
    const Matrix P = Q * inv_g.asDiagonal() * R.transpose();
    // L(P)_ij = [f(D) P 1]_i + [f(D') P^T 1]_j - 2 (D P D')_ij
    const Vector mu = P.rowwise().sum();
    const Vector nu = P.colwise().sum().transpose();
    const Vector row_part = D.array().square().matrix() * mu;
    const Vector col_part = Dp.array().square().matrix() * nu;
    Matrix LP = -2.0 * D * P * Dp;
    LP.colwise() += row_part;
    LP.rowwise() += col_part.transpose();

    GwLowRankGradient grad;
    grad.q = 2.0 * LP * R * inv_g.asDiagonal();
    grad.r = 2.0 * LP.transpose() * Q * inv_g.asDiagonal();
    return grad;
}

GwLowRankResult gw_lowrank_fixed_marginal(const GwProblem& prob, const Histogram& g,
                                          const GwLowRankConfig& cfg)
{
    check_square(prob);
    require(prob.is_factored(), "gw_lowrank_fixed_marginal: expects factored matrices");
    g.require_positive("gw_lowrank_fixed_marginal");
    const auto start = std::chrono::steady_clock::now();

    const Matrix& A = prob.D.factor_a();
    const Matrix& B = prob.Dp.factor_a();
    const Index r = g.size();
    const Vector inv_g = g.w().cwiseInverse();

    double gamma = cfg.gamma;
    if (gamma <= 0.0) {
        const double L = gw_sup_diff(prob.D.to_dense(), prob.Dp.to_dense());
        const double Llr = gw_fixed_smoothness(g.w(), L, r);
        require(Llr > 0.0, "gw_lowrank_fixed_marginal: degenerate smoothness constant");
        gamma = 1.0 / (2.0 * Llr);
    }

    FactoredCoupling fc = init_factors_with_g(prob.a, prob.b, g.w(), cfg.seed);
    if (r >= 2) {
        const double dq = (fc.Q - prob.a.w() * g.w().transpose()).lpNorm<Eigen::Infinity>();
        const double dr = (fc.R - prob.b.w() * g.w().transpose()).lpNorm<Eigen::Infinity>();
        if (dq < 1e-12 && dr < 1e-12)
            throw SolverError("gw_lowrank_fixed_marginal: trivial initialization; re-seed");
    }

    GwLowRankResult res;
    for (long l = 0; l < cfg.max_outer; ++l) {
        // C~ = -4 A (A^T Q Diag(1/g) R^T B) B^T applied without materializing P
        const Matrix AtQ = A.transpose() * fc.Q;                       // rD x r
        const Matrix RtB = fc.R.transpose() * B;                       // r x rD'
        const Matrix mid = AtQ * inv_g.asDiagonal() * RtB;             // rD x rD'
        const Matrix grad_q = -4.0 * (A * (mid * (B.transpose() * fc.R))) * inv_g.asDiagonal();
        const Matrix grad_r = -4.0 * (B * (mid.transpose() * (A.transpose() * fc.Q))) * inv_g.asDiagonal();

        const Matrix K1 = kernels::md_factor(grad_q, fc.Q, gamma, -1.0, kLogFloor);
        const Matrix K2 = kernels::md_factor(grad_r, fc.R, gamma, -1.0, kLogFloor);
        auto s1 = sinkhorn(CostOperator::dense(K1), prob.a, g, cfg.sinkhorn_tol,
                           cfg.sinkhorn);
        auto s2 = sinkhorn(CostOperator::dense(K2), prob.b, g, cfg.sinkhorn_tol,
                           cfg.sinkhorn);
        fc.Q = s1.u.asDiagonal() * K1 * s1.v.asDiagonal();
        fc.R = s2.u.asDiagonal() * K2 * s2.v.asDiagonal();

        const Matrix G = (A.transpose() * fc.Q) * inv_g.asDiagonal() *
                         (fc.R.transpose() * B);
        const Vector mu = fc.Q * inv_g.asDiagonal() * fc.R.colwise().sum().transpose();
        const Vector nu = fc.R * inv_g.asDiagonal() * fc.Q.colwise().sum().transpose();
        const double energy = (psi_lift(A).transpose() * mu).squaredNorm() +
                              (psi_lift(B).transpose() * nu).squaredNorm() -
                              2.0 * (G * G.transpose()).trace();
        res.report.objective.push_back(energy);
        res.report.delta.push_back(s1.violation + s2.violation);
        res.report.marginal_violation.push_back(s1.violation + s2.violation);
        res.report.inner_iterations.push_back(s1.iterations + s2.iterations);
    }
    res.report.converged = true;
    res.energy = res.report.objective.back();
    res.Q = std::move(fc.Q);
    res.R = std::move(fc.R);
    res.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

LipschitzCheck gw_energy_lipschitz_check(const Matrix& D, const Matrix& Dp,
                                         const Matrix& P1, const Matrix& P2)
{
    require(P1.rows() == P2.rows() && P1.cols() == P2.cols(),
            "gw_energy_lipschitz_check: coupling shapes differ");
    require(D.rows() == P1.rows() && Dp.rows() == P1.cols(),
            "gw_energy_lipschitz_check: shape mismatch");
    GwProblem prob = GwProblem::dense(D, Dp, Histogram::uniform(P1.rows()),
                                      Histogram::uniform(P1.cols()));
    LipschitzCheck check;
    check.lhs = std::abs(gw_energy_general(prob, P1) - gw_energy_general(prob, P2));
    check.rhs = 2.0 * gw_sup_diff(D, Dp) * (P1 - P2).lpNorm<1>();
    return check;
}

}  // namespace lrot
