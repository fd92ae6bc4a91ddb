#include "lrot/lot.hpp"

#include "lrot/kernels.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace lrot {

namespace {

constexpr double kLogFloor = 1e-200;

void require_positive_triple(const KernelTriple& xi, const char* who)
{
    require((xi.xi1.array() > 0.0).all() && (xi.xi2.array() > 0.0).all() &&
                (xi.xi3.array() > 0.0).all(),
            std::string(who) + ": kernel triple must be strictly positive");
}

void require_positive_fc(const FactoredCoupling& fc, const char* who)
{
    require((fc.Q.array() > 0.0).all() && (fc.R.array() > 0.0).all() &&
                (fc.g.array() > 0.0).all(),
            std::string(who) + ": nonpositive factor entry");
}

bool positive_finite(const Vector& x)
{
    return x.allFinite() && (x.array() > 0.0).all();
}

// sum (x - y) (log x - log y), the symmetric Bregman divergence of the
// entropy; nonnegative.
double symmetric_bregman(const double* x, const double* y, Index n)
{
    double acc = 0.0;
    for (Index i = 0; i < n; ++i)
        acc += (x[i] - y[i]) * (std::log(x[i]) - std::log(y[i]));
    return acc;
}

}  // namespace

void LotConfig::validate() const
{
    require(rank >= 1, "LotConfig: rank must be >= 1");
    require(epsilon >= 0.0, "LotConfig: epsilon must be nonnegative");
    require(alpha > 0.0 && alpha <= 1.0 / static_cast<double>(rank),
            "LotConfig: alpha must lie in (0, 1/rank]");
    require(max_outer >= 1, "LotConfig: iteration cap must be >= 1");
    if (step_rule == StepRule::Constant)
        require(gamma > 0.0, "LotConfig: constant step requires gamma > 0");
    if (step_rule == StepRule::Sequence)
        require(!gamma_seq.empty(), "LotConfig: empty step sequence");
}

FactoredCoupling project_c1(const KernelTriple& xi, const Histogram& a,
                            const Histogram& b, double alpha)
{
    require_positive_triple(xi, "project_c1");
    require(xi.xi1.rows() == a.size() && xi.xi2.rows() == b.size(),
            "project_c1: shape mismatch");
    FactoredCoupling out;
    const Vector qrow = xi.xi1.rowwise().sum();
    const Vector rrow = xi.xi2.rowwise().sum();
    require((qrow.array() > 0.0).all() && (rrow.array() > 0.0).all(),
            "project_c1: zero row sum");
    out.Q = a.w().cwiseQuotient(qrow).asDiagonal() * xi.xi1;
    out.R = b.w().cwiseQuotient(rrow).asDiagonal() * xi.xi2;
    out.g = xi.xi3.cwiseMax(alpha);
    return out;
}

FactoredCoupling project_c2(const KernelTriple& xi)
{
    require_positive_triple(xi, "project_c2");
    const Vector qcol = xi.xi1.colwise().sum().transpose();
    const Vector rcol = xi.xi2.colwise().sum().transpose();
    require((qcol.array() > 0.0).all() && (rcol.array() > 0.0).all(),
            "project_c2: zero column sum");
    FactoredCoupling out;
    out.g = (xi.xi3.array() * qcol.array() * rcol.array()).pow(1.0 / 3.0);
    out.Q = xi.xi1 * out.g.cwiseQuotient(qcol).asDiagonal();
    out.R = xi.xi2 * out.g.cwiseQuotient(rcol).asDiagonal();
    return out;
}

DykstraResult lr_dykstra(const KernelTriple& xi, const Histogram& a, const Histogram& b,
                         double alpha, double delta, long max_sweeps)
{
    require_positive_triple(xi, "lr_dykstra");
    const Index r = xi.xi3.size();
    require(xi.xi1.cols() == r && xi.xi2.cols() == r, "lr_dykstra: rank mismatch");
    require(xi.xi1.rows() == a.size() && xi.xi2.rows() == b.size(),
            "lr_dykstra: shape mismatch");
    require(alpha >= 0.0 && alpha <= 1.0 / static_cast<double>(r),
            "lr_dykstra: alpha must lie in [0, 1/r]");
    require(delta > 0.0, "lr_dykstra: delta must be positive");

    Vector u1(a.size()), u2(b.size());
    Vector v1 = Vector::Ones(r), v2 = Vector::Ones(r);
    Vector v1_old = Vector::Ones(r), v2_old = Vector::Ones(r);
    Vector q1 = Vector::Ones(r), q2 = Vector::Ones(r);
    Vector q3_1 = Vector::Ones(r), q3_2 = Vector::Ones(r);
    Vector g_old = xi.xi3;
    Vector g(r);

    double violation = std::numeric_limits<double>::infinity();
    for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
        u1 = a.w().cwiseQuotient(xi.xi1 * v1_old);
        u2 = b.w().cwiseQuotient(xi.xi2 * v2_old);

        // projection on C1 for the inner marginal: clamp at alpha
        g = (g_old.cwiseProduct(q3_1)).cwiseMax(alpha);
        q3_1 = g_old.cwiseProduct(q3_1).cwiseQuotient(g);
        g_old = g;

        // projection on C2: geometric mean of the three column marginals
        const Vector xt1 = xi.xi1.transpose() * u1;
        const Vector xt2 = xi.xi2.transpose() * u2;
        g = (g_old.cwiseProduct(q3_2).array() *
             (v1_old.cwiseProduct(q1).cwiseProduct(xt1)).array() *
             (v2_old.cwiseProduct(q2).cwiseProduct(xt2)).array())
                .pow(1.0 / 3.0);
        v1 = g.cwiseQuotient(xt1);
        v2 = g.cwiseQuotient(xt2);
        q1 = v1_old.cwiseProduct(q1).cwiseQuotient(v1);
        q2 = v2_old.cwiseProduct(q2).cwiseQuotient(v2);
        q3_2 = g_old.cwiseProduct(q3_2).cwiseQuotient(g);
        v1_old = v1;
        v2_old = v2;
        g_old = g;

        if (!positive_finite(u1) || !positive_finite(u2) || !positive_finite(v1) ||
            !positive_finite(v2) || !positive_finite(q1) || !positive_finite(q2) ||
            !positive_finite(q3_1) || !positive_finite(q3_2))
            throw SolverError("lr_dykstra: numerical underflow in correction vectors",
                              violation, sweep);

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
    throw SolverError("lr_dykstra: iteration cap exceeded", violation, max_sweeps);
}

double smoothness_constant(double eps, double alpha, double cost_spectral_norm)
{
    require(alpha > 0.0, "smoothness_constant: alpha must be positive");
    require(eps >= 0.0 && cost_spectral_norm >= 0.0,
            "smoothness_constant: negative input");
    const double c = cost_spectral_norm;
    const double a3 = alpha * alpha * alpha;
    const double a4 = a3 * alpha;
    const double t = (eps + 2.0 * c) / a3;
    return std::sqrt(3.0 * (2.0 * c * c / a4 + t * t));
}

KernelTriple build_kernel_triple(const CostOperator& C, const FactoredCoupling& fc,
                                 double gamma, double eps)
{
    require_positive_fc(fc, "build_kernel_triple");
    require(gamma > 0.0, "build_kernel_triple: gamma must be positive");
    const double coeff = gamma * eps - 1.0;
    const Vector inv_g = fc.g.cwiseInverse();

    KernelTriple xi;
    const Matrix grad_q = C.apply_mat(fc.R) * inv_g.asDiagonal();
    xi.xi1 = kernels::md_factor(grad_q, fc.Q, gamma, coeff, kLogFloor);
    const Matrix grad_r = C.apply_t_mat(fc.Q) * inv_g.asDiagonal();
    xi.xi2 = kernels::md_factor(grad_r, fc.R, gamma, coeff, kLogFloor);
    const Vector omega = C.diag_qcr(fc.Q, fc.R);
    const Vector grad_g = -omega.array() * inv_g.array().square();
    xi.xi3 = kernels::md_factor(grad_g, fc.g, gamma, coeff, kLogFloor);
    return xi;
}

double lot_objective(const CostOperator& C, const FactoredCoupling& fc, double eps)
{
    const double transport = C.inner_factored(fc.Q, fc.R, fc.g);
    if (eps == 0.0)
        return transport;
    return transport - eps * (entropy(fc.Q) + entropy(fc.R) + entropy(fc.g));
}

LotGradient lot_gradient(const CostOperator& C, const FactoredCoupling& fc, double eps)
{
    require_positive_fc(fc, "lot_gradient");
    const Vector inv_g = fc.g.cwiseInverse();
    LotGradient grad;
    grad.q = C.apply_mat(fc.R) * inv_g.asDiagonal();
    grad.r = C.apply_t_mat(fc.Q) * inv_g.asDiagonal();
    grad.g = -C.diag_qcr(fc.Q, fc.R).array() * inv_g.array().square();
    if (eps != 0.0) {
        grad.q += eps * (fc.Q.array().log() + 1.0).matrix();
        grad.r += eps * (fc.R.array().log() + 1.0).matrix();
        grad.g += eps * (fc.g.array().log() + 1.0).matrix();
    }
    return grad;
}

double delta_criterion(const FactoredCoupling& current, const FactoredCoupling& next,
                       double gamma)
{
    require(gamma > 0.0, "delta_criterion: gamma must be positive");
    require_positive_fc(current, "delta_criterion");
    require_positive_fc(next, "delta_criterion");
    require(current.Q.rows() == next.Q.rows() && current.R.rows() == next.R.rows() &&
                current.rank() == next.rank(),
            "delta_criterion: shape mismatch");
    const double sym = symmetric_bregman(current.Q.data(), next.Q.data(), current.Q.size()) +
                       symmetric_bregman(current.R.data(), next.R.data(), current.R.size()) +
                       symmetric_bregman(current.g.data(), next.g.data(), current.g.size());
    return sym / (gamma * gamma);
}

namespace {

Vector dirichlet(std::mt19937_64& rng, Index n)
{
    std::exponential_distribution<double> exp_dist(1.0);
    Vector x(n);
    for (Index i = 0; i < n; ++i)
        x[i] = std::max(exp_dist(rng), 1e-12);
    return x / x.sum();
}

}  // namespace

FactoredCoupling init_factors_with_g(const Histogram& a, const Histogram& b,
                                     const Vector& g, unsigned long seed)
{
    require(g.size() >= 1, "init_factors: rank must be >= 1");
    require((g.array() > 0.0).all() && std::abs(g.sum() - 1.0) <= 1e-9,
            "init_factors: g must lie in the open simplex");
    a.require_positive("init_factors");
    b.require_positive("init_factors");

    const double lambda =
        std::min({a.w().minCoeff(), b.w().minCoeff(), g.minCoeff()}) / 2.0;
    std::mt19937_64 rng(seed);
    const Vector a1 = dirichlet(rng, a.size());
    const Vector b1 = dirichlet(rng, b.size());
    const Vector g1 = dirichlet(rng, g.size());
    const Vector a2 = (a.w() - lambda * a1) / (1.0 - lambda);
    const Vector b2 = (b.w() - lambda * b1) / (1.0 - lambda);
    const Vector g2 = (g - lambda * g1) / (1.0 - lambda);

    FactoredCoupling fc;
    fc.Q = lambda * a1 * g1.transpose() + (1.0 - lambda) * a2 * g2.transpose();
    fc.R = lambda * b1 * g1.transpose() + (1.0 - lambda) * b2 * g2.transpose();
    fc.g = g;
    return fc;
}

FactoredCoupling init_factors(const Histogram& a, const Histogram& b, Index rank,
                              unsigned long seed)
{
    require(rank >= 1, "init_factors: rank must be >= 1");
    return init_factors_with_g(
        a, b, Vector::Constant(rank, 1.0 / static_cast<double>(rank)), seed);
}

LotResult lot_solve(const CostOperator& C, const Histogram& a, const Histogram& b,
                    const LotConfig& cfg)
{
    cfg.validate();
    require(C.rows() == a.size() && C.cols() == b.size(), "lot_solve: shape mismatch");
    a.require_positive("lot_solve");
    b.require_positive("lot_solve");
    const auto start = std::chrono::steady_clock::now();

    double theoretical_gamma = 0.0;
    if (cfg.step_rule == StepRule::Theoretical) {
        const double L = smoothness_constant(cfg.epsilon, cfg.alpha,
                                             C.spectral_norm(cfg.power_iterations));
        require(L > 0.0, "lot_solve: zero smoothness constant; supply a step size");
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
        DykstraResult inner =
            lr_dykstra(xi, a, b, cfg.alpha, inner_tol, cfg.max_inner_sweeps);
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
