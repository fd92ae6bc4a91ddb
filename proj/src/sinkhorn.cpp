#include "lrot/sinkhorn.hpp"

#include "lrot/kernels.hpp"

#include <chrono>
#include <cmath>

namespace lrot {

namespace {

bool positive_finite(const Vector& x)
{
    return x.allFinite() && (x.array() > 0.0).all();
}

void check_kernel_positive(const CostOperator& K)
{
    if (K.is_factored()) {
        require((K.factor_a().array() > 0.0).all() && (K.factor_b().array() > 0.0).all(),
                "sinkhorn: factored kernel must have positive factors");
    } else {
        require((K.to_dense().array() > 0.0).all(),
                "sinkhorn: kernel must be entry-wise positive");
    }
}

}  // namespace

ScalingPair sinkhorn(const CostOperator& K, const Histogram& a, const Histogram& b,
                     double delta, const Vector& u0, const SinkhornOptions& opts)
{
    require(K.rows() == a.size() && K.cols() == b.size(), "sinkhorn: shape mismatch");
    require(delta > 0.0, "sinkhorn: delta must be positive");
    require(u0.size() == a.size(), "sinkhorn: warm start has wrong size");
    a.require_positive("sinkhorn");
    b.require_positive("sinkhorn");
    check_kernel_positive(K);
    require(positive_finite(u0), "sinkhorn: warm start must be positive");

    Vector u = u0;
    Vector v;
    double violation = std::numeric_limits<double>::infinity();
    const int cadence = std::max(1, opts.check_every);
    for (long it = 1; it <= opts.max_iterations; ++it) {
        v = b.w().cwiseQuotient(K.apply_t(u));
        Vector Kv = K.apply(v);
        u = a.w().cwiseQuotient(Kv);
        if (!positive_finite(u) || !positive_finite(v))
            throw SolverError(
                "sinkhorn: scaling vectors left the numerical range; "
                "consider a larger epsilon or the log-domain variant",
                violation, it);
        if (it % cadence == 0 || it == opts.max_iterations) {
            violation = (u.cwiseProduct(Kv) - a.w()).lpNorm<1>() +
                        (v.cwiseProduct(K.apply_t(u)) - b.w()).lpNorm<1>();
            if (opts.violation_trace)
                opts.violation_trace->push_back(violation);
            if (violation < delta)
                return {std::move(u), std::move(v), it, violation};
        }
    }
    throw SolverError("sinkhorn: no convergence within the iteration cap",
                      violation, opts.max_iterations);
}

ScalingPair sinkhorn(const CostOperator& K, const Histogram& a, const Histogram& b,
                     double delta, const SinkhornOptions& opts)
{
    return sinkhorn(K, a, b, delta, Vector::Ones(a.size()), opts);
}

namespace {

// Log-domain Sinkhorn on potentials phi, psi with M = -C/eps; the coupling
// is exp(M + phi 1^T + 1 psi^T).
struct LogDomainResult {
    Matrix coupling;
    long iterations;
    double violation;
};

LogDomainResult sinkhorn_log(const Matrix& C, double eps, const Histogram& a,
                             const Histogram& b, double delta, const SinkhornOptions& opts)
{
    const Index n = C.rows(), m = C.cols();
    const Matrix M = -C / eps;
    const Vector log_a = a.w().array().log();
    const Vector log_b = b.w().array().log();
    Vector phi = Vector::Zero(n), psi = Vector::Zero(m);
    const int cadence = std::max(1, opts.check_every);
    Matrix shifted(n, m);
    for (long it = 1; it <= opts.max_iterations; ++it) {
        shifted = M + phi.replicate(1, m);
        psi = log_b - kernels::logsumexp_cols(shifted);
        shifted = M + psi.transpose().replicate(n, 1);
        phi = log_a - kernels::logsumexp_rows(shifted);
        if (it % cadence == 0 || it == opts.max_iterations) {
            Matrix P = (M + phi.replicate(1, m) + psi.transpose().replicate(n, 1))
                           .array()
                           .exp();
            const double violation = (P.rowwise().sum() - a.w()).lpNorm<1>() +
                                     (P.colwise().sum().transpose() - b.w()).lpNorm<1>();
            if (opts.violation_trace)
                opts.violation_trace->push_back(violation);
            if (violation < delta)
                return {std::move(P), it, violation};
        }
    }
    throw SolverError("sinkhorn (log domain): no convergence within the iteration cap",
                      0.0, opts.max_iterations);
}

}  // namespace

EntropicOtResult entropic_ot(const CostOperator& C, const Histogram& a,
                             const Histogram& b, double eps, double delta,
                             const SinkhornOptions& opts)
{
    require(eps > 0.0, "entropic_ot: eps must be positive");
    const auto start = std::chrono::steady_clock::now();

    EntropicOtResult res;
    Matrix P;
    long iterations = 0;
    double violation = 0.0;
    const Matrix Cd = C.to_dense();
    if (opts.log_domain) {
        auto log_res = sinkhorn_log(Cd, eps, a, b, delta, opts);
        P = std::move(log_res.coupling);
        iterations = log_res.iterations;
        violation = log_res.violation;
    } else {
        const CostOperator K = CostOperator::dense(kernels::exp_neg_scaled(Cd, eps));
        auto scaling = sinkhorn(K, a, b, delta, opts);
        P = scaling.u.asDiagonal() * K.to_dense() * scaling.v.asDiagonal();
        iterations = scaling.iterations;
        violation = scaling.violation;
    }

    res.coupling = round_to_polytope(P, a, b);
    res.cost = Cd.cwiseProduct(res.coupling).sum();
    res.regularized_objective = res.cost - eps * entropy(res.coupling);
    res.report.objective.push_back(res.cost);
    res.report.delta.push_back(violation);
    res.report.marginal_violation.push_back(violation);
    res.report.inner_iterations.push_back(iterations);
    res.report.converged = true;
    res.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

Matrix round_to_polytope(const Matrix& P, const Histogram& a, const Histogram& b)
{
    require(P.rows() == a.size() && P.cols() == b.size(), "round_to_polytope: shape mismatch");
    require((P.array() >= 0.0).all(), "round_to_polytope: negative entry");

    Matrix out = P;
    const Vector row = out.rowwise().sum();
    for (Index i = 0; i < out.rows(); ++i) {
        const double scale = row[i] > a[i] && row[i] > 0.0 ? a[i] / row[i] : 1.0;
        if (scale != 1.0)
            out.row(i) *= scale;
    }
    const Vector col = out.colwise().sum().transpose();
    for (Index j = 0; j < out.cols(); ++j) {
        const double scale = col[j] > b[j] && col[j] > 0.0 ? b[j] / col[j] : 1.0;
        if (scale != 1.0)
            out.col(j) *= scale;
    }
    // clamp the residuals: round-off can leave them at -1e-19 after the
    // scaling passes, and the correction must stay nonnegative
    const Vector err_a = (a.w() - out.rowwise().sum()).cwiseMax(0.0);
    const Vector err_b = (b.w() - out.colwise().sum().transpose()).cwiseMax(0.0);
    const double mass = err_a.lpNorm<1>();
    if (mass > 0.0)
        out.noalias() += (err_a / mass) * err_b.transpose();
    return out;
}

}  // namespace lrot
