#include "lrot/core.hpp"

#include <cmath>

namespace lrot {

Histogram::Histogram(Vector weights) : w_(std::move(weights))
{
    require(w_.size() > 0, "Histogram: empty weight vector");
    require((w_.array() >= 0.0).all(), "Histogram: negative entry");
    require(std::abs(w_.sum() - 1.0) <= kSimplexTol,
            "Histogram: weights must sum to 1 within 1e-12");
}

Histogram Histogram::uniform(Index n)
{
    require(n > 0, "Histogram::uniform: n must be positive");
    return Histogram(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

void Histogram::require_positive(const std::string& who) const
{
    if ((w_.array() < kPositivityFloor).any())
        throw std::invalid_argument(who + ": histogram must be strictly positive");
}

CostOperator CostOperator::dense(Matrix C)
{
    CostOperator op;
    op.factored_ = false;
    op.rows_ = C.rows();
    op.cols_ = C.cols();
    op.C_ = std::move(C);
    return op;
}

CostOperator CostOperator::factored(Matrix A, Matrix B)
{
    require(A.cols() == B.cols(), "CostOperator::factored: inner dimensions differ");
    CostOperator op;
    op.factored_ = true;
    op.rows_ = A.rows();
    op.cols_ = B.rows();
    op.A_ = std::move(A);
    op.B_ = std::move(B);
    return op;
}

const Matrix& CostOperator::factor_a() const
{
    require(factored_, "CostOperator: not factored");
    return A_;
}

const Matrix& CostOperator::factor_b() const
{
    require(factored_, "CostOperator: not factored");
    return B_;
}

Vector CostOperator::apply(const Vector& v) const
{
    require(v.size() == cols_, "CostOperator::apply: size mismatch");
    if (factored_)
        return A_ * (B_.transpose() * v);
    return C_ * v;
}

Vector CostOperator::apply_t(const Vector& u) const
{
    require(u.size() == rows_, "CostOperator::apply_t: size mismatch");
    if (factored_)
        return B_ * (A_.transpose() * u);
    return C_.transpose() * u;
}

Matrix CostOperator::apply_mat(const Matrix& V) const
{
    require(V.rows() == cols_, "CostOperator::apply_mat: size mismatch");
    if (factored_)
        return A_ * (B_.transpose() * V);
    return C_ * V;
}

Matrix CostOperator::apply_t_mat(const Matrix& U) const
{
    require(U.rows() == rows_, "CostOperator::apply_t_mat: size mismatch");
    if (factored_)
        return B_ * (A_.transpose() * U);
    return C_.transpose() * U;
}

double CostOperator::inner(const Matrix& P) const
{
    require(P.rows() == rows_ && P.cols() == cols_, "CostOperator::inner: shape mismatch");
    if (factored_)
        return (A_.transpose() * P * B_).trace();
    return C_.cwiseProduct(P).sum();
}

double CostOperator::inner_factored(const Matrix& Q, const Matrix& R, const Vector& g) const
{
    return diag_qcr(Q, R).cwiseQuotient(g).sum();
}

Vector CostOperator::diag_qcr(const Matrix& Q, const Matrix& R) const
{
    require(Q.rows() == rows_ && R.rows() == cols_ && Q.cols() == R.cols(),
            "CostOperator::diag_qcr: shape mismatch");
    const Matrix CR = apply_mat(R);  // n x r
    return (Q.cwiseProduct(CR)).colwise().sum().transpose();
}

Matrix CostOperator::to_dense() const
{
    if (factored_)
        return A_ * B_.transpose();
    return C_;
}

double CostOperator::spectral_norm(int iterations) const
{
    Vector v = Vector::Ones(cols_) / std::sqrt(static_cast<double>(cols_));
    double sigma = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector w = apply_t(apply(v));
        const double norm = w.norm();
        if (norm == 0.0)
            return 0.0;
        v = w / norm;
        sigma = std::sqrt(norm);
    }
    return sigma;
}

namespace {

inline double kl_terms(const double* p, const double* q, Index n, const char* who)
{
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
        require(q[i] > 0.0, std::string(who) + ": reference entry must be positive");
        require(p[i] >= 0.0, std::string(who) + ": negative entry");
        if (p[i] > 0.0)
            acc += p[i] * (std::log(p[i] / q[i]) - 1.0);
    }
    return acc;
}

inline double entropy_terms(const double* p, Index n)
{
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
        require(p[i] >= 0.0, "entropy: negative entry");
        if (p[i] > 0.0)
            acc -= p[i] * (std::log(p[i]) - 1.0);
    }
    return acc;
}

}  // namespace

double kl_divergence(const Matrix& P, const Matrix& Q)
{
    require(P.rows() == Q.rows() && P.cols() == Q.cols(), "kl_divergence: shape mismatch");
    return kl_terms(P.data(), Q.data(), P.size(), "kl_divergence");
}

double kl_divergence(const Vector& p, const Vector& q)
{
    require(p.size() == q.size(), "kl_divergence: shape mismatch");
    return kl_terms(p.data(), q.data(), p.size(), "kl_divergence");
}

double entropy(const Matrix& P)
{
    return entropy_terms(P.data(), P.size());
}

double entropy(const Vector& p)
{
    return entropy_terms(p.data(), p.size());
}

MarginalReport validate_coupling(const Matrix& P, const Histogram& a,
                                 const Histogram& b, double delta)
{
    require(P.rows() == a.size() && P.cols() == b.size(),
            "validate_coupling: shape mismatch");
    MarginalReport rep;
    rep.violation = (P.rowwise().sum() - a.w()).lpNorm<1>() +
                    (P.colwise().sum().transpose() - b.w()).lpNorm<1>();
    rep.feasible = rep.violation < delta;
    return rep;
}

Matrix assemble_coupling(const FactoredCoupling& fc)
{
    require(fc.Q.cols() == fc.rank() && fc.R.cols() == fc.rank(),
            "assemble_coupling: rank mismatch");
    require((fc.g.array() >= kPositivityFloor).all(),
            "assemble_coupling: inner marginal below positivity floor");
    return fc.Q * fc.g.cwiseInverse().asDiagonal() * fc.R.transpose();
}

}  // namespace lrot
