#include "lrot/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lrot::kernels {

namespace {

inline double md_entry(double m, double f, double gamma, double coeff, double floor)
{
    const double lf = std::log(std::max(f, floor));
    return std::exp(-gamma * m - coeff * lf);
}

inline double pnorm_entry(const Matrix& X, const Matrix& Y, Index i, Index j, double p)
{
    double acc = 0.0;
    for (Index k = 0; k < X.cols(); ++k)
        acc += std::pow(std::abs(X(i, k) - Y(j, k)), p);
    return std::pow(acc, 1.0 / p);
}

inline double lse(const double* data, Index n)
{
    const double c = *std::max_element(data, data + n);
    if (!std::isfinite(c))
        return c;  // all -inf (empty mass) or a nan input
    double acc = 0.0;
    for (Index k = 0; k < n; ++k)
        acc += std::exp(data[k] - c);
    return c + std::log(acc);
}

}  // namespace

Matrix exp_neg_scaled(const Matrix& M, double eps)
{
    require(eps > 0.0, "exp_neg_scaled: eps must be positive");
    Matrix K(M.rows(), M.cols());
    const double inv = 1.0 / eps;
    #pragma omp parallel for schedule(static)
    for (Index j = 0; j < M.cols(); ++j)
        for (Index i = 0; i < M.rows(); ++i)
            K(i, j) = std::exp(-M(i, j) * inv);
    return K;
}

Matrix md_factor(const Matrix& M, const Matrix& F, double gamma, double coeff, double floor)
{
    require(M.rows() == F.rows() && M.cols() == F.cols(), "md_factor: shape mismatch");
    Matrix out(M.rows(), M.cols());
    #pragma omp parallel for schedule(static)
    for (Index j = 0; j < M.cols(); ++j)
        for (Index i = 0; i < M.rows(); ++i)
            out(i, j) = md_entry(M(i, j), F(i, j), gamma, coeff, floor);
    return out;
}

Matrix pairwise_sqeuclid(const Matrix& X, const Matrix& Y)
{
    require(X.cols() == Y.cols(), "pairwise_sqeuclid: dimension mismatch");
    Matrix D(X.rows(), Y.rows());
    #pragma omp parallel for schedule(static)
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < Y.rows(); ++j)
            D(i, j) = (X.row(i) - Y.row(j)).squaredNorm();
    return D;
}

Matrix pairwise_pnorm(const Matrix& X, const Matrix& Y, double p)
{
    require(X.cols() == Y.cols(), "pairwise_pnorm: dimension mismatch");
    require(p >= 1.0, "pairwise_pnorm: p must be >= 1");
    Matrix D(X.rows(), Y.rows());
    #pragma omp parallel for schedule(static)
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < Y.rows(); ++j)
            D(i, j) = pnorm_entry(X, Y, i, j, p);
    return D;
}

double gw_energy_quad(const Matrix& D, const Matrix& Dp, const Matrix& P)
{
    const Index n = D.rows(), m = Dp.rows();
    require(D.cols() == n && Dp.cols() == m, "gw_energy_quad: similarity matrices must be square");
    require(P.rows() == n && P.cols() == m, "gw_energy_quad: coupling shape mismatch");
    Vector partial = Vector::Zero(n);
    #pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < m; ++j) {
            const double pij = P(i, j);
            if (pij == 0.0)
                continue;
            for (Index i2 = 0; i2 < n; ++i2)
                for (Index j2 = 0; j2 < m; ++j2) {
                    const double d = D(i, i2) - Dp(j, j2);
                    acc += d * d * pij * P(i2, j2);
                }
        }
        partial[i] = acc;
    }
    return std::accumulate(partial.data(), partial.data() + n, 0.0);
}

void floyd_warshall(Matrix& W)
{
    const Index n = W.rows();
    require(W.cols() == n, "floyd_warshall: matrix must be square");
    for (Index k = 0; k < n; ++k) {
        #pragma omp parallel for schedule(static)
        for (Index i = 0; i < n; ++i) {
            const double wik = W(i, k);
            for (Index j = 0; j < n; ++j) {
                const double via = wik + W(k, j);
                if (via < W(i, j))
                    W(i, j) = via;
            }
        }
    }
}

Vector logsumexp_rows(const Matrix& M)
{
    Vector out(M.rows());
    Matrix Mt = M.transpose();  // contiguous row access
    #pragma omp parallel for schedule(static)
    for (Index i = 0; i < Mt.cols(); ++i)
        out[i] = lse(Mt.col(i).data(), Mt.rows());
    return out;
}

Vector logsumexp_cols(const Matrix& M)
{
    Vector out(M.cols());
    #pragma omp parallel for schedule(static)
    for (Index j = 0; j < M.cols(); ++j)
        out[j] = lse(M.col(j).data(), M.rows());
    return out;
}

namespace serial {

Matrix exp_neg_scaled(const Matrix& M, double eps)
{
    require(eps > 0.0, "exp_neg_scaled: eps must be positive");
    Matrix K(M.rows(), M.cols());
    const double inv = 1.0 / eps;
    for (Index j = 0; j < M.cols(); ++j)
        for (Index i = 0; i < M.rows(); ++i)
            K(i, j) = std::exp(-M(i, j) * inv);
    return K;
}

Matrix md_factor(const Matrix& M, const Matrix& F, double gamma, double coeff, double floor)
{
    require(M.rows() == F.rows() && M.cols() == F.cols(), "md_factor: shape mismatch");
    Matrix out(M.rows(), M.cols());
    for (Index j = 0; j < M.cols(); ++j)
        for (Index i = 0; i < M.rows(); ++i)
            out(i, j) = md_entry(M(i, j), F(i, j), gamma, coeff, floor);
    return out;
}

Matrix pairwise_sqeuclid(const Matrix& X, const Matrix& Y)
{
    require(X.cols() == Y.cols(), "pairwise_sqeuclid: dimension mismatch");
    Matrix D(X.rows(), Y.rows());
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < Y.rows(); ++j)
            D(i, j) = (X.row(i) - Y.row(j)).squaredNorm();
    return D;
}

Matrix pairwise_pnorm(const Matrix& X, const Matrix& Y, double p)
{
    require(X.cols() == Y.cols(), "pairwise_pnorm: dimension mismatch");
    require(p >= 1.0, "pairwise_pnorm: p must be >= 1");
    Matrix D(X.rows(), Y.rows());
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < Y.rows(); ++j)
            D(i, j) = pnorm_entry(X, Y, i, j, p);
    return D;
}

double gw_energy_quad(const Matrix& D, const Matrix& Dp, const Matrix& P)
{
    const Index n = D.rows(), m = Dp.rows();
    require(D.cols() == n && Dp.cols() == m, "gw_energy_quad: similarity matrices must be square");
    require(P.rows() == n && P.cols() == m, "gw_energy_quad: coupling shape mismatch");
    Vector partial = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < m; ++j) {
            const double pij = P(i, j);
            if (pij == 0.0)
                continue;
            for (Index i2 = 0; i2 < n; ++i2)
                for (Index j2 = 0; j2 < m; ++j2) {
                    const double d = D(i, i2) - Dp(j, j2);
                    acc += d * d * pij * P(i2, j2);
                }
        }
        partial[i] = acc;
    }
    return std::accumulate(partial.data(), partial.data() + n, 0.0);
}

void floyd_warshall(Matrix& W)
{
    const Index n = W.rows();
    require(W.cols() == n, "floyd_warshall: matrix must be square");
    for (Index k = 0; k < n; ++k)
        for (Index i = 0; i < n; ++i) {
            const double wik = W(i, k);
            for (Index j = 0; j < n; ++j) {
                const double via = wik + W(k, j);
                if (via < W(i, j))
                    W(i, j) = via;
            }
        }
}

Vector logsumexp_rows(const Matrix& M)
{
    Vector out(M.rows());
    Matrix Mt = M.transpose();
    for (Index i = 0; i < Mt.cols(); ++i)
        out[i] = lse(Mt.col(i).data(), Mt.rows());
    return out;
}

Vector logsumexp_cols(const Matrix& M)
{
    Vector out(M.cols());
    for (Index j = 0; j < M.cols(); ++j)
        out[j] = lse(M.col(j).data(), M.rows());
    return out;
}

}  // namespace serial

}  // namespace lrot::kernels
