// Test-only oracles: independent reference computations the solvers are
// checked against. Nothing here shares code with the implementation paths
// under test.
#pragma once

#include "lrot/core.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace oracles {

using lrot::Histogram;
using lrot::Index;
using lrot::Matrix;
using lrot::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = 0.1,
                            double hi = 1.0)
{
    std::uniform_real_distribution<double> unif(lo, hi);
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            M(i, j) = unif(rng);
    return M;
}

inline Vector random_positive_vector(Index n, std::mt19937_64& rng, double lo = 0.1,
                                     double hi = 1.0)
{
    return random_matrix(n, 1, rng, lo, hi).col(0);
}

inline Histogram random_histogram(Index n, std::mt19937_64& rng)
{
    Vector w = random_positive_vector(n, rng, 0.2, 1.0);
    return Histogram(w / w.sum());
}

// Random matrix with exact marginals (a, b) read off its own sums.
struct FeasibleInstance {
    Matrix P;
    Histogram a;
    Histogram b;
};
inline FeasibleInstance random_feasible_coupling(Index n, Index m, std::mt19937_64& rng)
{
    Matrix P = random_matrix(n, m, rng);
    P /= P.sum();
    return {P, Histogram(P.rowwise().sum()), Histogram(P.colwise().sum().transpose())};
}

// Exact OT for uniform square marginals by enumerating assignments.
inline double assignment_ot(const Matrix& C)
{
    const Index n = C.rows();
    std::vector<Index> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (Index i = 0; i < n; ++i)
            cost += C(i, perm[static_cast<size_t>(i)]);
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(n);
}

// ----- generic KL projection oracle -------------------------------------
//
// Minimizes sum z log(z/xi) - z + xi over an intersection of an affine set
// {A z = rhs} and a box {z >= lower} by projected gradient with Armijo
// backtracking; Euclidean projections onto the intersection are computed
// with Dykstra's alternating scheme. All quantities live on flattened
// triples (vec Q, vec R, g).

struct ConstraintSet {
    Matrix A;
    Vector rhs;
    Vector lower;
    Eigen::LDLT<Matrix> gram;

    void finalize()
    {
        if (A.rows() > 0)
            gram.compute(A * A.transpose());
    }
};

inline Vector euclid_project(const ConstraintSet& cs, const Vector& z, int sweeps = 400)
{
    Vector x = z;
    Vector p = Vector::Zero(z.size()), q = Vector::Zero(z.size());
    for (int s = 0; s < sweeps; ++s) {
        Vector y = x + p;
        if (cs.A.rows() > 0) {
            const Vector lambda = cs.gram.solve(cs.A * y - cs.rhs);
            y -= cs.A.transpose() * lambda;
        }
        p = (x + p) - y;
        Vector w = y + q;
        x = w.cwiseMax(cs.lower);
        q = w - x;
        const double affine_violation =
            cs.A.rows() > 0 ? (cs.A * x - cs.rhs).lpNorm<Eigen::Infinity>() : 0.0;
        if (affine_violation < 1e-13 && s > 2)
            break;
    }
    return x;
}

inline double kl_objective(const Vector& z, const Vector& xi)
{
    double acc = 0.0;
    for (Index i = 0; i < z.size(); ++i) {
        if (z[i] > 0.0)
            acc += z[i] * std::log(z[i] / xi[i]) - z[i] + xi[i];
        else
            acc += xi[i];
    }
    return acc;
}

inline Vector kl_project_oracle(const ConstraintSet& cs, const Vector& xi,
                                int iterations = 600)
{
    Vector z = euclid_project(cs, xi);
    z = z.cwiseMax(1e-12);
    double obj = kl_objective(z, xi);
    for (int it = 0; it < iterations; ++it) {
        const Vector grad = (z.cwiseMax(1e-15).array() / xi.array()).log();
        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            Vector cand = euclid_project(cs, z - step * grad);
            cand = cand.cwiseMax(cs.lower.cwiseMax(0.0));
            const double cand_obj = kl_objective(cand, xi);
            if (cand_obj < obj - 1e-16) {
                z = std::move(cand);
                obj = cand_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break;
    }
    return euclid_project(cs, z, 2000);
}

// Constraint builders on the flattened triple layout
// [vec(Q) (col-major n*r), vec(R) (m*r), g (r)].
struct TripleDims {
    Index n, m, r;
    Index total() const { return n * r + m * r + r; }
    Index q_at(Index i, Index k) const { return k * n + i; }
    Index r_at(Index j, Index k) const { return n * r + k * m + j; }
    Index g_at(Index k) const { return n * r + m * r + k; }
};

inline Vector flatten(const Matrix& Q, const Matrix& R, const Vector& g)
{
    Vector z(Q.size() + R.size() + g.size());
    z << Eigen::Map<const Vector>(Q.data(), Q.size()),
        Eigen::Map<const Vector>(R.data(), R.size()), g;
    return z;
}

inline void unflatten(const TripleDims& d, const Vector& z, Matrix& Q, Matrix& R, Vector& g)
{
    Q = Eigen::Map<const Matrix>(z.data(), d.n, d.r);
    R = Eigen::Map<const Matrix>(z.data() + d.n * d.r, d.m, d.r);
    g = z.tail(d.r);
}

// C1(a,b,alpha): row sums of Q and R fixed, g >= alpha.
inline ConstraintSet c1_constraints(const TripleDims& d, const Histogram& a,
                                    const Histogram& b, double alpha)
{
    ConstraintSet cs;
    cs.A = Matrix::Zero(d.n + d.m, d.total());
    cs.rhs.resize(d.n + d.m);
    for (Index i = 0; i < d.n; ++i) {
        for (Index k = 0; k < d.r; ++k)
            cs.A(i, d.q_at(i, k)) = 1.0;
        cs.rhs[i] = a[i];
    }
    for (Index j = 0; j < d.m; ++j) {
        for (Index k = 0; k < d.r; ++k)
            cs.A(d.n + j, d.r_at(j, k)) = 1.0;
        cs.rhs[d.n + j] = b[j];
    }
    cs.lower = Vector::Zero(d.total());
    cs.lower.tail(d.r).setConstant(alpha);
    cs.finalize();
    return cs;
}

// C2: column sums of Q and R equal g.
inline ConstraintSet c2_constraints(const TripleDims& d)
{
    ConstraintSet cs;
    cs.A = Matrix::Zero(2 * d.r, d.total());
    cs.rhs = Vector::Zero(2 * d.r);
    for (Index k = 0; k < d.r; ++k) {
        for (Index i = 0; i < d.n; ++i)
            cs.A(k, d.q_at(i, k)) = 1.0;
        cs.A(k, d.g_at(k)) = -1.0;
        for (Index j = 0; j < d.m; ++j)
            cs.A(d.r + k, d.r_at(j, k)) = 1.0;
        cs.A(d.r + k, d.g_at(k)) = -1.0;
    }
    cs.lower = Vector::Zero(d.total());
    cs.finalize();
    return cs;
}

// C1(a,b,alpha) /\ C2.
inline ConstraintSet c1c2_constraints(const TripleDims& d, const Histogram& a,
                                      const Histogram& b, double alpha)
{
    const ConstraintSet c1 = c1_constraints(d, a, b, alpha);
    const ConstraintSet c2 = c2_constraints(d);
    ConstraintSet cs;
    cs.A = Matrix::Zero(c1.A.rows() + c2.A.rows(), d.total());
    cs.A.topRows(c1.A.rows()) = c1.A;
    cs.A.bottomRows(c2.A.rows()) = c2.A;
    cs.rhs.resize(c1.rhs.size() + c2.rhs.size());
    cs.rhs << c1.rhs, c2.rhs;
    cs.lower = c1.lower;
    cs.finalize();
    return cs;
}

// Central finite differences of a scalar function of a vector.
template <typename F>
Vector central_diff(const F& f, const Vector& x, double h)
{
    Vector g(x.size());
    Vector xp = x;
    for (Index i = 0; i < x.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + step;
        const double fp = f(xp);
        xp[i] = x[i] - step;
        const double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

}  // namespace oracles
