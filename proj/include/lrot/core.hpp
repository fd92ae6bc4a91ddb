#pragma once

#include "lrot/common.hpp"

#include <vector>

namespace lrot {

// Strictly positive floor required of solver inputs. Entries below it are
// rejected rather than clamped.
inline constexpr double kPositivityFloor = 1e-300;
inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kMarginalTol = 1e-7;

// Probability vector on the simplex. Immutable after construction.
class Histogram {
public:
    // Validates nonnegativity and unit mass (within 1e-12 absolute).
    explicit Histogram(Vector weights);

    static Histogram uniform(Index n);

    const Vector& w() const { return w_; }
    Index size() const { return w_.size(); }
    double operator[](Index i) const { return w_[i]; }

    // Solver entry points require a > 0 strictly; throws otherwise.
    void require_positive(const std::string& who) const;

private:
    Vector w_;
};

// Triple (Q, R, g) representing the coupling P = Q Diag(1/g) R^T with
// shared inner marginal g.
struct FactoredCoupling {
    Matrix Q;  // n x r, nonnegative
    Matrix R;  // m x r, nonnegative
    Vector g;  // r, strictly positive

    Index rank() const { return g.size(); }
};

// Cost matrix, dense or as a product A B^T applied without materialization.
class CostOperator {
public:
    static CostOperator dense(Matrix C);
    static CostOperator factored(Matrix A, Matrix B);

    bool is_factored() const { return factored_; }
    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index factor_dim() const { return factored_ ? A_.cols() : -1; }

    const Matrix& factor_a() const;
    const Matrix& factor_b() const;

    Vector apply(const Vector& v) const;     // C v
    Vector apply_t(const Vector& u) const;   // C^T u
    Matrix apply_mat(const Matrix& V) const;    // C V       (n x r)
    Matrix apply_t_mat(const Matrix& U) const;  // C^T U     (m x r)

    // <C, P>
    double inner(const Matrix& P) const;
    // <C, Q Diag(1/g) R^T> without assembling the coupling.
    double inner_factored(const Matrix& Q, const Matrix& R, const Vector& g) const;
    // diag(Q^T C R), the r-vector of inner-marginal gradients.
    Vector diag_qcr(const Matrix& Q, const Matrix& R) const;

    // Materializes the dense matrix (desk scale only).
    Matrix to_dense() const;

    // Spectral norm estimate by power iteration on C^T C.
    double spectral_norm(int iterations = 30) const;

private:
    CostOperator() = default;
    bool factored_ = false;
    Index rows_ = 0, cols_ = 0;
    Matrix C_;       // dense storage
    Matrix A_, B_;   // factored storage, C = A B^T
};

// Per-iteration solver diagnostics. All traces share one length: the
// number of completed outer iterations.
struct SolverReport {
    std::vector<double> objective;
    std::vector<double> delta;
    std::vector<double> marginal_violation;
    std::vector<long> inner_iterations;
    double elapsed_seconds = 0.0;
    bool converged = false;
};

struct MarginalReport {
    double violation = 0.0;  // ||P 1 - a||_1 + ||P^T 1 - b||_1
    bool feasible = false;
};

// KL(P,Q) = sum P_ij (log(P_ij / Q_ij) - 1), with 0 log 0 = 0.
double kl_divergence(const Matrix& P, const Matrix& Q);
double kl_divergence(const Vector& p, const Vector& q);

// H(P) = -sum P_ij (log P_ij - 1), with 0 log 0 = 0.
double entropy(const Matrix& P);
double entropy(const Vector& p);

MarginalReport validate_coupling(const Matrix& P, const Histogram& a,
                                 const Histogram& b, double delta = kMarginalTol);

// P = Q Diag(1/g) R^T.
Matrix assemble_coupling(const FactoredCoupling& fc);

}  // namespace lrot
