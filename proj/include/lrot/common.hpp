#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace lrot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Thrown when a solver fails to reach its tolerance or leaves the valid
// numerical range. Carries the last observed residual for diagnostics.
class SolverError : public std::runtime_error {
public:
    SolverError(std::string what, double last_residual = 0.0, long iterations = 0)
        : std::runtime_error(std::move(what)),
          last_residual(last_residual),
          iterations(iterations) {}

    double last_residual;
    long iterations;
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond)
        throw std::invalid_argument(msg);
}

}  // namespace lrot
