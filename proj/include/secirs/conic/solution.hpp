// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>

namespace secirs::conic {

enum class SolveStatus {
    optimal,
    infeasible,        // primal infeasibility certificate found
    unbounded,         // dual infeasibility certificate (objective unbounded below)
    numerical_failure,
    iteration_limit,
};

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_failure: return "numerical-failure";
        case SolveStatus::iteration_limit: return "iteration-limit";
    }
    return "?";
}

struct SolverStats {
    int iterations = 0;
    double primal_residual = 0.0;  // max scaled equality / cone-membership violation
    double dual_residual = 0.0;
    double gap = 0.0;
    double rel_gap = 0.0;
    double tolerance = 0.0;  // tolerance the residuals were checked against
    bool full_accuracy = true;
};

struct ConicSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    double objective = 0.0;
    Eigen::VectorXd x;  // primal values for all scalar variables (empty if infeasible)
    Eigen::VectorXd y;  // equality multipliers
    Eigen::VectorXd z;  // cone multipliers (dual slack), cone order
    SolverStats stats;

    bool ok() const { return status == SolveStatus::optimal; }
};

}  // namespace secirs::conic
