#pragma once

// Output-inductor design.
//
// Uniform design inverts theta_NIR = atan(w * (l_o*lambda2 + l) / (r_o*lambda2 + r))
// for l_o. Non-uniform design maximizes lambda2(D * Lap) over the budget
// simplex {D_ii >= lower_i, sum D_ii = c}.

#include <cstddef>
#include <vector>

#include "oid/netmodel.hpp"

namespace oid {

struct SolverOptions {
    std::size_t quasi_random_starts = 16;  // in addition to the centroid and the vertices
    double tolerance = 1e-10;              // relative objective improvement
    std::size_t max_iterations = 20000;    // per start
};

struct AllocationProblem {
    Matrix laplacian;     // possibly Kron-reduced
    double budget = 0;    // henry
    Vector lower_bounds;  // empty means all zero
    SolverOptions options;
};

struct AllocationResult {
    Vector allocation;   // henry per node
    double lambda2 = 0;  // lambda2(diag(allocation) * Lap), checked by both eigen-routes
    std::size_t starts = 0;
    std::size_t iterations = 0;       // summed over starts
    std::vector<double> start_values;  // local optimum reached from each start
    double median_lambda2 = 0;
    double gap = 0;  // best - median
};

/// Deterministic multi-start direct search. From each start (centroid,
/// vertices, Halton points) it repeatedly takes the best improving move among
/// "shift mass to / from node i, redistributing proportionally over the
/// others" and pairwise transfers, halving the step when none improves.
/// Throws std::invalid_argument for a bad budget, infeasible bounds, or a
/// disconnected Laplacian.
AllocationResult optimize_allocation(const AllocationProblem& problem);

struct Landscape {
    std::vector<Vector> barycentric;  // excess budget split, entries sum to 1
    std::vector<Vector> allocation;   // henry
    std::vector<double> lambda2;
};

/// lambda2 on the regular barycentric grid with `resolution` divisions per
/// axis. Limited to n <= 6 nodes.
Landscape allocation_landscape(const AllocationProblem& problem, std::size_t resolution);

/// Uniform output inductance that brings theta_NIR to `target_theta` using
/// the model's (uniform) output resistance. Throws std::invalid_argument when
/// the target is >= pi/2 or below the value reached with l_o = 0.
double design_uniform(const GridModel& g, double target_theta);

struct NonuniformDesign {
    AllocationResult result;  // allocation scaled to `budget`
    double budget = 0;
    double psi_nir = 0;
    double theta_nir = 0;
};

/// Smallest total inductance whose lambda2-optimal split reaches
/// `target_theta` (inductive outputs only).
NonuniformDesign design_nonuniform(const GridModel& g, double target_theta, const SolverOptions& options = {});

}  // namespace oid
