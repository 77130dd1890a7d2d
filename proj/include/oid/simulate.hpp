#pragma once

// Homogeneous current dynamics dI/dt = -inductance^{-1} * resistance * I and
// empirical checks of the inductivity / resistivity envelopes.

#include <iosfwd>
#include <span>
#include <vector>

#include "oid/measures.hpp"

namespace oid {

struct Trajectory {
    std::vector<double> times;  // seconds, ascending, starts at 0
    Matrix currents;            // n x T
    Vector initial;             // balanced initial condition actually used
    std::vector<double> norms;  // ||I(t_k)||
    bool projected = false;     // initial condition had to be projected onto sum(I) = 0
};

/// I(t) = expm(-inductance^{-1} * resistance * t) * I0 at every grid point.
/// I0 with |sum(I0)| > 1e-12 * ||I0|| is projected onto the balanced subspace
/// and the trajectory is flagged.
Trajectory homogeneous_solution(const AugmentedDynamics& dyn, const Vector& i0, std::span<const double> times);

/// Several initial conditions sharing one grid; each matrix exponential is
/// evaluated once.
std::vector<Trajectory> homogeneous_solutions(const AugmentedDynamics& dyn, const std::vector<Vector>& initial,
                                              std::span<const double> times);

/// `points` samples on [0, horizon * psi_nir].
std::vector<double> default_time_grid(double psi_nir, std::size_t points = 400, double horizon = 8.0);

/// Unit-norm balanced initial condition along the fastest-decaying mode,
/// which makes the inductivity lower envelope tight.
Vector worst_case_initial(const AugmentedDynamics& dyn);

struct EnvelopeVerdict {
    bool lower_ok = true;
    bool upper_ok = true;
    std::vector<double> lower_slack;  // ||I|| / (mu e^{-t/psi_nir} ||I0||) - 1
    std::vector<double> upper_slack;  // (mu' e^{-psi_nrr t} ||I0||) / ||I|| - 1
    double min_lower_slack = 0;
    double min_upper_slack = 0;
};

/// Checks mu e^{-t/psi_nir} ||I0|| <= ||I(t)|| <= mu' e^{-psi_nrr t} ||I0||
/// at every sample with multiplicative slack 1 + 1e-9; mu' = 1 / mu.
EnvelopeVerdict verify_envelopes(const Trajectory& traj, const MeasureReport& report);

struct DecayRates {
    double fastest = 0;  // fitted over the first 10% of the grid
    double slowest = 0;  // fitted over the last 10% of the (non-underflowed) grid
    bool truncated = false;
};

/// Log-linear least-squares decay rates of ||I(t)||. Samples with norm below
/// 1e-300 are dropped from the end of the fit window.
DecayRates fit_decay_rates(const Trajectory& traj);

/// CSV with header t,I_<id>...,norm.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<int>& node_ids);

}  // namespace oid
