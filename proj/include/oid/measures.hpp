#pragma once

// Network inductivity / resistivity ratios of the augmented dynamics
//
//     R * I + L * dI/dt = Lap * V_o
//
// where the output impedances are folded into R and L. Uniform outputs give
// R = r_o*Lap + r*I, L = l_o*Lap + l*I; non-uniform outputs give
// R = r*I + Lap*D_r, L = l*I + Lap*D_l.

#include <cstddef>
#include <string_view>

#include "oid/netmodel.hpp"

namespace oid {

enum class DynamicsMode { Uniform, Nonuniform };

struct AugmentedDynamics {
    Matrix resistance;
    Matrix inductance;
    DynamicsMode mode = DynamicsMode::Uniform;

    std::size_t size() const { return static_cast<std::size_t>(resistance.rows()); }
};

/// Uniform iff all r_out agree and all l_out agree (relative spread <= 1e-12).
bool has_uniform_outputs(const GridModel& g);

AugmentedDynamics assemble_dynamics(const GridModel& g);
AugmentedDynamics assemble_dynamics(const PowerNetwork& net);

/// inductance^{-1} * resistance. Throws NumericalError if `inductance` is singular.
Matrix decay_operator(const AugmentedDynamics& dyn);

/// Eigenvalues of the decay operator restricted to the balanced subspace
/// {x : sum(x) = 0}, ascending. The subspace is invariant because
/// 1^T * inductance and 1^T * resistance are multiples of 1^T.
Vector balanced_decay_rates(const AugmentedDynamics& dyn);

struct Assumption1 {
    bool ok = false;
    Vector real;  // ascending
    Vector imag;
    double spectral_radius = 0;
};

/// All eigenvalues of inductance^{-1} * resistance real (|imag| <= 1e-8 * radius)
/// and positive.
Assumption1 check_assumption1(const AugmentedDynamics& dyn);

enum class Regime { Lambda2, LambdaMax, Degenerate, Paired };

std::string_view to_string(Regime r);

struct MeasureReport {
    double psi_nir = 0;    // seconds
    double psi_nrr = 0;    // 1 / seconds
    double theta_nir = 0;  // radians
    Regime regime = Regime::Degenerate;
    double mu = 1;            // lower-envelope constant
    bool mu_defined = true;   // false when some output inductance is zero
    bool assumption1_ok = false;
    double lambda_used = 0;   // eigenvalue that fixes psi_nir
    double lambda2 = 0;       // algebraic connectivity of the network Laplacian
    double lambda_max = 0;
    std::size_t paired_index = 1;  // non-uniform general case: index (0-based) attaining the minimum
    DynamicsMode mode = DynamicsMode::Uniform;
};

/// Uniform output impedances. Requires has_uniform_outputs(g).
MeasureReport psi_nir_uniform(const GridModel& g);
MeasureReport psi_nir_uniform(const PowerNetwork& net);

/// Per-node output impedances. Inductors only: psi = (lambda2(D_l*Lap) + l) / r.
/// Otherwise the ascending eigenvalues of Lap*D_l and Lap*D_r are paired by
/// index and psi = min_{i>=2} (lambda_l,i + l) / (lambda_r,i + r).
MeasureReport psi_nir_nonuniform(const GridModel& g);
MeasureReport psi_nir_nonuniform(const PowerNetwork& net);

/// Dispatches on has_uniform_outputs.
MeasureReport analyze(const GridModel& g);

double theta_nir(double psi_nir, double omega);
inline double theta_nir(const MeasureReport& report, double omega) { return theta_nir(report.psi_nir, omega); }

}  // namespace oid
