#pragma once

// Kron reduction: elimination of interior / load nodes.
//
// Real mode is the Schur complement of a weighted Laplacian onto a kept node
// set (constant-current loads). Phasor mode eliminates the grid nodes behind
// uniform inductive output impedances and returns the complex admittance seen
// between the source terminals.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "oid/netmodel.hpp"

namespace oid {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

/// Constant current sinks I_L* at the eliminated nodes (in ascending index
/// order) together with the line resistance per length that scales them.
struct LoadCurrents {
    Vector currents;
    double line_resistance = 0;
};

struct ReducedLaplacian {
    Matrix matrix;                         // L_SS - L_SL * L_LL^{-1} * L_LS
    std::vector<std::size_t> kept;         // original indices, ascending
    std::vector<std::size_t> eliminated;   // original indices, ascending
    std::optional<Vector> offset;          // -r * L_SL * L_LL^{-1} * I_L*
    bool identity = false;                 // nothing was eliminated
    std::string warning;
};

/// Throws std::invalid_argument for an empty or out-of-range kept set and
/// NumericalError when L_LL is singular (a load island with no path to a kept node).
ReducedLaplacian kron_reduce_real(const Matrix& laplacian, std::vector<std::size_t> keep,
                                  const std::optional<LoadCurrents>& loads = std::nullopt);

/// GridModel on the source nodes of `net`: Kron-reduced Laplacian plus the
/// sources' output impedances. Returns the full model when every node is a source.
GridModel reduce_to_sources(const PowerNetwork& net);

struct ReducedAdmittance {
    CMatrix y;                          // n_s x n_s
    std::vector<std::size_t> terminals; // original indices, ascending
    double omega = 0;
};

/// Admittance between the output terminals of the chosen nodes (default: the
/// network's sources). With every node a terminal this is
///     Y = y_o * (I - (I + (y_l / y_o) * Lap)^{-1}),
/// y_o = 1/(j w l_o), y_l = 1/(r + j w l). Terminals must share one output
/// inductance l_o > 0 and have zero output resistance.
ReducedAdmittance phasor_reduce(const PowerNetwork& net,
                                std::optional<std::vector<std::size_t>> terminals = std::nullopt);

enum class BranchClass { Physical, Virtual, Absent };

std::string_view to_string(BranchClass c);

struct BranchRecord {
    int i = 0;  // node ids, i < j
    int j = 0;
    Complex admittance;   // -Y_ij
    Complex impedance;    // 1 / admittance
    double theta = 0;            // atan2(X, R) of the branch impedance, (-pi, pi]
    double theta_principal = 0;  // atan(X / R)
    double theta_entry = 0;      // atan2 of 1 / Y_ij (entry sign convention)
    BranchClass cls = BranchClass::Absent;
    bool nonphysical = false;    // negative branch resistance or reactance
};

/// One record per unordered terminal pair. Branches with |admittance| below
/// 1e-9 * max|Y_ij| are absent; a branch is physical when the original
/// network has a line between the two nodes, virtual otherwise.
std::vector<BranchRecord> line_angles(const ReducedAdmittance& red, const PowerNetwork& original);

}  // namespace oid
