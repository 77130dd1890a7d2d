#include "oid/kron.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "oid/spectral.hpp"

namespace oid {

namespace {

Matrix take(const Matrix& a, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                a(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    return out;
}

double wrap_angle(double a) { return a <= -std::numbers::pi ? a + 2 * std::numbers::pi : a; }

}  // namespace

ReducedLaplacian kron_reduce_real(const Matrix& laplacian, std::vector<std::size_t> keep,
                                  const std::optional<LoadCurrents>& loads) {
    const auto n = static_cast<std::size_t>(laplacian.rows());
    if (keep.empty()) throw std::invalid_argument("kron_reduce_real: kept node set is empty");
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    if (keep.back() >= n) throw std::invalid_argument("kron_reduce_real: kept index out of range");

    ReducedLaplacian out;
    out.kept = keep;
    for (std::size_t i = 0, k = 0; i < n; ++i) {
        if (k < keep.size() && keep[k] == i)
            ++k;
        else
            out.eliminated.push_back(i);
    }

    if (out.eliminated.empty()) {
        out.matrix = laplacian;
        out.identity = true;
        out.warning = "every node is kept; nothing to eliminate";
        if (loads && loads->currents.size() != 0)
            throw std::invalid_argument("kron_reduce_real: load currents given but no node is eliminated");
        return out;
    }

    const Matrix lss = take(laplacian, out.kept, out.kept);
    const Matrix lsl = take(laplacian, out.kept, out.eliminated);
    const Matrix lll = take(laplacian, out.eliminated, out.eliminated);

    Eigen::LLT<Matrix> chol(lll);
    if (chol.info() != Eigen::Success || !(chol.rcond() > 1e-12))
        throw NumericalError("kron_reduce_real: eliminated block is singular (load island without a kept node)");

    const Matrix lll_inv_lls = chol.solve(lsl.transpose());
    Matrix red = lss - lsl * lll_inv_lls;
    out.matrix = 0.5 * (red + red.transpose());

    if (loads) {
        if (loads->currents.size() != static_cast<Eigen::Index>(out.eliminated.size()))
            throw std::invalid_argument("kron_reduce_real: one load current per eliminated node is required");
        out.offset = -loads->line_resistance * (lsl * chol.solve(loads->currents));
    }
    return out;
}

GridModel reduce_to_sources(const PowerNetwork& net) {
    GridModel full = grid_model(net);
    const auto sources = net.source_indices();
    if (sources.empty()) throw std::invalid_argument("reduce_to_sources: network has no source nodes");
    if (sources.size() == net.node_count()) return full;

    const auto red = kron_reduce_real(full.laplacian, sources);
    GridModel g;
    g.laplacian = red.matrix;
    g.r = full.r;
    g.l = full.l;
    g.omega = full.omega;
    g.r_out.resize(static_cast<Eigen::Index>(sources.size()));
    g.l_out.resize(static_cast<Eigen::Index>(sources.size()));
    for (std::size_t k = 0; k < sources.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(sources[k]);
        g.r_out(static_cast<Eigen::Index>(k)) = full.r_out(i);
        g.l_out(static_cast<Eigen::Index>(k)) = full.l_out(i);
        g.node_ids.push_back(full.node_ids[sources[k]]);
    }
    return g;
}

ReducedAdmittance phasor_reduce(const PowerNetwork& net, std::optional<std::vector<std::size_t>> terminals) {
    auto term = terminals ? *terminals : net.source_indices();
    if (term.empty()) throw std::invalid_argument("phasor_reduce: no terminal nodes");
    std::sort(term.begin(), term.end());
    term.erase(std::unique(term.begin(), term.end()), term.end());
    if (term.back() >= net.node_count()) throw std::invalid_argument("phasor_reduce: terminal index out of range");

    const double lo = net.nodes()[term.front()].l_out;
    for (auto i : term) {
        const auto& nd = net.nodes()[i];
        if (nd.r_out != 0.0)
            throw std::invalid_argument("phasor_reduce: node " + std::to_string(nd.id) +
                                        " has output resistance; only inductive outputs are supported");
        if (std::abs(nd.l_out - lo) > 1e-12 * lo)
            throw std::invalid_argument("phasor_reduce: output inductances are not uniform");
    }
    if (!(lo > 0.0)) throw std::invalid_argument("phasor_reduce: output inductance must be positive");

    const double w = net.omega();
    const Complex j(0.0, 1.0);
    const Complex yo = 1.0 / (j * w * lo);
    const Complex yl = 1.0 / (net.line().r_per_len + j * w * net.line().l_per_len);

    const auto n = static_cast<Eigen::Index>(net.node_count());
    const auto s = static_cast<Eigen::Index>(term.size());
    const Matrix lap = build_laplacian(net).matrix;

    // Nodal system [I; 0] = [yo*I, -yo*E^T; -yo*E, yo*E*E^T + yl*Lap] [V_o; V].
    // Eliminating V gives Y = yo*I - yo^2 * E^T * M^{-1} * E with M = yo*P + yl*Lap,
    // which is yo*(I - (I + (yl/yo)*Lap)^{-1}) when every node is a terminal.
    CMatrix sel = CMatrix::Zero(n, s);
    CMatrix m = yl * lap.cast<Complex>();
    for (Eigen::Index k = 0; k < s; ++k) {
        const auto i = static_cast<Eigen::Index>(term[static_cast<std::size_t>(k)]);
        sel(i, k) = 1.0;
        m(i, i) += yo;
    }
    Eigen::FullPivLU<CMatrix> lu(m);
    if (!lu.isInvertible())
        throw NumericalError("phasor_reduce: nodal matrix is singular at omega = " + std::to_string(w) + " rad/s");
    const CMatrix x = lu.solve(sel);  // one solve per terminal column
    CMatrix y = yo * CMatrix::Identity(s, s) - yo * yo * (sel.transpose() * x);

    ReducedAdmittance out;
    out.y = 0.5 * (y + y.transpose());
    out.terminals = std::move(term);
    out.omega = w;
    return out;
}

std::string_view to_string(BranchClass c) {
    switch (c) {
        case BranchClass::Physical: return "physical";
        case BranchClass::Virtual: return "virtual";
        case BranchClass::Absent: return "absent";
    }
    return "unknown";
}

std::vector<BranchRecord> line_angles(const ReducedAdmittance& red, const PowerNetwork& original) {
    const auto s = red.y.rows();
    double ymax = 0.0;
    for (Eigen::Index a = 0; a < s; ++a)
        for (Eigen::Index b = 0; b < s; ++b) ymax = std::max(ymax, std::abs(red.y(a, b)));
    const double eps_edge = 1e-9 * ymax;

    std::vector<BranchRecord> out;
    for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = a + 1; b < s; ++b) {
            BranchRecord rec;
            rec.i = original.nodes()[red.terminals[static_cast<std::size_t>(a)]].id;
            rec.j = original.nodes()[red.terminals[static_cast<std::size_t>(b)]].id;
            rec.admittance = -red.y(a, b);
            if (std::abs(rec.admittance) < eps_edge) {
                rec.cls = BranchClass::Absent;
                rec.impedance = Complex(std::numeric_limits<double>::infinity(), 0.0);
                rec.theta = rec.theta_principal = rec.theta_entry = std::numeric_limits<double>::quiet_NaN();
                out.push_back(rec);
                continue;
            }
            rec.impedance = 1.0 / rec.admittance;
            const double re = rec.impedance.real(), im = rec.impedance.imag();
            rec.theta = wrap_angle(std::atan2(im, re));
            rec.theta_principal = std::atan(im / re);
            rec.theta_entry = wrap_angle(std::atan2(-im, -re));
            rec.cls = original.has_edge(rec.i, rec.j) ? BranchClass::Physical : BranchClass::Virtual;
            rec.nonphysical = re < 0.0 || im < 0.0;
            out.push_back(rec);
        }
    }
    return out;
}

}  // namespace oid
