#include "oid/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "oid/spectral.hpp"

namespace oid {

namespace {

bool all_equal(const Vector& v) {
    if (v.size() == 0) return true;
    const double hi = v.maxCoeff(), lo = v.minCoeff();
    return hi - lo <= 1e-12 * std::max(std::abs(hi), std::numeric_limits<double>::min());
}

// Orthonormal basis of {x : sum(x) = 0} from the symmetric centering projector.
Matrix balanced_basis(Eigen::Index n) {
    Matrix centering = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
    const auto s = eig_symmetric(centering);
    return s.vectors.rightCols(n - 1);  // eigenvalue 1 block
}

}  // namespace

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::Lambda2: return "lambda2";
        case Regime::LambdaMax: return "lambda_max";
        case Regime::Degenerate: return "degenerate";
        case Regime::Paired: return "paired";
    }
    return "unknown";
}

bool has_uniform_outputs(const GridModel& g) { return all_equal(g.r_out) && all_equal(g.l_out); }

AugmentedDynamics assemble_dynamics(const GridModel& g) {
    const auto n = g.laplacian.rows();
    const Matrix eye = Matrix::Identity(n, n);
    AugmentedDynamics dyn;
    if (has_uniform_outputs(g)) {
        const double ro = g.r_out(0), lo = g.l_out(0);
        dyn.mode = DynamicsMode::Uniform;
        dyn.resistance = ro * g.laplacian + g.r * eye;
        dyn.inductance = lo * g.laplacian + g.l * eye;
    } else {
        dyn.mode = DynamicsMode::Nonuniform;
        dyn.resistance = g.r * eye + g.laplacian * g.r_out.asDiagonal();
        dyn.inductance = g.l * eye + g.laplacian * g.l_out.asDiagonal();
    }
    return dyn;
}

AugmentedDynamics assemble_dynamics(const PowerNetwork& net) { return assemble_dynamics(grid_model(net)); }

Matrix decay_operator(const AugmentedDynamics& dyn) {
    Eigen::PartialPivLU<Matrix> lu(dyn.inductance);
    if (!(lu.rcond() > 1e-14)) throw NumericalError("decay_operator: inductance matrix is singular");
    return lu.solve(dyn.resistance);
}

Vector balanced_decay_rates(const AugmentedDynamics& dyn) {
    const Matrix a = decay_operator(dyn);
    const Matrix q = balanced_basis(a.rows());
    return eig_general_real(q.transpose() * a * q);
}

Assumption1 check_assumption1(const AugmentedDynamics& dyn) {
    const Matrix a = decay_operator(dyn);
    const auto g = eig_general(a);
    Assumption1 out;
    out.real = g.real;
    out.imag = g.imag;
    out.spectral_radius = 0;
    for (Eigen::Index i = 0; i < g.real.size(); ++i)
        out.spectral_radius = std::max(out.spectral_radius, std::hypot(g.real(i), g.imag(i)));
    const double tol = 1e-8 * out.spectral_radius;
    out.ok = (g.imag.cwiseAbs().array() <= tol).all() && (g.real.array() > 0.0).all();
    return out;
}

double theta_nir(double psi_nir, double omega) {
    if (!(omega > 0)) throw std::invalid_argument("theta_nir: omega must be positive");
    return std::atan(omega * psi_nir);
}

MeasureReport psi_nir_uniform(const GridModel& g) {
    if (!has_uniform_outputs(g)) throw std::invalid_argument("psi_nir_uniform: output impedances are not uniform");
    const auto spec = eig_symmetric(g.laplacian);
    const double l2 = algebraic_connectivity(spec).lambda2;
    const double lmax = spec.values(spec.values.size() - 1);
    const double ro = g.r_out(0), lo = g.l_out(0);

    // rate(lambda) = (ro*lambda + r) / (lo*lambda + l) is monotone in lambda;
    // its direction is the sign of ro*l - r*lo.
    auto psi_at = [&](double lam) { return (lo * lam + g.l) / (ro * lam + g.r); };

    MeasureReport rep;
    rep.mode = DynamicsMode::Uniform;
    rep.lambda2 = l2;
    rep.lambda_max = lmax;
    const double cross = ro * g.l - g.r * lo;
    const double scale = std::max(ro * g.l, g.r * lo);
    if ((ro == 0.0 && lo == 0.0) || std::abs(cross) <= 1e-12 * scale) {
        rep.regime = Regime::Degenerate;
        rep.lambda_used = 0;
        rep.psi_nir = g.l / g.r;
        rep.psi_nrr = g.r / g.l;
    } else if (cross < 0) {
        rep.regime = Regime::Lambda2;
        rep.lambda_used = l2;
        rep.psi_nir = psi_at(l2);
        rep.psi_nrr = 1.0 / psi_at(lmax);
    } else {
        rep.regime = Regime::LambdaMax;
        rep.lambda_used = lmax;
        rep.psi_nir = psi_at(lmax);
        rep.psi_nrr = 1.0 / psi_at(l2);
    }
    rep.mu = 1.0;
    rep.mu_defined = true;
    rep.theta_nir = theta_nir(rep.psi_nir, g.omega);
    rep.assumption1_ok = check_assumption1(assemble_dynamics(g)).ok;
    return rep;
}

MeasureReport psi_nir_uniform(const PowerNetwork& net) { return psi_nir_uniform(grid_model(net)); }

MeasureReport psi_nir_nonuniform(const GridModel& g) {
    const auto n = g.laplacian.rows();
    const auto lap_spec = eig_symmetric(g.laplacian);

    MeasureReport rep;
    rep.mode = DynamicsMode::Nonuniform;
    rep.lambda2 = algebraic_connectivity(lap_spec).lambda2;
    rep.lambda_max = lap_spec.values(n - 1);

    const Vector lam_l = eig_product(g.l_out, g.laplacian).spectrum.values;
    if ((g.r_out.array() == 0.0).all()) {
        rep.regime = Regime::Lambda2;
        rep.paired_index = 1;
        rep.lambda_used = lam_l(1);
        rep.psi_nir = (lam_l(1) + g.l) / g.r;
        rep.psi_nrr = g.r / (lam_l(n - 1) + g.l);
    } else {
        const Vector lam_r = eig_product(g.r_out, g.laplacian).spectrum.values;
        rep.psi_nir = std::numeric_limits<double>::infinity();
        rep.psi_nrr = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 1; i < n; ++i) {
            const double ratio = (lam_l(i) + g.l) / (lam_r(i) + g.r);
            if (ratio < rep.psi_nir) {
                rep.psi_nir = ratio;
                rep.paired_index = static_cast<std::size_t>(i);
            }
            rep.psi_nrr = std::min(rep.psi_nrr, 1.0 / ratio);
        }
        rep.lambda_used = lam_l(static_cast<Eigen::Index>(rep.paired_index));
        rep.regime = rep.paired_index == 1                                   ? Regime::Lambda2
                     : rep.paired_index == static_cast<std::size_t>(n - 1) ? Regime::LambdaMax
                                                                           : Regime::Paired;
    }

    // Envelope constant from the spread of the output inductors; with no
    // inductors at all the resistors play the same role.
    const Vector& spread = g.l_out.maxCoeff() > 0.0 ? g.l_out : g.r_out;
    if (spread.minCoeff() > 0.0) {
        rep.mu = std::sqrt(spread.minCoeff() / spread.maxCoeff());
        rep.mu_defined = true;
    } else {
        rep.mu = 0.0;
        rep.mu_defined = false;
    }

    rep.theta_nir = theta_nir(rep.psi_nir, g.omega);
    rep.assumption1_ok = check_assumption1(assemble_dynamics(g)).ok;
    return rep;
}

MeasureReport psi_nir_nonuniform(const PowerNetwork& net) { return psi_nir_nonuniform(grid_model(net)); }

MeasureReport analyze(const GridModel& g) {
    return has_uniform_outputs(g) ? psi_nir_uniform(g) : psi_nir_nonuniform(g);
}

}  // namespace oid
