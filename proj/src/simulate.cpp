#include "oid/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "oid/format.hpp"
#include "oid/spectral.hpp"

namespace oid {

namespace {

void check_grid(std::span<const double> times) {
    if (times.empty()) throw std::invalid_argument("time grid is empty");
    if (times.front() != 0.0) throw std::invalid_argument("time grid must start at t = 0");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("time grid must be strictly ascending");
}

Vector balanced(const Vector& i0, bool& projected) {
    projected = false;
    const double total = i0.sum();
    if (std::abs(total) > 1e-12 * i0.norm()) {
        projected = true;
        return i0.array() - total / static_cast<double>(i0.size());
    }
    return i0;
}

double fit_slope(const std::vector<double>& t, const std::vector<double>& y, std::size_t lo, std::size_t hi) {
    const double m = static_cast<double>(hi - lo);
    double st = 0, sy = 0;
    for (auto k = lo; k < hi; ++k) {
        st += t[k];
        sy += y[k];
    }
    const double tb = st / m, yb = sy / m;
    double num = 0, den = 0;
    for (auto k = lo; k < hi; ++k) {
        num += (t[k] - tb) * (y[k] - yb);
        den += (t[k] - tb) * (t[k] - tb);
    }
    return num / den;
}

}  // namespace

std::vector<Trajectory> homogeneous_solutions(const AugmentedDynamics& dyn, const std::vector<Vector>& initial,
                                              std::span<const double> times) {
    check_grid(times);
    const Matrix a = decay_operator(dyn);
    const auto n = a.rows();
    const auto steps = static_cast<Eigen::Index>(times.size());

    std::vector<Trajectory> out(initial.size());
    for (std::size_t s = 0; s < initial.size(); ++s) {
        if (initial[s].size() != n) throw std::invalid_argument("initial condition has the wrong dimension");
        auto& tr = out[s];
        tr.times.assign(times.begin(), times.end());
        tr.initial = balanced(initial[s], tr.projected);
        tr.currents.resize(n, steps);
        tr.norms.resize(times.size());
    }
    for (Eigen::Index k = 0; k < steps; ++k) {
        const Matrix prop = (-a * times[static_cast<std::size_t>(k)]).exp();
        for (auto& tr : out) {
            tr.currents.col(k) = prop * tr.initial;
            tr.norms[static_cast<std::size_t>(k)] = tr.currents.col(k).norm();
        }
    }
    return out;
}

Trajectory homogeneous_solution(const AugmentedDynamics& dyn, const Vector& i0, std::span<const double> times) {
    return std::move(homogeneous_solutions(dyn, {i0}, times).front());
}

std::vector<double> default_time_grid(double psi_nir, std::size_t points, double horizon) {
    if (points < 2) throw std::invalid_argument("default_time_grid: need at least two points");
    if (!(psi_nir > 0)) throw std::invalid_argument("default_time_grid: psi_nir must be positive");
    std::vector<double> t(points);
    const double t_max = horizon * psi_nir;
    for (std::size_t k = 0; k < points; ++k) t[k] = t_max * static_cast<double>(k) / static_cast<double>(points - 1);
    return t;
}

Vector worst_case_initial(const AugmentedDynamics& dyn) {
    const Matrix a = decay_operator(dyn);
    const auto n = a.rows();
    // orthonormal basis of the balanced subspace
    Matrix centering = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
    const Matrix q = eig_symmetric(centering).vectors.rightCols(n - 1);
    const Matrix b = q.transpose() * a * q;

    Eigen::EigenSolver<Matrix> solver(b);
    if (solver.info() != Eigen::Success) throw NumericalError("worst_case_initial: eigen-decomposition failed");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < b.rows(); ++i)
        if (solver.eigenvalues()(i).real() > solver.eigenvalues()(best).real()) best = i;
    Vector v = q * solver.eigenvectors().col(best).real();
    v -= Vector::Constant(n, v.mean());
    return v / v.norm();
}

EnvelopeVerdict verify_envelopes(const Trajectory& traj, const MeasureReport& report) {
    constexpr double slack = 1.0 + 1e-9;
    EnvelopeVerdict v;
    const double n0 = traj.initial.norm();
    const double mu = report.mu;
    const double mu_upper = mu > 0 ? 1.0 / mu : std::numeric_limits<double>::infinity();
    v.min_lower_slack = v.min_upper_slack = std::numeric_limits<double>::infinity();

    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times[k];
        const double norm = traj.norms[k];
        const double lower = mu * std::exp(-t / report.psi_nir) * n0;
        const double upper = mu_upper * std::exp(-report.psi_nrr * t) * n0;

        const double ls = lower > 0 ? norm / lower - 1.0 : (norm > 0 ? std::numeric_limits<double>::infinity() : 0.0);
        const double us = norm > 0 ? upper / norm - 1.0 : (upper > 0 ? std::numeric_limits<double>::infinity() : 0.0);
        v.lower_slack.push_back(ls);
        v.upper_slack.push_back(us);
        v.min_lower_slack = std::min(v.min_lower_slack, ls);
        v.min_upper_slack = std::min(v.min_upper_slack, us);
        if (norm * slack < lower) v.lower_ok = false;
        if (norm > upper * slack) v.upper_ok = false;
    }
    return v;
}

DecayRates fit_decay_rates(const Trajectory& traj) {
    const auto total = traj.times.size();
    if (total < 4) throw std::invalid_argument("fit_decay_rates: need at least four samples");
    if (!(traj.norms.front() > 0)) throw std::invalid_argument("fit_decay_rates: trajectory is identically zero");

    DecayRates out;
    std::size_t usable = total;
    for (std::size_t k = 0; k < total; ++k) {
        if (traj.norms[k] < 1e-300) {
            usable = k;
            out.truncated = true;
            break;
        }
    }
    if (usable < 4) throw std::invalid_argument("fit_decay_rates: trajectory underflows immediately");

    std::vector<double> logn(usable);
    for (std::size_t k = 0; k < usable; ++k) logn[k] = std::log(traj.norms[k]);
    const std::size_t window = std::max<std::size_t>(2, total / 10);
    const std::size_t w = std::min(window, usable / 2);
    out.fastest = -fit_slope(traj.times, logn, 0, w);
    out.slowest = -fit_slope(traj.times, logn, usable - w, usable);
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<int>& node_ids) {
    os << "t";
    for (auto id : node_ids) os << ",I_" << id;
    os << ",norm\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        os << format_double(traj.times[k]);
        for (Eigen::Index i = 0; i < traj.currents.rows(); ++i)
            os << ',' << format_double(traj.currents(i, static_cast<Eigen::Index>(k)));
        os << ',' << format_double(traj.norms[k]) << '\n';
    }
}

}  // namespace oid
