#include "oid/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace oid {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kJacobiTol = 1e-14;

void require_symmetric(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eig_symmetric: matrix is not square");
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("eig_symmetric: matrix is not symmetric");
}

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// Cyclic Jacobi. On return `a` is (numerically) diagonal and, when `v` is
// non-null, its columns hold the accumulated rotations.
void jacobi(Matrix& a, Matrix* v) {
    const Eigen::Index n = a.rows();
    const double scale = a.norm();
    if (scale == 0.0) return;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_norm(a) <= kJacobiTol * scale) return;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                if (v) {
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const double vkp = (*v)(k, p), vkq = (*v)(k, q);
                        (*v)(k, p) = c * vkp - s * vkq;
                        (*v)(k, q) = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if (off_diagonal_norm(a) > 1e-10 * scale)
        throw NumericalError("eig_symmetric: Jacobi iteration did not converge");
}

std::vector<Eigen::Index> ascending_order(const Vector& x) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) { return x(i) < x(j); });
    return idx;
}

}  // namespace

Spectrum eig_symmetric(const Matrix& input) {
    require_symmetric(input);
    const Eigen::Index n = input.rows();
    Matrix a = 0.5 * (input + input.transpose());
    Matrix v = Matrix::Identity(n, n);
    jacobi(a, &v);

    const Vector diag = a.diagonal();
    const auto order = ascending_order(diag);
    Spectrum s;
    s.symmetric = true;
    s.values.resize(n);
    s.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        s.values(k) = diag(src);
        s.vectors.col(k) = v.col(src);
    }
    return s;
}

Vector eigenvalues_symmetric(const Matrix& input) {
    require_symmetric(input);
    Matrix a = 0.5 * (input + input.transpose());
    jacobi(a, nullptr);
    Vector d = a.diagonal();
    std::sort(d.begin(), d.end());
    return d;
}

GeneralSpectrum eig_general(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eig_general: matrix is not square");
    Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw NumericalError("eig_general: QR iteration did not converge");
    const auto& ev = solver.eigenvalues();
    const auto n = ev.size();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) {
        if (ev(i).real() != ev(j).real()) return ev(i).real() < ev(j).real();
        return ev(i).imag() < ev(j).imag();
    });
    GeneralSpectrum out{Vector(n), Vector(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        out.real(k) = ev(idx[static_cast<std::size_t>(k)]).real();
        out.imag(k) = ev(idx[static_cast<std::size_t>(k)]).imag();
    }
    return out;
}

Vector eig_general_real(const Matrix& a, double imag_tol) {
    auto g = eig_general(a);
    const double bound = imag_tol * std::max(a.norm(), 1e-300);
    const double worst = g.imag.size() ? g.imag.cwiseAbs().maxCoeff() : 0.0;
    if (worst > bound)
        throw NumericalError("eig_general_real: eigenvalue with imaginary part " + std::to_string(worst) +
                             " exceeds tolerance " + std::to_string(bound));
    return g.real;
}

Matrix sqrt_psd(const Matrix& a) {
    const auto s = eig_symmetric(a);
    Vector root = s.values.cwiseMax(0.0).cwiseSqrt();
    Matrix out = s.vectors * root.asDiagonal() * s.vectors.transpose();
    return 0.5 * (out + out.transpose());
}

bool is_laplacian(const Matrix& a, double tol) {
    if (a.rows() != a.cols() || a.rows() == 0) return false;
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
    if (a.rowwise().sum().cwiseAbs().maxCoeff() > tol * scale) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j && a(i, j) > tol * scale) return false;
    return true;
}

ProductSpectrum eig_product(const Vector& d, const Matrix& laplacian) {
    if (d.size() != laplacian.rows()) throw std::invalid_argument("eig_product: dimension mismatch");
    if ((d.array() < 0.0).any()) throw std::invalid_argument("eig_product: negative diagonal weight");
    if (!is_laplacian(laplacian)) throw std::invalid_argument("eig_product: input is not a Laplacian");

    ProductSpectrum out;
    out.singular_weights = (d.array() == 0.0).any();

    const Matrix root = sqrt_psd(laplacian);
    Matrix sym = root * d.asDiagonal() * root;
    sym = 0.5 * (sym + sym.transpose());
    out.spectrum.values = eigenvalues_symmetric(sym);
    out.spectrum.symmetric = false;

    const Matrix product = d.asDiagonal() * laplacian;
    const double radius = std::max(out.spectrum.values.cwiseAbs().maxCoeff(), 1e-300);
    const auto general = eig_general(product);
    out.oracle_values = general.real;
    out.route_gap = (out.spectrum.values - out.oracle_values).cwiseAbs().maxCoeff();

    const double imag = general.imag.cwiseAbs().maxCoeff();
    if (imag > 1e-8 * std::max(product.norm(), 1e-300) || out.route_gap > 1e-6 * radius) {
        throw NumericalError("eig_product: symmetric route and Hessenberg-QR route disagree (gap " +
                             std::to_string(out.route_gap) + ", imaginary part " + std::to_string(imag) +
                             ", lambda2 " + std::to_string(out.spectrum.values(1)) + " vs " +
                             std::to_string(out.oracle_values(1)) + ")");
    }
    return out;
}

ProductEigensolver::ProductEigensolver(const Matrix& laplacian) : root_(sqrt_psd(laplacian)) {}

Vector ProductEigensolver::eigenvalues(const Vector& d) const {
    Matrix sym = root_ * d.asDiagonal() * root_;
    sym = 0.5 * (sym + sym.transpose());
    return eigenvalues_symmetric(sym);
}

Connectivity algebraic_connectivity(const Spectrum& s) {
    if (s.values.size() < 2) throw std::invalid_argument("algebraic_connectivity: need at least two eigenvalues");
    const double scale = std::max(1.0, s.values.cwiseAbs().maxCoeff());
    if (std::abs(s.values(0)) > 1e-8 * scale)
        throw NumericalError("algebraic_connectivity: smallest eigenvalue " + std::to_string(s.values(0)) +
                             " is not zero; input is not a Laplacian");
    Connectivity c{s.values(1), std::nullopt};
    if (s.has_vectors()) c.fiedler = s.vectors.col(1);
    return c;
}

}  // namespace oid
