#pragma once

// Dense eigen-decompositions.
//
// eig_symmetric is a cyclic Jacobi solver. Spectra of products D*L (D diagonal,
// nonnegative) are computed through the symmetric similarity
// L^{1/2} D L^{1/2}, which has the same characteristic polynomial as D*L,
// and cross-checked against a Hessenberg/shifted-QR solve of D*L itself.

#include <optional>

#include "oid/netmodel.hpp"

namespace oid {

struct Spectrum {
    Vector values;   // ascending, repeated according to multiplicity
    Matrix vectors;  // orthonormal columns matching `values`; empty when not available
    bool symmetric = false;

    bool has_vectors() const { return vectors.size() != 0; }
};

/// Throws std::invalid_argument for non-square or non-symmetric input
/// (relative tolerance 1e-12 on the largest entry).
Spectrum eig_symmetric(const Matrix& a);

/// Eigenvalues only, same solver.
Vector eigenvalues_symmetric(const Matrix& a);

/// Eigenvalues of a general real matrix (Hessenberg reduction + shifted QR).
struct GeneralSpectrum {
    Vector real;  // ascending by real part
    Vector imag;
};
GeneralSpectrum eig_general(const Matrix& a);

/// Real parts of eig_general, ascending. Throws NumericalError if any
/// imaginary part exceeds `imag_tol * ||a||_F`.
Vector eig_general_real(const Matrix& a, double imag_tol = 1e-8);

/// Principal square root of a symmetric positive semidefinite matrix;
/// negative round-off eigenvalues are clamped to zero.
Matrix sqrt_psd(const Matrix& a);

struct ProductSpectrum {
    Spectrum spectrum;     // symmetric-route values of D*L (no eigenvectors)
    Vector oracle_values;  // Hessenberg-QR values of D*L
    double route_gap = 0;  // max |symmetric - oracle|, ascending pairing
    bool singular_weights = false;
};

/// Spectrum of diag(d) * laplacian. Throws std::invalid_argument for negative
/// weights or a non-Laplacian; NumericalError if the two routes disagree by
/// more than 1e-6 relative to the spectral radius.
ProductSpectrum eig_product(const Vector& d, const Matrix& laplacian);

/// Symmetric-route-only evaluation for repeated calls against one Laplacian
/// (the allocation search evaluates thousands of weight vectors).
class ProductEigensolver {
public:
    explicit ProductEigensolver(const Matrix& laplacian);

    Vector eigenvalues(const Vector& d) const;
    double lambda2(const Vector& d) const { return eigenvalues(d)(1); }
    std::size_t size() const { return static_cast<std::size_t>(root_.rows()); }

private:
    Matrix root_;
};

struct Connectivity {
    double lambda2 = 0;
    std::optional<Vector> fiedler;
};

/// Second entry of the ascending spectrum. Throws NumericalError when the
/// smallest eigenvalue is not within 1e-8 (relative to max(1, |lambda_max|))
/// of zero.
Connectivity algebraic_connectivity(const Spectrum& s);

/// True when `a` is symmetric with zero row sums and nonpositive
/// off-diagonals, within `tol` relative to its largest entry.
bool is_laplacian(const Matrix& a, double tol = 1e-9);

}  // namespace oid
