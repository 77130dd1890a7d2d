#pragma once

// Shared test helpers: fixture paths, a seeded random network generator, and
// independent numerical oracles (Gaussian-elimination rank, characteristic
// polynomial roots, entrywise Laplacian assembly).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "oid/netmodel.hpp"

namespace oid::test {

inline std::string fixture(const std::string& name) { return std::string(OID_FIXTURE_DIR) + "/" + name; }

/// Portable uniform numbers (std distributions differ across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }
    Vector vector(Eigen::Index n, double lo = -1.0, double hi = 1.0) {
        Vector v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }
    Vector balanced(Eigen::Index n) {
        Vector v = vector(n);
        v.array() -= v.mean();
        return v / v.norm();
    }

private:
    std::mt19937_64 eng_;
};

struct NetworkOptions {
    std::size_t min_nodes = 2;
    std::size_t max_nodes = 10;
    double extra_edge_probability = 0.3;
    double r = 0.5;
    double l = 2e-3;
    double omega = 2 * 3.14159265358979323846 * 50;
    double r_out = 0.0;  // uniform outputs
    double l_out = 1e-3;
};

/// Random spanning tree plus random chords, lengths in [1, 10].
inline PowerNetwork random_network(Rng& rng, const NetworkOptions& o = {}) {
    const std::size_t n = o.min_nodes + rng.index(o.max_nodes - o.min_nodes + 1);
    std::vector<Node> nodes;
    for (std::size_t i = 0; i < n; ++i)
        nodes.push_back({static_cast<int>(i + 1), NodeRole::Source, o.r_out, o.l_out, ""});
    std::vector<Edge> edges;
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t j = rng.index(i);
        edges.push_back({static_cast<int>(j + 1), static_cast<int>(i + 1), rng.uniform(1.0, 10.0)});
        adj[i][j] = adj[j][i] = true;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (!adj[i][j] && rng.uniform() < o.extra_edge_probability)
                edges.push_back({static_cast<int>(i + 1), static_cast<int>(j + 1), rng.uniform(1.0, 10.0)});
    return PowerNetwork(std::move(nodes), std::move(edges), {o.r, o.l, "pu"}, o.omega);
}

/// Laplacian assembled edge by edge, without the incidence matrix.
inline Matrix assemble_laplacian(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& w) {
    Matrix lap = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (auto [a, b, g] : w) {
        const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
        lap(i, i) += g;
        lap(j, j) += g;
        lap(i, j) -= g;
        lap(j, i) -= g;
    }
    return lap;
}

inline Matrix assemble_laplacian(const PowerNetwork& net) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> w;
    for (const auto& e : net.edges()) w.emplace_back(net.index_of(e.a), net.index_of(e.b), 1.0 / e.length);
    return assemble_laplacian(net.node_count(), w);
}

/// Rank by Gaussian elimination with partial pivoting.
inline int gaussian_rank(Matrix a, double tol = 1e-10) {
    int rank = 0;
    const auto rows = a.rows(), cols = a.cols();
    for (Eigen::Index c = 0; c < cols && rank < rows; ++c) {
        Eigen::Index piv = rank;
        for (Eigen::Index r = rank + 1; r < rows; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (std::abs(a(piv, c)) <= tol) continue;
        a.row(piv).swap(a.row(rank));
        for (Eigen::Index r = rank + 1; r < rows; ++r) a.row(r) -= a(r, c) / a(rank, c) * a.row(rank);
        ++rank;
    }
    return rank;
}

/// Monic characteristic polynomial coefficients c_0..c_n (c_n = 1) by the
/// Faddeev-LeVerrier recursion in long double.
inline std::vector<long double> characteristic_polynomial(const Matrix& a) {
    using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const auto n = a.rows();
    const LMat al = a.cast<long double>();
    std::vector<long double> c(static_cast<std::size_t>(n + 1));
    c[static_cast<std::size_t>(n)] = 1.0L;
    LMat m = LMat::Zero(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        m = al * m + c[static_cast<std::size_t>(n - k + 1)] * LMat::Identity(n, n);
        const LMat am = al * m;
        c[static_cast<std::size_t>(n - k)] = -am.trace() / static_cast<long double>(k);
    }
    return c;
}

/// Roots of a monic polynomial: companion-matrix eigenvalues, then Newton
/// polishing in long double. Sorted by real part.
inline std::vector<std::complex<double>> polynomial_roots(const std::vector<long double>& c) {
    const auto n = static_cast<Eigen::Index>(c.size() - 1);
    Matrix comp = Matrix::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) comp(i, n - 1) = -static_cast<double>(c[static_cast<std::size_t>(i)]);
    Eigen::EigenSolver<Matrix> es(comp, false);
    std::vector<std::complex<double>> roots;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::complex<long double> z(es.eigenvalues()(i).real(), es.eigenvalues()(i).imag());
        for (int it = 0; it < 50; ++it) {
            std::complex<long double> p = 0, dp = 0;
            for (auto k = static_cast<Eigen::Index>(c.size()) - 1; k >= 0; --k) {
                dp = dp * z + p;
                p = p * z + c[static_cast<std::size_t>(k)];
            }
            if (std::abs(dp) == 0.0L) break;
            const auto step = p / dp;
            z -= step;
            if (std::abs(step) <= 1e-30L * (1.0L + std::abs(z))) break;
        }
        roots.emplace_back(static_cast<double>(z.real()), static_cast<double>(z.imag()));
    }
    std::sort(roots.begin(), roots.end(), [](auto x, auto y) { return x.real() < y.real(); });
    return roots;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace oid::test
