#include "oid/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "oid/measures.hpp"
#include "oid/spectral.hpp"

namespace oid {

namespace {

std::vector<unsigned> first_primes(std::size_t count) {
    std::vector<unsigned> primes;
    for (unsigned c = 2; primes.size() < count; ++c) {
        bool prime = true;
        for (auto p : primes)
            if (c % p == 0) {
                prime = false;
                break;
            }
        if (prime) primes.push_back(c);
    }
    return primes;
}

double radical_inverse(std::size_t index, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

// Uniform point on the unit simplex from the sorted spacings of a Halton point.
Vector halton_simplex_point(std::size_t index, std::size_t n, const std::vector<unsigned>& primes) {
    std::vector<double> cuts{0.0};
    for (std::size_t d = 0; d + 1 < n; ++d) cuts.push_back(radical_inverse(index, primes[d]));
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    Vector p(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) p(static_cast<Eigen::Index>(i)) = cuts[i + 1] - cuts[i];
    return p;
}

bool lex_less(const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct Validated {
    Vector lower;
    double excess;
};

Validated validate(const AllocationProblem& p) {
    const auto n = p.laplacian.rows();
    if (n < 2) throw std::invalid_argument("allocation: need at least two nodes");
    if (!(std::isfinite(p.budget) && p.budget > 0)) throw std::invalid_argument("allocation: budget must be positive");
    if (!is_laplacian(p.laplacian)) throw std::invalid_argument("allocation: input is not a Laplacian");
    if (eigenvalues_symmetric(p.laplacian)(1) <= 1e-12 * p.laplacian.cwiseAbs().maxCoeff())
        throw std::invalid_argument("allocation: Laplacian is disconnected");
    Vector lower = p.lower_bounds.size() == 0 ? Vector::Zero(n) : p.lower_bounds;
    if (lower.size() != n) throw std::invalid_argument("allocation: lower bounds have the wrong dimension");
    if ((lower.array() < 0).any()) throw std::invalid_argument("allocation: lower bounds must be nonnegative");
    const double excess = p.budget - lower.sum();
    if (excess < -1e-12 * p.budget) throw std::invalid_argument("allocation: lower bounds exceed the budget");
    return {lower, std::max(excess, 0.0)};
}

class SimplexSearch {
public:
    SimplexSearch(const ProductEigensolver& solver, Vector lower, double excess, const SolverOptions& opt)
        : solver_(solver), lower_(std::move(lower)), excess_(excess), opt_(opt) {}

    double value(const Vector& x) const { return solver_.lambda2(lower_ + x); }

    // Local search from `x` (excess coordinates summing to excess_).
    std::pair<Vector, double> run(Vector x, std::size_t& iterations) const {
        double f = value(x);
        if (excess_ == 0.0) return {x, f};
        double step = 0.25 * excess_;
        const auto n = x.size();
        std::size_t it = 0;
        while (step > 1e-12 * excess_ && it < opt_.max_iterations) {
            ++it;
            Vector best_x;
            double best_f = f;
            auto consider = [&](const Vector& d) {
                // largest feasible move along d, capped at `step`
                double t = step;
                for (Eigen::Index j = 0; j < n; ++j)
                    if (d(j) < 0) t = std::min(t, x(j) / -d(j));
                if (!(t > 0)) return;
                Vector y = (x + t * d).cwiseMax(0.0);
                y *= excess_ / y.sum();
                const double fy = value(y);
                if (fy > best_f) {
                    best_f = fy;
                    best_x = std::move(y);
                }
            };
            for (Eigen::Index i = 0; i < n; ++i) {
                Vector d = -x;
                d(i) = 0;
                const double rest = -d.sum();
                if (rest > 0)
                    d /= rest;
                else
                    d = Vector::Constant(n, -1.0 / static_cast<double>(n - 1));
                d(i) = 1.0;
                consider(d);
                consider(-d);
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (j == i) continue;
                    Vector e = Vector::Zero(n);
                    e(i) = 1.0;
                    e(j) = -1.0;
                    consider(e);
                }
            }
            if (best_x.size() != 0 && best_f > f + opt_.tolerance * std::abs(f)) {
                x = std::move(best_x);
                f = best_f;
            } else {
                step *= 0.5;
            }
        }
        iterations += it;
        return {x, f};
    }

private:
    const ProductEigensolver& solver_;
    Vector lower_;
    double excess_;
    SolverOptions opt_;
};

}  // namespace

AllocationResult optimize_allocation(const AllocationProblem& problem) {
    const auto [lower, excess] = validate(problem);
    const auto n = static_cast<std::size_t>(problem.laplacian.rows());
    const ProductEigensolver solver(problem.laplacian);
    const SimplexSearch search(solver, lower, excess, problem.options);

    std::vector<Vector> starts;
    starts.push_back(Vector::Constant(static_cast<Eigen::Index>(n), excess / static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
        v(static_cast<Eigen::Index>(i)) = excess;
        starts.push_back(v);
    }
    const auto primes = first_primes(n);
    for (std::size_t k = 1; k <= problem.options.quasi_random_starts; ++k)
        starts.push_back(excess * halton_simplex_point(k, n, primes));

    AllocationResult res;
    Vector best_x;
    double best_f = -std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
        auto [x, f] = search.run(s, res.iterations);
        res.start_values.push_back(f);
        if (f > best_f || (f == best_f && lex_less(x, best_x))) {
            best_f = f;
            best_x = x;
        }
    }
    res.starts = starts.size();
    res.allocation = lower + best_x;

    const auto check = eig_product(res.allocation, problem.laplacian);
    res.lambda2 = check.spectrum.values(1);

    auto sorted = res.start_values;
    std::sort(sorted.begin(), sorted.end());
    const auto m = sorted.size();
    res.median_lambda2 = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    res.gap = best_f - res.median_lambda2;
    return res;
}

Landscape allocation_landscape(const AllocationProblem& problem, std::size_t resolution) {
    const auto n = static_cast<std::size_t>(problem.laplacian.rows());
    if (n > 6) throw std::invalid_argument("allocation_landscape: at most 6 nodes are supported");
    if (resolution == 0) throw std::invalid_argument("allocation_landscape: resolution must be positive");
    const auto [lower, excess] = validate(problem);
    const ProductEigensolver solver(problem.laplacian);

    Landscape out;
    std::vector<std::size_t> parts(n, 0);
    // enumerate compositions of `resolution` into n nonnegative parts, lexicographic
    auto emit = [&] {
        Vector b(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            b(static_cast<Eigen::Index>(i)) = static_cast<double>(parts[i]) / static_cast<double>(resolution);
        Vector alloc = lower + excess * b;
        out.lambda2.push_back(solver.lambda2(alloc));
        out.barycentric.push_back(std::move(b));
        out.allocation.push_back(std::move(alloc));
    };
    auto recurse = [&](auto&& self, std::size_t pos, std::size_t remaining) -> void {
        if (pos + 1 == n) {
            parts[pos] = remaining;
            emit();
            return;
        }
        for (std::size_t k = 0; k <= remaining; ++k) {
            parts[pos] = k;
            self(self, pos + 1, remaining - k);
        }
    };
    recurse(recurse, 0, resolution);
    return out;
}

double design_uniform(const GridModel& g, double target_theta) {
    if (!(target_theta < std::numbers::pi / 2))
        throw std::invalid_argument("design_uniform: target theta must be below pi/2");
    if (!has_uniform_outputs(g)) throw std::invalid_argument("design_uniform: output resistances must be uniform");
    const double ro = g.r_out.size() ? g.r_out(0) : 0.0;
    const double lambda2 = eigenvalues_symmetric(g.laplacian)(1);
    const double psi_target = std::tan(target_theta) / g.omega;
    double lo = (psi_target * (ro * lambda2 + g.r) - g.l) / lambda2;
    const double scale = g.l / lambda2;
    if (lo < 0) {
        if (lo > -1e-12 * scale)
            lo = 0;
        else
            throw std::invalid_argument("design_uniform: target theta is below the value without output inductance");
    }

    GridModel check = g;
    check.l_out = Vector::Constant(g.laplacian.rows(), lo);
    const auto rep = psi_nir_uniform(check);
    if (rep.regime == Regime::LambdaMax)
        throw std::invalid_argument("design_uniform: target is not reachable while r_o/l_o < r/l");
    return lo;
}

NonuniformDesign design_nonuniform(const GridModel& g, double target_theta, const SolverOptions& options) {
    if (!(target_theta < std::numbers::pi / 2))
        throw std::invalid_argument("design_nonuniform: target theta must be below pi/2");
    if ((g.r_out.array() != 0.0).any())
        throw std::invalid_argument("design_nonuniform: only inductive outputs (r_out = 0) are supported");
    const double psi_target = std::tan(target_theta) / g.omega;
    const double needed = psi_target * g.r - g.l;  // lambda2(D * Lap) required
    if (needed < -1e-12 * g.l)
        throw std::invalid_argument("design_nonuniform: target theta is below the value without output inductance");

    // lambda2(c * D * Lap) = c * lambda2(D * Lap): optimize the direction on a
    // unit budget and scale it to the smallest budget that reaches the target.
    AllocationProblem unit{g.laplacian, 1.0, {}, options};
    auto res = optimize_allocation(unit);

    NonuniformDesign out;
    out.budget = std::max(needed, 0.0) / res.lambda2;
    res.allocation *= out.budget;
    res.lambda2 = out.budget > 0 ? eig_product(res.allocation, g.laplacian).spectrum.values(1) : 0.0;
    for (auto& v : res.start_values) v *= out.budget;
    res.median_lambda2 *= out.budget;
    res.gap *= out.budget;
    out.result = std::move(res);
    out.psi_nir = (out.result.lambda2 + g.l) / g.r;
    out.theta_nir = std::atan(g.omega * out.psi_nir);
    return out;
}

}  // namespace oid
