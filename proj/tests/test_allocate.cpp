#include <doctest.h>

#include <numbers>

#include "oid/allocate.hpp"
#include "oid/kron.hpp"
#include "oid/measures.hpp"
#include "oid/spectral.hpp"
#include "support.hpp"

using namespace oid;
using oid::test::Rng;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

Matrix complete_laplacian(int n, double w = 1.0) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j, w);
    return test::assemble_laplacian(static_cast<std::size_t>(n), e);
}

}  // namespace

TEST_CASE("star 5/7/9: center gets nothing, leaves proportional to their line length") {
    const auto net = load_network_file(test::fixture("star.json"));
    const double c = 5e-3;
    const auto res = optimize_allocation({build_laplacian(net).matrix, c, {}, {}});
    CHECK(res.allocation(3) <= 1e-9 * c);
    for (const auto& e : net.edges())
        CHECK(std::abs(res.allocation(static_cast<Eigen::Index>(net.index_of(e.a))) - c * e.length / 21.0) <= 1e-6 * c);
    CHECK(rel(res.lambda2, c / 21.0) <= 1e-9);
    CHECK(std::abs(res.allocation.sum() - c) <= 1e-12 * c);
    CHECK(res.starts == 1 + 4 + 16);
}

TEST_CASE("uniform complete graph: the optimum is the even split") {
    for (int n : {3, 4, 5}) {
        const double c = 2e-3;
        const auto res = optimize_allocation({complete_laplacian(n), c, {}, {}});
        // lambda2(D * n * Pi) is maximized at D = (c/n) I with value c
        CHECK(rel(res.lambda2, c) <= 1e-9);
        for (auto v : res.allocation) CHECK(std::abs(v - c / n) <= 1e-6 * c);
    }
}

TEST_CASE("result invariants on random networks") {
    Rng rng(40);
    for (int k = 0; k < 10; ++k) {
        const auto lap = build_laplacian(test::random_network(rng, {.min_nodes = 3, .max_nodes = 6})).matrix;
        const auto n = lap.rows();
        const double c = rng.uniform(1e-3, 1e-2);
        AllocationProblem p{lap, c, Vector::Constant(n, 0.05 * c / static_cast<double>(n)), {}};
        const auto res = optimize_allocation(p);
        CHECK((res.allocation.array() >= p.lower_bounds.array() - 1e-15).all());
        CHECK(std::abs(res.allocation.sum() - c) <= 1e-12 * c);
        CHECK(std::abs(res.lambda2 - eig_product(res.allocation, lap).spectrum.values(1)) <= 1e-9 * res.lambda2);
        // the even split is feasible, so the optimizer can only do better
        const double uniform = eig_product(Vector::Constant(n, c / static_cast<double>(n)), lap).spectrum.values(1);
        CHECK(res.lambda2 >= uniform - 1e-9);
        // diagonal-scaling envelope (all entries positive thanks to the lower bounds)
        const double l2 = eigenvalues_symmetric(lap)(1);
        CHECK(res.lambda2 >= l2 * res.allocation.minCoeff() * (1 - 1e-12));
        CHECK(res.lambda2 <= l2 * res.allocation.maxCoeff() * (1 + 1e-12));
        CHECK(res.gap >= 0.0);
        CHECK(res.start_values.size() == res.starts);
    }
}

TEST_CASE("allocation scales linearly with the budget") {
    Rng rng(41);
    const auto lap = build_laplacian(test::random_network(rng, {.min_nodes = 5, .max_nodes = 5})).matrix;
    const auto small = optimize_allocation({lap, 1e-3, {}, {}});
    const auto large = optimize_allocation({lap, 7e-3, {}, {}});
    CHECK(rel(large.lambda2, 7.0 * small.lambda2) <= 1e-9);
    CHECK((large.allocation / 7e-3 - small.allocation / 1e-3).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("identical problems give bitwise-identical results") {
    const auto lap = build_laplacian(load_network_file(test::fixture("ieee13.json"))).matrix;
    const auto red = kron_reduce_real(lap, {0, 2, 6}).matrix;
    const auto a = optimize_allocation({red, 3e-3, {}, {}});
    const auto b = optimize_allocation({red, 3e-3, {}, {}});
    CHECK(a.allocation == b.allocation);
    CHECK(a.lambda2 == b.lambda2);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("invalid allocation problems") {
    const Matrix lap = complete_laplacian(3);
    CHECK_THROWS_AS(optimize_allocation({lap, 0.0, {}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(optimize_allocation({lap, -1.0, {}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(optimize_allocation({lap, 1.0, Vector::Constant(3, 0.5), {}}), std::invalid_argument);
    CHECK_THROWS_AS(optimize_allocation({lap, 1.0, Vector::Constant(2, 0.1), {}}), std::invalid_argument);
    Matrix split = Matrix::Zero(4, 4);
    split.topLeftCorner(2, 2) << 1, -1, -1, 1;
    split.bottomRightCorner(2, 2) << 1, -1, -1, 1;
    CHECK_THROWS_AS(optimize_allocation({split, 1.0, {}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(optimize_allocation({Matrix::Identity(3, 3), 1.0, {}, {}}), std::invalid_argument);
}

TEST_CASE("lower bounds that use the whole budget pin the allocation") {
    Vector lower(3);
    lower << 0.2, 0.3, 0.5;
    const auto res = optimize_allocation({complete_laplacian(3), 1.0, lower, {}});
    CHECK(res.allocation == lower);
}

TEST_CASE("landscape") {
    SUBCASE("two nodes: lambda2 = c * gamma everywhere on the simplex") {
        const auto net = load_network_file(test::fixture("two_node.json"));
        const auto land = allocation_landscape({build_laplacian(net).matrix, 4e-3, {}, {}}, 10);
        CHECK(land.lambda2.size() == 11);
        for (auto v : land.lambda2) CHECK(v == doctest::Approx(4e-3 * 0.5).epsilon(1e-12));
    }
    SUBCASE("grid size and ordering") {
        const auto land = allocation_landscape({complete_laplacian(4), 1.0, {}, {}}, 6);
        CHECK(land.lambda2.size() == 84);  // C(6 + 3, 3)
        for (const auto& b : land.barycentric) CHECK(b.sum() == doctest::Approx(1.0));
        CHECK(land.barycentric.front()(3) == 1.0);
        CHECK(land.barycentric.back()(0) == 1.0);
    }
    SUBCASE("star at resolution 50: grid maximum within 2% of the optimizer") {
        const auto lap = build_laplacian(load_network_file(test::fixture("star.json"))).matrix;
        const AllocationProblem p{lap, 5e-3, {}, {}};
        const auto land = allocation_landscape(p, 50);
        const double grid_max = *std::max_element(land.lambda2.begin(), land.lambda2.end());
        const double best = optimize_allocation(p).lambda2;
        CHECK(grid_max <= best * (1 + 1e-9));
        CHECK(grid_max >= 0.98 * best);
    }
    SUBCASE("vanishing budget flattens the surface") {
        const auto land = allocation_landscape({complete_laplacian(3), 1e-12, {}, {}}, 5);
        for (auto v : land.lambda2) CHECK(std::abs(v) <= 1e-11);
    }
    SUBCASE("more than six nodes is refused") {
        CHECK_THROWS_AS(allocation_landscape({complete_laplacian(7), 1.0, {}, {}}, 3), std::invalid_argument);
    }
}

TEST_CASE("uniform design inverts theta_nir") {
    const auto base = grid_model(load_network_file(test::fixture("path4.json")));
    const double theta0 = psi_nir_uniform(base).theta_nir;  // with l_o = 1 mH
    GridModel bare = base;
    bare.l_out.setZero();
    const double theta_bare = analyze(bare).theta_nir;

    SUBCASE("current theta is a fixed point") {
        CHECK(design_uniform(bare, theta_bare) == doctest::Approx(0.0));
        CHECK(rel(design_uniform(bare, theta0), 1e-3) <= 1e-9);
    }
    SUBCASE("round trip through the measures") {
        for (double target : {0.9, 1.0, 1.2, 1.5}) {
            const double lo = design_uniform(bare, target);
            GridModel g = bare;
            g.l_out.setConstant(lo);
            CHECK(std::abs(psi_nir_uniform(g).theta_nir - target) <= 1e-12);
        }
    }
    SUBCASE("complete-4 with output resistance: closed form from l_c / r_c") {
        auto g = grid_model(load_network_file(test::fixture("complete4.json")));
        const double target = 1.4;
        const double lo = design_uniform(g, target);
        // tan(target) / w = (4 lo + l) / (4 ro + r)
        const double expected = (std::tan(target) / g.omega * (4 * 0.01 + 0.5) - 2e-3) / 4;
        CHECK(rel(lo, expected) <= 1e-12);
    }
    SUBCASE("unreachable targets") {
        CHECK_THROWS_AS(design_uniform(bare, std::numbers::pi / 2), std::invalid_argument);
        CHECK_THROWS_AS(design_uniform(bare, theta_bare - 0.1), std::invalid_argument);
    }
}

TEST_CASE("non-uniform design reaches the target with less inductance than the uniform one") {
    const auto g = reduce_to_sources(load_network_file(test::fixture("ieee13.json")));
    const double target = 1.1 * analyze(g).theta_nir;
    const auto nd = design_nonuniform(g, target);
    CHECK(std::abs(nd.theta_nir - target) <= 1e-9);
    CHECK(std::abs(nd.result.allocation.sum() - nd.budget) <= 1e-12 * nd.budget);
    GridModel check = g;
    check.l_out = nd.result.allocation;
    CHECK(std::abs(psi_nir_nonuniform(check).theta_nir - target) <= 1e-9);
    const double uniform_total = 3 * design_uniform(g, target);
    CHECK(nd.budget < uniform_total);
    // buses 633 and 645 sit symmetrically on the feeder and get equal shares
    CHECK(rel(nd.result.allocation(0), nd.result.allocation(1)) <= 1e-6);

    auto resistive = g;
    resistive.r_out.setConstant(0.01);
    CHECK_THROWS_AS(design_nonuniform(resistive, target), std::invalid_argument);
}
