#include <doctest.h>

#include <cstring>

#include <omp.h>

#include "cfslab/kernels.hpp"
#include "cfslab/random.hpp"

using namespace cfslab;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<SpacetimePointOp> sample(int m, Eigen::Index dim, int n, unsigned seed) {
    Rng rng(seed);
    std::vector<SpacetimePointOp> pts;
    for (int i = 0; i < m; ++i) pts.push_back(random_regular_point(dim, n, rng));
    return pts;
}

}  // namespace

TEST_CASE("pair table: parallel equals the serial reference bit for bit") {
    const auto pts = sample(12, 5, 2, 31);
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        const auto s = kernels::pair_table_serial(pts, kClassifyTol);
        const auto p = kernels::pair_table_parallel(pts, kClassifyTol);
        REQUIRE(s.terms.size() == p.terms.size());
        for (std::size_t k = 0; k < s.terms.size(); ++k) {
            CHECK(same_bits(s.terms[k].lagrangian, p.terms[k].lagrangian));
            CHECK(same_bits(s.terms[k].boundedness, p.terms[k].boundedness));
            CHECK(s.terms[k].causal_class == p.terms[k].causal_class);
        }
    }
}

TEST_CASE("pair table is symmetric and matches single-pair evaluation") {
    const auto pts = sample(6, 4, 1, 32);
    const auto t = kernels::pair_table(pts, kClassifyTol, Exec::parallel);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = 0; j < pts.size(); ++j) {
            CHECK(same_bits(t.at(i, j).lagrangian, t.at(j, i).lagrangian));
            CHECK(t.at(i, j).lagrangian == doctest::Approx(lagrangian(pts[i], pts[j])).epsilon(1e-12));
        }
    }
}

TEST_CASE("pair gradients: parallel equals serial") {
    const auto pts = sample(5, 4, 1, 33);
    const auto s = kernels::pair_gradients_serial(pts);
    const auto p = kernels::pair_gradients_parallel(pts);
    REQUIRE(s.size() == 25);
    for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(same_bits(s[k].lagrangian, p[k].lagrangian));
        CHECK((s[k].d_lagrangian - p[k].d_lagrangian).norm() == 0.0);
        CHECK((s[k].d_boundedness - p[k].d_boundedness).norm() == 0.0);
    }
}

TEST_CASE("correlation points: parallel equals serial") {
    DiracSeaConfig c;
    c.mass = 1.0;
    c.box_length = 5.0;
    c.cutoff_K = 4;
    c.epsilon = 0.3;
    c.lattice = {4, 6, 0.0, 1.0};
    const DiracSea sea = build_sea(c);
    const auto s = kernels::correlation_points_serial(c, sea);
    const auto p = kernels::correlation_points_parallel(c, sea);
    REQUIRE(s.size() == 24);
    for (std::size_t k = 0; k < s.size(); ++k) {
        REQUIRE(s[k].accepted());
        REQUIRE(p[k].accepted());
        CHECK((s[k].point->matrix() - p[k].point->matrix()).norm() == 0.0);
    }
}

TEST_CASE("serial and parallel measure reductions agree exactly") {
    const auto pts = sample(9, 4, 1, 34);
    std::vector<double> w(pts.size(), 0.7);
    const DiscreteMeasure rho(pts, w);
    CHECK(same_bits(causal_action(rho, Exec::serial), causal_action(rho, Exec::parallel)));
    const auto a = constraints(rho, Exec::serial), b = constraints(rho, Exec::parallel);
    CHECK(same_bits(a.boundedness, b.boundedness));
}
