#include <doctest.h>

#include <array>

#include "cfslab/clifford.hpp"

using namespace cfslab;

namespace {

// Straight from the defining relations, independent of the library helper.
double relation_defect(const CliffordRep& rep) {
    const Eigen::Index n = rep.spinor_dim();
    double worst = 0.0;
    for (int a = 0; a < rep.dim(); ++a) {
        for (int b = 0; b < rep.dim(); ++b) {
            const Matrix& ga = rep.gammas[static_cast<std::size_t>(a)];
            const Matrix& gb = rep.gammas[static_cast<std::size_t>(b)];
            const double eta = a == b ? (a < rep.p ? 1.0 : -1.0) : 0.0;
            worst = std::max(worst, (ga * gb + gb * ga - 2.0 * eta * Matrix::Identity(n, n)).norm());
        }
    }
    return worst;
}

cplx factor(const CliffordRep& rep, std::vector<double> k) {
    PlaneWave w{std::move(k), Vector::Ones(rep.spinor_dim())};
    return dirac_square_on_wave(rep, w);
}

}  // namespace

TEST_CASE("representations satisfy the Clifford relations") {
    for (auto [p, q] : {std::pair{1, 3}, std::pair{3, 1}, std::pair{3, 3}, std::pair{2, 2}, std::pair{0, 6}}) {
        const auto rep = build_rep(p, q);
        CHECK(rep.dim() == p + q);
        CHECK(rep.spinor_dim() == (p + q == 4 ? 4 : 8));
        CHECK(relation_defect(rep) <= 1e-12);
        CHECK(anticommutator_defect(rep) <= 1e-12);
    }
}

TEST_CASE("(1,3): squares of the generators") {
    const auto rep = build_rep(1, 3);
    const Matrix id = Matrix::Identity(4, 4);
    CHECK((2.0 * rep.gammas[0] * rep.gammas[0] - 2.0 * id).norm() <= 1e-12);
    CHECK((2.0 * rep.gammas[1] * rep.gammas[1] + 2.0 * id).norm() <= 1e-12);
    CHECK(axis_labels(rep) == std::vector<std::string>{"t", "x", "y", "z"});
}

TEST_CASE("(3,3): six 8 x 8 generators with vanishing cross anticommutators") {
    const auto rep = build_rep(3, 3);
    REQUIRE(rep.gammas.size() == 6);
    for (int a = 0; a < 6; ++a) {
        CHECK(rep.gammas[static_cast<std::size_t>(a)].rows() == 8);
        for (int b = a + 1; b < 6; ++b) {
            const Matrix& ga = rep.gammas[static_cast<std::size_t>(a)];
            const Matrix& gb = rep.gammas[static_cast<std::size_t>(b)];
            CHECK((ga * gb + gb * ga).norm() <= 1e-12);
        }
    }
    CHECK(axis_labels(rep) == std::vector<std::string>{"t1", "t2", "t3", "x1", "x2", "x3"});
}

TEST_CASE("flipping the signature") {
    const auto f = flipped(build_rep(1, 3));
    CHECK(f.p == 3);
    CHECK(f.q == 1);
    CHECK(anticommutator_defect(f) <= 1e-12);
    CHECK(f.metric[0] == -1.0);
    CHECK(f.metric[1] == 1.0);
    const auto direct = build_rep(3, 1);
    CHECK(anticommutator_defect(direct) <= 1e-12);
}

TEST_CASE("unsupported signatures") {
    CHECK_THROWS_AS(build_rep(1, 2), ContractViolation);
    CHECK_THROWS_AS(build_rep(4, 4), ContractViolation);
    CHECK_THROWS_AS(build_rep(-1, 5), ContractViolation);
}

TEST_CASE("Dirac operator squared on plane waves") {
    const auto r13 = build_rep(1, 3);
    CHECK(std::abs(factor(r13, {1, 0, 0, 0}) - cplx(-1.0)) <= 1e-12);
    CHECK(std::abs(factor(r13, {2, 1, 0, 0}) - cplx(-3.0)) <= 1e-12);
    CHECK(std::abs(factor(r13, {0, 0, 0, 2}) - cplx(4.0)) <= 1e-12);
    CHECK(std::abs(factor(build_rep(3, 3), {1, 1, 1, 1, 1, 1})) <= 1e-12);
    CHECK(std::abs(factor(build_rep(3, 1), {1, 0, 0, 0}) - cplx(-1.0)) <= 1e-12);
    CHECK_THROWS_AS(factor(r13, {1, 0, 0}), ContractViolation);
    CHECK_THROWS_AS(dirac_square_on_wave(r13, PlaneWave{{1, 0, 0, 0}, Vector::Zero(4)}), ContractViolation);
}

TEST_CASE("a broken representation is surfaced") {
    auto rep = build_rep(1, 3);
    rep.gammas[2] = cplx(0.0, 1.0) * Matrix::Identity(4, 4);
    CHECK_THROWS_AS(factor(rep, {0, 1, 1, 0}), NumericalFailure);
}

TEST_CASE("random covectors: factor is minus the metric form") {
    Rng rng(110);
    for (auto [p, q] : {std::pair{1, 3}, std::pair{3, 1}, std::pair{3, 3}}) {
        const auto rep = build_rep(p, q);
        const auto check = dirac_square_sweep(rep, 1000, rng);
        CHECK(check.samples == 1000);
        CHECK(check.max_defect <= 1e-10);
        const auto j = to_json(check);
        CHECK(j.at("samples") == 1000);
    }
}

TEST_CASE("square modulus of a six-vector") {
    const auto rep = build_rep(3, 3);
    const std::vector<std::pair<std::array<double, 6>, double>> cases{
        {{1, 0, 0, 0, 0, 0}, 1.0}, {{0, 0, 0, 1, 0, 0}, -1.0}, {{1, 2, 3, 1, 1, 1}, 11.0}};
    for (const auto& [x, want] : cases) {
        CHECK(square_modulus(rep, x) == doctest::Approx(want).epsilon(1e-12));
        CHECK(square_modulus_closed_form(x) == want);
    }
    Rng rng(111);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int k = 0; k < 500; ++k) {
        std::array<double, 6> x{};
        for (double& v : x) v = g(rng);
        CHECK(std::abs(square_modulus(rep, x) - square_modulus_closed_form(x)) <= 1e-12 * std::max(1.0, std::abs(square_modulus_closed_form(x))));
        // X itself squares to the scalar eta(x, x).
        const Matrix m = slash(rep, x);
        CHECK((m * m - square_modulus_closed_form(x) * Matrix::Identity(8, 8)).norm() <= 1e-10 * std::max(1.0, m.squaredNorm()));
    }
    CHECK_THROWS_AS(square_modulus(build_rep(1, 3), std::array<double, 4>{1, 0, 0, 0}), ContractViolation);
}

TEST_CASE("splitting the six-dimensional operator into two four-dimensional ones") {
    const auto s = split_d6(build_rep(3, 3));
    CHECK(s.d4.labels == std::vector<std::string>{"t1", "x1", "x2", "x3"});
    CHECK(s.d4.positives == 1);
    CHECK(s.d4.negatives == 3);
    CHECK(s.d4.defect <= 1e-12);
    CHECK(s.d4.valid);
    CHECK(s.d4_prime.labels == std::vector<std::string>{"x1", "t1", "t2", "t3"});
    CHECK(s.d4_prime.positives == 3);
    CHECK(s.d4_prime.negatives == 1);
    CHECK(s.d4_prime.valid);
    CHECK(s.shared == std::vector<std::string>{"t1", "x1"});
    CHECK_THROWS_AS(split_d6(build_rep(2, 4)), ContractViolation);
}

TEST_CASE("flipping the signature negates the square modulus") {
    const auto rep = build_rep(3, 3);
    const auto flip = flipped(rep);
    Rng rng(112);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        std::array<double, 6> x{};
        for (double& v : x) v = g(rng);
        CHECK(std::abs(square_modulus(flip, x) + square_modulus(rep, x)) <= 1e-12 * std::max(1.0, std::abs(square_modulus(rep, x))));
    }
}
