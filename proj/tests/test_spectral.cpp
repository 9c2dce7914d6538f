#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "cfslab/spectral.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cfslab;
using testing::diag;
using testing::real_matrix;

namespace {

std::vector<cplx> full_eigenvalues(const Matrix& m) { return oracle::eigenvalues(m); }

std::vector<cplx> as_complex(const RealVector& v) {
    std::vector<cplx> out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out.emplace_back(v[i], 0.0);
    return out;
}

// Simpson on [a, b] with 2k panels; only used on smooth integrands.
double simpson(const std::function<double(double)>& f, double a, double b, int k) {
    const double h = (b - a) / (2 * k);
    double s = f(a) + f(b);
    for (int i = 1; i < 2 * k; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("grading lemma: X = [[1]] gives the Pauli x matrix") {
    const auto t = FiniteSpectralTriple::from_block(real_matrix({{1.0}}));
    const auto r = verify_grading_lemma(t);
    REQUIRE(r.spectrum.size() == 2);
    CHECK(r.spectrum[0] == doctest::Approx(-1.0));
    CHECK(r.spectrum[1] == doctest::Approx(1.0));
    CHECK(r.trace == 0.0);
    CHECK(r.holds);
    CHECK(r.signature.positives == 1);
    CHECK(r.signature.negatives == 1);
}

TEST_CASE("grading lemma: spectrum is plus-minus the singular values of X") {
    const Matrix x = real_matrix({{1.0, 2.0}, {3.0, 4.0}});
    const auto t = FiniteSpectralTriple::from_block(x);
    const auto r = verify_grading_lemma(t);
    // Singular values of [[1,2],[3,4]]: sqrt(15 +- sqrt(221)).
    const double s1 = std::sqrt(15.0 + std::sqrt(221.0)), s2 = std::sqrt(15.0 - std::sqrt(221.0));
    const std::vector<cplx> expect{s1, s2, -s1, -s2};
    CHECK(oracle::match_distance(as_complex(r.spectrum), expect) <= 1e-12);
    CHECK(oracle::match_distance(full_eigenvalues(t.dirac()), expect) <= 1e-10);
    CHECK(r.block_defect <= 1e-12);
    CHECK(r.holds);
    CHECK(r.invertible);
}

TEST_CASE("grading lemma: a plain selfadjoint matrix is reported as a violation") {
    Rng rng(71);
    int reported = 0;
    for (int k = 0; k < 50; ++k) {
        Matrix g = diag({1.0, 1.0, -1.0, -1.0});
        const Matrix d = random_hermitian(4, rng);
        const auto r = verify_grading_lemma(g, d);
        CHECK_FALSE(r.holds);
        if (r.anticommutator_defect > 1e-3) ++reported;
        CHECK_THROWS_AS(FiniteSpectralTriple::make(2, g, d), ContractViolation);
    }
    CHECK(reported == 50);
}

TEST_CASE("grading lemma on random block triples") {
    Rng rng(72);
    for (int k = 0; k < 2000; ++k) {
        const int n = 1 + k % 4;
        const auto t = random_block_triple(n, rng);
        const auto r = verify_grading_lemma(t);
        const double scale = std::max(1.0, r.spectrum.cwiseAbs().maxCoeff());
        CHECK(r.symmetry_defect <= 1e-9 * scale);
        CHECK(std::abs(r.trace) <= 1e-10 * scale);
        CHECK(r.holds);
        if (r.invertible) {
            CHECK(r.signature.positives == n);
            CHECK(r.signature.negatives == n);
        }
    }
}

TEST_CASE("triple validation and perturbations") {
    const Matrix g = diag({1.0, -1.0});
    CHECK_THROWS_AS(FiniteSpectralTriple::make(1, diag({1.0, 1.0}), Matrix::Zero(2, 2)), ContractViolation);
    CHECK_THROWS_AS(FiniteSpectralTriple::make(1, 2.0 * g, Matrix::Zero(2, 2)), ContractViolation);
    CHECK_THROWS_AS(FiniteSpectralTriple::make(2, g, Matrix::Zero(2, 2)), ContractViolation);
    const auto t = FiniteSpectralTriple::from_block(real_matrix({{2.0}}), "C");
    CHECK(t.algebra_label() == "C");
    const auto p = t.perturbed(real_matrix({{0.0, 1.0}, {1.0, 0.0}}));
    CHECK(p.dirac()(0, 1).real() == doctest::Approx(3.0));
    CHECK_THROWS_AS(t.perturbed(diag({1.0, 0.0})), ContractViolation);
}

TEST_CASE("triple JSON round trip") {
    Rng rng(73);
    const auto t = random_block_triple(2, rng);
    const auto back = triple_from_json(triple_to_json(t));
    CHECK((back.dirac() - t.dirac()).norm() <= 1e-14);
    CHECK((back.grading() - t.grading()).norm() <= 1e-14);
    CHECK_THROWS_AS(triple_from_json(nlohmann::json::parse(R"({"n": 1})")), ConfigError);
    CHECK_THROWS_AS(triple_from_json(nlohmann::json::parse(
                        R"({"n": 1, "grading": [[1, 0], [0, 1]], "dirac": [[0, 1], [1, 0]]})")),
                    ConfigError);
}

TEST_CASE("spectral action: hard step counts eigenvalues by modulus") {
    const auto d = Operator::selfadjoint(diag({1.0, 2.0, 3.0}));
    CHECK(spectral_action(d, 2.5, CutoffFunction::hard_step()) == 2.0);
    const std::vector<double> ev{-3.0, -1.0, 0.5, 2.0};
    CHECK(spectral_action(ev, 1.5, CutoffFunction::hard_step()) == 2.0);
    CHECK_THROWS_AS(spectral_action(ev, 0.0, CutoffFunction::hard_step()), ContractViolation);
}

TEST_CASE("spectral action: circle Dirac operator matches the direct count") {
    Rng rng(74);
    std::uniform_real_distribution<double> u(0.01, 40.0);
    const double radius = 1.7;
    const auto spec = circle_dirac_spectrum(radius, 200);
    CHECK(spec.size() == 401);
    for (int k = 0; k < 100; ++k) {
        double lr = u(rng);
        if (std::abs(lr - std::round(lr)) < 1e-6) lr += 0.25;
        const double s = spectral_action(spec, lr / radius, CutoffFunction::hard_step());
        long count = 0;
        for (int j = -200; j <= 200; ++j) count += std::abs(j) <= lr ? 1 : 0;
        CHECK(s == static_cast<double>(count));
        CHECK(s == 2.0 * std::floor(lr) + 1.0);
    }
}

TEST_CASE("spectral action: gaussian sum term by term") {
    Rng rng(75);
    const auto t = random_block_triple(3, rng);
    const auto eig = oracle::eigenvalues(t.dirac());
    for (double lambda : {0.3, 1.0, 4.0}) {
        double ref = 0.0;
        for (const auto& l : eig) ref += std::exp(-(l.real() * l.real()) / (lambda * lambda));
        const double s = spectral_action(Operator::selfadjoint(t.dirac()), lambda, CutoffFunction::gaussian());
        CHECK(s == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("spectral sweep is monotone for step cutoffs") {
    const std::vector<double> ev{1, 2, 3, 4, 5, 6, 7, 8};
    for (const auto& f : {CutoffFunction::hard_step(), CutoffFunction::smooth_step(0.3)}) {
        const auto rows = spectral_sweep(ev, 0.1, 12.0, 100, f);
        REQUIRE(rows.size() == 100);
        CHECK(rows.front().cutoff == doctest::Approx(0.1));
        CHECK(rows.back().cutoff == doctest::Approx(12.0));
        for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].action >= rows[k - 1].action);
        CHECK(rows.back().action == 8.0);
    }
}

TEST_CASE("cutoff functions") {
    const auto s = CutoffFunction::smooth_step(0.2);
    CHECK(s(0.0) == 1.0);
    CHECK(s(0.8) == 1.0);
    CHECK(s(1.0) == doctest::Approx(0.5));
    CHECK(s(1.2) == 0.0);
    for (double x = 0.0; x < 2.0; x += 0.01) CHECK(s(x + 0.01) <= s(x));
    CHECK(CutoffFunction::hard_step()(1.0) == 1.0);
    CHECK(CutoffFunction::hard_step()(1.0 + 1e-12) == 0.0);
    CHECK_THROWS_AS(CutoffFunction::smooth_step(1.5), ContractViolation);
    CHECK_THROWS_AS(CutoffFunction::parse("boxcar"), ConfigError);
    CHECK(CutoffFunction::parse("gaussian").kind() == CutoffFunction::Kind::gaussian);
}

TEST_CASE("cutoff moments") {
    const auto moments = cutoff_moments(CutoffFunction::hard_step(), 6);
    REQUIRE(moments.size() == 6);
    for (int j = 1; j <= 6; ++j) {
        CHECK(moments[static_cast<std::size_t>(j - 1)].j == j);
        CHECK(std::abs(moments[static_cast<std::size_t>(j - 1)].value - 1.0 / j) <= 1e-10);
    }
    for (int j = 1; j <= 6; ++j) {
        const double exact = 0.5 * std::tgamma(0.5 * j);
        CHECK(std::abs(cutoff_moment(CutoffFunction::gaussian(), j).value - exact) <= 1e-10);
    }
    CHECK(std::abs(cutoff_moment(CutoffFunction::gaussian(), 2).value - 0.5) <= 1e-10);

    const auto s = CutoffFunction::smooth_step(0.3);
    for (int j = 1; j <= 4; ++j) {
        const double ref = std::pow(0.7, j) / j +
                           simpson([&](double v) { return s(v) * std::pow(v, j - 1); }, 0.7, 1.3, 20000);
        CHECK(std::abs(cutoff_moment(s, j).value - ref) <= 1e-10);
    }
    CHECK_THROWS_AS(cutoff_moment(CutoffFunction::hard_step(), 0), DivergentIntegral);
    CHECK_THROWS_AS(cutoff_moment(CutoffFunction::gaussian(), -1), DivergentIntegral);
    CHECK_THROWS_AS(cutoff_moments(CutoffFunction::hard_step(), 0), DivergentIntegral);
}

TEST_CASE("embedding: identity block reproduces the Dirac matrix") {
    Rng rng(76);
    const auto t = random_block_triple(2, rng);
    const auto x = embed(t, Embedding::identity_block(4, 4));
    CHECK((x.matrix() - t.dirac()).norm() <= 1e-14);
    CHECK_THROWS_AS(Embedding::make(real_matrix({{1.0, 1.0}, {0.0, 1.0}})), ContractViolation);
    CHECK_THROWS_AS(embed(t, Embedding::identity_block(6, 2)), ContractViolation);
}

TEST_CASE("embedding preserves the nonzero spectrum and lands in F_n") {
    Rng rng(77);
    for (int k = 0; k < 200; ++k) {
        const int n = 1 + k % 3;
        const Eigen::Index dim = 2 * n + k % 4;
        const auto t = random_block_triple(n, rng);
        const auto e = random_embedding(dim, 2 * n, rng);
        const Matrix xi = e.isometry();
        CHECK((xi.adjoint() * xi - Matrix::Identity(2 * n, 2 * n)).norm() <= 1e-10);
        const auto x = embed(t, e);
        CHECK(membership_F(x.op(), n).accepted());
        const auto got = oracle::eigenvalues_deflated(x.matrix(), 2 * n);
        const auto want = oracle::eigenvalues(t.dirac());
        CHECK(oracle::match_distance(got, want) <= 1e-9 * std::max(1.0, x.norm()));
        const auto lib = eig_selfadjoint(x.op()).values;
        std::vector<cplx> nz;
        for (Eigen::Index i = 0; i < lib.size(); ++i) {
            if (std::abs(lib[i]) > 1e-10 * x.norm()) nz.emplace_back(lib[i], 0.0);
        }
        REQUIRE(nz.size() == want.size());
        CHECK(oracle::match_distance(nz, want) <= 1e-10 * std::max(1.0, x.norm()));
    }
}

TEST_CASE("equivalent embeddings give the same operator") {
    Rng rng(78);
    for (int k = 0; k < 50; ++k) {
        const auto t = random_block_triple(2, rng);
        const auto a = random_embedding(7, 4, rng);
        // Same span, different internal frame: xi U.
        const auto b = Embedding::make(a.isometry() * random_unitary(4, rng));
        CHECK(equivalent(a, b));
        const auto c = random_embedding(7, 4, rng);
        CHECK_FALSE(equivalent(a, c));
        // The internal unitary moves into the triple: D_F[xi U] for (U* sigma U, U* D U) is D_F[xi].
        const Matrix u = a.isometry().adjoint() * b.isometry();
        const auto tu = FiniteSpectralTriple::make(2, u.adjoint() * t.grading() * u, u.adjoint() * t.dirac() * u);
        CHECK((embed(tu, b).matrix() - embed(t, a).matrix()).norm() <= 1e-10);
        CHECK(a.projector().isApprox(b.projector(), 1e-10));
    }
}

TEST_CASE("padding contributes f(0) per padded dimension") {
    Rng rng(79);
    for (const auto& f : {CutoffFunction::hard_step(), CutoffFunction::smooth_step(0.25), CutoffFunction::gaussian()}) {
        for (int k = 0; k < 20; ++k) {
            const int n = 1 + k % 3;
            const Eigen::Index dim = 2 * n + 1 + k % 5;
            const auto t = random_block_triple(n, rng);
            const auto e = random_embedding(dim, 2 * n, rng);
            const double lambda = 0.5 + 0.1 * k;
            const double bare = spectral_action(Operator::selfadjoint(t.dirac()), lambda, f);
            const double padded = embedded_spectral_action(t, e, lambda, f);
            CHECK(std::abs(padded - bare - static_cast<double>(dim - 2 * n) * f(0.0)) <= 1e-10);
            CHECK(std::abs(embedded_spectral_action(t, e, lambda, f, true) - bare) <= 1e-10);
        }
    }
}

TEST_CASE("two-point kernel") {
    Rng rng(80);
    const auto t = random_block_triple(2, rng);

    SUBCASE("a = b restricts the embedded Dirac matrix to its image") {
        const auto a = random_embedding(6, 4, rng);
        const auto k = ncg_two_point(t, a, a);
        CHECK((k.matrix - t.dirac()).norm() <= 1e-12);
        const Matrix restricted = a.isometry().adjoint() * embed(t, a).matrix() * a.isometry();
        CHECK((k.matrix - restricted).norm() <= 1e-10);
    }
    SUBCASE("orthogonal spans give zero") {
        const Matrix q = random_unitary(8, rng);
        const auto a = Embedding::make(q.leftCols(4));
        const auto b = Embedding::make(q.rightCols(4));
        CHECK(ncg_two_point(t, a, b).matrix.norm() <= 1e-12);
        CHECK(ncg_two_point(t, a, b, Matrix::Identity(8, 8)).matrix.norm() <= 1e-12);
    }
    SUBCASE("basis sum equals the closed form for any orthonormal basis") {
        for (int k = 0; k < 20; ++k) {
            const auto a = random_embedding(6, 4, rng);
            const auto b = random_embedding(6, 4, rng);
            const Matrix closed = ncg_two_point(t, a, b).matrix;
            CHECK((ncg_two_point(t, a, b, Matrix::Identity(6, 6)).matrix - closed).norm() <= 1e-10);
            CHECK((ncg_two_point(t, a, b, random_unitary(6, rng)).matrix - closed).norm() <= 1e-10);
        }
    }
    SUBCASE("closed chain shares the nonzero spectrum of the embedded product") {
        for (int k = 0; k < 100; ++k) {
            const auto a = random_embedding(6, 4, rng);
            const auto b = random_embedding(6, 4, rng);
            const Matrix chain = ncg_two_point(t, a, b).matrix * ncg_two_point(t, b, a).matrix;
            const Matrix prod = embed(t, a).matrix() * embed(t, b).matrix();
            const auto want = oracle::nonzero(oracle::eigenvalues_deflated(prod, 4), 1e-8);
            const auto got = oracle::nonzero(oracle::eigenvalues(chain), 1e-8);
            REQUIRE(got.size() == want.size());
            CHECK(oracle::match_distance(got, want) <= 1e-8 * std::max(1.0, prod.norm()));
        }
    }
    CHECK_THROWS_AS(ncg_two_point(t, random_embedding(6, 4, rng), random_embedding(7, 4, rng)), ContractViolation);
}

TEST_CASE("causal action on embedded families") {
    Rng rng(81);
    const auto t = random_block_triple(2, rng);
    SUBCASE("single embedding") {
        const auto e = random_embedding(6, 4, rng);
        const std::vector<Embedding> es{e};
        const std::vector<double> w{1.0};
        const auto rep = causal_action_on_embeddings(t, es, w);
        const auto x = embed(t, e);
        CHECK(rep.action == doctest::Approx(lagrangian(x, x)).epsilon(1e-12));
        CHECK(std::abs(rep.constraints.trace_integral) <= 1e-10);
    }
    SUBCASE("orthogonal spans do not interact") {
        const Matrix q = random_unitary(8, rng);
        const std::vector<Embedding> es{Embedding::make(q.leftCols(4)), Embedding::make(q.rightCols(4))};
        const std::vector<double> w{0.5, 0.5};
        const auto rep = causal_action_on_embeddings(t, es, w);
        CHECK(rep.classes[0][1] == CausalClass::Spacelike);
        CHECK(rep.classes[1][0] == CausalClass::Spacelike);
        const auto x = embed(t, es[0]), y = embed(t, es[1]);
        CHECK(lagrangian(x, y) == 0.0);
        CHECK((x.matrix() * y.matrix()).norm() <= 1e-12);
        CHECK(rep.action == doctest::Approx(0.25 * (lagrangian(x, x) + lagrangian(y, y))).epsilon(1e-12));
    }
    SUBCASE("serial and parallel agree") {
        std::vector<Embedding> es;
        std::vector<double> w;
        for (int k = 0; k < 6; ++k) {
            es.push_back(random_embedding(6, 4, rng));
            w.push_back(0.1 + 0.05 * k);
        }
        const auto s = causal_action_on_embeddings(t, es, w, Exec::serial);
        const auto p = causal_action_on_embeddings(t, es, w, Exec::parallel);
        CHECK(s.action == p.action);
        CHECK(s.constraints.boundedness == p.constraints.boundedness);
    }
}
