#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evalq/qmath.hpp"

#include <cmath>

using namespace evalq;

namespace {

Rng test_rng(std::uint64_t s = 7) { return Rng(s); }

PureState random_state(int N, Rng& rng) {
    cvec v(N);
    for (int i = 0; i < N; ++i) v[i] = rng.cnormal();
    return PureState(v / v.norm());
}

DensityMatrix random_density(int N, Rng& rng) {
    cmat g(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) g(i, j) = rng.cnormal();
    cmat m = g * g.adjoint();
    return DensityMatrix(m / m.trace());
}

} // namespace

TEST_CASE("tensor basics") {
    cmat I2 = cmat::Identity(2, 2);
    CHECK((tensor(I2, I2) - cmat::Identity(4, 4)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

    // Z x Z at |00>
    cmat zz = tensor(pauli_z(), pauli_z());
    PureState s00 = PureState::basis(4, 0);
    CHECK(expectation(s00, zz) == doctest::Approx(1.0));

    // X x X on the Bell state, value from direct 4x4 multiplication
    cvec bell(4);
    bell << 1, 0, 0, 1;
    bell /= std::sqrt(2.0);
    cmat xx = tensor(pauli_x(), pauli_x());
    cplx direct = bell.dot(xx * bell);
    CHECK(direct.real() == doctest::Approx(1.0));
    CHECK(expectation(PureState(bell), xx) == doctest::Approx(direct.real()));
}

TEST_CASE("expectation") {
    DensityMatrix zero = DensityMatrix::pure(PureState::basis(2, 0));
    Observable Z(pauli_z());
    CHECK(expectation(zero, Z) == doctest::Approx(1.0));
    CHECK(expectation(DensityMatrix::maximally_mixed(2), Z) == doctest::Approx(0.0));

    cvec plus(2);
    plus << 1, 1;
    plus /= std::sqrt(2.0);
    CHECK(expectation(DensityMatrix::pure(PureState(plus)), Observable(pauli_x())) ==
          doctest::Approx(1.0));

    CHECK_THROWS_AS(expectation(zero, Observable(cmat::Identity(4, 4))), dim_error);
}

TEST_CASE("trace distance and fidelity") {
    DensityMatrix zero = DensityMatrix::pure(PureState::basis(2, 0));
    DensityMatrix one = DensityMatrix::pure(PureState::basis(2, 1));
    CHECK(trace_distance(zero, one) == doctest::Approx(1.0));
    CHECK(trace_distance(zero, zero) == doctest::Approx(0.0));
    CHECK(fidelity(zero, zero) == doctest::Approx(1.0));
    CHECK(fidelity(zero, one) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fidelity(zero, DensityMatrix::maximally_mixed(2)) == doctest::Approx(0.5));

    auto rng = test_rng(11);
    SUBCASE("pure-state identity d_tr = sqrt(1-overlap)") {
        for (int rep = 0; rep < 20; ++rep) {
            PureState a = random_state(4, rng), b = random_state(4, rng);
            double ov = std::norm(a.amplitudes().dot(b.amplitudes()));
            double d = trace_distance(DensityMatrix::pure(a), DensityMatrix::pure(b));
            CHECK(d == doctest::Approx(std::sqrt(1.0 - ov)).epsilon(1e-8));
        }
    }
    SUBCASE("Fuchs-van de Graaf over random pairs") {
        for (int rep = 0; rep < 1000; ++rep) {
            DensityMatrix r = random_density(4, rng), s = random_density(4, rng);
            double d = trace_distance(r, s);
            double f = fidelity(r, s);
            CHECK(1.0 - std::sqrt(f) <= d + 1e-8);
            CHECK(d <= std::sqrt(1.0 - f) + 1e-8);
        }
    }
}

TEST_CASE("partial trace") {
    auto rng = test_rng(3);
    DensityMatrix r = random_density(2, rng), s = random_density(3, rng);
    DensityMatrix prod(tensor(r.matrix(), s.matrix()));
    DensityMatrix back = partial_trace(prod, {0}, {2, 3});
    CHECK((back.matrix() - r.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back.matrix().trace().real() == doctest::Approx(1.0));

    cvec bell(4);
    bell << 1, 0, 0, 1;
    bell /= std::sqrt(2.0);
    DensityMatrix reduced = partial_trace(DensityMatrix::pure(PureState(bell)), {0}, {2, 2});
    CHECK((reduced.matrix() - cmat::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(partial_trace(prod, {0, 5}, {2, 3}), dim_error);
}

TEST_CASE("flip operator") {
    Observable F = flip_operator(2);
    // 4x4 swap
    cmat swap(4, 4);
    swap << 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1;
    CHECK((F.matrix() - swap).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK((F.matrix() * F.matrix() - cmat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(flip_operator(3).matrix().trace().real() == doctest::Approx(3.0));

    auto rng = test_rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        DensityMatrix r = random_density(3, rng);
        double purity = (r.matrix() * r.matrix()).trace().real();
        cmat rr = tensor(r.matrix(), r.matrix());
        CHECK((rr * flip_operator(3).matrix()).trace().real() == doctest::Approx(purity));
    }
}

TEST_CASE("symmetric projector") {
    CHECK((symmetric_projector(3, 1).matrix() - cmat::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-14);

    for (int N : {2, 3}) {
        cmat P = symmetric_projector(N, 2).matrix();
        cmat expect = 0.5 * (cmat::Identity(N * N, N * N) + flip_operator(N).matrix());
        CHECK((P - expect).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-12);
    }

    // rank at N=2, t=2 equals binom(3,2) = 3
    Eigen::SelfAdjointEigenSolver<cmat> es(symmetric_projector(2, 2).matrix());
    int rank = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] > 0.5) ++rank;
    CHECK(rank == 3);

    CHECK_THROWS_AS(symmetric_projector(64, 4), budget_error);
}

TEST_CASE("weyl operators") {
    CHECK(weyl_operator(1, 0, 0).dense().isApprox(cmat::Identity(2, 2)));
    // n=1, (a,b)=(1,1) is i XZ = Y
    CHECK((weyl_operator(1, 1, 1).dense() - pauli_y()).cwiseAbs().maxCoeff() < 1e-14);

    SUBCASE("Hermitian unitary with orthogonality") {
        int n = 2;
        std::int64_t N = 4;
        for (std::uint64_t la = 0; la < 16; ++la) {
            cmat W = PauliWeyl::from_label(n, la).dense();
            CHECK((W - W.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
            CHECK((W * W - cmat::Identity(N, N)).cwiseAbs().maxCoeff() < 1e-14);
            for (std::uint64_t lb = 0; lb < 16; ++lb) {
                cmat V = PauliWeyl::from_label(n, lb).dense();
                double tr = (W * V).trace().real();
                CHECK(tr == doctest::Approx(la == lb ? double(N) : 0.0).epsilon(1e-12));
            }
        }
    }

    SUBCASE("product phases") {
        auto X = weyl_operator(1, 1, 0), Z = weyl_operator(1, 0, 1);
        // anticommuting product is not a signed Weyl
        CHECK_THROWS(X * Z);
        auto rng = test_rng(23);
        for (int rep = 0; rep < 50; ++rep) {
            auto P = PauliWeyl::from_label(3, rng.integer(64));
            auto Q = PauliWeyl::from_label(3, rng.integer(64));
            if (!P.commutes_with(Q)) continue;
            CHECK(((P * Q).dense() - P.dense() * Q.dense()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    SUBCASE("normalization identity over all labels") {
        auto rng = test_rng(29);
        for (int n = 1; n <= 5; ++n) {
            PureState psi = random_state(1 << n, rng);
            double total = 0.0;
            for (std::uint64_t la = 0; la < (1ULL << (2 * n)); ++la) {
                double e = PauliWeyl::from_label(n, la).expectation(psi);
                CHECK(e >= -1.0 - 1e-12);
                CHECK(e <= 1.0 + 1e-12);
                total += e * e;
            }
            double mean = total / double(1ULL << (2 * n));
            CHECK(std::abs(mean - std::pow(2.0, -n)) < 1e-10);
        }
    }
}

TEST_CASE("majorana operators") {
    MajoranaSet ms = majorana_operators(1);
    CHECK((ms.ops[0] - pauli_x()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((ms.ops[1] - pauli_y()).cwiseAbs().maxCoeff() < 1e-14);

    for (int l : {2, 3}) {
        MajoranaSet m = majorana_operators(l);
        std::int64_t N = 1 << l;
        for (std::size_t i = 0; i < m.ops.size(); ++i) {
            CHECK((m.ops[i] - m.ops[i].adjoint()).cwiseAbs().maxCoeff() < 1e-12);
            for (std::size_t j = 0; j < m.ops.size(); ++j) {
                cmat anti = m.ops[i] * m.ops[j] + m.ops[j] * m.ops[i];
                cmat want = (i == j) ? cmat(2.0 * cmat::Identity(N, N)) : cmat(cmat::Zero(N, N));
                CHECK((anti - want).cwiseAbs().maxCoeff() < 1e-9);
            }
        }
    }
    CHECK_THROWS_AS(majorana_operators(8), budget_error);
}

TEST_CASE("covariance matrix") {
    MajoranaSet ms = majorana_operators(2);
    DensityMatrix vac = DensityMatrix::pure(PureState::basis(4, 0));
    CovarianceMatrix M = covariance_of_state(vac, ms);
    CHECK((M.m + M.m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(M.m(i, i) == doctest::Approx(0.0));
    // vacuum is block diagonal with unit-magnitude blocks
    CHECK(std::abs(M.m(0, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(M.m(2, 3)) == doctest::Approx(1.0));
    CHECK(std::abs(M.m(0, 2)) == doctest::Approx(0.0));

    CovarianceMatrix mixed = covariance_of_state(DensityMatrix::maximally_mixed(4), ms);
    CHECK(mixed.m.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("construction guards") {
    cvec bad(2);
    bad << 1.0, 1.0;
    CHECK_THROWS(PureState(bad));

    cmat notpsd(2, 2);
    notpsd << 1.5, 0, 0, -0.5;
    CHECK_THROWS(DensityMatrix(notpsd));

    cmat nonherm(2, 2);
    nonherm << 0, 1, 0, 0;
    CHECK_THROWS(Observable(nonherm));
}

TEST_CASE("statevector gates") {
    auto rng = test_rng(31);
    int n = 3;
    cvec v(8);
    for (int i = 0; i < 8; ++i) v[i] = rng.cnormal();
    v /= v.norm();

    // single-qubit application matches the dense kron
    for (int q = 0; q < n; ++q) {
        cvec w = v;
        apply_single_qubit(w, n, q, hadamard());
        cmat full = cmat::Identity(1, 1);
        for (int i = 0; i < n; ++i) full = tensor(full, i == q ? hadamard() : identity2());
        CHECK((w - full * v).cwiseAbs().maxCoeff() < 1e-12);
    }

    // two-qubit application on adjacent and non-adjacent pairs
    cmat g(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = rng.cnormal();
    Eigen::HouseholderQR<cmat> qr(g);
    cmat q4 = qr.householderQ();
    for (auto [q1, q2] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{0, 2}}) {
        cvec w = v;
        apply_two_qubit(w, n, q1, q2, q4);
        CHECK(std::abs(w.norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("stabilizer states") {
    // Z...Z with YY chain at n=2 stabilizes (|00> - |11>)/sqrt(2)
    auto ZZ = weyl_operator(2, 0, 3);
    auto YY = weyl_operator(2, 3, 3); // i^2 XZ x XZ = -XZxXZ... dense check below
    PureState s = stabilizer_state(2, {ZZ, YY});
    CHECK(expectation(s, Observable(ZZ.dense())) == doctest::Approx(1.0));
    CHECK(expectation(s, Observable(YY.dense())) == doctest::Approx(1.0));
    CHECK((YY.dense() - tensor(pauli_y(), pauli_y())).cwiseAbs().maxCoeff() < 1e-14);

    CHECK_THROWS(stabilizer_state(2, {weyl_operator(2, 2, 0), weyl_operator(2, 0, 2)}));
}
