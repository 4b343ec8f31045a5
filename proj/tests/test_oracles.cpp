#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evalq/ensembles.hpp"
#include "evalq/oracles.hpp"

#include <cmath>

using namespace evalq;
using namespace evalq::oracles;

namespace {

DensityMatrix random_density(int N, Rng& rng) {
    cmat g(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) g(i, j) = rng.cnormal();
    cmat m = g * g.adjoint();
    return DensityMatrix(m / m.trace());
}

Observable random_unit_observable(int N, Rng& rng) {
    cmat g(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) g(i, j) = rng.cnormal();
    cmat h = 0.5 * (g + g.adjoint());
    Eigen::SelfAdjointEigenSolver<cmat> es(h, Eigen::EigenvaluesOnly);
    return Observable(h / es.eigenvalues().cwiseAbs().maxCoeff());
}

} // namespace

TEST_CASE("stat oracle") {
    rvec P2(2);
    P2 << 0.5, 0.5;
    auto o = make_stat_oracle(P2, 0.0, NoisePolicy::exact());
    rvec phi(2);
    phi << 1, -1;
    CHECK(o.query(phi) == doctest::Approx(0.0));

    rvec delta(3);
    delta << 1, 0, 0;
    auto od = make_stat_oracle(delta, 0.0, NoisePolicy::exact());
    rvec ind(3);
    ind << 1, -1, -1; // indicator of 0 mapped to [-1, 1]
    CHECK(od.query(ind) == doctest::Approx(1.0));

    rvec P4 = rvec::Constant(4, 0.25);
    auto og = make_stat_oracle(P4, 0.1, NoisePolicy::grid());
    rvec q(4);
    q << 1, 1, -1, -1;
    double v = og.query(q);
    CHECK(std::abs(v) <= 0.1 + 1e-12);

    SUBCASE("range validation and accounting") {
        rvec bad(2);
        bad << 2.0, 0.0;
        auto ob = make_stat_oracle(P2, 0.1);
        CHECK_THROWS_AS(ob.query(bad), invalid_query);
        CHECK(ob.query_count() == 0);
        ob.query(phi);
        CHECK(ob.query_count() == 1);
        CHECK(ob.transcript().size() == 1);
    }
}

TEST_CASE("qstat oracle") {
    auto o = make_qstat_oracle(PureState::basis(2, 0), 0.0, NoisePolicy::exact());
    CHECK(o.query(Observable(pauli_z())) == doctest::Approx(1.0));

    auto om = make_qstat_oracle(DensityMatrix::maximally_mixed(2), 0.0, NoisePolicy::exact());
    CHECK(om.query(Observable(pauli_x())) == doctest::Approx(0.0));

    SUBCASE("stabilizer overlap queries") {
        Rng rng(3);
        auto t1 = ensembles::sample_clifford(2, rng);
        PureState s{cvec(t1.dense().col(0))};
        auto os = make_qstat_oracle(s, 0.0, NoisePolicy::exact());
        cmat proj = s.amplitudes() * s.amplitudes().adjoint();
        CHECK(os.query(Observable(proj)) == doctest::Approx(1.0));
        for (int rep = 0; rep < 10; ++rep) {
            PureState other{cvec(ensembles::sample_clifford(2, rng).dense().col(0))};
            double ov = std::norm(other.amplitudes().dot(s.amplitudes()));
            if (ov > 1e-9 && std::abs(ov - 1.0) > 1e-9) CHECK(ov <= 0.5 + 1e-9);
        }
    }

    SUBCASE("op norm validation") {
        auto ob = make_qstat_oracle(PureState::basis(2, 0), 0.1);
        CHECK_THROWS_AS(ob.query(QStatQuery(Observable(2.0 * pauli_z()))), invalid_query);
        CHECK(ob.query_count() == 0);
    }

    SUBCASE("rotated diagonal equals dense conjugation") {
        Rng rng(9);
        int n = 3, N = 8;
        PureState psi = ensembles::sample_haar_state(N, rng);
        auto o3 = make_qstat_oracle(psi, 0.0, NoisePolicy::exact());
        RotatedDiagonal rd;
        rd.rotation = {hadamard(), cmat(), hadamard()};
        rvec d(N);
        for (int i = 0; i < N; ++i) d[i] = (i % 2) ? 1.0 : -0.5;
        rd.diag = d;
        double got = o3.query(QStatQuery(rd));
        cmat R = tensor(tensor(hadamard(), identity2()), hadamard());
        cmat dense = R.adjoint() * d.cast<cplx>().asDiagonal() * R;
        CHECK(got == doctest::Approx(expectation(psi, dense)).epsilon(1e-10));
    }
}

TEST_CASE("k-copy oracle") {
    Rng rng(5);

    SUBCASE("k=2 flip query returns purity") {
        DensityMatrix rho = random_density(3, rng);
        auto o = make_kqstat_oracle(rho, 2, 0.0, NoisePolicy::exact());
        double purity = (rho.matrix() * rho.matrix()).trace().real();
        CHECK(o.query(KQuery(flip_operator(3))) == doctest::Approx(purity));
    }

    SUBCASE("k=1 agrees with plain qstat on 100 random pairs") {
        for (int rep = 0; rep < 100; ++rep) {
            DensityMatrix rho = random_density(2, rng);
            Observable O = random_unit_observable(2, rng);
            auto k1 = make_kqstat_oracle(rho, 1, 0.0, NoisePolicy::exact());
            auto q1 = make_qstat_oracle(rho, 0.0, NoisePolicy::exact());
            CHECK(k1.query(KQuery(O)) == doctest::Approx(q1.query(QStatQuery(O))));
        }
    }

    SUBCASE("k=2 with O x I matches the single-copy query") {
        PureState psi = ensembles::sample_haar_state(2, rng);
        Observable O = random_unit_observable(2, rng);
        auto o2 = make_kqstat_oracle(psi, 2, 0.0, NoisePolicy::exact());
        cmat OI = tensor(O.matrix(), cmat::Identity(2, 2));
        auto o1 = make_qstat_oracle(psi, 0.0, NoisePolicy::exact());
        CHECK(o2.query(KQuery(Observable(OI))) == doctest::Approx(o1.query(QStatQuery(O))));
        // product form gives the same value
        ProductObservable prod{{O, Observable(cmat::Identity(2, 2))}};
        CHECK(o2.query(KQuery(prod)) == doctest::Approx(o1.truth_for_test(QStatQuery(O))));
    }

    SUBCASE("power projector on pure states") {
        PureState psi = ensembles::sample_haar_state(4, rng);
        PureState phi = ensembles::sample_haar_state(4, rng);
        auto o = make_kqstat_oracle(psi, 3, 0.0, NoisePolicy::exact());
        double ov = std::norm(phi.amplitudes().dot(psi.amplitudes()));
        CHECK(o.query(KQuery(PowerProjector(phi))) == doctest::Approx(std::pow(ov, 3)));
    }

    SUBCASE("budget guard") {
        PureState psi = ensembles::sample_haar_state(64, rng);
        auto o = make_kqstat_oracle(psi, 3, 0.1);
        CHECK_THROWS_AS(o.query(KQuery(Observable(cmat::Identity(8, 8)))), evalq::error);
    }
}

TEST_CASE("csq oracle") {
    rvec lambda = rvec::Constant(2, 0.5);
    rvec f(2);
    f << 1, -1;
    auto o = make_csq_oracle(f, lambda, 0.0, NoisePolicy::exact());

    // g = f / ||f||_{L2} attains ||f||_{L2}
    double fnorm = std::sqrt(0.5 * (1 + 1));
    rvec g = f / fnorm;
    CHECK(o.query(g) == doctest::Approx(fnorm));

    rvec perp(2);
    perp << 1, 1; // orthogonal to f under uniform lambda
    CHECK(o.query(perp / std::sqrt(0.5 * 2)) == doctest::Approx(0.0));

    rvec g2(2);
    g2 << std::sqrt(2.0), 0;
    CHECK(o.query(g2) == doctest::Approx(1.0 / std::sqrt(2.0)));

    rvec toolong(2);
    toolong << 2.0, 2.0;
    CHECK_THROWS_AS(o.query(toolong), invalid_query);
}

TEST_CASE("mcsq oracle") {
    Rng rng(7);
    DensityMatrix mixed = DensityMatrix::maximally_mixed(2);
    auto o = make_mcsq_oracle(cmat::Identity(2, 2), mixed, 0.0, NoisePolicy::exact());
    CHECK(o.query(cmat::Identity(2, 2)).real() == doctest::Approx(1.0));

    auto oz = make_mcsq_oracle(pauli_z(), mixed, 0.0, NoisePolicy::exact());
    CHECK(oz.query(pauli_z()).real() == doctest::Approx(1.0)); // tr[Z rho Z] = 1 at N=2

    // B supported off the state's support gives zero
    cmat p0 = cmat::Zero(2, 2);
    p0(0, 0) = 1;
    DensityMatrix ket1 = DensityMatrix::pure(PureState::basis(2, 1));
    auto o1 = make_mcsq_oracle(cmat::Identity(2, 2), ket1, 0.0, NoisePolicy::exact());
    CHECK(std::abs(o1.query(p0)) == doctest::Approx(0.0));
}

TEST_CASE("qcsq and qusq oracles") {
    auto lam = StateMeasure::haar_states(2);

    auto o = make_qcsq_oracle(Observable(cmat::Identity(2, 2)), lam, 0.0, NoisePolicy::exact());
    CHECK(o.query(Observable(cmat::Identity(2, 2))) == doctest::Approx(1.0));

    auto oz = make_qcsq_oracle(Observable(pauli_z()), lam, 0.0, NoisePolicy::exact());
    CHECK(oz.query(Observable(pauli_z())) == doctest::Approx(1.0 / 3.0));

    Rng rng(11);
    cmat U = ensembles::sample_haar(2, rng);
    auto ou = make_qusq_oracle(U, lam, 0.0, NoisePolicy::exact());
    CHECK(std::abs(ou.query(U) - cplx(1, 0)) < 1e-12);
    CHECK_THROWS_AS(ou.query(cmat(2.0 * U)), invalid_query);

    SUBCASE("finite measure matches direct sum") {
        Rng r2(13);
        std::vector<DensityMatrix> sts{random_density(2, r2), random_density(2, r2)};
        auto fin = StateMeasure::finite(sts, {0.3, 0.7});
        Observable M = random_unit_observable(2, r2);
        Observable O = random_unit_observable(2, r2);
        auto of = make_qcsq_oracle(M, fin, 0.0, NoisePolicy::exact());
        double want = 0.3 * expectation(sts[0], O) * expectation(sts[0], M) +
                      0.7 * expectation(sts[1], O) * expectation(sts[1], M);
        CHECK(of.query(O) == doctest::Approx(want));
    }
}

TEST_CASE("one bit oracle") {
    rvec P = rvec::Constant(2, 0.5);
    auto o = make_1bit_oracle(P, 0.05);
    std::vector<int> zero{0, 0};
    CHECK(o.query(zero) <= 0.05 + 1e-12);
    std::vector<int> ident{0, 1};
    CHECK(std::abs(o.query(ident) - 0.5) <= 0.05 + 1e-12);

    // parity over uniform F_2^2
    rvec P4 = rvec::Constant(4, 0.25);
    auto o4 = make_1bit_oracle(P4, 0.02);
    std::vector<int> parity{0, 1, 1, 0};
    CHECK(std::abs(o4.query(parity) - 0.5) <= 0.02 + 1e-12);
}

TEST_CASE("loss oracles") {
    SUBCASE("basis self-learning") {
        auto o = make_basis_selflearn_oracle(5, 3, 0.05);
        CHECK(o.query(5) <= 0.05 + 1e-12);
        CHECK(o.query(2) >= 1.0 - 0.05 - 1e-12);
        CHECK_THROWS_AS(o.query(9), invalid_query);
    }

    SUBCASE("constant loss within band") {
        auto o = make_loss_oracle([](const rvec&) { return 0.5; }, ThetaBox{2, 0.0, 1.0}, 0.1);
        rvec th(2);
        th << 0.3, 0.9;
        CHECK(std::abs(o.query(th) - 0.5) <= 0.1 + 1e-12);
        rvec out(2);
        out << 1.5, 0.0;
        CHECK_THROWS_AS(o.query(out), invalid_query);
    }

    SUBCASE("pauli string loss hits 0, 1/2, 1 before noise") {
        // P = Z x Z, queries are stabilizer states
        auto P = weyl_operator(2, 0, 3);
        auto o = make_pauli_loss_oracle(P, 0.0, NoisePolicy::exact());
        PureState s00 = PureState::basis(4, 0);
        CHECK(o.query(s00) == doctest::Approx(1.0)); // <ZZ> = +1
        cvec plus2(4);
        plus2 << 0.5, 0.5, 0.5, 0.5;
        CHECK(o.query(PureState(plus2)) == doctest::Approx(0.5)); // <ZZ> = 0
        cvec odd(4);
        odd << 0, 1, 0, 0;
        CHECK(o.query(PureState(odd)) == doctest::Approx(0.0)); // <ZZ> = -1
    }
}

TEST_CASE("noise policies respect the contract") {
    Rng rng(21);
    const double tau = 0.07;
    std::vector<NoisePolicy> policies{
        NoisePolicy::exact(), NoisePolicy::grid(), NoisePolicy::grid(tau / 2),
        NoisePolicy::seeded_uniform(99),
        NoisePolicy::adversarial([](double t, std::uint64_t, std::uint64_t) { return t + 100; })};

    for (auto& pol : policies) {
        auto o = make_qstat_oracle(PureState::basis(2, 0), tau, pol);
        for (int rep = 0; rep < 200; ++rep) {
            Observable O = random_unit_observable(2, rng);
            double truth = o.truth_for_test(QStatQuery(O));
            double v = o.query(QStatQuery(O));
            CHECK(std::abs(v - truth) <= tau + 1e-12);
        }
    }

    SUBCASE("quantize grid is deterministic") {
        auto o = make_stat_oracle(rvec::Constant(4, 0.25), 0.1, NoisePolicy::grid());
        rvec q(4);
        q << 0.3, -0.2, 0.9, 0.1;
        double v1 = o.query(q);
        double v2 = o.query(q);
        CHECK(v1 == v2);
    }

    SUBCASE("complex disk for qusq") {
        Rng r2(23);
        cmat U = ensembles::sample_haar(2, r2);
        auto grid = make_qusq_oracle(U, StateMeasure::haar_states(2), 0.1, NoisePolicy::grid());
        auto seeded = make_qusq_oracle(U, StateMeasure::haar_states(2), 0.1,
                                       NoisePolicy::seeded_uniform(5));
        for (int rep = 0; rep < 50; ++rep) {
            cmat Q = ensembles::sample_haar(2, r2);
            CHECK(std::abs(grid.query(Q) - grid.truth_for_test(Q)) <= 0.1 + 1e-12);
            CHECK(std::abs(seeded.query(Q) - seeded.truth_for_test(Q)) <= 0.1 + 1e-12);
        }
    }
}

TEST_CASE("transcript export") {
    auto o = make_stat_oracle(rvec::Constant(2, 0.5), 0.1);
    rvec q(2);
    q << 1, -1;
    o.query(q);
    o.query(q);
    std::string jsonl = o.transcript_jsonl();
    CHECK(jsonl.find("\"index\":0") != std::string::npos);
    CHECK(jsonl.find("\"index\":1") != std::string::npos);
    CHECK(jsonl.find("\"tag\":\"stat\"") != std::string::npos);
    CHECK(o.query_count() == o.transcript().size());
}
