#include "evalq/learners.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace evalq::learners {

// ---------------------------------------------------------------------------
// Mirror maps
// ---------------------------------------------------------------------------

namespace {

constexpr double kFloor = 1e-300;

double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

} // namespace

MirrorMap<rvec> negative_entropy_map() {
    MirrorMap<rvec> m;
    m.name = "negative-entropy";
    m.zeta = 1.0;
    m.gradient = [](const rvec& x) {
        rvec g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = std::log(std::max(x[i], kFloor)) + 1.0;
        return g;
    };
    m.inverse_gradient = [](const rvec& y) {
        rvec x(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) x[i] = std::exp(y[i] - 1.0);
        return x;
    };
    m.bregman = [](const rvec& x, const rvec& y) {
        double acc = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            acc += xlogx(x[i]) - x[i] * std::log(std::max(y[i], kFloor)) - x[i] + y[i];
        return acc;
    };
    return m;
}

MirrorMap<rvec> squared_norm_map() {
    MirrorMap<rvec> m;
    m.name = "squared-norm";
    m.zeta = 1.0;
    m.gradient = [](const rvec& x) { return x; };
    m.inverse_gradient = [](const rvec& y) { return y; };
    m.bregman = [](const rvec& x, const rvec& y) { return 0.5 * (x - y).squaredNorm(); };
    return m;
}

namespace {

// Hermitian functional calculus helper.
cmat hermitian_apply(const cmat& X, const std::function<double(double)>& f) {
    Eigen::SelfAdjointEigenSolver<cmat> es(X);
    cvec d(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = f(es.eigenvalues()[i]);
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

MirrorMap<cmat> von_neumann_map() {
    const double ln2 = std::log(2.0);
    MirrorMap<cmat> m;
    m.name = "von-neumann";
    m.zeta = 1.0 / ln2;
    m.gradient = [ln2](const cmat& X) {
        return hermitian_apply(
            X, [ln2](double v) { return (std::log(std::max(v, kFloor)) + 1.0) / ln2; });
    };
    m.inverse_gradient = [ln2](const cmat& Y) {
        return hermitian_apply(Y, [ln2](double v) { return std::exp(v * ln2 - 1.0); });
    };
    m.bregman = [ln2](const cmat& X, const cmat& Y) {
        // tr[X log2 X - X log2 Y] + (tr Y - tr X)/ln2
        Eigen::SelfAdjointEigenSolver<cmat> ex(X), ey(Y);
        double sx = 0;
        for (Eigen::Index i = 0; i < ex.eigenvalues().size(); ++i)
            sx += xlogx(std::max(ex.eigenvalues()[i], 0.0));
        cmat logY = hermitian_apply(Y, [](double v) { return std::log(std::max(v, kFloor)); });
        double cross = (X * logY).trace().real();
        double tx = X.trace().real(), ty = Y.trace().real();
        return (sx - cross + ty - tx) / ln2;
    };
    return m;
}

std::function<rvec(const rvec&)> simplex_normalize() {
    return [](const rvec& x) {
        rvec y = x.cwiseMax(0.0);
        double s = y.sum();
        if (s <= 0) throw error("simplex_normalize: vanishing iterate");
        return rvec(y / s);
    };
}

std::function<cmat(const cmat&)> density_normalize() {
    return [](const cmat& X) {
        double tr = X.trace().real();
        if (tr <= 0) throw error("density_normalize: vanishing trace");
        return cmat(X / tr);
    };
}

// ---------------------------------------------------------------------------
// Regret audit
// ---------------------------------------------------------------------------

namespace {

template <class P, class Inner>
RegretAudit regret_audit_impl(const std::vector<P>& gs, const std::vector<P>& fs,
                              const P& comparator, const MirrorMap<P>& map, double eta,
                              Inner inner) {
    if (gs.size() != fs.size() || gs.empty()) throw dim_error("regret_audit: length mismatch");
    const double T = double(gs.size());
    double regret = 0;
    for (std::size_t t = 0; t < gs.size(); ++t)
        regret += inner(gs[t], fs[t]) - inner(gs[t], comparator);
    RegretAudit a;
    a.average_regret = regret / T;
    a.bound = map.bregman(comparator, fs[0]) / (eta * T) + eta / (2.0 * map.zeta);
    a.pass = a.average_regret <= a.bound + 1e-9;
    return a;
}

} // namespace

RegretAudit regret_audit(const std::vector<rvec>& gs, const std::vector<rvec>& fs,
                         const rvec& comparator, const MirrorMap<rvec>& map, double eta) {
    for (const auto& g : gs)
        if (g.cwiseAbs().maxCoeff() > 1.0 + 1e-9)
            throw error("regret_audit: ||g||_inf > 1");
    return regret_audit_impl(gs, fs, comparator, map, eta,
                             [](const rvec& a, const rvec& b) { return a.dot(b); });
}

RegretAudit regret_audit(const std::vector<cmat>& gs, const std::vector<cmat>& fs,
                         const cmat& comparator, const MirrorMap<cmat>& map, double eta) {
    for (const auto& g : gs) {
        Eigen::SelfAdjointEigenSolver<cmat> es(g, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().cwiseAbs().maxCoeff() > 1.0 + 1e-9)
            throw error("regret_audit: ||g||_op > 1");
    }
    return regret_audit_impl(gs, fs, comparator, map, eta, [](const cmat& a, const cmat& b) {
        return (a * b).trace().real();
    });
}

// ---------------------------------------------------------------------------
// Multiplicative weights learners
// ---------------------------------------------------------------------------

LearnerResult<rvec> mw_distribution_learner(oracles::StatOracle& oracle,
                                            const std::vector<rvec>& pool, int N, double tau,
                                            double radius) {
    if (pool.empty()) throw dim_error("mw_distribution_learner: empty pool");
    if (oracle.tolerance() > tau / 3.0 + 1e-12)
        throw error("mw_distribution_learner: oracle tolerance must be tau/3");
    auto map = negative_entropy_map();
    const double r = radius > 0 ? radius : std::log(double(N));
    const double eta = tau * map.zeta / 3.0;
    const std::size_t budget = std::size_t(std::ceil(18.0 * r / (map.zeta * tau * tau)));
    auto project = simplex_normalize();

    const std::uint64_t q0 = oracle.query_count();
    MDState<rvec> st{rvec::Constant(N, 1.0 / double(N)), eta, 0};
    LearnerResult<rvec> out;
    out.update_budget = budget;

    for (;;) {
        bool updated = false;
        for (const auto& phi : pool) {
            double v = oracle.query(phi);
            double pred = st.iterate.dot(phi);
            if (std::abs(v - pred) > 2.0 * tau / 3.0) {
                rvec h = (pred > v) ? phi : rvec(-phi);
                st = md_update<rvec>(st, h, map, project);
                ++out.updates;
                updated = true;
                break;
            }
        }
        if (!updated) {
            out.output = st.iterate;
            out.success = true;
            break;
        }
        if (out.updates > budget) {
            out.output = st.iterate;
            out.success = false;
            out.diagnostics = "update budget exceeded without a clean pass";
            break;
        }
    }
    out.queries_used = oracle.query_count() - q0;
    return out;
}

LearnerResult<cmat> mmw_state_learner(oracles::QStatOracle& oracle, int N,
                                      const std::vector<Observable>& pool, double tau,
                                      double radius) {
    if (oracle.tolerance() > tau / 3.0 + 1e-12)
        throw error("mmw_state_learner: oracle tolerance must be tau/3");
    auto map = von_neumann_map();
    const double r = radius > 0 ? radius : std::log2(double(N));
    const double eta = tau * map.zeta / 3.0;
    const std::size_t budget = std::size_t(std::ceil(18.0 * r / (map.zeta * tau * tau)));
    auto project = density_normalize();

    const std::uint64_t q0 = oracle.query_count();
    MDState<cmat> st{cmat::Identity(N, N) / double(N), eta, 0};
    LearnerResult<cmat> out;
    out.update_budget = budget;

    for (;;) {
        bool updated = false;
        for (const auto& O : pool) {
            double v = oracle.query(oracles::QStatQuery(O));
            double pred = (st.iterate * O.matrix()).trace().real();
            if (std::abs(v - pred) > 2.0 * tau / 3.0) {
                cmat h = (pred > v) ? O.matrix() : cmat(-O.matrix());
                st = md_update<cmat>(st, h, map, project);
                ++out.updates;
                updated = true;
                break;
            }
        }
        if (!updated) {
            out.output = st.iterate;
            out.success = true;
            break;
        }
        if (out.updates > budget) {
            out.output = st.iterate;
            out.success = false;
            out.diagnostics = "update budget exceeded without a clean pass";
            break;
        }
    }
    out.queries_used = oracle.query_count() - q0;
    return out;
}

// ---------------------------------------------------------------------------
// Parity learner
// ---------------------------------------------------------------------------

PureState make_qpac_parity_state(std::uint64_t s, int n) {
    if (n < 1 || n > 20) throw budget_error("make_qpac_parity_state: n out of range");
    if (s >= (1ULL << n)) throw dim_error("make_qpac_parity_state: s out of range");
    const std::int64_t N = std::int64_t(1) << (n + 1);
    cvec v = cvec::Zero(N);
    const double amp = std::pow(2.0, -0.5 * n);
    for (std::uint64_t x = 0; x < (1ULL << n); ++x) {
        int f = std::popcount(x & s) & 1;
        // qubit i of the register is bit (n - i) of the index, label is bit 0
        std::int64_t idx = 0;
        for (int i = 0; i < n; ++i)
            if ((x >> i) & 1ULL) idx |= std::int64_t(1) << (n - i);
        idx |= f;
        v[idx] = amp;
    }
    return PureState(v);
}

LearnerResult<std::uint64_t> parity_learner(oracles::QStatOracle& oracle, int n) {
    if (oracle.tolerance() >= 0.25)
        throw error("parity_learner: requires tau < 1/4");
    const double tau = oracle.tolerance();
    const int nq = n + 1;
    const std::int64_t N = std::int64_t(1) << nq;
    const std::uint64_t q0 = oracle.query_count();

    std::uint64_t s = 0;
    for (int i = 0; i < n; ++i) {
        oracles::RotatedDiagonal rd;
        rd.rotation.assign(nq, hadamard());
        rvec d = rvec::Zero(N);
        for (std::int64_t idx = 0; idx < N; ++idx) {
            bool xi = (idx >> (n - i)) & 1;
            bool label = idx & 1;
            if (xi && label) d[idx] = 1.0;
        }
        rd.diag = d;
        rd.tag = "parity-bit";
        double v = oracle.query(oracles::QStatQuery(rd));
        // truth is 0 or 1/2
        if (std::abs(v) > tau + 1e-12 && std::abs(v - 0.5) > tau + 1e-12)
            throw error("parity_learner: ambiguous oracle response");
        if (v > 0.25) s |= 1ULL << i;
    }
    LearnerResult<std::uint64_t> out;
    out.output = s;
    out.success = true;
    out.queries_used = oracle.query_count() - q0;
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian state learner
// ---------------------------------------------------------------------------

PureState gaussian_basis_state(int l, std::uint64_t occupation) {
    const std::int64_t N = std::int64_t(1) << l;
    std::int64_t idx = 0;
    for (int k = 0; k < l; ++k)
        if ((occupation >> k) & 1ULL) idx |= std::int64_t(1) << (l - 1 - k);
    return PureState::basis(N, idx);
}

namespace {

// Givens factorization R = G_1 G_2 ... G_m of a special orthogonal matrix,
// each G a plane rotation.
struct PlaneRotation {
    int i, j;
    double theta;
};

std::vector<PlaneRotation> givens_factor(rmat R) {
    const int d = int(R.rows());
    if ((R * R.transpose() - rmat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
        throw error("givens_factor: not orthogonal");
    if (R.determinant() < 0) throw error("givens_factor: determinant -1");
    std::vector<PlaneRotation> rots;
    // eliminate below-diagonal entries by left plane rotations; the stored
    // angle is the one whose conjugation rotation reproduces R as a product
    for (int col = 0; col < d - 1; ++col) {
        for (int row = col + 1; row < d; ++row) {
            double a = R(col, col), b = R(row, col);
            if (std::abs(b) < 1e-14) continue;
            double theta = std::atan2(b, a);
            for (int c = 0; c < d; ++c) {
                double x = R(col, c), y = R(row, c);
                R(col, c) = std::cos(theta) * x + std::sin(theta) * y;
                R(row, c) = -std::sin(theta) * x + std::cos(theta) * y;
            }
            rots.push_back({col, row, -theta});
        }
    }
    // R is now diagonal +-1 with det +1; fold -1 pairs into pi rotations
    std::vector<int> flips;
    for (int k = 0; k < d; ++k)
        if (R(k, k) < 0) flips.push_back(k);
    if (flips.size() % 2 != 0) throw error("givens_factor: odd reflection count");
    for (std::size_t p = 0; p + 1 < flips.size(); p += 2)
        rots.push_back({flips[p], flips[p + 1], M_PI});
    return rots;
}

} // namespace

cmat gaussian_unitary_from_rotation(const MajoranaSet& ms, const rmat& R) {
    const std::int64_t N = std::int64_t(1) << ms.l;
    if (R.rows() != 2 * ms.l) throw dim_error("gaussian_unitary_from_rotation: bad rotation dim");
    // U with U^dag m_k U = sum_l R_{kl} m_l; a plane rotation by theta in
    // coordinates (i, j) is exp(theta/2 m_i m_j) = cos(theta/2) + sin(theta/2) m_i m_j
    cmat U = cmat::Identity(N, N);
    for (const auto& rot : givens_factor(R)) {
        cmat G = std::cos(rot.theta / 2) * cmat::Identity(N, N) +
                 std::sin(rot.theta / 2) * ms.ops[rot.i] * ms.ops[rot.j];
        U = U * G;
    }
    return U;
}

std::pair<PureState, rmat> gaussian_pure_state(const MajoranaSet& ms, const rmat& R,
                                               std::uint64_t occupation) {
    PureState base = gaussian_basis_state(ms.l, occupation);
    rmat Mref = rmat::Zero(2 * ms.l, 2 * ms.l);
    for (int k = 0; k < ms.l; ++k) {
        double lam = ((occupation >> k) & 1ULL) ? 1.0 : -1.0;
        Mref(2 * k, 2 * k + 1) = lam;
        Mref(2 * k + 1, 2 * k) = -lam;
    }
    cmat U = gaussian_unitary_from_rotation(ms, R);
    PureState psi{cvec(U * base.amplitudes())};
    rmat M = R * Mref * R.transpose();
    return {psi, M};
}

rmat sample_special_orthogonal(int dim, Rng& rng) {
    rmat g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<rmat> qr(g);
    rmat Q = qr.householderQ();
    rmat Rm = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i)
        if (Rm(i, i) < 0) Q.col(i) *= -1.0;
    if (Q.determinant() < 0) Q.col(0) *= -1.0;
    return Q;
}

GaussianLearnResult gaussian_state_learner(oracles::QStatOracle& oracle, int l) {
    const int d = 2 * l;
    const double tau = oracle.tolerance();
    MajoranaSet ms = majorana_operators(l);
    const std::uint64_t q0 = oracle.query_count();

    // query every independent covariance entry (i/2)[m_i, m_j]
    rmat M = rmat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j) {
            cmat comm = cplx(0, 0.5) * (ms.ops[i] * ms.ops[j] - ms.ops[j] * ms.ops[i]);
            double v = oracle.query(oracles::QStatQuery(Observable(comm)));
            M(i, j) = v;
            M(j, i) = -v;
        }

    // block diagonalize by real Schur; skew-symmetry makes T block diagonal
    Eigen::RealSchur<rmat> schur(M);
    rmat T = schur.matrixT();
    rmat Uo = schur.matrixU(); // M = Uo T Uo^T
    std::vector<double> lambdas;
    rmat Dhat = rmat::Zero(d, d);
    std::uint64_t occupation = 0;
    int block = 0;
    for (int k = 0; k < d;) {
        if (k + 1 < d && std::abs(T(k + 1, k)) > 1e-9) {
            double lam = 0.5 * (T(k, k + 1) - T(k + 1, k));
            lambdas.push_back(lam);
            if (std::abs(std::abs(lam) - 1.0) > 2.0 * l * tau + 1e-9)
                throw error("gaussian_state_learner: block eigenvalue far from +-1 "
                            "(non-Gaussian input?)");
            double rounded = lam >= 0 ? 1.0 : -1.0;
            Dhat(k, k + 1) = rounded;
            Dhat(k + 1, k) = -rounded;
            if (rounded > 0) occupation |= 1ULL << block;
            k += 2;
            ++block;
        } else {
            throw error("gaussian_state_learner: zero block in covariance estimate");
        }
    }

    rmat Mhat = Uo * Dhat * Uo.transpose();

    // rebuild the state: Mhat = R Mref R^T with R = Uo P, where P permutes the
    // Schur block frame into the (2k, 2k+1) reference frame; here the frames
    // already align blockwise, so R = Uo up to determinant fix.
    rmat R = Uo;
    if (R.determinant() < 0) {
        // swap the two columns of the first block: flips its lambda
        R.col(0).swap(R.col(1));
        double lam0 = Dhat(0, 1);
        Dhat(0, 1) = -lam0;
        Dhat(1, 0) = lam0;
        occupation ^= 1ULL;
    }
    // crosscheck: R Dhat R^T still equals Mhat
    PureState psi = gaussian_pure_state(ms, R, occupation).first;

    std::sort(lambdas.begin(), lambdas.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
    return GaussianLearnResult{CovarianceMatrix{l, Mhat}, DensityMatrix::pure(psi),
                               oracle.query_count() - q0, std::move(lambdas)};
}

// ---------------------------------------------------------------------------
// ZX string learner
// ---------------------------------------------------------------------------

namespace {

// chain generators Y_k Y_{k+1} with an optional X replacing the Y at `xpos`
std::vector<PauliWeyl> zx_chain(int n, int xpos) {
    std::vector<PauliWeyl> gens;
    for (int k = 0; k + 1 < n; ++k) {
        std::uint64_t a = 0, b = 0;
        for (int q : {k, k + 1}) {
            a |= 1ULL << q;
            if (q != xpos) b |= 1ULL << q; // Y = (1,1), X = (1,0)
        }
        gens.push_back(PauliWeyl{n, a, b, +1});
    }
    return gens;
}

PureState zx_query_state(int n, bool odd_branch, int bit /* -1 for the parity query */) {
    std::vector<PauliWeyl> gens;
    std::uint64_t zmask = (1ULL << n) - 1;
    if (!odd_branch) {
        // all-Z parity generator
        gens.push_back(PauliWeyl{n, 0, zmask, +1});
    } else {
        // one Z replaced by X, anywhere except the chain's X position
        int p = (bit >= 0 && bit == n - 1) ? 0 : (bit >= 0 ? bit + 1 : 0);
        gens.push_back(PauliWeyl{n, 1ULL << p, zmask & ~(1ULL << p), +1});
    }
    auto chain = zx_chain(n, bit >= 0 ? bit : -1);
    gens.insert(gens.end(), chain.begin(), chain.end());
    return stabilizer_state(n, gens);
}

// decode a loss response with truth in {0, 1/2, 1}, tau <= 1/5
int zx_band(double v) {
    if (v <= 0.2 + 1e-9) return 0;
    if (v >= 0.3 - 1e-9 && v <= 0.7 + 1e-9) return 1;
    if (v >= 0.8 - 1e-9) return 2;
    throw error("zx_string_learner: response in forbidden band");
}

} // namespace

LearnerResult<PauliWeyl> zx_string_learner(oracles::LossOracle<PureState>& oracle, int n) {
    if (oracle.tolerance() > 0.2 + 1e-12) throw error("zx_string_learner: requires tau <= 1/5");
    const std::uint64_t q0 = oracle.query_count();
    std::uint64_t x = 0;

    if (n == 1) {
        // |0> distinguishes Z from X, |+> confirms
        int b0 = zx_band(oracle.query(PureState::basis(2, 0)));
        cvec plus(2);
        plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
        int b1 = zx_band(oracle.query(PureState(plus)));
        bool is_x = (b0 == 1);
        if (is_x == (b1 == 1)) throw error("zx_string_learner: inconsistent single-qubit responses");
        if (is_x) x = 1;
    } else {
        int parity_band = zx_band(oracle.query(zx_query_state(n, false, -1)));
        bool odd = (parity_band == 1);
        for (int i = 0; i < n; ++i) {
            int band = zx_band(oracle.query(zx_query_state(n, odd, i)));
            if (band == 1) x |= 1ULL << i; // |<P>| = 0 means x_i = 1
        }
    }

    LearnerResult<PauliWeyl> out;
    std::uint64_t mask = (1ULL << n) - 1;
    out.output = PauliWeyl{n, x, mask & ~x, +1}; // X where x_i = 1, Z elsewhere
    out.success = true;
    out.queries_used = oracle.query_count() - q0;
    return out;
}

// ---------------------------------------------------------------------------
// Testers
// ---------------------------------------------------------------------------

TestVerdict purity_tester(oracles::KQStatOracle& oracle2, int N, double delta) {
    if (oracle2.tolerance() >= delta / 2)
        throw error("purity_tester: requires tau < delta/2");
    const std::uint64_t q0 = oracle2.query_count();
    double v = oracle2.query(oracles::KQuery(flip_operator(N)));
    TestVerdict t;
    t.value = v;
    t.accept = v > 1.0 - delta / 2;
    t.queries_used = oracle2.query_count() - q0;
    return t;
}

TestVerdict pure_state_tester(oracles::QStatOracle& oracle, const PureState& reference,
                              double eps) {
    if (oracle.tolerance() >= eps * eps / 2)
        throw error("pure_state_tester: requires tau < eps^2/2");
    const std::uint64_t q0 = oracle.query_count();
    cmat proj = reference.amplitudes() * reference.amplitudes().adjoint();
    double v = oracle.query(oracles::QStatQuery(Observable(proj)));
    TestVerdict t;
    t.value = v;
    t.accept = v > 1.0 - eps * eps / 2;
    t.queries_used = oracle.query_count() - q0;
    return t;
}

Observable stabilizer_accept_povm(int n) {
    if (n < 1 || n > 2) throw budget_error("stabilizer_accept_povm: n <= 2 only");
    const std::int64_t N = std::int64_t(1) << n;
    const std::int64_t N2 = N * N;
    // maximally entangled |Phi+> on two copies
    cvec phi = cvec::Zero(N2);
    for (std::int64_t i = 0; i < N; ++i) phi[i * N + i] = 1.0 / std::sqrt(double(N));

    const std::uint64_t L = 1ULL << (2 * n);
    std::vector<cmat> bell(L);
    std::vector<cmat> weyl(L);
    for (std::uint64_t a = 0; a < L; ++a) {
        PauliWeyl w = PauliWeyl::from_label(n, a);
        weyl[a] = w.dense();
        cmat WI = tensor(weyl[a], cmat::Identity(N, N));
        cvec v = WI * phi;
        bell[a] = v * v.adjoint();
    }

    const std::int64_t D = N2 * N2 * N2;
    cmat accept = cmat::Zero(D, D);
    cmat I2c = cmat::Identity(N2, N2);
    for (std::uint64_t a = 0; a < L; ++a)
        for (std::uint64_t b = 0; b < L; ++b) {
            std::uint64_t x = a ^ b;
            cmat wtest = 0.5 * (I2c + tensor(weyl[x], weyl[x]));
            accept += tensor(tensor(bell[a], bell[b]), wtest);
        }
    return Observable(std::move(accept));
}

TestVerdict stabilizer_tester(oracles::KQStatOracle& oracle6, int n, double eps) {
    if (oracle6.tolerance() >= eps * eps / 8)
        throw error("stabilizer_tester: requires tau < eps^2/8");
    const std::uint64_t q0 = oracle6.query_count();
    double v = oracle6.query(oracles::KQuery(stabilizer_accept_povm(n)));
    TestVerdict t;
    t.value = v;
    t.accept = v > 1.0 - eps * eps / 8;
    t.queries_used = oracle6.query_count() - q0;
    return t;
}

// ---------------------------------------------------------------------------
// Multi-copy tree reduction
// ---------------------------------------------------------------------------

namespace {

void check_povm_element(const cmat& P) {
    Eigen::SelfAdjointEigenSolver<cmat> es(P, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 || es.eigenvalues().maxCoeff() > 1.0 + 1e-9)
        throw error("multicopy_tree_learner: aggregated element outside [0, I]");
}

} // namespace

LearnerResult<int> multicopy_tree_learner(oracles::KQStatOracle& oracle,
                                          const std::vector<cmat>& class_povms, double delta,
                                          double tau) {
    if (class_povms.empty()) throw dim_error("multicopy_tree_learner: no classes");
    if (delta + tau >= 0.5)
        throw error("multicopy_tree_learner: requires delta + tau < 1/2");
    const std::uint64_t q0 = oracle.query_count();

    std::size_t lo = 0, hi = class_povms.size();
    while (hi - lo > 1) {
        // split so the left part has the next power-of-two half
        std::size_t size = hi - lo;
        std::size_t half = 1;
        while (half * 2 < size) half *= 2;
        std::size_t mid = lo + half;
        cmat agg = class_povms[lo];
        for (std::size_t i = lo + 1; i < mid; ++i) agg += class_povms[i];
        check_povm_element(agg);
        double v = oracle.query(oracles::KQuery(Observable(std::move(agg))));
        if (v > delta + tau + 1e-12 && v < 1.0 - delta - tau - 1e-12)
            throw error("multicopy_tree_learner: response in forbidden band "
                        "(inconsistent oracle)");
        if (v > 0.5)
            hi = mid;
        else
            lo = mid;
    }

    LearnerResult<int> out;
    out.output = int(lo);
    out.success = true;
    out.queries_used = oracle.query_count() - q0;
    return out;
}

} // namespace evalq::learners
