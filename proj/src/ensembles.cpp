#include "evalq/ensembles.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace evalq::ensembles {

namespace {

// ---------------------------------------------------------------------------
// Symplectic group over F2, vectors as bit masks in (x1, z1, x2, z2, ...)
// coordinate order. Transvection-based uniform sampling.
// ---------------------------------------------------------------------------

inline int sympl_inner(std::uint32_t v, std::uint32_t w) {
    // sum over pairs of v_{2i} w_{2i+1} + v_{2i+1} w_{2i}
    std::uint32_t even = 0x55555555u;
    std::uint32_t t = (v & even) & (w >> 1);
    std::uint32_t u = ((v >> 1) & even) & w;
    return int(std::popcount(t ^ u)) & 1;
}

inline std::uint32_t transvect(std::uint32_t h, std::uint32_t x) {
    return sympl_inner(x, h) ? (x ^ h) : x;
}

// h1, h2 with Z_{h2}(Z_{h1}(x)) = y for nonzero x, y.
std::pair<std::uint32_t, std::uint32_t> find_transvection(int n, std::uint32_t x,
                                                          std::uint32_t y) {
    if (x == y) return {0, 0};
    if (sympl_inner(x, y) == 1) return {x ^ y, 0};
    // look for an intermediate z with <x,z> = <y,z> = 1
    auto pair_bits = [](std::uint32_t v, int i) { return (v >> (2 * i)) & 3u; };
    for (int i = 0; i < n; ++i) {
        if (pair_bits(x, i) != 0 && pair_bits(y, i) != 0) {
            for (std::uint32_t c = 1; c <= 3; ++c) {
                std::uint32_t z = c << (2 * i);
                if (sympl_inner(x, z) == 1 && sympl_inner(y, z) == 1) return {x ^ z, z ^ y};
            }
        }
    }
    std::uint32_t zx = 0, zy = 0;
    for (int i = 0; i < n && zx == 0; ++i) {
        if (pair_bits(x, i) != 0 && pair_bits(y, i) == 0) {
            for (std::uint32_t c = 1; c <= 3; ++c) {
                std::uint32_t z = c << (2 * i);
                if (sympl_inner(x, z) == 1) {
                    zx = z;
                    break;
                }
            }
        }
    }
    for (int i = 0; i < n && zy == 0; ++i) {
        if (pair_bits(y, i) != 0 && pair_bits(x, i) == 0) {
            for (std::uint32_t c = 1; c <= 3; ++c) {
                std::uint32_t z = c << (2 * i);
                if (sympl_inner(y, z) == 1) {
                    zy = z;
                    break;
                }
            }
        }
    }
    std::uint32_t z = zx | zy;
    return {x ^ z, z ^ y};
}

} // namespace

bool is_symplectic(int n, const std::vector<std::uint32_t>& rows) {
    if (int(rows.size()) != 2 * n) return false;
    for (int i = 0; i < 2 * n; ++i)
        for (int j = 0; j < 2 * n; ++j) {
            int want = 0;
            if ((i / 2 == j / 2) && i != j) want = 1;
            if (sympl_inner(rows[i], rows[j]) != want) return false;
        }
    return true;
}

std::vector<std::uint32_t> random_symplectic(int n, Rng& rng) {
    if (n < 1 || n > 14) throw budget_error("random_symplectic: n out of range");
    if (n == 0) return {};
    const int m = 2 * n;
    std::uint32_t v = 0;
    while (v == 0) v = std::uint32_t(rng.integer(1ULL << m));
    auto [h1, h2] = find_transvection(n, 1u, v);

    // 2n-1 random bits: bit 0 toggles an extra Z_v, bits for coordinates 3..2n
    bool extra = rng.bit();
    std::uint32_t eprime = 1u;
    for (int j = 2; j < m; ++j)
        if (rng.bit()) eprime |= (1u << j);
    std::uint32_t h0 = transvect(h2, transvect(h1, eprime));

    auto step = [&](std::uint32_t x) {
        x = transvect(h1, x);
        x = transvect(h2, x);
        x = transvect(h0, x);
        if (extra) x = transvect(v, x);
        return x;
    };

    std::vector<std::uint32_t> rows(m);
    if (n == 1) {
        rows[0] = step(1u);
        rows[1] = step(2u);
        return rows;
    }
    std::vector<std::uint32_t> rec = random_symplectic(n - 1, rng);
    rows[0] = step(1u);
    rows[1] = step(2u);
    for (int j = 0; j < 2 * (n - 1); ++j) rows[j + 2] = step(rec[j] << 2);
    return rows;
}

// ---------------------------------------------------------------------------
// Phase-exact product of X^a Z^b words (i^k tracked mod 4)
// ---------------------------------------------------------------------------

namespace {

struct XZProduct {
    int n = 0;
    std::uint64_t a = 0, b = 0;
    int k = 0; // phase i^k

    static XZProduct identity(int n) { return {n, 0, 0, 0}; }

    void mul(const PauliWeyl& p) {
        int add = (p.sign == -1) ? 2 : 0;
        add += int(std::popcount(p.a & p.b));          // i^{a.b} inside the Weyl
        add += 2 * int(std::popcount(b & p.a));        // Z^b past X^{a_p}
        k = (k + add) % 4;
        a ^= p.a;
        b ^= p.b;
    }

    PauliWeyl to_weyl() const {
        int rest = (k - int(std::popcount(a & b)) % 4 + 8) % 4;
        if (rest % 2 != 0) throw error("XZProduct: non-real Weyl phase");
        return PauliWeyl{n, a, b, rest == 0 ? +1 : -1};
    }
};

} // namespace

PauliWeyl CliffordTableau::conjugate(const PauliWeyl& p) const {
    if (p.n != n) throw dim_error("CliffordTableau::conjugate: qubit mismatch");
    XZProduct acc = XZProduct::identity(n);
    acc.k = ((p.sign == -1) ? 2 : 0) + int(std::popcount(p.a & p.b)) % 4;
    for (int i = 0; i < n; ++i)
        if ((p.a >> i) & 1ULL) acc.mul(x_images[i]);
    for (int i = 0; i < n; ++i)
        if ((p.b >> i) & 1ULL) acc.mul(z_images[i]);
    return acc.to_weyl();
}

cmat CliffordTableau::dense() const {
    if (n > 6) throw budget_error("CliffordTableau::dense: refused for n > 6");
    const std::int64_t N = std::int64_t(1) << n;
    PureState psi0 = stabilizer_state(n, z_images);
    cmat U(N, N);
    for (std::int64_t x = 0; x < N; ++x) {
        XZProduct acc = XZProduct::identity(n);
        for (int i = 0; i < n; ++i)
            if ((std::uint64_t(x) >> i) & 1ULL) acc.mul(x_images[i]);
        PauliWeyl q = acc.to_weyl();
        U.col(x) = q.apply(psi0.amplitudes());
    }
    // columns are U X^x |0...0>; X^x|0> = |basis index of x>
    // our qubit i is bit i of x but basis bit n-1-i, so permute columns
    cmat out(N, N);
    for (std::int64_t x = 0; x < N; ++x) {
        std::int64_t idx = 0;
        for (int i = 0; i < n; ++i)
            if ((std::uint64_t(x) >> i) & 1ULL) idx |= std::int64_t(1) << (n - 1 - i);
        out.col(idx) = U.col(x);
    }
    return out;
}

CliffordTableau sample_clifford(int n, Rng& rng) {
    if (n < 1) throw dim_error("sample_clifford: n >= 1");
    auto rows = random_symplectic(n, rng);
    CliffordTableau t;
    t.n = n;
    auto row_to_weyl = [&](std::uint32_t row, int sign) {
        std::uint64_t a = 0, b = 0;
        for (int q = 0; q < n; ++q) {
            if ((row >> (2 * q)) & 1u) a |= 1ULL << q;
            if ((row >> (2 * q + 1)) & 1u) b |= 1ULL << q;
        }
        return PauliWeyl{n, a, b, sign};
    };
    for (int i = 0; i < n; ++i) {
        t.x_images.push_back(row_to_weyl(rows[2 * i], rng.bit() ? -1 : +1));
        t.z_images.push_back(row_to_weyl(rows[2 * i + 1], rng.bit() ? -1 : +1));
    }
    return t;
}

CliffordTableau tableau_from_dense(int n, const cmat& U) {
    const std::int64_t N = std::int64_t(1) << n;
    if (U.rows() != N) throw dim_error("tableau_from_dense: dimension mismatch");
    CliffordTableau t;
    t.n = n;
    auto identify = [&](const cmat& R) {
        for (std::uint64_t label = 0; label < (1ULL << (2 * n)); ++label) {
            PauliWeyl w = PauliWeyl::from_label(n, label);
            cplx ov = (w.dense().adjoint() * R).trace() / double(N);
            if (std::abs(ov - cplx(1, 0)) < 1e-6) return w;
            if (std::abs(ov + cplx(1, 0)) < 1e-6) {
                w.sign = -1;
                return w;
            }
        }
        throw error("tableau_from_dense: conjugate is not a signed Weyl");
    };
    for (int i = 0; i < n; ++i) {
        PauliWeyl X{n, 1ULL << i, 0, +1}, Z{n, 0, 1ULL << i, +1};
        t.x_images.push_back(identify(U * X.dense() * U.adjoint()));
        t.z_images.push_back(identify(U * Z.dense() * U.adjoint()));
    }
    return t;
}

const std::vector<cmat>& single_qubit_cliffords() {
    static const std::vector<cmat> group = [] {
        auto normalize = [](cmat m) {
            for (int i = 0; i < m.rows(); ++i)
                for (int j = 0; j < m.cols(); ++j)
                    if (std::abs(m(i, j)) > 1e-9) {
                        m *= std::conj(m(i, j)) / std::abs(m(i, j));
                        return m;
                    }
            return m;
        };
        cmat S = (cmat(2, 2) << 1, 0, 0, cplx(0, 1)).finished();
        std::vector<cmat> found{normalize(cmat::Identity(2, 2))};
        bool grew = true;
        while (grew) {
            grew = false;
            std::vector<cmat> batch = found;
            const cmat* gens[2] = {&hadamard(), &S};
            for (const auto& g : batch)
                for (const cmat* gen : gens) {
                    cmat cand = normalize(*gen * g);
                    bool seen = false;
                    for (const auto& f : found)
                        if ((f - cand).cwiseAbs().maxCoeff() < 1e-8) {
                            seen = true;
                            break;
                        }
                    if (!seen) {
                        found.push_back(cand);
                        grew = true;
                    }
                }
        }
        if (found.size() != 24) throw error("single_qubit_cliffords: closure size mismatch");
        return found;
    }();
    return group;
}

// ---------------------------------------------------------------------------
// Haar and brickwork sampling
// ---------------------------------------------------------------------------

cmat sample_haar(int N, Rng& rng) {
    if (N < 2) throw dim_error("sample_haar: N >= 2");
    cmat g(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) g(i, j) = rng.cnormal();
    Eigen::HouseholderQR<cmat> qr(g);
    cmat Q = qr.householderQ();
    cmat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < N; ++i) {
        cplx d = R(i, i);
        Q.col(i) *= (std::abs(d) > 0) ? d / std::abs(d) : cplx(1, 0);
    }
    return Q;
}

PureState sample_haar_state(int N, Rng& rng) {
    cvec v(N);
    for (int i = 0; i < N; ++i) v[i] = rng.cnormal();
    return PureState(v / v.norm());
}

namespace {

struct BrickworkGate {
    int q1, q2;
    cmat gate;
};

std::vector<BrickworkGate> brickwork_gates(int n, int d, BrickworkGateset gs, Rng& rng) {
    std::vector<BrickworkGate> gates;
    for (int layer = 1; layer <= d; ++layer) {
        int start = (layer % 2 == 1) ? 0 : 1;
        for (int q = start; q + 1 < n; q += 2) {
            cmat g = (gs == BrickworkGateset::Haar4) ? sample_haar(4, rng)
                                                     : sample_clifford(2, rng).dense();
            gates.push_back({q, q + 1, std::move(g)});
        }
    }
    return gates;
}

} // namespace

cmat sample_brickwork(int n, int d, BrickworkGateset gateset, Rng& rng) {
    if (n < 2) throw dim_error("sample_brickwork: n >= 2");
    if (n > 12) throw budget_error("sample_brickwork: n > 12 refused");
    if (d < 0) throw dim_error("sample_brickwork: negative depth");
    const std::int64_t N = std::int64_t(1) << n;
    cmat U = cmat::Identity(N, N);
    for (const auto& bg : brickwork_gates(n, d, gateset, rng)) {
        for (std::int64_t col = 0; col < N; ++col) {
            cvec v = U.col(col);
            apply_two_qubit(v, n, bg.q1, bg.q2, bg.gate);
            U.col(col) = v;
        }
    }
    return U;
}

// ---------------------------------------------------------------------------
// UnitaryEnsemble
// ---------------------------------------------------------------------------

UnitaryEnsemble::UnitaryEnsemble(Spec spec) : spec_(std::move(spec)) {
    if (auto* e = std::get_if<ExplicitSetSpec>(&spec_)) {
        if (e->unitaries.empty()) throw dim_error("ExplicitSet: empty");
        if (e->weights.empty())
            e->weights.assign(e->unitaries.size(), 1.0 / double(e->unitaries.size()));
        if (e->weights.size() != e->unitaries.size())
            throw dim_error("ExplicitSet: weights size mismatch");
        double sum = 0;
        for (double w : e->weights) sum += w;
        if (std::abs(sum - 1.0) > 1e-9) throw error("ExplicitSet: weights do not sum to 1");
    }
}

UnitaryEnsemble UnitaryEnsemble::explicit_set(std::vector<cmat> us, std::vector<double> ws) {
    return UnitaryEnsemble(ExplicitSetSpec{std::move(us), std::move(ws)});
}

int UnitaryEnsemble::dim() const {
    if (auto* h = std::get_if<HaarSpec>(&spec_)) return h->dim;
    if (auto* c = std::get_if<CliffordUniformSpec>(&spec_)) return 1 << c->qubits;
    if (auto* b = std::get_if<BrickworkSpec>(&spec_)) return 1 << b->qubits;
    return int(std::get<ExplicitSetSpec>(spec_).unitaries[0].rows());
}

std::string UnitaryEnsemble::describe() const {
    std::ostringstream os;
    if (auto* h = std::get_if<HaarSpec>(&spec_))
        os << "haar(N=" << h->dim << ")";
    else if (auto* c = std::get_if<CliffordUniformSpec>(&spec_))
        os << "clifford(n=" << c->qubits << ")";
    else if (auto* b = std::get_if<BrickworkSpec>(&spec_))
        os << "brickwork(n=" << b->qubits << ",d=" << b->depth << ","
           << (b->gateset == BrickworkGateset::Haar4 ? "haar4" : "clifford2") << ")";
    else
        os << "explicit(" << std::get<ExplicitSetSpec>(spec_).unitaries.size() << ")";
    return os.str();
}

cmat UnitaryEnsemble::sample_unitary(Rng& rng) const {
    if (auto* h = std::get_if<HaarSpec>(&spec_)) return sample_haar(h->dim, rng);
    if (auto* c = std::get_if<CliffordUniformSpec>(&spec_))
        return sample_clifford(c->qubits, rng).dense();
    if (auto* b = std::get_if<BrickworkSpec>(&spec_))
        return sample_brickwork(b->qubits, b->depth, b->gateset, rng);
    const auto& e = std::get<ExplicitSetSpec>(spec_);
    double u = rng.uniform(), acc = 0;
    for (std::size_t i = 0; i < e.unitaries.size(); ++i) {
        acc += e.weights[i];
        if (u < acc) return e.unitaries[i];
    }
    return e.unitaries.back();
}

PureState UnitaryEnsemble::sample_state(Rng& rng) const {
    if (auto* h = std::get_if<HaarSpec>(&spec_)) return sample_haar_state(h->dim, rng);
    if (auto* b = std::get_if<BrickworkSpec>(&spec_)) {
        const std::int64_t N = std::int64_t(1) << b->qubits;
        cvec v = cvec::Zero(N);
        v[0] = 1.0;
        for (const auto& bg : brickwork_gates(b->qubits, b->depth, b->gateset, rng))
            apply_two_qubit(v, b->qubits, bg.q1, bg.q2, bg.gate);
        return PureState(v);
    }
    cmat U = sample_unitary(rng);
    return PureState(U.col(0));
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

namespace {

double binom(int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
    return r;
}

cmat state_power(const PureState& psi, int t) {
    cvec v = psi.amplitudes();
    cvec w = v;
    for (int i = 1; i < t; ++i) {
        cvec nw(w.size() * v.size());
        for (Eigen::Index a = 0; a < w.size(); ++a)
            nw.segment(a * v.size(), v.size()) = w[a] * v;
        w = std::move(nw);
    }
    return w * w.adjoint();
}

cvec state_power_vec(const PureState& psi, int t) {
    cvec v = psi.amplitudes();
    cvec w = v;
    for (int i = 1; i < t; ++i) {
        cvec nw(w.size() * v.size());
        for (Eigen::Index a = 0; a < w.size(); ++a)
            nw.segment(a * v.size(), v.size()) = w[a] * v;
        w = std::move(nw);
    }
    return w;
}

} // namespace

cmat haar_state_moment(int N, int t) {
    cmat P = symmetric_projector(N, t).matrix();
    return P / binom(N + t - 1, t);
}

cmat second_moment_channel(const cmat& A) {
    if (A.rows() != A.cols()) throw dim_error("second_moment_channel: square input required");
    const std::int64_t D = A.rows();
    std::int64_t N = std::int64_t(std::llround(std::sqrt(double(D))));
    if (N * N != D || N < 2) throw dim_error("second_moment_channel: input must be N^2 dim");
    cmat F = flip_operator(int(N)).matrix();
    cmat I = cmat::Identity(D, D);
    cmat Pv = 0.5 * (I + F), Pw = 0.5 * (I - F);
    cplx tv = (A * Pv).trace(), tw = (A * Pw).trace();
    double dv = double(N) * double(N + 1) / 2.0, dw = double(N) * double(N - 1) / 2.0;
    return (tv / dv) * Pv + (tw / dw) * Pw;
}

MomentEstimate empirical_moment(const UnitaryEnsemble& ens, int t, std::size_t samples, Rng& rng,
                                const std::optional<cmat>& functional) {
    if (t < 1) throw dim_error("empirical_moment: t >= 1");
    const int N = ens.dim();
    double Dt = std::pow(double(N), t);
    bool store_op = Dt <= 4096.0;
    if (!store_op && !functional)
        throw budget_error("empirical_moment: N^t too large to materialize; supply a functional");
    if (functional && functional->rows() != std::int64_t(Dt))
        throw dim_error("empirical_moment: functional dimension mismatch");

    MomentEstimate out;
    out.t = t;

    if (ens.is_explicit()) {
        const auto& e = std::get<ExplicitSetSpec>(ens.spec());
        cmat K;
        double fval = 0;
        for (std::size_t i = 0; i < e.unitaries.size(); ++i) {
            PureState psi{cvec(e.unitaries[i].col(0))};
            cmat P = state_power(psi, t);
            if (i == 0)
                K = e.weights[i] * P;
            else
                K += e.weights[i] * P;
            if (functional) fval += e.weights[i] * (P * *functional).trace().real();
        }
        if (store_op) out.op = std::move(K);
        if (functional) out.functional = fval;
        out.sample_count = e.unitaries.size();
        return out;
    }

    if (samples < 2) throw dim_error("empirical_moment: samples >= 2");
    cmat K;
    std::vector<double> fvals;
    for (std::size_t s = 0; s < samples; ++s) {
        PureState psi = ens.sample_state(rng);
        if (store_op) {
            cmat P = state_power(psi, t);
            if (s == 0)
                K = P;
            else
                K += P;
            if (functional) fvals.push_back((P * *functional).trace().real());
        } else {
            cvec w = state_power_vec(psi, t);
            fvals.push_back(w.dot(*functional * w).real());
        }
    }
    if (store_op) out.op = K / double(samples);
    if (functional) {
        auto est = mean_estimate(fvals);
        out.functional = est.value;
        out.standard_error = jackknife_stderr(fvals);
    }
    out.sample_count = samples;
    return out;
}

namespace {

double hermitian_trace_norm(const cmat& m) {
    Eigen::SelfAdjointEigenSolver<cmat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

} // namespace

DesignDeviation design_deviation(const UnitaryEnsemble& ens, int t, std::size_t samples,
                                 Rng& rng) {
    const int N = ens.dim();
    double Dt = std::pow(double(N), t);
    if (Dt > 1024.0) throw budget_error("design_deviation: N^t > 1024");
    cmat Kh = haar_state_moment(N, t);

    DesignDeviation out;
    if (ens.is_explicit()) {
        MomentEstimate m = empirical_moment(ens, t, 1, rng);
        out.deviation = hermitian_trace_norm(*m.op - Kh);
        out.sample_count = m.sample_count;
        return out;
    }

    const std::size_t groups = 10;
    if (samples < groups * 2) throw dim_error("design_deviation: need at least 20 samples");
    std::vector<cmat> gsum(groups);
    std::vector<std::size_t> gcount(groups, 0);
    for (std::size_t s = 0; s < samples; ++s) {
        PureState psi = ens.sample_state(rng);
        cmat P = state_power(psi, t);
        std::size_t g = s % groups;
        if (gsum[g].size() == 0)
            gsum[g] = P;
        else
            gsum[g] += P;
        gcount[g]++;
    }
    cmat total = gsum[0];
    for (std::size_t g = 1; g < groups; ++g) total += gsum[g];
    out.deviation = hermitian_trace_norm(total / double(samples) - Kh);
    out.sample_count = samples;

    std::vector<double> loo(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        cmat rest = total - gsum[g];
        loo[g] = hermitian_trace_norm(rest / double(samples - gcount[g]) - Kh);
    }
    out.standard_error = jackknife_stderr(loo);
    return out;
}

} // namespace evalq::ensembles
