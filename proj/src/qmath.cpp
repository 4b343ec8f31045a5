#include "evalq/qmath.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace evalq {

namespace {

void require_square(const cmat& m, const char* what) {
    if (m.rows() != m.cols()) throw dim_error(std::string(what) + ": matrix not square");
}

void require_hermitian(const cmat& m, const char* what) {
    require_square(m, what);
    double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (dev > numeric_policy().herm_tol)
        throw error(std::string(what) + ": not Hermitian, deviation " + std::to_string(dev));
}

} // namespace

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

PureState::PureState(cvec amplitudes) : a_(std::move(amplitudes)) {
    if (a_.size() == 0) throw dim_error("PureState: empty amplitude vector");
    double nrm = a_.norm();
    if (std::abs(nrm - 1.0) > numeric_policy().norm_tol)
        throw error("PureState: not normalized, ||a|| = " + std::to_string(nrm));
}

PureState PureState::basis(int dim, std::int64_t index) {
    if (index < 0 || index >= dim) throw dim_error("PureState::basis: index out of range");
    cvec a = cvec::Zero(dim);
    a[index] = 1.0;
    return PureState(std::move(a));
}

DensityMatrix::DensityMatrix(cmat m) : m_(std::move(m)) {
    require_hermitian(m_, "DensityMatrix");
    double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > numeric_policy().trace_tol)
        throw error("DensityMatrix: trace " + std::to_string(tr));
    Eigen::SelfAdjointEigenSolver<cmat> es(m_, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    if (lo < -numeric_policy().psd_tol)
        throw error("DensityMatrix: negative eigenvalue " + std::to_string(lo));
}

DensityMatrix DensityMatrix::pure(const PureState& psi) {
    return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
    return DensityMatrix(cmat::Identity(dim, dim) / double(dim));
}

Observable::Observable(cmat m) : m_(std::move(m)) {
    require_hermitian(m_, "Observable");
}

double Observable::op_norm() const {
    if (!op_norm_cache_) {
        Eigen::SelfAdjointEigenSolver<cmat> es(m_, Eigen::EigenvaluesOnly);
        op_norm_cache_ = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    return *op_norm_cache_;
}

void Observable::require_unit_op_norm() const {
    if (op_norm() > 1.0 + numeric_policy().op_norm_slack)
        throw invalid_query("Observable: ||O||_op = " + std::to_string(op_norm()) + " > 1");
}

// ---------------------------------------------------------------------------
// PauliWeyl
// ---------------------------------------------------------------------------

PauliWeyl PauliWeyl::from_label(int n, std::uint64_t label) {
    std::uint64_t mask = (n >= 64) ? ~0ULL : ((1ULL << n) - 1);
    return PauliWeyl{n, (label >> n) & mask, label & mask, +1};
}

cvec PauliWeyl::apply(const cvec& v) const {
    const std::int64_t N = std::int64_t(1) << n;
    if (v.size() != N) throw dim_error("PauliWeyl::apply: dimension mismatch");
    // qubit i is bit (n-1-i) of the index
    std::uint64_t xmask = 0, zmask = 0;
    for (int i = 0; i < n; ++i) {
        if ((a >> i) & 1ULL) xmask |= 1ULL << (n - 1 - i);
        if ((b >> i) & 1ULL) zmask |= 1ULL << (n - 1 - i);
    }
    static const cplx ipow[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    int adotb = int(std::popcount(a & b));
    cplx phase = double(sign) * ipow[adotb % 4];
    cvec out(N);
    for (std::int64_t x = 0; x < N; ++x) {
        // W|x> = phase * (-1)^{b.x} |x ^ xmask> with Z acting first
        int zb = int(std::popcount(std::uint64_t(x) & zmask)) & 1;
        cplx c = phase * (zb ? -1.0 : 1.0);
        out[std::int64_t(std::uint64_t(x) ^ xmask)] = c * v[x];
    }
    return out;
}

cmat PauliWeyl::dense() const {
    const std::int64_t N = std::int64_t(1) << n;
    cmat m = cmat::Zero(N, N);
    for (std::int64_t x = 0; x < N; ++x) {
        cvec e = cvec::Zero(N);
        e[x] = 1.0;
        m.col(x) = apply(e);
    }
    return m;
}

double PauliWeyl::expectation(const PureState& psi) const {
    cplx v = psi.amplitudes().dot(apply(psi.amplitudes()));
    return v.real();
}

double PauliWeyl::expectation(const DensityMatrix& rho) const {
    const std::int64_t N = std::int64_t(1) << n;
    if (rho.dim() != N) throw dim_error("PauliWeyl::expectation: dimension mismatch");
    cplx tr = 0;
    for (std::int64_t x = 0; x < N; ++x) {
        cvec e = cvec::Zero(N);
        e[x] = 1.0;
        cvec we = apply(e);
        tr += (rho.matrix().row(x) * we)(0);
    }
    return tr.real();
}

PauliWeyl PauliWeyl::operator*(const PauliWeyl& o) const {
    if (n != o.n) throw dim_error("PauliWeyl product: qubit count mismatch");
    // W_x W_y with W = i^{a.b} X^a Z^b: collect the phase mod 4.
    // X^a Z^b X^a' Z^b' = (-1)^{b.a'} X^{a+a'} Z^{b+b'}
    int k = int(std::popcount(a & b)) + int(std::popcount(o.a & o.b));
    int swap = int(std::popcount(b & o.a)); // contributes (-1)^swap
    std::uint64_t na = a ^ o.a, nb = b ^ o.b;
    int newk = int(std::popcount(na & nb));
    // total phase = sign*o.sign * i^k * (-1)^swap / i^{newk}
    int ph = (k + 2 * swap - newk) % 4;
    if (ph < 0) ph += 4;
    if (ph % 2 != 0) throw error("PauliWeyl product: non-real phase");
    int s = sign * o.sign * (ph == 2 ? -1 : 1);
    return PauliWeyl{n, na, nb, s};
}

bool PauliWeyl::commutes_with(const PauliWeyl& o) const {
    int anti = int(std::popcount(a & o.b)) + int(std::popcount(b & o.a));
    return (anti & 1) == 0;
}

// ---------------------------------------------------------------------------
// Free operations
// ---------------------------------------------------------------------------

cmat tensor(const cmat& A, const cmat& B) {
    cmat out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

cmat kron_power(const cmat& A, int k) {
    if (k < 1) throw dim_error("kron_power: k < 1");
    cmat out = A;
    for (int i = 1; i < k; ++i) out = tensor(out, A);
    return out;
}

double expectation(const DensityMatrix& rho, const Observable& O) {
    if (rho.dim() != O.dim()) throw dim_error("expectation: dimension mismatch");
    return (rho.matrix() * O.matrix()).trace().real();
}

double expectation(const PureState& psi, const cmat& O) {
    if (psi.dim() != O.rows()) throw dim_error("expectation: dimension mismatch");
    return psi.amplitudes().dot(O * psi.amplitudes()).real();
}

double expectation(const PureState& psi, const Observable& O) {
    return expectation(psi, O.matrix());
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim()) throw dim_error("trace_distance: dimension mismatch");
    cmat d = rho.matrix() - sigma.matrix();
    Eigen::SelfAdjointEigenSolver<cmat> es(d, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim()) throw dim_error("fidelity: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<cmat> es(sigma.matrix());
    cvec sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cplx>();
    cmat root = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().adjoint();
    cmat inner = root * rho.matrix() * root;
    Eigen::SelfAdjointEigenSolver<cmat> es2(inner, Eigen::EigenvaluesOnly);
    double s = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return s * s;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep,
                            const std::vector<int>& local_dims) {
    std::int64_t total = 1;
    for (int d : local_dims) total *= d;
    if (total != rho.dim()) throw dim_error("partial_trace: local dims do not factor the state");
    const int k = int(local_dims.size());
    std::vector<int> traced;
    std::vector<char> kept(k, 0);
    for (int i : keep) {
        if (i < 0 || i >= k || kept[i]) throw dim_error("partial_trace: bad keep set");
        kept[i] = 1;
    }
    for (int i = 0; i < k; ++i)
        if (!kept[i]) traced.push_back(i);

    std::int64_t dk = 1, dt = 1;
    for (int i : keep) dk *= local_dims[i];
    for (int i : traced) dt *= local_dims[i];

    // strides for the mixed-radix index
    std::vector<std::int64_t> stride(k, 1);
    for (int i = k - 2; i >= 0; --i) stride[i] = stride[i + 1] * local_dims[i + 1];

    auto compose = [&](std::int64_t kidx, std::int64_t tidx) {
        std::int64_t full = 0, rk = kidx, rt = tidx;
        for (int pos = int(keep.size()) - 1; pos >= 0; --pos) {
            int sub = keep[pos];
            full += (rk % local_dims[sub]) * stride[sub];
            rk /= local_dims[sub];
        }
        for (int pos = int(traced.size()) - 1; pos >= 0; --pos) {
            int sub = traced[pos];
            full += (rt % local_dims[sub]) * stride[sub];
            rt /= local_dims[sub];
        }
        return full;
    };

    cmat out = cmat::Zero(dk, dk);
    for (std::int64_t i = 0; i < dk; ++i)
        for (std::int64_t j = 0; j < dk; ++j) {
            cplx s = 0;
            for (std::int64_t t = 0; t < dt; ++t)
                s += rho.matrix()(compose(i, t), compose(j, t));
            out(i, j) = s;
        }
    return DensityMatrix(std::move(out));
}

cmat permutation_operator(int N, const std::vector<int>& perm) {
    const int t = int(perm.size());
    std::int64_t D = 1;
    for (int i = 0; i < t; ++i) D *= N;
    if (D > (1 << 14)) throw budget_error("permutation_operator: N^t too large");
    cmat P = cmat::Zero(D, D);
    std::vector<int> digits(t);
    for (std::int64_t x = 0; x < D; ++x) {
        std::int64_t r = x;
        for (int i = t - 1; i >= 0; --i) {
            digits[i] = int(r % N);
            r /= N;
        }
        // slot perm[k] of the image holds digit k
        std::int64_t y = 0;
        std::vector<int> img(t);
        for (int k = 0; k < t; ++k) img[perm[k]] = digits[k];
        for (int k = 0; k < t; ++k) y = y * N + img[k];
        P(y, x) = 1.0;
    }
    return P;
}

Observable flip_operator(int N) {
    if (N < 2) throw dim_error("flip_operator: N >= 2 required");
    return Observable(permutation_operator(N, {1, 0}));
}

Observable symmetric_projector(int N, int t) {
    if (t < 1) throw dim_error("symmetric_projector: t >= 1");
    double D = std::pow(double(N), t);
    if (D > double(1 << 14)) throw budget_error("symmetric_projector: N^t too large");
    std::vector<int> perm(t);
    std::iota(perm.begin(), perm.end(), 0);
    cmat sum = cmat::Zero(std::int64_t(D), std::int64_t(D));
    std::int64_t count = 0;
    do {
        sum += permutation_operator(N, perm);
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return Observable(sum / double(count));
}

PauliWeyl weyl_operator(int n, std::uint64_t a, std::uint64_t b, int sign) {
    if (n < 1 || n > 62) throw dim_error("weyl_operator: bad qubit count");
    std::uint64_t mask = (1ULL << n) - 1;
    if ((a & ~mask) || (b & ~mask)) throw dim_error("weyl_operator: label out of range");
    if (sign != 1 && sign != -1) throw error("weyl_operator: sign must be +-1");
    return PauliWeyl{n, a, b, sign};
}

MajoranaSet majorana_operators(int l) {
    if (l < 1 || l > 7) throw budget_error("majorana_operators: dense budget is l <= 7");
    MajoranaSet ms;
    ms.l = l;
    const std::int64_t N = std::int64_t(1) << l;
    for (int i = 1; i <= l; ++i) {
        // Z on qubits 0..i-2, X or Y on qubit i-1
        std::uint64_t zpart = (i > 1) ? ((1ULL << (i - 1)) - 1) : 0;
        PauliWeyl mx{l, 1ULL << (i - 1), zpart, +1};
        PauliWeyl my{l, 1ULL << (i - 1), zpart | (1ULL << (i - 1)), +1};
        ms.ops.push_back(mx.dense());
        ms.ops.push_back(my.dense());
    }
    for (auto& op : ms.ops)
        if (op.rows() != N) throw error("majorana_operators: internal dimension error");
    return ms;
}

CovarianceMatrix covariance_of_state(const DensityMatrix& rho, const MajoranaSet& ms) {
    const std::int64_t N = std::int64_t(1) << ms.l;
    if (rho.dim() != N) throw dim_error("covariance_of_state: dimension mismatch");
    const int d = 2 * ms.l;
    rmat M = rmat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            cmat comm = ms.ops[i] * ms.ops[j] - ms.ops[j] * ms.ops[i];
            double v = (cplx(0, 0.5) * (rho.matrix() * comm).trace()).real();
            M(i, j) = v;
            M(j, i) = -v;
        }
    CovarianceMatrix cm;
    cm.l = ms.l;
    cm.m = std::move(M);
    return cm;
}

// ---------------------------------------------------------------------------
// Statevector helpers
// ---------------------------------------------------------------------------

int qubit_count(std::int64_t dim) {
    if (dim < 2 || (dim & (dim - 1)) != 0) throw dim_error("qubit_count: dim not a power of two");
    int n = 0;
    while ((std::int64_t(1) << n) < dim) ++n;
    return n;
}

void apply_single_qubit(cvec& state, int n, int qubit, const cmat& gate2) {
    const std::int64_t N = std::int64_t(1) << n;
    if (state.size() != N) throw dim_error("apply_single_qubit: dimension mismatch");
    if (qubit < 0 || qubit >= n) throw dim_error("apply_single_qubit: bad qubit");
    const std::int64_t bit = std::int64_t(1) << (n - 1 - qubit);
    const cplx g00 = gate2(0, 0), g01 = gate2(0, 1), g10 = gate2(1, 0), g11 = gate2(1, 1);
    for (std::int64_t x = 0; x < N; ++x) {
        if (x & bit) continue;
        cplx v0 = state[x], v1 = state[x | bit];
        state[x] = g00 * v0 + g01 * v1;
        state[x | bit] = g10 * v0 + g11 * v1;
    }
}

void apply_two_qubit(cvec& state, int n, int q1, int q2, const cmat& gate4) {
    const std::int64_t N = std::int64_t(1) << n;
    if (state.size() != N) throw dim_error("apply_two_qubit: dimension mismatch");
    if (q1 == q2 || q1 < 0 || q2 < 0 || q1 >= n || q2 >= n)
        throw dim_error("apply_two_qubit: bad qubit pair");
    const std::int64_t b1 = std::int64_t(1) << (n - 1 - q1);
    const std::int64_t b2 = std::int64_t(1) << (n - 1 - q2);
    for (std::int64_t x = 0; x < N; ++x) {
        if ((x & b1) || (x & b2)) continue;
        std::int64_t i00 = x, i01 = x | b2, i10 = x | b1, i11 = x | b1 | b2;
        Eigen::Vector4cd v(state[i00], state[i01], state[i10], state[i11]);
        Eigen::Vector4cd w = gate4 * v;
        state[i00] = w[0];
        state[i01] = w[1];
        state[i10] = w[2];
        state[i11] = w[3];
    }
}

void apply_gate_layer(cvec& state, int n, const std::vector<cmat>& gates) {
    if (int(gates.size()) != n) throw dim_error("apply_gate_layer: one gate per qubit required");
    for (int q = 0; q < n; ++q)
        if (gates[q].size() != 0) apply_single_qubit(state, n, q, gates[q]);
}

const cmat& pauli_x() {
    static const cmat m = (cmat(2, 2) << 0, 1, 1, 0).finished();
    return m;
}
const cmat& pauli_y() {
    static const cmat m = (cmat(2, 2) << 0, cplx(0, -1), cplx(0, 1), 0).finished();
    return m;
}
const cmat& pauli_z() {
    static const cmat m = (cmat(2, 2) << 1, 0, 0, -1).finished();
    return m;
}
const cmat& hadamard() {
    static const cmat m = (cmat(2, 2) << 1, 1, 1, -1).finished() / std::sqrt(2.0);
    return m;
}
const cmat& identity2() {
    static const cmat m = cmat::Identity(2, 2);
    return m;
}

PureState stabilizer_state(int n, const std::vector<PauliWeyl>& generators) {
    if (int(generators.size()) != n) throw dim_error("stabilizer_state: need n generators");
    for (std::size_t i = 0; i < generators.size(); ++i)
        for (std::size_t j = i + 1; j < generators.size(); ++j)
            if (!generators[i].commutes_with(generators[j]))
                throw error("stabilizer_state: generators do not commute");
    const std::int64_t N = std::int64_t(1) << n;
    // project a basis seed through (I+g)/2 for every generator
    for (std::int64_t seed = 0; seed < N; ++seed) {
        cvec v = cvec::Zero(N);
        v[seed] = 1.0;
        for (const auto& g : generators) v = 0.5 * (v + double(g.sign) * PauliWeyl{n, g.a, g.b, 1}.apply(v));
        double nrm = v.norm();
        if (nrm > 1e-8) return PureState(v / nrm);
    }
    throw error("stabilizer_state: inconsistent generator signs");
}

} // namespace evalq
