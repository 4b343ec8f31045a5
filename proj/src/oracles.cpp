#include "evalq/oracles.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace evalq::oracles {

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

void NoisePolicy::check_against(double tau) const {
    if (kind == PolicyKind::QuantizeGrid && step > tau + 1e-15)
        throw error("NoisePolicy: grid step exceeds tolerance");
    if (kind == PolicyKind::SeededUniform && width > tau + 1e-15)
        throw error("NoisePolicy: uniform width exceeds tolerance");
    if (kind == PolicyKind::Adversarial && !callback)
        throw error("NoisePolicy: adversarial policy without callback");
}

namespace {

double unit_from_hash(std::uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

double quantize(double x, double step) {
    if (step <= 0) return x;
    return std::round(x / step) * step;
}

} // namespace

double NoisePolicy::apply(double truth, double tau, std::uint64_t digest,
                          std::uint64_t index) const {
    switch (kind) {
    case PolicyKind::Exact:
        return truth;
    case PolicyKind::QuantizeGrid:
        return quantize(truth, step > 0 ? step : tau);
    case PolicyKind::SeededUniform: {
        double w = width > 0 ? width : tau;
        double u = unit_from_hash(splitmix64(seed ^ splitmix64(digest) ^ (index * 0x9e37ULL)));
        return truth + w * (2.0 * u - 1.0);
    }
    case PolicyKind::Adversarial: {
        double v = callback(truth, digest, index);
        return std::clamp(v, truth - tau, truth + tau);
    }
    }
    return truth;
}

cplx NoisePolicy::apply(cplx truth, double tau, std::uint64_t digest, std::uint64_t index) const {
    switch (kind) {
    case PolicyKind::Exact:
        return truth;
    case PolicyKind::QuantizeGrid: {
        double g = (step > 0 ? step : tau) / std::sqrt(2.0);
        return cplx(quantize(truth.real(), g), quantize(truth.imag(), g));
    }
    case PolicyKind::SeededUniform: {
        double w = width > 0 ? width : tau;
        std::uint64_t h = splitmix64(seed ^ splitmix64(digest) ^ (index * 0x9e37ULL));
        double r = w * std::sqrt(unit_from_hash(h));
        double ang = 2.0 * M_PI * unit_from_hash(splitmix64(h));
        return truth + cplx(r * std::cos(ang), r * std::sin(ang));
    }
    case PolicyKind::Adversarial: {
        cplx v = callback(truth.real(), digest, index); // real perturbation only
        cplx d = v - truth;
        double m = std::abs(d);
        if (m > tau) d *= tau / m;
        return truth + d;
    }
    }
    return truth;
}

std::string transcript_to_jsonl(const std::vector<TranscriptEntry>& transcript) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& e : transcript) {
        os << "{\"index\":" << e.index << ",\"tag\":\"" << e.tag << "\",\"digest\":\"" << std::hex
           << e.digest << std::dec << "\",\"value\":" << e.value.real();
        if (e.value.imag() != 0.0) os << ",\"value_imag\":" << e.value.imag();
        os << ",\"tolerance\":" << e.tolerance << "}\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Digests
// ---------------------------------------------------------------------------

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t hash_vec(const rvec& v, std::uint64_t h) {
    return fnv1a(v.data(), std::size_t(v.size()) * sizeof(double), h);
}

std::uint64_t hash_mat(const cmat& m, std::uint64_t h) {
    return fnv1a(m.data(), std::size_t(m.size()) * sizeof(cplx), h);
}

namespace {

std::uint64_t hash_cvec(const cvec& v, std::uint64_t h = 1469598103934665603ULL) {
    return fnv1a(v.data(), std::size_t(v.size()) * sizeof(cplx), h);
}

} // namespace

// ---------------------------------------------------------------------------
// Ground state helpers
// ---------------------------------------------------------------------------

int ground_dim(const GroundState& g) {
    if (auto* p = std::get_if<PureState>(&g)) return p->dim();
    return std::get<DensityMatrix>(g).dim();
}

namespace {

double ground_expectation(const GroundState& g, const Observable& O) {
    if (auto* p = std::get_if<PureState>(&g)) return expectation(*p, O);
    return expectation(std::get<DensityMatrix>(g), O);
}

double ground_rotdiag(const GroundState& g, const RotatedDiagonal& q) {
    int N = ground_dim(g);
    int n = qubit_count(N);
    if (auto* p = std::get_if<PureState>(&g)) {
        cvec v = p->amplitudes();
        apply_gate_layer(v, n, q.rotation);
        double acc = 0;
        for (int i = 0; i < N; ++i) acc += q.diag[i] * std::norm(v[i]);
        return acc;
    }
    // dense path for mixed states at small N
    if (N > 256) throw budget_error("RotatedDiagonal: dense mixed-state path limited to N <= 256");
    cmat R = cmat::Identity(1, 1);
    for (int i = 0; i < n; ++i) {
        const cmat& gate = q.rotation[i].size() ? q.rotation[i] : identity2();
        R = tensor(R, gate);
    }
    cmat conj = R * std::get<DensityMatrix>(g).matrix() * R.adjoint();
    double acc = 0;
    for (int i = 0; i < N; ++i) acc += q.diag[i] * conj(i, i).real();
    return acc;
}

void validate_rotdiag(int N, const RotatedDiagonal& q) {
    int n = qubit_count(N);
    if (int(q.rotation.size()) != n) throw invalid_query("RotatedDiagonal: need one gate per qubit");
    if (q.diag.size() != N) throw invalid_query("RotatedDiagonal: diagonal length mismatch");
    if (q.diag.cwiseAbs().maxCoeff() > 1.0 + numeric_policy().op_norm_slack)
        throw invalid_query("RotatedDiagonal: ||diag||_inf > 1");
    for (const auto& g : q.rotation) {
        if (g.size() == 0) continue;
        if (g.rows() != 2 || g.cols() != 2) throw invalid_query("RotatedDiagonal: gate not 2x2");
        if ((g.adjoint() * g - cmat::Identity(2, 2)).cwiseAbs().maxCoeff() >
            numeric_policy().unitary_tol)
            throw invalid_query("RotatedDiagonal: gate not unitary");
    }
}

std::uint64_t hash_rotdiag(const RotatedDiagonal& q) {
    std::uint64_t h = hash_vec(q.diag);
    for (const auto& g : q.rotation)
        if (g.size()) h = hash_mat(g, h);
    return h;
}

} // namespace

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

StatOracle make_stat_oracle(rvec P, double tau, NoisePolicy policy) {
    if (P.size() == 0) throw dim_error("make_stat_oracle: empty distribution");
    if (P.minCoeff() < -1e-12 || std::abs(P.sum() - 1.0) > 1e-9)
        throw error("make_stat_oracle: not a probability distribution");
    auto p = std::make_shared<rvec>(std::move(P));
    return StatOracle(
        tau, std::move(policy), [p](const rvec& phi) { return double(p->dot(phi)); },
        [p](const rvec& phi) {
            if (phi.size() != p->size()) throw invalid_query("stat query: length mismatch");
            if (phi.cwiseAbs().maxCoeff() > 1.0 + 1e-12)
                throw invalid_query("stat query: ||phi||_inf > 1");
        },
        [](const rvec& phi) { return std::pair{hash_vec(phi), std::string("stat")}; });
}

QStatOracle make_qstat_oracle(GroundState rho, double tau, NoisePolicy policy) {
    auto g = std::make_shared<GroundState>(std::move(rho));
    const int N = ground_dim(*g);
    return QStatOracle(
        tau, std::move(policy),
        [g](const QStatQuery& q) {
            if (auto* obs = std::get_if<Observable>(&q)) return ground_expectation(*g, *obs);
            return ground_rotdiag(*g, std::get<RotatedDiagonal>(q));
        },
        [g, N](const QStatQuery& q) {
            if (auto* obs = std::get_if<Observable>(&q)) {
                if (obs->dim() != N) throw invalid_query("qstat query: dimension mismatch");
                obs->require_unit_op_norm();
            } else {
                validate_rotdiag(N, std::get<RotatedDiagonal>(q));
            }
        },
        [](const QStatQuery& q) {
            if (auto* obs = std::get_if<Observable>(&q))
                return std::pair{hash_mat(obs->matrix()), std::string("qstat:dense")};
            const auto& rd = std::get<RotatedDiagonal>(q);
            return std::pair{hash_rotdiag(rd), std::string("qstat:") + rd.tag};
        });
}

double kcopy_expectation(const GroundState& rho, const KQuery& q, int k) {
    const int N = ground_dim(rho);
    if (auto* obs = std::get_if<Observable>(&q)) {
        if (auto* p = std::get_if<PureState>(&rho)) {
            cvec w = p->amplitudes();
            for (int i = 1; i < k; ++i) {
                cvec nw(w.size() * N);
                for (Eigen::Index a = 0; a < w.size(); ++a)
                    nw.segment(a * N, N) = w[a] * p->amplitudes();
                w = std::move(nw);
            }
            return w.dot(obs->matrix() * w).real();
        }
        const cmat& r = std::get<DensityMatrix>(rho).matrix();
        cmat rk = r;
        for (int i = 1; i < k; ++i) rk = tensor(rk, r);
        return (rk * obs->matrix()).trace().real();
    }
    if (auto* prod = std::get_if<ProductObservable>(&q)) {
        double acc = 1.0;
        for (const auto& f : prod->factors) acc *= ground_expectation(rho, f);
        return acc;
    }
    const auto& pp = std::get<PowerProjector>(q);
    if (auto* p = std::get_if<PureState>(&rho)) {
        double ov = std::norm(pp.phi.amplitudes().dot(p->amplitudes()));
        return std::pow(ov, k);
    }
    const cmat& r = std::get<DensityMatrix>(rho).matrix();
    double ov = pp.phi.amplitudes().dot(r * pp.phi.amplitudes()).real();
    return std::pow(ov, k);
}

KQStatOracle make_kqstat_oracle(GroundState rho, int k, double tau, NoisePolicy policy) {
    if (k < 1) throw dim_error("make_kqstat_oracle: k >= 1");
    auto g = std::make_shared<GroundState>(std::move(rho));
    const int N = ground_dim(*g);
    double Dk = std::pow(double(N), k);
    const bool pure = std::holds_alternative<PureState>(*g);
    const double dense_budget = pure ? 4096.0 : 256.0;

    auto truth = [g, k](const KQuery& q) { return kcopy_expectation(*g, q, k); };

    auto validate = [N, k, Dk, dense_budget](const KQuery& q) {
        if (auto* obs = std::get_if<Observable>(&q)) {
            if (Dk > dense_budget) throw budget_error("kqstat: dense query over budget");
            if (double(obs->dim()) != Dk) throw invalid_query("kqstat: dimension mismatch");
            obs->require_unit_op_norm();
        } else if (auto* prod = std::get_if<ProductObservable>(&q)) {
            if (int(prod->factors.size()) != k)
                throw invalid_query("kqstat: product needs exactly k factors");
            for (const auto& f : prod->factors) {
                if (f.dim() != N) throw invalid_query("kqstat: factor dimension mismatch");
                f.require_unit_op_norm();
            }
        } else {
            if (std::get<PowerProjector>(q).phi.dim() != N)
                throw invalid_query("kqstat: projector dimension mismatch");
        }
    };

    auto digest = [](const KQuery& q) {
        if (auto* obs = std::get_if<Observable>(&q))
            return std::pair{hash_mat(obs->matrix()), std::string("kqstat:dense")};
        if (auto* prod = std::get_if<ProductObservable>(&q)) {
            std::uint64_t h = 1469598103934665603ULL;
            for (const auto& f : prod->factors) h = hash_mat(f.matrix(), h);
            return std::pair{h, std::string("kqstat:product")};
        }
        return std::pair{hash_cvec(std::get<PowerProjector>(q).phi.amplitudes()),
                         std::string("kqstat:projector")};
    };

    return KQStatOracle(tau, std::move(policy), truth, validate, digest);
}

CsqOracle make_csq_oracle(rvec f, rvec lambda, double tau, NoisePolicy policy) {
    if (f.size() != lambda.size()) throw dim_error("make_csq_oracle: size mismatch");
    if (lambda.minCoeff() < -1e-12 || std::abs(lambda.sum() - 1.0) > 1e-9)
        throw error("make_csq_oracle: lambda not a distribution");
    auto ff = std::make_shared<rvec>(std::move(f));
    auto ll = std::make_shared<rvec>(std::move(lambda));
    return CsqOracle(
        tau, std::move(policy),
        [ff, ll](const rvec& g) {
            double acc = 0;
            for (Eigen::Index i = 0; i < g.size(); ++i) acc += (*ll)[i] * g[i] * (*ff)[i];
            return acc;
        },
        [ff, ll](const rvec& g) {
            if (g.size() != ff->size()) throw invalid_query("csq query: length mismatch");
            double n2 = 0;
            for (Eigen::Index i = 0; i < g.size(); ++i) n2 += (*ll)[i] * g[i] * g[i];
            if (std::sqrt(n2) > 1.0 + numeric_policy().op_norm_slack)
                throw invalid_query("csq query: ||g||_{L2(lambda)} > 1");
        },
        [](const rvec& g) { return std::pair{hash_vec(g), std::string("csq")}; });
}

McsqOracle make_mcsq_oracle(cmat A, DensityMatrix rho, double tau, NoisePolicy policy) {
    if (A.rows() != rho.dim() || A.cols() != rho.dim())
        throw dim_error("make_mcsq_oracle: dimension mismatch");
    auto aa = std::make_shared<cmat>(std::move(A));
    auto rr = std::make_shared<DensityMatrix>(std::move(rho));
    return McsqOracle(
        tau, std::move(policy),
        [aa, rr](const cmat& B) { return cplx((aa->adjoint() * rr->matrix() * B).trace()); },
        [aa, rr](const cmat& B) {
            if (B.rows() != rr->dim() || B.cols() != rr->dim())
                throw invalid_query("mcsq query: dimension mismatch");
            double n2 = (B.adjoint() * rr->matrix() * B).trace().real();
            if (std::sqrt(std::max(0.0, n2)) > 1.0 + numeric_policy().op_norm_slack)
                throw invalid_query("mcsq query: ||B||_{L2(rho)} > 1");
        },
        [](const cmat& B) { return std::pair{hash_mat(B), std::string("mcsq")}; });
}

StateMeasure StateMeasure::finite(std::vector<DensityMatrix> states, std::vector<double> weights) {
    StateMeasure m;
    if (states.empty()) throw dim_error("StateMeasure: empty support");
    m.dim = states[0].dim();
    for (const auto& s : states)
        if (s.dim() != m.dim) throw dim_error("StateMeasure: mixed dimensions");
    if (weights.empty()) weights.assign(states.size(), 1.0 / double(states.size()));
    if (weights.size() != states.size()) throw dim_error("StateMeasure: weight count mismatch");
    double sum = 0;
    for (double w : weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-9) throw error("StateMeasure: weights do not sum to 1");
    m.states = std::move(states);
    m.weights = std::move(weights);
    return m;
}

StateMeasure StateMeasure::haar_states(int N) {
    StateMeasure m;
    m.haar = true;
    m.dim = N;
    return m;
}

QcsqOracle make_qcsq_oracle(Observable M, StateMeasure lambda, double tau, NoisePolicy policy) {
    if (M.dim() != lambda.dim) throw dim_error("make_qcsq_oracle: dimension mismatch");
    auto mm = std::make_shared<Observable>(std::move(M));
    auto ll = std::make_shared<StateMeasure>(std::move(lambda));
    const int N = ll->dim;
    return QcsqOracle(
        tau, std::move(policy),
        [mm, ll, N](const Observable& O) {
            if (ll->haar) {
                // E[tr[rho O] tr[rho M]] over Haar states via the second moment
                cmat OM = tensor(O.matrix(), mm->matrix());
                cmat F = flip_operator(N).matrix();
                double tr =
                    ((OM * (cmat::Identity(N * N, N * N) + F)).trace().real()) /
                    (double(N) * double(N + 1));
                return tr;
            }
            double acc = 0;
            for (std::size_t i = 0; i < ll->states.size(); ++i)
                acc += ll->weights[i] * expectation(ll->states[i], O) *
                       expectation(ll->states[i], *mm);
            return acc;
        },
        [N](const Observable& O) {
            if (O.dim() != N) throw invalid_query("qcsq query: dimension mismatch");
            O.require_unit_op_norm();
        },
        [](const Observable& O) { return std::pair{hash_mat(O.matrix()), std::string("qcsq")}; });
}

QusqOracle make_qusq_oracle(cmat U, StateMeasure lambda, double tau, NoisePolicy policy) {
    if (U.rows() != lambda.dim || U.cols() != lambda.dim)
        throw dim_error("make_qusq_oracle: dimension mismatch");
    auto uu = std::make_shared<cmat>(std::move(U));
    auto ll = std::make_shared<StateMeasure>(std::move(lambda));
    const int N = ll->dim;
    return QusqOracle(
        tau, std::move(policy),
        [uu, ll, N](const cmat& Q) {
            if (ll->haar) return cplx((uu->adjoint() * Q).trace()) / double(N);
            cplx acc = 0;
            for (std::size_t i = 0; i < ll->states.size(); ++i)
                acc += ll->weights[i] *
                       (uu->adjoint() * Q * ll->states[i].matrix()).trace();
            return acc;
        },
        [N](const cmat& Q) {
            if (Q.rows() != N || Q.cols() != N) throw invalid_query("qusq query: dimension mismatch");
            if ((Q.adjoint() * Q - cmat::Identity(N, N)).cwiseAbs().maxCoeff() >
                numeric_policy().unitary_tol)
                throw invalid_query("qusq query: not unitary");
        },
        [](const cmat& Q) { return std::pair{hash_mat(Q), std::string("qusq")}; });
}

OneBitOracle make_1bit_oracle(rvec P, double tau, NoisePolicy policy) {
    if (P.size() == 0) throw dim_error("make_1bit_oracle: empty distribution");
    if (P.minCoeff() < -1e-12 || std::abs(P.sum() - 1.0) > 1e-9)
        throw error("make_1bit_oracle: not a probability distribution");
    auto p = std::make_shared<rvec>(std::move(P));
    return OneBitOracle(
        tau, std::move(policy),
        [p](const std::vector<int>& h) {
            double acc = 0;
            for (Eigen::Index i = 0; i < p->size(); ++i)
                if (h[std::size_t(i)]) acc += (*p)[i];
            return acc;
        },
        [p](const std::vector<int>& h) {
            if (Eigen::Index(h.size()) != p->size())
                throw invalid_query("1bit query: table length mismatch");
            for (int v : h)
                if (v != 0 && v != 1) throw invalid_query("1bit query: non-boolean table");
        },
        [](const std::vector<int>& h) {
            std::uint64_t d = fnv1a(h.data(), h.size() * sizeof(int));
            return std::pair{d, std::string("1bit")};
        });
}

LossOracle<rvec> make_loss_oracle(std::function<double(const rvec&)> loss, ThetaBox domain,
                                  double tau, NoisePolicy policy) {
    if (!loss) throw error("make_loss_oracle: missing loss function");
    return LossOracle<rvec>(
        tau, std::move(policy),
        [loss](const rvec& th) {
            double v = loss(th);
            if (v < -1e-9 || v > 1.0 + 1e-9) throw error("loss oracle: loss escaped [0,1]");
            return v;
        },
        [domain](const rvec& th) {
            if (th.size() != domain.dim) throw invalid_query("loss query: wrong dimension");
            for (Eigen::Index i = 0; i < th.size(); ++i)
                if (th[i] < domain.lo - 1e-12 || th[i] > domain.hi + 1e-12)
                    throw invalid_query("loss query: parameter outside domain");
        },
        [](const rvec& th) { return std::pair{hash_vec(th), std::string("loss")}; });
}

LossOracle<std::uint64_t> make_basis_selflearn_oracle(std::uint64_t z, int n, double tau,
                                                      NoisePolicy policy) {
    if (n < 1 || n > 62) throw dim_error("make_basis_selflearn_oracle: bad n");
    const std::uint64_t lim = 1ULL << n;
    if (z >= lim) throw dim_error("make_basis_selflearn_oracle: z out of range");
    return LossOracle<std::uint64_t>(
        tau, std::move(policy),
        [z](const std::uint64_t& y) { return y == z ? 0.0 : 1.0; },
        [lim](const std::uint64_t& y) {
            if (y >= lim) throw invalid_query("basis loss query: out of range");
        },
        [](const std::uint64_t& y) {
            return std::pair{splitmix64(y ^ 0xb10cULL), std::string("basis-loss")};
        });
}

LossOracle<PureState> make_pauli_loss_oracle(PauliWeyl P, double tau, NoisePolicy policy) {
    const std::int64_t N = std::int64_t(1) << P.n;
    return LossOracle<PureState>(
        tau, std::move(policy),
        [P](const PureState& psi) { return 0.5 * (P.expectation(psi) + 1.0); },
        [N](const PureState& psi) {
            if (psi.dim() != N) throw invalid_query("pauli loss query: dimension mismatch");
        },
        [](const PureState& psi) {
            return std::pair{hash_cvec(psi.amplitudes()), std::string("pauli-loss")};
        });
}

} // namespace evalq::oracles
