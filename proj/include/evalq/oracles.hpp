#pragma once

#include "evalq/qmath.hpp"

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace evalq::oracles {

// ---------------------------------------------------------------------------
// Noise policies. Every policy respects the tolerance contract
// d(v, truth) <= tau; adversarial callbacks are clamped into the ball.
// ---------------------------------------------------------------------------

enum class PolicyKind { Exact, QuantizeGrid, SeededUniform, Adversarial };

struct NoisePolicy {
    PolicyKind kind = PolicyKind::QuantizeGrid;
    double step = 0.0;  // QuantizeGrid; 0 means "use tau"
    double width = 0.0; // SeededUniform; 0 means "use tau"
    std::uint64_t seed = 0;
    std::function<double(double truth, std::uint64_t digest, std::uint64_t index)> callback;

    static NoisePolicy exact() { return {PolicyKind::Exact, 0, 0, 0, nullptr}; }
    static NoisePolicy grid(double step = 0.0) {
        return {PolicyKind::QuantizeGrid, step, 0, 0, nullptr};
    }
    static NoisePolicy seeded_uniform(std::uint64_t seed, double width = 0.0) {
        return {PolicyKind::SeededUniform, 0, width, seed, nullptr};
    }
    static NoisePolicy adversarial(
        std::function<double(double, std::uint64_t, std::uint64_t)> cb) {
        NoisePolicy p;
        p.kind = PolicyKind::Adversarial;
        p.callback = std::move(cb);
        return p;
    }

    void check_against(double tau) const;
    double apply(double truth, double tau, std::uint64_t digest, std::uint64_t index) const;
    cplx apply(cplx truth, double tau, std::uint64_t digest, std::uint64_t index) const;
};

struct TranscriptEntry {
    std::uint64_t index = 0;
    std::string tag;
    std::uint64_t digest = 0;
    cplx value{0, 0};
    double tolerance = 0;
};

std::string transcript_to_jsonl(const std::vector<TranscriptEntry>& transcript);

// content hashes for query digests
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 1469598103934665603ULL);
std::uint64_t hash_vec(const rvec& v, std::uint64_t h = 1469598103934665603ULL);
std::uint64_t hash_mat(const cmat& m, std::uint64_t h = 1469598103934665603ULL);

// ---------------------------------------------------------------------------
// Generic evaluation oracle: tolerance, noise policy, query counter,
// transcript. Truth/validation/digest are supplied by the concrete
// constructors below. Value is double or std::complex<double>.
// ---------------------------------------------------------------------------

template <class Query, class Value = double> class EvalOracle {
  public:
    using TruthFn = std::function<Value(const Query&)>;
    using ValidateFn = std::function<void(const Query&)>;
    using DigestFn = std::function<std::pair<std::uint64_t, std::string>(const Query&)>;

    EvalOracle(double tau, NoisePolicy policy, TruthFn truth, ValidateFn validate, DigestFn digest)
        : tau_(tau), policy_(std::move(policy)), truth_(std::move(truth)),
          validate_(std::move(validate)), digest_(std::move(digest)) {
        if (tau_ < 0) throw error("EvalOracle: negative tolerance");
        policy_.check_against(tau_);
    }

    Value query(const Query& x) {
        if (validate_) validate_(x); // throws without consuming budget
        auto [digest, tag] = digest_(x);
        Value t = truth_(x);
        Value v = policy_.apply(t, tau_, digest, count_);
        TranscriptEntry e;
        e.index = count_;
        e.tag = std::move(tag);
        e.digest = digest;
        e.value = cplx(v);
        e.tolerance = tau_;
        transcript_.push_back(std::move(e));
        ++count_;
        return v;
    }

    double tolerance() const { return tau_; }
    std::uint64_t query_count() const { return count_; }
    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    std::string transcript_jsonl() const { return transcript_to_jsonl(transcript_); }

    // test-mode access to the hidden function
    Value truth_for_test(const Query& x) const { return truth_(x); }

  private:
    double tau_;
    NoisePolicy policy_;
    TruthFn truth_;
    ValidateFn validate_;
    DigestFn digest_;
    std::uint64_t count_ = 0;
    std::vector<TranscriptEntry> transcript_;
};

// ---------------------------------------------------------------------------
// Query domains
// ---------------------------------------------------------------------------

// Ground truth state, pure or mixed.
using GroundState = std::variant<PureState, DensityMatrix>;

int ground_dim(const GroundState& g);

// Observable of the form R^dag diag(d) R with R a layer of single-qubit
// gates (empty entries mean identity). Keeps large-n queries tractable:
// op norm is max |d_i| and expectations need one layer application.
struct RotatedDiagonal {
    std::vector<cmat> rotation; // one 2x2 per qubit, empty = identity
    rvec diag;
    std::string tag = "rotdiag";
};

using QStatQuery = std::variant<Observable, RotatedDiagonal>;

// k-copy query forms: dense on N^k, a tensor product of k single-copy
// observables, or the rank-one power projector (|phi><phi|)^{x k}.
struct ProductObservable {
    std::vector<Observable> factors;
};
struct PowerProjector {
    PureState phi;
    explicit PowerProjector(PureState p) : phi(std::move(p)) {}
};
using KQuery = std::variant<Observable, ProductObservable, PowerProjector>;

// Measure over quantum states for the correlational oracles: an explicit
// finite mixture or the Haar state measure (closed-form moments).
struct StateMeasure {
    std::vector<DensityMatrix> states;
    std::vector<double> weights;
    bool haar = false;
    int dim = 0;

    static StateMeasure finite(std::vector<DensityMatrix> states, std::vector<double> weights);
    static StateMeasure haar_states(int N);
};

struct ThetaBox {
    int dim = 0;
    double lo = 0.0;
    double hi = 1.0;
};

// Exact k-copy functional value tr[rho^{x k} O] for any query form; also
// used by the hardness probes without an oracle in between.
double kcopy_expectation(const GroundState& rho, const KQuery& q, int k);

// ---------------------------------------------------------------------------
// Concrete oracles
// ---------------------------------------------------------------------------

using StatOracle = EvalOracle<rvec, double>;
using QStatOracle = EvalOracle<QStatQuery, double>;
using KQStatOracle = EvalOracle<KQuery, double>;
using CsqOracle = EvalOracle<rvec, double>;
using McsqOracle = EvalOracle<cmat, cplx>;
using QcsqOracle = EvalOracle<Observable, double>;
using QusqOracle = EvalOracle<cmat, cplx>;
using OneBitOracle = EvalOracle<std::vector<int>, double>;
template <class Param> using LossOracle = EvalOracle<Param, double>;

// Statistical query oracle of a distribution P on [N]; queries are functions
// phi: [N] -> [-1, 1], truth is E_{i~P}[phi(i)].
StatOracle make_stat_oracle(rvec P, double tau, NoisePolicy policy = NoisePolicy::grid());

// Quantum statistical query oracle; queries are observables with op norm <= 1,
// truth is tr[rho O].
QStatOracle make_qstat_oracle(GroundState rho, double tau,
                              NoisePolicy policy = NoisePolicy::grid());

// k-copy QSQ oracle; truth is tr[rho^{x k} O].
KQStatOracle make_kqstat_oracle(GroundState rho, int k, double tau,
                                NoisePolicy policy = NoisePolicy::grid());

// Correlational SQ oracle for hidden f under measure lambda on [N]; queries g
// with ||g||_{L2(lambda)} <= 1, truth is E_{i~lambda}[g(i) f(i)].
CsqOracle make_csq_oracle(rvec f, rvec lambda, double tau,
                          NoisePolicy policy = NoisePolicy::grid());

// Matrix correlational oracle for hidden A under the GNS inner product of
// rho; queries B with ||B||_{L2(rho)} <= 1, truth is tr[A^dag rho B].
McsqOracle make_mcsq_oracle(cmat A, DensityMatrix rho, double tau,
                            NoisePolicy policy = NoisePolicy::grid());

// Quantum correlational oracle: hidden M, truth E_{rho~lambda}[tr[rho O] tr[rho M]].
QcsqOracle make_qcsq_oracle(Observable M, StateMeasure lambda, double tau,
                            NoisePolicy policy = NoisePolicy::grid());

// Quantum unitary statistical oracle: hidden U, queries unitary Q, complex
// truth E_{rho~lambda}[tr[U^dag Q rho]] with a complex-disk tolerance.
QusqOracle make_qusq_oracle(cmat U, StateMeasure lambda, double tau,
                            NoisePolicy policy = NoisePolicy::grid());

// One-bit oracle: queries boolean h as a 0/1 table over the domain of P,
// returns the probability of outcome 1 within total variation tau.
OneBitOracle make_1bit_oracle(rvec P, double tau, NoisePolicy policy = NoisePolicy::grid());

// Loss oracle over an explicit loss function on a box domain.
LossOracle<rvec> make_loss_oracle(std::function<double(const rvec&)> loss, ThetaBox domain,
                                  double tau, NoisePolicy policy = NoisePolicy::grid());

// Self-learning loss for computational basis states: l^z(y) = 1 - delta_{zy}.
LossOracle<std::uint64_t> make_basis_selflearn_oracle(std::uint64_t z, int n, double tau,
                                                      NoisePolicy policy = NoisePolicy::grid());

// Loss l^P(psi) = (  <psi|P|psi> + 1 ) / 2 for a hidden Pauli string; the
// parameter space is the set of n-qubit pure states.
LossOracle<PureState> make_pauli_loss_oracle(PauliWeyl P, double tau,
                                             NoisePolicy policy = NoisePolicy::grid());

} // namespace evalq::oracles
