#pragma once

#include "evalq/oracles.hpp"
#include "evalq/qmath.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace evalq::learners {

// ---------------------------------------------------------------------------
// Mirror descent machinery
// ---------------------------------------------------------------------------

template <class P> struct MirrorMap {
    std::function<P(const P&)> gradient;
    std::function<P(const P&)> inverse_gradient;
    std::function<double(const P&, const P&)> bregman; // D_R(x, y)
    double zeta = 1.0; // strong convexity w.r.t. the ambient norm
    std::string name;
};

// Negative Shannon entropy on the simplex (nats), zeta = 1 w.r.t. l1.
MirrorMap<rvec> negative_entropy_map();
// Half squared l2 norm, zeta = 1 w.r.t. l2.
MirrorMap<rvec> squared_norm_map();
// Negative von Neumann entropy in bits, zeta = 1/ln2 w.r.t. the trace norm.
MirrorMap<cmat> von_neumann_map();

template <class P> struct MDState {
    P iterate;
    double eta = 0.0;
    int t = 0;
};

// f' = project( (grad R)^{-1}( grad R(f) - eta g ) )
template <class P>
MDState<P> md_update(const MDState<P>& state, const P& g, const MirrorMap<P>& map,
                     const std::function<P(const P&)>& projection) {
    P dual = map.gradient(state.iterate);
    dual -= state.eta * g;
    MDState<P> next;
    next.iterate = projection(map.inverse_gradient(dual));
    next.eta = state.eta;
    next.t = state.t + 1;
    return next;
}

std::function<rvec(const rvec&)> simplex_normalize();
std::function<cmat(const cmat&)> density_normalize();

struct RegretAudit {
    double average_regret = 0;
    double bound = 0;
    bool pass = false;
};

// Average regret of the iterate sequence against a fixed comparator, checked
// against D_R(f, f_1)/(eta T) + eta/(2 zeta). Requires dual-unit-norm advice.
RegretAudit regret_audit(const std::vector<rvec>& gs, const std::vector<rvec>& fs,
                         const rvec& comparator, const MirrorMap<rvec>& map, double eta);
RegretAudit regret_audit(const std::vector<cmat>& gs, const std::vector<cmat>& fs,
                         const cmat& comparator, const MirrorMap<cmat>& map, double eta);

// ---------------------------------------------------------------------------
// Learner results
// ---------------------------------------------------------------------------

template <class T> struct LearnerResult {
    T output;
    std::uint64_t queries_used = 0;
    bool success = false;
    std::size_t updates = 0;        // mirror-descent update count where relevant
    std::size_t update_budget = 0;  // the 18 r / (zeta tau^2) cap
    std::string diagnostics;
};

// ---------------------------------------------------------------------------
// Multiplicative-weights learners
// ---------------------------------------------------------------------------

// Learns a distribution on [N] from a Stat_{tau/3} oracle by scanning the
// query pool for a distinguishing query and making entropy MD updates with
// eta = tau zeta / 3 until a full clean pass certifies the iterate.
// `radius` is the Bregman radius max_s D(s, uniform); defaults to ln N.
LearnerResult<rvec> mw_distribution_learner(oracles::StatOracle& oracle,
                                            const std::vector<rvec>& pool, int N, double tau,
                                            double radius = -1.0);

// Matrix multiplicative weights against a QStat_{tau/3} oracle; the iterate
// is a density matrix, updates use the von Neumann map.
LearnerResult<cmat> mmw_state_learner(oracles::QStatOracle& oracle, int N,
                                      const std::vector<Observable>& pool, double tau,
                                      double radius = -1.0);

// ---------------------------------------------------------------------------
// Concrete quantum learners
// ---------------------------------------------------------------------------

// |psi_s> = 2^{-n/2} sum_x |x, s.x> for the parity chi_s under the uniform
// distribution; n+1 qubits.
PureState make_qpac_parity_state(std::uint64_t s, int n);

// Recovers s exactly from n queries to QStat_tau(rho_s), tau < 1/4, using
// Hadamard-rotated projector masses.
LearnerResult<std::uint64_t> parity_learner(oracles::QStatOracle& oracle, int n);

// Fermionic Gaussian helpers: the basis state of an occupation pattern and
// the Gaussian unitary implementing a Majorana-frame rotation R in SO(2l)
// (as a product of two-mode rotations).
PureState gaussian_basis_state(int l, std::uint64_t occupation);
cmat gaussian_unitary_from_rotation(const MajoranaSet& ms, const rmat& R);
// Pure Gaussian state for a rotation and occupation, plus its covariance.
std::pair<PureState, rmat> gaussian_pure_state(const MajoranaSet& ms, const rmat& R,
                                               std::uint64_t occupation);
rmat sample_special_orthogonal(int dim, Rng& rng);

struct GaussianLearnResult {
    CovarianceMatrix covariance;
    DensityMatrix state;
    std::uint64_t queries_used = 0;
    std::vector<double> block_eigenvalues; // pre-rounding, by descending |.|
};

// Learns a pure Gaussian state on l modes from QStat_tau: queries all
// C(2l, 2) independent covariance entries, block-diagonalizes by real Schur,
// rounds the block eigenvalues to +-1 and rebuilds the state.
GaussianLearnResult gaussian_state_learner(oracles::QStatOracle& oracle, int l);

// Learns a hidden P in {Z, X}^{x n} from n+1 loss queries l^P at tau <= 1/5.
LearnerResult<PauliWeyl> zx_string_learner(oracles::LossOracle<PureState>& oracle, int n);

// Single-query testers.
struct TestVerdict {
    bool accept = false; // pure / equal / stabilizer
    double value = 0;
    std::uint64_t queries_used = 0;
};

TestVerdict purity_tester(oracles::KQStatOracle& oracle2, int N, double delta);
TestVerdict pure_state_tester(oracles::QStatOracle& oracle, const PureState& reference,
                              double eps);

// Acceptance operator of the six-copy Bell-difference stabilizer test; n <= 2.
Observable stabilizer_accept_povm(int n);
TestVerdict stabilizer_tester(oracles::KQStatOracle& oracle6, int n, double eps);

// Multi-copy tree reduction: descends a balanced partition of the solution
// classes with aggregated POVM elements, thresholding at 1/2. Exactly
// ceil(log2 #classes) queries. delta is the base learner's failure rate.
LearnerResult<int> multicopy_tree_learner(oracles::KQStatOracle& oracle,
                                          const std::vector<cmat>& class_povms, double delta,
                                          double tau);

} // namespace evalq::learners
