#pragma once

#include "evalq/ensembles.hpp"
#include "evalq/oracles.hpp"
#include "evalq/problems.hpp"

#include <string>
#include <vector>

namespace evalq::hardness {

// ---------------------------------------------------------------------------
// Variance reports
// ---------------------------------------------------------------------------

struct VarianceReport {
    std::string ensemble;
    std::string observable;
    int n = 0;
    int copies = 1;
    double estimate = 0;
    double standard_error = 0;
    double analytic_bound = 0;
    std::string bound_name;
    bool pass = false; // estimate <= bound + 3 stderr

    std::string to_json() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

// Exact closed form (tr[O^2] N - tr[O]^2) / (N^2 (N+1)) for Haar k=1.
double haar_variance_exact(const Observable& O);

enum class BoundKind {
    HaarExact,       // the k=1 closed form for this O
    TwoDesign,       // 1/(N+1)
    TDesignMultiCopy,// 8 k^2 / N
    MeasuredEnvelope // C / N with a caller-supplied constant
};

// Monte Carlo variance of tr[rho(U)^{x k} O] over the ensemble, with a
// jackknife standard error and the chosen analytic bound.
VarianceReport state_variance(const ensembles::UnitaryEnsemble& ens, const oracles::KQuery& O,
                              const std::string& obs_name, int k, std::size_t samples, Rng rng,
                              BoundKind bound, double envelope_constant = 16.0,
                              int workers = 1);

// Adversarial two-copy observables: random Hermitian, a projector onto a
// sampled rho x rho, and the shifted symmetric projector.
std::vector<std::pair<oracles::KQuery, std::string>> two_copy_adversarial_pool(int N, int count,
                                                                               Rng& rng);

// ---------------------------------------------------------------------------
// Concentration probes
// ---------------------------------------------------------------------------

struct LevyReport {
    double empirical_tail = 0;
    double tail_stderr = 0;
    double bound = 0; // exp(-4 N tau^2 / (9 pi^3 (2k)^2))
    bool pass = false;
};

LevyReport levy_tail_check(int n, int k, double tau, std::size_t samples,
                           const oracles::KQuery& O, Rng rng, int workers = 1);

// Mean over all 4^n Weyl labels of <W_x>^2; throws unless it equals 2^{-n}
// within 1e-10. n <= 5.
double pauli_cost_identity(const PureState& psi);

// triv = frac = 2^{-n} and the (beta - 2^{-n}) 2^n query bound, analytically.
problems::BoundReport selflearn_basis_quantities(int n, double beta);

// ---------------------------------------------------------------------------
// Parametrized-model probes
// ---------------------------------------------------------------------------

enum class LinearVarianceMode { VariationalHaar, EncodingHaar };

// L2(D)-functional variance of a linear model f_phi(x) = tr[rho_x O_phi]
// with Haar variational (bound 1/(N+1)) or Haar encoding (bound 2/(N(N+1)),
// O auto-shifted traceless).
VarianceReport linear_model_variance(int n, const Observable& O, LinearVarianceMode mode,
                                     std::size_t samples, Rng rng, int workers = 1);

// Explicit finite family of functions over weighted data points.
struct FiniteFunctionFamily {
    rmat values;   // values(i, j) = f_i(x_j)
    rvec fweights; // measure over functions
    rvec xweights; // data measure
};

// Sample a linear-model family: m functions on d data points.
FiniteFunctionFamily sample_linear_model_family(int n, const Observable& O, std::size_t functions,
                                                std::size_t data_points, Rng& rng);

struct SelfLearnVarianceCheck {
    double lhs = 0; // max over probed theta of Var_phi[l^phi(theta)]
    double rhs = 0; // 4 sqrt(Var_phi[f_phi])
    bool pass = false;
};

// Exact over the finite family; theta ranges over the family itself.
SelfLearnVarianceCheck selflearn_loss_variance_check(const FiniteFunctionFamily& family,
                                                     std::size_t probe_thetas, Rng& rng);

// Hardware-style circuit with per-qubit RZ and RY rotations and a fixed CZ
// chain per layer; every gate is Pauli-generated so the standard two-point
// shift rule is exact. Loss is (1 + <O>)/2.
class ShiftableModel {
  public:
    ShiftableModel(int n, int layers, Observable O);
    int qubits() const { return n_; }
    int num_params() const { return 2 * n_ * layers_; }
    double loss(const rvec& theta) const;

  private:
    int n_, layers_;
    Observable O_;
};

double parameter_shift_gradient(const ShiftableModel& model, const rvec& theta, int i);
double finite_difference_gradient(const ShiftableModel& model, const rvec& theta, int i,
                                  double step = 1e-5);

struct BPReport {
    std::string model;
    double tau = 0;
    std::vector<double> tail_estimates;     // Pr[|d_i l| > tau] per component
    std::vector<double> gradient_variances; // Var[d_i l]
    double loss_variance = 0;
    double max_shift_fd_deviation = 0; // audit over sampled points
    std::size_t samples = 0;

    double max_tail() const;
    std::string to_json() const;
};

BPReport bp_probe(const ShiftableModel& model, double tau, std::size_t samples, Rng rng);

// E_phi[ Var_H[ l(phi) - 1/2 ] ] for a finite traceless Hamiltonian family
// with ||H||_op <= c, against the 1/(N+1) bound.
VarianceReport random_init_expected_variance(const std::vector<Observable>& hamiltonians,
                                             double c, int n, std::size_t samples, Rng rng);

// Data re-uploading variance for a Pauli-string observable with Haar-sampled
// local blocks of `block` qubits; bound (1/(2^block - 1))^{#blocks hit}.
VarianceReport dataupload_pauli_variance(int n, int block, const PauliWeyl& P, int depth,
                                         std::size_t samples, Rng rng);

} // namespace evalq::hardness
