#pragma once

#include "evalq/common.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace evalq {

// ---------------------------------------------------------------------------
// Core quantum objects. Dense only; desk scale is N <= 2^12 single copy.
// All values are immutable after construction and safe to share.
// ---------------------------------------------------------------------------

// Qubit 0 is the first tensor factor, i.e. the most significant bit of the
// basis index: |x_0 x_1 ... x_{n-1}> has index sum_i x_i 2^{n-1-i}.

class PureState {
  public:
    explicit PureState(cvec amplitudes);
    static PureState basis(int dim, std::int64_t index);

    int dim() const { return int(a_.size()); }
    const cvec& amplitudes() const { return a_; }

  private:
    cvec a_;
};

class DensityMatrix {
  public:
    explicit DensityMatrix(cmat m);
    static DensityMatrix pure(const PureState& psi);
    static DensityMatrix maximally_mixed(int dim);

    int dim() const { return int(m_.rows()); }
    const cmat& matrix() const { return m_; }

  private:
    cmat m_;
};

class Observable {
  public:
    explicit Observable(cmat m);

    int dim() const { return int(m_.rows()); }
    const cmat& matrix() const { return m_; }
    double op_norm() const;
    // Throws invalid_query unless ||O||_op <= 1 within slack.
    void require_unit_op_norm() const;

  private:
    cmat m_;
    mutable std::optional<double> op_norm_cache_;
};

// Signed Weyl operator sign * i^{a.b} X^{a_1}Z^{b_1} x ... x X^{a_n}Z^{b_n}.
// Always Hermitian with square equal to the identity.
struct PauliWeyl {
    int n = 0;
    std::uint64_t a = 0; // X part, bit i = qubit i
    std::uint64_t b = 0; // Z part
    int sign = +1;

    static PauliWeyl identity(int n) { return PauliWeyl{n, 0, 0, +1}; }
    static PauliWeyl from_label(int n, std::uint64_t label); // label = a*2^n + b, sign +1

    bool is_identity() const { return a == 0 && b == 0 && sign == +1; }
    cmat dense() const;
    cvec apply(const cvec& v) const;
    double expectation(const PureState& psi) const;
    double expectation(const DensityMatrix& rho) const;

    // Product with exact phase tracking. Throws if the result is not
    // proportional to +/- a Weyl operator (cannot happen for valid inputs).
    PauliWeyl operator*(const PauliWeyl& o) const;
    bool commutes_with(const PauliWeyl& o) const;
};

struct MajoranaSet {
    int l = 0;                 // modes
    std::vector<cmat> ops;     // 2l dense operators of dim 2^l
};

struct CovarianceMatrix {
    int l = 0;
    rmat m; // 2l x 2l, real antisymmetric
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

cmat tensor(const cmat& A, const cmat& B);
cmat kron_power(const cmat& A, int k);

double expectation(const DensityMatrix& rho, const Observable& O);
double expectation(const PureState& psi, const Observable& O);
double expectation(const PureState& psi, const cmat& O);

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

// keep: indices into local_dims of the subsystems kept, ascending.
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep,
                            const std::vector<int>& local_dims);

// F |i,j> = |j,i> on the N^2-dimensional doubled space.
Observable flip_operator(int N);
// Projector onto the symmetric subspace of (C^N)^{x t}.
Observable symmetric_projector(int N, int t);
// Unitary representation of a permutation of t copies: maps |i_1..i_t> to the
// tuple with slot p[k] sourced from slot k.
cmat permutation_operator(int N, const std::vector<int>& perm);

PauliWeyl weyl_operator(int n, std::uint64_t a, std::uint64_t b, int sign = +1);

// Jordan-Wigner Majorana operators: mode i (1-based) maps to qubit i-1,
// m_{2i-1} = Z^{(i-1)} X I..., m_{2i} = Z^{(i-1)} Y I....
MajoranaSet majorana_operators(int l);
CovarianceMatrix covariance_of_state(const DensityMatrix& rho, const MajoranaSet& ms);

// ---------------------------------------------------------------------------
// Statevector helpers (used by circuit ensembles and structured oracles)
// ---------------------------------------------------------------------------

int qubit_count(std::int64_t dim); // throws unless dim is a power of two

void apply_single_qubit(cvec& state, int n, int qubit, const cmat& gate2);
void apply_two_qubit(cvec& state, int n, int q1, int q2, const cmat& gate4);
// Applies one 2x2 gate per qubit; gates.size() must equal n, identity entries
// may be empty matrices.
void apply_gate_layer(cvec& state, int n, const std::vector<cmat>& gates);

const cmat& pauli_x();
const cmat& pauli_y();
const cmat& pauli_z();
const cmat& hadamard();
const cmat& identity2();

// Unique +1 joint eigenstate of a full set of commuting signed Weyl
// generators. Throws if the generators are inconsistent or not independent.
PureState stabilizer_state(int n, const std::vector<PauliWeyl>& generators);

} // namespace evalq
