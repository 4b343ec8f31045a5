#pragma once

#include "evalq/qmath.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace evalq::ensembles {

// ---------------------------------------------------------------------------
// Clifford tableau: images of the X_i and Z_i generators under conjugation.
// Represents the Clifford up to global phase.
// ---------------------------------------------------------------------------

struct CliffordTableau {
    int n = 0;
    std::vector<PauliWeyl> x_images; // U X_i U^dag
    std::vector<PauliWeyl> z_images; // U Z_i U^dag

    PauliWeyl conjugate(const PauliWeyl& p) const;
    cmat dense() const; // n <= 6
};

// Uniformly random element of Sp(2n, F2); rows are images of the basis
// vectors in (x1, z1, x2, z2, ...) ordering, stored as bit masks.
std::vector<std::uint32_t> random_symplectic(int n, Rng& rng);
bool is_symplectic(int n, const std::vector<std::uint32_t>& rows);

CliffordTableau sample_clifford(int n, Rng& rng);
CliffordTableau tableau_from_dense(int n, const cmat& U);

// All 24 single-qubit Cliffords (dense, phase-normalized).
const std::vector<cmat>& single_qubit_cliffords();

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

enum class BrickworkGateset { Haar4, CliffordLocal };

struct HaarSpec {
    int dim = 2;
};
struct CliffordUniformSpec {
    int qubits = 1;
};
struct BrickworkSpec {
    int qubits = 2;
    int depth = 1;
    BrickworkGateset gateset = BrickworkGateset::Haar4;
};
struct ExplicitSetSpec {
    std::vector<cmat> unitaries;
    std::vector<double> weights; // sums to 1
};

class UnitaryEnsemble {
  public:
    using Spec = std::variant<HaarSpec, CliffordUniformSpec, BrickworkSpec, ExplicitSetSpec>;

    explicit UnitaryEnsemble(Spec spec);
    static UnitaryEnsemble haar(int N) { return UnitaryEnsemble(HaarSpec{N}); }
    static UnitaryEnsemble clifford(int n) { return UnitaryEnsemble(CliffordUniformSpec{n}); }
    static UnitaryEnsemble brickwork(int n, int d,
                                     BrickworkGateset g = BrickworkGateset::Haar4) {
        return UnitaryEnsemble(BrickworkSpec{n, d, g});
    }
    static UnitaryEnsemble explicit_set(std::vector<cmat> us, std::vector<double> ws = {});

    int dim() const;
    std::string describe() const;
    const Spec& spec() const { return spec_; }

    // Dense unitary sample. Refused for CliffordUniform with n > 6 and
    // Brickwork with n > 12.
    cmat sample_unitary(Rng& rng) const;
    // State U|0>; cheaper than the dense unitary for circuit ensembles.
    PureState sample_state(Rng& rng) const;

    bool is_explicit() const { return std::holds_alternative<ExplicitSetSpec>(spec_); }

  private:
    Spec spec_;
};

cmat sample_haar(int N, Rng& rng);
PureState sample_haar_state(int N, Rng& rng);
cmat sample_brickwork(int n, int d, BrickworkGateset gateset, Rng& rng);

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

struct MomentEstimate {
    int t = 1;
    std::optional<cmat> op;              // E[rho(U)^{x t}] when materialized
    std::optional<double> functional;    // tr[K O] when an O was supplied
    std::size_t sample_count = 0;
    double standard_error = 0.0;         // jackknife, on the functional
};

// Exact Haar state moment binom(N+t-1, t)^{-1} P_sym.
cmat haar_state_moment(int N, int t);

// Exact average E[U^{x2} A (U^dag)^{x2}] over Haar.
cmat second_moment_channel(const cmat& A);

// Monte Carlo (or exact, for explicit sets) t'th state moment. If
// `functional` is given its value tr[K^(t) O] and jackknife error are
// reported; the dense operator is stored when N^t <= 4096.
MomentEstimate empirical_moment(const UnitaryEnsemble& ens, int t, std::size_t samples, Rng& rng,
                                const std::optional<cmat>& functional = std::nullopt);

// Trace-norm distance between the empirical t'th moment and the Haar moment,
// with a grouped-jackknife error bar. Dense budget N^t <= 1024.
struct DesignDeviation {
    double deviation = 0.0;
    double standard_error = 0.0;
    std::size_t sample_count = 0;
};
DesignDeviation design_deviation(const UnitaryEnsemble& ens, int t, std::size_t samples, Rng& rng);

} // namespace evalq::ensembles
