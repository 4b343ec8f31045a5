#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace evalq {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct dim_error : error {
    using error::error;
};
struct budget_error : error {
    using error::error;
};
struct invalid_query : error {
    using error::error;
};

// Construction tolerances, mutable in one place.
struct NumericPolicy {
    double norm_tol = 1e-10;     // state normalization
    double herm_tol = 1e-10;     // Hermiticity
    double trace_tol = 1e-10;    // unit trace
    double psd_tol = 1e-9;       // smallest admissible eigenvalue is -psd_tol
    double unitary_tol = 1e-9;   // ||U^dag U - I||ted
    double op_norm_slack = 1e-9; // slack on ||O||_op <= 1 checks
};

NumericPolicy& numeric_policy();

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic seeded RNG. Identical seed gives an identical stream;
// child streams are derived from the base seed so Monte Carlo loops can be
// split across workers and merged in stream order.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    double uniform() {
        // 53-bit mantissa in [0,1)
        return double(gen_() >> 11) * 0x1.0p-53;
    }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        // Box-Muller, cosine branch only; keeps the stream stateless.
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    cplx cnormal() { return cplx(normal(), normal()) / std::sqrt(2.0); }

    std::uint64_t integer(std::uint64_t n) {
        // unbiased via rejection
        std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = gen_();
        while (v >= lim) v = gen_();
        return v % n;
    }
    bool bit() { return (gen_() & 1ULL) != 0; }
    std::uint64_t raw() { return gen_(); }

    Rng child(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x51ed2701ULL)));
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

// Mean / stderr pair produced by Monte Carlo estimators.
struct MonteCarloEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t samples = 0;
};

// Deterministic chunked Monte Carlo: sample i is drawn from the chunk RNG
// base.child(i / 256), so results are identical for any worker count.
std::vector<double> chunked_samples(std::size_t samples, int workers, const Rng& base,
                                    const std::function<double(Rng&)>& one_sample);

// Jackknife standard error of the mean of f over the samples.
double jackknife_stderr(const std::vector<double>& values);
// Plain mean/stderr of a sample vector (stderr of the mean).
MonteCarloEstimate mean_estimate(const std::vector<double>& values);
// Variance of the samples with a jackknife stderr for the variance itself.
MonteCarloEstimate variance_estimate(const std::vector<double>& values);

} // namespace evalq
