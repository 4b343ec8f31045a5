#pragma once

#include "evalq/common.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace evalq::problems {

// ---------------------------------------------------------------------------
// Finite measures and learning problems
// ---------------------------------------------------------------------------

template <class T> struct FiniteMeasure {
    std::vector<T> items;
    std::vector<double> weights;

    static FiniteMeasure uniform(std::vector<T> xs) {
        FiniteMeasure m;
        m.weights.assign(xs.size(), 1.0 / double(xs.size()));
        m.items = std::move(xs);
        return m;
    }
    void validate() const {
        if (items.empty() || items.size() != weights.size())
            throw dim_error("FiniteMeasure: inconsistent support");
        double s = 0;
        for (double w : weights) s += w;
        if (std::abs(s - 1.0) > 1e-12) throw error("FiniteMeasure: weights do not sum to 1");
    }
};

// Finite learning problem: sources, a solution predicate and a target list.
template <class S, class T> struct LearningProblem {
    FiniteMeasure<S> sources;
    std::function<bool(const S&, const T&)> solves; // t in Z(s)
    std::vector<T> targets;
};

// ---------------------------------------------------------------------------
// Trivial-learning and distinguishability calculators
// ---------------------------------------------------------------------------

// sup_t Pr_{s~mu}[s in Z_t] over the candidate targets (or the problem's
// target list when candidates is empty).
template <class S, class T>
double triv(const LearningProblem<S, T>& prob, const std::vector<T>& candidates = {}) {
    prob.sources.validate();
    const auto& pool = candidates.empty() ? prob.targets : candidates;
    if (pool.empty()) throw dim_error("triv: no candidate targets");
    double best = 0;
    for (const auto& t : pool) {
        double mass = 0;
        for (std::size_t i = 0; i < prob.sources.items.size(); ++i)
            if (prob.solves(prob.sources.items[i], t)) mass += prob.sources.weights[i];
        best = std::max(best, mass);
    }
    return best;
}

// max over the query pool of Pr_{s~mu}[ d(s(x), f(x)) > tau ], exact over a
// finite measure.
template <class S, class X>
double frac_exact(const FiniteMeasure<S>& mu,
                  const std::function<double(const S&, const X&)>& eval,
                  const std::function<double(const X&)>& ref, double tau,
                  const std::vector<X>& pool) {
    mu.validate();
    if (pool.empty()) throw dim_error("frac: empty query pool");
    double best = 0;
    for (const auto& x : pool) {
        double fx = ref(x), mass = 0;
        for (std::size_t i = 0; i < mu.items.size(); ++i)
            if (std::abs(eval(mu.items[i], x) - fx) > tau) mass += mu.weights[i];
        best = std::max(best, mass);
    }
    return best;
}

// Monte Carlo variant over a generative source sampler; returns the max over
// the pool with the binomial stderr of the maximizing query.
template <class S, class X>
MonteCarloEstimate frac_mc(const std::function<S(Rng&)>& sampler,
                           const std::function<double(const S&, const X&)>& eval,
                           const std::function<double(const X&)>& ref, double tau,
                           const std::vector<X>& pool, std::size_t samples, Rng& rng) {
    if (pool.empty()) throw dim_error("frac: empty query pool");
    if (samples < 2) throw dim_error("frac: need at least 2 samples");
    MonteCarloEstimate best;
    for (const auto& x : pool) {
        double fx = ref(x);
        std::size_t hits = 0;
        Rng local = rng.child(std::uint64_t(&x - pool.data()));
        for (std::size_t s = 0; s < samples; ++s)
            if (std::abs(eval(sampler(local), x) - fx) > tau) ++hits;
        double p = double(hits) / double(samples);
        if (p >= best.value) {
            best.value = p;
            best.stderr_ = std::sqrt(std::max(p * (1 - p), 1.0 / double(samples)) /
                                     double(samples));
            best.samples = samples;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Lower-bound formulas
// ---------------------------------------------------------------------------

constexpr double kInfiniteQueries = std::numeric_limits<double>::infinity();

// tau^2 / max-variance; returns +inf for zero variance, 0 for tau = 0.
double qnt_via_variance(double variance_max, double tau);

// max(0, (beta - triv) / frac); +inf when frac = 0 and beta > triv.
double deterministic_avg_lower_bound(double beta, double triv, double frac);

// max(0, 2 (alpha - 1/2) / frac)
double random_lower_bound_dec(double alpha, double frac);

// q >= 2 (alpha - 1/2) (beta - excluded_mass) / frac - p_v
double verifiable_lower_bound(double alpha, double beta, double p_v, double frac,
                              double excluded_mass);

// Monte Carlo / exact mass of the epsilon-ball around a center.
template <class S>
double eps_ball_mass_exact(const FiniteMeasure<S>& mu,
                           const std::function<double(const S&)>& dist_to_center, double eps) {
    mu.validate();
    double mass = 0;
    for (std::size_t i = 0; i < mu.items.size(); ++i)
        if (dist_to_center(mu.items[i]) < eps) mass += mu.weights[i];
    return mass;
}

template <class S>
MonteCarloEstimate eps_ball_mass_mc(const std::function<S(Rng&)>& sampler,
                                    const std::function<double(const S&)>& dist_to_center,
                                    double eps, std::size_t samples, Rng& rng) {
    if (samples < 2) throw dim_error("eps_ball_mass: need at least 2 samples");
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s)
        if (dist_to_center(sampler(rng)) < eps) ++hits;
    MonteCarloEstimate e;
    e.value = double(hits) / double(samples);
    e.stderr_ = std::sqrt(std::max(e.value * (1 - e.value), 1.0 / double(samples)) /
                          double(samples));
    e.samples = samples;
    return e;
}

// Surrogate for the random dimension: sup over the *provided* measures only,
// not over all measures.
template <class S, class X>
double rd_surrogate(const std::vector<FiniteMeasure<S>>& measures,
                    const std::function<double(const S&, const X&)>& eval,
                    const std::function<double(const X&)>& ref, double tau,
                    const std::vector<X>& pool) {
    if (measures.empty()) throw dim_error("rd_surrogate: no measures");
    double best = 0;
    for (const auto& mu : measures) {
        double f = frac_exact<S, X>(mu, eval, ref, tau, pool);
        best = std::max(best, f > 0 ? 1.0 / f : kInfiniteQueries);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Boosting
// ---------------------------------------------------------------------------

// Repetitions b = ceil( ln(1/delta') / (2 gamma^2) ).
std::size_t boost_repetitions(double gamma, double delta_prime);

template <class T> struct BoostOutcome {
    std::optional<T> output;
    std::size_t repetitions = 0;
};

// Runs the base learner b times and returns a target from the first source
// (in enumeration order) whose solution set covers at least ceil(b/2) of the
// outputs. Empty output signals failure.
template <class S, class T>
BoostOutcome<T> boost(const std::function<T(Rng&)>& base_learner, std::size_t b,
                      const LearningProblem<S, T>& prob, Rng& rng) {
    if (b < 1) throw dim_error("boost: b >= 1");
    std::vector<T> outputs;
    outputs.reserve(b);
    for (std::size_t i = 0; i < b; ++i) outputs.push_back(base_learner(rng));
    const std::size_t need = (b + 1) / 2;
    BoostOutcome<T> out;
    out.repetitions = b;
    for (const auto& s : prob.sources.items) {
        std::size_t covered = 0;
        for (const auto& t : outputs)
            if (prob.solves(s, t)) ++covered;
        if (covered >= need) {
            for (const auto& t : outputs)
                if (prob.solves(s, t)) {
                    out.output = t;
                    return out;
                }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metric variance
// ---------------------------------------------------------------------------

// (1/2) E[d(X1, X2)^2] as a U-statistic over all pairs; pairs are subsampled
// above `pair_budget`.
template <class T>
double metric_variance(const std::vector<T>& samples,
                       const std::function<double(const T&, const T&)>& d,
                       std::size_t pair_budget = 2'000'000,
                       std::uint64_t subsample_seed = 12345) {
    const std::size_t m = samples.size();
    if (m < 2) throw dim_error("metric_variance: need at least 2 samples");
    const std::size_t total_pairs = m * (m - 1) / 2;
    double acc = 0;
    if (total_pairs <= pair_budget) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                double v = d(samples[i], samples[j]);
                acc += v * v;
            }
        return 0.5 * acc / double(total_pairs);
    }
    Rng rng(subsample_seed);
    for (std::size_t k = 0; k < pair_budget; ++k) {
        std::size_t i = rng.integer(m), j = rng.integer(m - 1);
        if (j >= i) ++j;
        double v = d(samples[i], samples[j]);
        acc += v * v;
    }
    return 0.5 * acc / double(pair_budget);
}

struct MetricChebyshevReport {
    double empirical_tail = 0;
    double bound = 0;
    bool pass = false;
};

template <class T>
MetricChebyshevReport metric_chebyshev_check(const std::vector<T>& samples,
                                             const std::function<double(const T&, const T&)>& d,
                                             double tau) {
    const std::size_t m = samples.size();
    if (m < 2) throw dim_error("metric_chebyshev_check: need at least 2 samples");
    double var = metric_variance<T>(samples, d);
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j, ++total)
            if (d(samples[i], samples[j]) > 2 * tau) ++hits;
    MetricChebyshevReport r;
    r.empirical_tail = double(hits) / double(total);
    r.bound = var / (tau * tau);
    r.pass = r.empirical_tail <= r.bound + 1e-12;
    return r;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct BoundReport {
    double triv = 0;
    double frac = 0;
    double qnt_lower = 0;
    double lower_bound_value = 0;
    double beta = 1.0;
    double alpha = 1.0;
    double tau = 0;
    double eps = 0;
    double p_v = 0;
    std::string note;

    std::string to_json() const;
};

} // namespace evalq::problems
