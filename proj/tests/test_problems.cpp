#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evalq/ensembles.hpp"
#include "evalq/problems.hpp"
#include "evalq/qmath.hpp"

#include "json.hpp"

#include <cmath>
#include <set>

using namespace evalq;
using namespace evalq::problems;

namespace {

// basis-state self-learning problem on n qubits: Z(z) = {z}
LearningProblem<std::uint64_t, std::uint64_t> basis_problem(int n) {
    LearningProblem<std::uint64_t, std::uint64_t> p;
    std::vector<std::uint64_t> all;
    for (std::uint64_t z = 0; z < (1ULL << n); ++z) all.push_back(z);
    p.sources = FiniteMeasure<std::uint64_t>::uniform(all);
    p.targets = all;
    p.solves = [](const std::uint64_t& s, const std::uint64_t& t) { return s == t; };
    return p;
}

} // namespace

TEST_CASE("triv") {
    SUBCASE("basis states at n qubits") {
        for (int n : {1, 3, 5}) CHECK(triv(basis_problem(n)) == doctest::Approx(std::pow(2.0, -n)));
    }

    SUBCASE("single source") {
        LearningProblem<int, int> p;
        p.sources = FiniteMeasure<int>::uniform({42});
        p.targets = {0, 1, 42};
        p.solves = [](int s, int t) { return s == t; };
        CHECK(triv(p) == doctest::Approx(1.0));
    }

    SUBCASE("two disjoint-solution sources") {
        LearningProblem<int, int> p;
        p.sources = FiniteMeasure<int>::uniform({0, 1});
        p.targets = {0, 1};
        p.solves = [](int s, int t) { return s == t; };
        CHECK(triv(p) == doctest::Approx(0.5));
    }

    SUBCASE("candidate scan equals enumeration") {
        auto p = basis_problem(3);
        CHECK(triv(p) == triv(p, p.targets));
    }
}

TEST_CASE("frac") {
    SUBCASE("basis states against the zero function") {
        // sources are basis labels, queries are labels y, value <z|y> = delta
        for (int n : {1, 2, 4}) {
            auto mu = FiniteMeasure<std::uint64_t>::uniform([&] {
                std::vector<std::uint64_t> v;
                for (std::uint64_t z = 0; z < (1ULL << n); ++z) v.push_back(z);
                return v;
            }());
            std::vector<std::uint64_t> pool = mu.items;
            std::function<double(const std::uint64_t&, const std::uint64_t&)> eval =
                [](const std::uint64_t& z, const std::uint64_t& y) { return z == y ? 1.0 : 0.0; };
            std::function<double(const std::uint64_t&)> ref = [](const std::uint64_t&) {
                return 0.0;
            };
            for (double tau : {0.1, 0.5, 0.9})
                CHECK(frac_exact(mu, eval, ref, tau, pool) ==
                      doctest::Approx(std::pow(2.0, -n)));
        }
    }

    SUBCASE("point mass at the reference") {
        auto mu = FiniteMeasure<double>::uniform({0.5});
        std::function<double(const double&, const int&)> eval = [](const double& s, const int&) {
            return s;
        };
        std::function<double(const int&)> ref = [](const int&) { return 0.5; };
        CHECK(frac_exact(mu, eval, ref, 0.1, std::vector<int>{0}) == doctest::Approx(0.0));
    }

    SUBCASE("haar qubit states vs maximally mixed, O = Z") {
        // <Z> is uniform on [-1, 1], so Pr[|<Z>| > 1/2] = 1/2
        std::function<PureState(Rng&)> sampler = [](Rng& r) {
            return ensembles::sample_haar_state(2, r);
        };
        std::function<double(const PureState&, const int&)> eval = [](const PureState& s,
                                                                      const int&) {
            return expectation(s, Observable(pauli_z()));
        };
        std::function<double(const int&)> ref = [](const int&) { return 0.0; };
        Rng rng(17);
        auto est = frac_mc(sampler, eval, ref, 0.5, std::vector<int>{0}, 10000, rng);
        CHECK(std::abs(est.value - 0.5) <= 5 * est.stderr_ + 0.01);
    }

    SUBCASE("monotone nonincreasing in tau") {
        Rng rng(23);
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<double> vals;
            for (int i = 0; i < 16; ++i) vals.push_back(rng.uniform(-1, 1));
            auto mu = FiniteMeasure<double>::uniform(vals);
            std::function<double(const double&, const int&)> eval =
                [](const double& s, const int&) { return s; };
            std::function<double(const int&)> ref = [](const int&) { return 0.0; };
            double prev = 2.0;
            for (double tau : {0.05, 0.1, 0.2, 0.4, 0.8}) {
                double f = frac_exact(mu, eval, ref, tau, std::vector<int>{0});
                CHECK(f <= prev + 1e-12);
                prev = f;
            }
        }
    }
}

TEST_CASE("lower bound calculators") {
    SUBCASE("variance route") {
        CHECK(qnt_via_variance(1.0 / 1025.0, 0.1) == doctest::Approx(10.25));
        CHECK(qnt_via_variance(0.3, 0.0) == doctest::Approx(0.0));
        for (int n : {2, 6, 10})
            CHECK(qnt_via_variance(std::pow(2.0, -n), 0.2) ==
                  doctest::Approx(0.04 * std::pow(2.0, n)));
        CHECK(qnt_via_variance(0.0, 0.1) == kInfiniteQueries);
    }

    SUBCASE("deterministic average-case bound") {
        for (int n : {1, 5, 10}) {
            double t = std::pow(2.0, -n);
            CHECK(deterministic_avg_lower_bound(1.0, t, t) ==
                  doctest::Approx((1.0 - t) * std::pow(2.0, n)));
        }
        CHECK(deterministic_avg_lower_bound(0.1, 0.3, 0.01) == doctest::Approx(0.0));
        CHECK(deterministic_avg_lower_bound(0.9, 0.1, 0.01) == doctest::Approx(80.0));
    }

    SUBCASE("random decision bound") {
        for (int n : {2, 8}) {
            CHECK(random_lower_bound_dec(1.0, std::pow(2.0, -n)) ==
                  doctest::Approx(std::pow(2.0, n)));
        }
        CHECK(random_lower_bound_dec(0.5, 0.01) == doctest::Approx(0.0));
    }

    SUBCASE("verifiable / eps-learning bound") {
        // q + 1 >= 2 (alpha - 1/2)(beta - mass) / frac
        double q = verifiable_lower_bound(0.9, 0.8, 1.0, 0.01, 0.1);
        CHECK(q == doctest::Approx(2 * 0.4 * 0.7 / 0.01 - 1.0));
        CHECK(verifiable_lower_bound(0.5, 1.0, 1.0, 0.01, 0.0) == doctest::Approx(0.0));
    }

    SUBCASE("monotonicity of the deterministic bound") {
        double base = deterministic_avg_lower_bound(0.8, 0.2, 0.05);
        CHECK(deterministic_avg_lower_bound(0.9, 0.2, 0.05) > base);
        CHECK(deterministic_avg_lower_bound(0.8, 0.3, 0.05) < base);
        CHECK(deterministic_avg_lower_bound(0.8, 0.2, 0.1) < base);
    }
}

TEST_CASE("eps ball mass") {
    SUBCASE("point mass at the center") {
        auto mu = FiniteMeasure<int>::uniform({7});
        std::function<double(const int&)> d = [](const int&) { return 0.0; };
        CHECK(eps_ball_mass_exact(mu, d, 0.5) == doctest::Approx(1.0));
    }

    SUBCASE("orthogonal pure states") {
        DensityMatrix zero = DensityMatrix::pure(PureState::basis(2, 0));
        auto mu = FiniteMeasure<DensityMatrix>::uniform({zero});
        DensityMatrix one = DensityMatrix::pure(PureState::basis(2, 1));
        std::function<double(const DensityMatrix&)> d = [&](const DensityMatrix& s) {
            return trace_distance(s, one);
        };
        CHECK(eps_ball_mass_exact(mu, d, 0.99) == doctest::Approx(0.0));
    }

    SUBCASE("far-from inequality over a stabilizer family") {
        Rng rng(31);
        std::vector<DensityMatrix> family;
        while (family.size() < 16) {
            auto t = ensembles::sample_clifford(2, rng);
            DensityMatrix cand = DensityMatrix::pure(PureState{cvec(t.dense().col(0))});
            bool fresh = true;
            for (const auto& f : family)
                if (trace_distance(f, cand) < 1e-9) fresh = false;
            if (fresh) family.push_back(std::move(cand));
        }
        auto mu = FiniteMeasure<DensityMatrix>::uniform(family);

        // reference z = maximally mixed; queries are unit-norm observables
        DensityMatrix z = DensityMatrix::maximally_mixed(4);
        std::vector<Observable> pool;
        for (std::uint64_t lab = 1; lab < 16; ++lab)
            pool.push_back(Observable(PauliWeyl::from_label(2, lab).dense()));

        double tau = 0.2, eps = 0.3;
        std::function<double(const DensityMatrix&, const Observable&)> eval =
            [](const DensityMatrix& s, const Observable& O) { return expectation(s, O); };
        std::function<double(const Observable&)> ref = [&](const Observable& O) {
            return expectation(z, O);
        };
        double fr = frac_exact(mu, eval, ref, tau, pool);

        for (int rep = 0; rep < 20; ++rep) {
            PureState center = ensembles::sample_haar_state(4, rng);
            DensityMatrix c = DensityMatrix::pure(center);
            std::function<double(const DensityMatrix&)> dc = [&](const DensityMatrix& s) {
                return trace_distance(s, c);
            };
            std::function<double(const DensityMatrix&)> dz = [&](const DensityMatrix& s) {
                return trace_distance(s, z);
            };
            double lhs = eps_ball_mass_exact(mu, dc, eps);
            double rhs = std::max(fr, eps_ball_mass_exact(mu, dz, 2 * eps + tau / 2));
            CHECK(lhs <= rhs + 1e-9);
        }
    }
}

TEST_CASE("boosting") {
    auto prob = basis_problem(2); // 4-source exact problem
    Rng rng(41);

    SUBCASE("b = 1 is the base learner") {
        std::function<std::uint64_t(Rng&)> base = [](Rng&) { return std::uint64_t(3); };
        auto out = boost(base, 1, prob, rng);
        REQUIRE(out.output.has_value());
        CHECK(*out.output == 3);
    }

    SUBCASE("repetition count formula") {
        CHECK(boost_repetitions(0.1, 0.01) == 231);
        CHECK(boost_repetitions(0.25, 0.1) == std::size_t(std::ceil(std::log(10.0) / 0.125)));
    }

    SUBCASE("0.6 learner boosted to >= 0.95") {
        const std::uint64_t truth = 2;
        std::function<std::uint64_t(Rng&)> base = [&](Rng& r) -> std::uint64_t {
            if (r.uniform() < 0.6) return truth;
            std::uint64_t wrong = r.integer(3);
            return wrong >= truth ? wrong + 1 : wrong;
        };
        std::size_t b = boost_repetitions(0.1, 0.01);
        int ok = 0;
        const int trials = 1000;
        for (int tr = 0; tr < trials; ++tr) {
            auto out = boost(base, b, prob, rng);
            if (out.output && *out.output == truth) ++ok;
        }
        CHECK(double(ok) / trials >= 0.95);
    }

    SUBCASE("odd b never degrades a strong learner") {
        const std::uint64_t truth = 1;
        for (double p : {0.6, 0.75, 0.9}) {
            std::function<std::uint64_t(Rng&)> base = [&](Rng& r) -> std::uint64_t {
                if (r.uniform() < p) return truth;
                std::uint64_t wrong = r.integer(3);
                return wrong >= truth ? wrong + 1 : wrong;
            };
            int ok_base = 0, ok_boost = 0;
            const int trials = 1000;
            for (int tr = 0; tr < trials; ++tr) {
                if (base(rng) == truth) ++ok_base;
                auto out = boost(base, 11, prob, rng);
                if (out.output && *out.output == truth) ++ok_boost;
            }
            double se = 2.0 * std::sqrt(0.25 / trials);
            CHECK(double(ok_boost) / trials >= double(ok_base) / trials - 2 * se);
        }
    }
}

TEST_CASE("metric variance") {
    std::function<double(const double&, const double&)> dist = [](const double& a,
                                                                  const double& b) {
        return std::abs(a - b);
    };

    SUBCASE("identical samples") {
        std::vector<double> xs(50, 3.14);
        CHECK(metric_variance(xs, dist) == doctest::Approx(0.0));
    }

    SUBCASE("two-point uniform on {0,1} gives 1/4") {
        std::vector<double> xs;
        for (int i = 0; i < 1000; ++i) xs.push_back(i % 2);
        // exact over all pairs: fraction of unequal pairs is 500*500 / C(1000,2)
        double unequal = 500.0 * 500.0 / (1000.0 * 999.0 / 2.0);
        CHECK(metric_variance(xs, dist) == doctest::Approx(0.5 * unequal));
        CHECK(metric_variance(xs, dist) == doctest::Approx(0.25).epsilon(0.01));
    }

    SUBCASE("chebyshev bound on random reals") {
        Rng rng(51);
        std::vector<double> xs;
        for (int i = 0; i < 1000; ++i) xs.push_back(rng.normal());
        auto rep = metric_chebyshev_check(xs, dist, 1.5);
        CHECK(rep.pass);
        CHECK(rep.empirical_tail <= rep.bound + 1e-12);
    }

    SUBCASE("throws below two samples") {
        std::vector<double> one{1.0};
        CHECK_THROWS_AS(metric_variance(one, dist), dim_error);
    }
}

TEST_CASE("rd surrogate") {
    auto mu1 = FiniteMeasure<double>::uniform({0.0, 1.0});
    auto mu2 = FiniteMeasure<double>::uniform({0.0, 0.0, 1.0, 1.0});
    std::function<double(const double&, const int&)> eval = [](const double& s, const int&) {
        return s;
    };
    std::function<double(const int&)> ref = [](const int&) { return 0.0; };
    double rd = rd_surrogate<double, int>({mu1, mu2}, eval, ref, 0.5, {0});
    CHECK(rd == doctest::Approx(2.0)); // best frac is 1/2 in both
}

TEST_CASE("bound report serializes") {
    BoundReport r;
    r.triv = 0.125;
    r.frac = 0.125;
    r.qnt_lower = 8.0;
    r.lower_bound_value = 7.0;
    r.beta = 1.0;
    r.tau = 0.1;
    auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["triv"].get<double>() == doctest::Approx(0.125));
    CHECK(j["parameters"]["beta"].get<double>() == doctest::Approx(1.0));
    CHECK(j["lower_bound_value"].get<double>() == doctest::Approx(7.0));
}
