#include "evalq/problems.hpp"

#include "json.hpp"

#include <cmath>

namespace evalq::problems {

double qnt_via_variance(double variance_max, double tau) {
    if (variance_max < 0) throw error("qnt_via_variance: negative variance");
    if (tau == 0) return 0.0;
    if (variance_max == 0) return kInfiniteQueries;
    return tau * tau / variance_max;
}

double deterministic_avg_lower_bound(double beta, double triv, double frac) {
    if (frac < 0) throw error("deterministic_avg_lower_bound: negative frac");
    double num = beta - triv;
    if (num <= 0) return 0.0;
    if (frac == 0) return kInfiniteQueries;
    return num / frac;
}

double random_lower_bound_dec(double alpha, double frac) {
    if (frac < 0) throw error("random_lower_bound_dec: negative frac");
    double num = 2.0 * (alpha - 0.5);
    if (num <= 0) return 0.0;
    if (frac == 0) return kInfiniteQueries;
    return num / frac;
}

double verifiable_lower_bound(double alpha, double beta, double p_v, double frac,
                              double excluded_mass) {
    if (frac < 0) throw error("verifiable_lower_bound: negative frac");
    double num = 2.0 * (alpha - 0.5) * (beta - excluded_mass);
    if (num <= 0) return 0.0;
    if (frac == 0) return kInfiniteQueries;
    return std::max(0.0, num / frac - p_v);
}

std::size_t boost_repetitions(double gamma, double delta_prime) {
    if (gamma <= 0 || gamma > 0.5) throw error("boost_repetitions: gamma in (0, 1/2]");
    if (delta_prime <= 0 || delta_prime >= 1) throw error("boost_repetitions: delta' in (0,1)");
    return std::size_t(std::ceil(std::log(1.0 / delta_prime) / (2.0 * gamma * gamma)));
}

std::string BoundReport::to_json() const {
    nlohmann::json j;
    j["triv"] = triv;
    j["frac"] = frac;
    j["qnt_lower"] = qnt_lower;
    j["lower_bound_value"] = lower_bound_value;
    j["parameters"] = {{"beta", beta}, {"alpha", alpha}, {"tau", tau}, {"eps", eps},
                       {"p_v", p_v}};
    if (!note.empty()) j["note"] = note;
    return j.dump();
}

} // namespace evalq::problems
