#include "evalq/hardness.hpp"

#include "json.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace evalq::hardness {

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string VarianceReport::to_json() const {
    nlohmann::json j;
    j["ensemble"] = ensemble;
    j["observable"] = observable;
    j["n"] = n;
    j["copies"] = copies;
    j["estimate"] = estimate;
    j["stderr"] = standard_error;
    j["bound"] = analytic_bound;
    j["bound_name"] = bound_name;
    j["pass"] = pass;
    return j.dump();
}

std::string VarianceReport::csv_header() {
    return "ensemble,observable,n,k,estimate,stderr,bound,bound_name,pass";
}

std::string VarianceReport::to_csv_row() const {
    std::ostringstream os;
    os.precision(12);
    os << ensemble << "," << observable << "," << n << "," << copies << "," << estimate << ","
       << standard_error << "," << analytic_bound << "," << bound_name << "," << (pass ? 1 : 0);
    return os.str();
}

// ---------------------------------------------------------------------------
// State variance
// ---------------------------------------------------------------------------

double haar_variance_exact(const Observable& O) {
    const double N = double(O.dim());
    double tr2 = (O.matrix() * O.matrix()).trace().real();
    double tr = O.matrix().trace().real();
    return (tr2 * N - tr * tr) / (N * N * (N + 1.0));
}

VarianceReport state_variance(const ensembles::UnitaryEnsemble& ens, const oracles::KQuery& O,
                              const std::string& obs_name, int k, std::size_t samples, Rng rng,
                              BoundKind bound, double envelope_constant, int workers) {
    const int N = ens.dim();
    MonteCarloEstimate est;
    if (ens.is_explicit()) {
        // exact weighted variance over the finite set
        const auto& e = std::get<ensembles::ExplicitSetSpec>(ens.spec());
        double mean = 0, second = 0;
        for (std::size_t i = 0; i < e.unitaries.size(); ++i) {
            PureState psi{cvec(e.unitaries[i].col(0))};
            double v = oracles::kcopy_expectation(oracles::GroundState(std::move(psi)), O, k);
            mean += e.weights[i] * v;
            second += e.weights[i] * v * v;
        }
        est.value = second - mean * mean;
        est.samples = e.unitaries.size();
    } else {
        if (samples < 8) throw dim_error("state_variance: too few samples");
        auto vals = chunked_samples(samples, workers, rng, [&](Rng& r) {
            PureState psi = ens.sample_state(r);
            return oracles::kcopy_expectation(oracles::GroundState(std::move(psi)), O, k);
        });
        est = variance_estimate(vals);
    }

    VarianceReport rep;
    rep.ensemble = ens.describe();
    rep.observable = obs_name;
    rep.n = qubit_count(N);
    rep.copies = k;
    rep.estimate = est.value;
    rep.standard_error = est.stderr_;
    switch (bound) {
    case BoundKind::HaarExact: {
        auto* dense = std::get_if<Observable>(&O);
        if (!dense || k != 1)
            throw error("state_variance: exact bound needs a dense single-copy observable");
        rep.analytic_bound = haar_variance_exact(*dense);
        rep.bound_name = "haar-exact";
        break;
    }
    case BoundKind::TwoDesign:
        rep.analytic_bound = 1.0 / (double(N) + 1.0);
        rep.bound_name = "two-design";
        break;
    case BoundKind::TDesignMultiCopy:
        rep.analytic_bound = 8.0 * double(k) * double(k) / double(N);
        rep.bound_name = "t-design-multicopy";
        break;
    case BoundKind::MeasuredEnvelope:
        rep.analytic_bound = envelope_constant / double(N);
        rep.bound_name = "measured-envelope";
        break;
    }
    rep.pass = rep.estimate <= rep.analytic_bound + 3.0 * rep.standard_error;
    return rep;
}

std::vector<std::pair<oracles::KQuery, std::string>> two_copy_adversarial_pool(int N, int count,
                                                                               Rng& rng) {
    std::vector<std::pair<oracles::KQuery, std::string>> pool;
    const std::int64_t D = std::int64_t(N) * N;

    // shifted symmetric projector 2 P_sym - I
    cmat sym = 2.0 * symmetric_projector(N, 2).matrix() - cmat::Identity(D, D);
    pool.emplace_back(oracles::KQuery(Observable(std::move(sym))), "2Psym-I");

    // projector onto a sampled product state
    PureState phi = ensembles::sample_haar_state(N, rng);
    pool.emplace_back(oracles::KQuery(oracles::PowerProjector(phi)), "power-projector");

    while (int(pool.size()) < count) {
        cmat g(D, D);
        for (std::int64_t i = 0; i < D; ++i)
            for (std::int64_t j = 0; j < D; ++j) g(i, j) = rng.cnormal();
        cmat h = 0.5 * (g + g.adjoint());
        Eigen::SelfAdjointEigenSolver<cmat> es(h, Eigen::EigenvaluesOnly);
        h /= es.eigenvalues().cwiseAbs().maxCoeff();
        pool.emplace_back(oracles::KQuery(Observable(std::move(h))),
                          "random-hermitian-" + std::to_string(pool.size()));
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Levy tails
// ---------------------------------------------------------------------------

LevyReport levy_tail_check(int n, int k, double tau, std::size_t samples,
                           const oracles::KQuery& O, Rng rng, int workers) {
    if (samples < 16) throw dim_error("levy_tail_check: too few samples");
    const int N = 1 << n;
    auto ens = ensembles::UnitaryEnsemble::haar(N);
    auto vals = chunked_samples(samples, workers, rng, [&](Rng& r) {
        PureState psi = ens.sample_state(r);
        return oracles::kcopy_expectation(oracles::GroundState(std::move(psi)), O, k);
    });
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= double(vals.size());
    std::size_t hits = 0;
    for (double v : vals)
        if (std::abs(v - mean) > tau) ++hits;

    LevyReport rep;
    rep.empirical_tail = double(hits) / double(samples);
    rep.tail_stderr = std::sqrt(
        std::max(rep.empirical_tail * (1 - rep.empirical_tail), 1.0 / double(samples)) /
        double(samples));
    const double L = 2.0 * double(k);
    rep.bound = std::exp(-4.0 * double(N) * tau * tau / (9.0 * M_PI * M_PI * M_PI * L * L));
    rep.pass = rep.empirical_tail <= rep.bound + 3.0 * rep.tail_stderr;
    return rep;
}

double pauli_cost_identity(const PureState& psi) {
    const int n = qubit_count(psi.dim());
    if (n > 5) throw budget_error("pauli_cost_identity: n <= 5");
    const std::uint64_t L = 1ULL << (2 * n);
    double total = 0;
    for (std::uint64_t label = 0; label < L; ++label) {
        double e = PauliWeyl::from_label(n, label).expectation(psi);
        total += e * e;
    }
    double mean = total / double(L);
    if (std::abs(mean - std::pow(2.0, -n)) > 1e-10)
        throw error("pauli_cost_identity: normalization identity violated");
    return mean;
}

problems::BoundReport selflearn_basis_quantities(int n, double beta) {
    if (n < 1 || n > 30) throw budget_error("selflearn_basis_quantities: n <= 30");
    problems::BoundReport rep;
    rep.triv = std::pow(2.0, -n);
    rep.frac = std::pow(2.0, -n);
    rep.beta = beta;
    rep.qnt_lower = std::pow(2.0, n);
    rep.lower_bound_value = (beta - rep.triv) * std::pow(2.0, n);
    rep.note = "self-learning computational basis states";
    return rep;
}

// ---------------------------------------------------------------------------
// Linear model variance
// ---------------------------------------------------------------------------

VarianceReport linear_model_variance(int n, const Observable& O, LinearVarianceMode mode,
                                     std::size_t samples, Rng rng, int workers) {
    const int N = 1 << n;
    if (O.dim() != N) throw dim_error("linear_model_variance: observable dimension");

    cmat Oeff = O.matrix();
    if (mode == LinearVarianceMode::EncodingHaar) {
        // shift traceless; leaves the variance unchanged
        Oeff -= (Oeff.trace() / double(N)) * cmat::Identity(N, N);
        // the 2/(N(N+1)) constant presumes tr[O^2] <= 2 (rank-two unit
        // observables); reject anything larger instead of loosening the bound
        double hs = (Oeff * Oeff).trace().real();
        if (hs > 2.0 + 1e-9)
            throw error("linear_model_variance: encoding mode needs tr[O^2] <= 2 "
                        "after the traceless shift");
    }

    // Var_phi[f_phi] = E_{phi,x}[f^2] - E_{x,phi,phi'}[f_phi f_phi'];
    // one triple (x, phi, phi') per sample.
    auto vals = chunked_samples(samples, workers, rng, [&](Rng& r) {
        PureState x = ensembles::sample_haar_state(N, r);
        cmat U1 = ensembles::sample_haar(N, r);
        cmat U2 = ensembles::sample_haar(N, r);
        auto f = [&](const cmat& U) {
            cvec v = U.adjoint() * x.amplitudes();
            return v.dot(Oeff * v).real();
        };
        double f1 = f(U1), f2 = f(U2);
        return f1 * f1 - f1 * f2;
    });
    auto est = mean_estimate(vals);

    VarianceReport rep;
    rep.ensemble = mode == LinearVarianceMode::VariationalHaar ? "linear-model/haar-variational"
                                                               : "linear-model/haar-encoding";
    rep.observable = "dense";
    rep.n = n;
    rep.copies = 1;
    rep.estimate = est.value;
    rep.standard_error = jackknife_stderr(vals);
    if (mode == LinearVarianceMode::VariationalHaar) {
        rep.analytic_bound = 1.0 / (double(N) + 1.0);
        rep.bound_name = "1/(N+1)";
    } else {
        rep.analytic_bound = 2.0 / (double(N) * (double(N) + 1.0));
        rep.bound_name = "2/(N(N+1))";
    }
    rep.pass = rep.estimate <= rep.analytic_bound + 3.0 * rep.standard_error;
    return rep;
}

FiniteFunctionFamily sample_linear_model_family(int n, const Observable& O, std::size_t functions,
                                                std::size_t data_points, Rng& rng) {
    const int N = 1 << n;
    std::vector<PureState> xs;
    for (std::size_t j = 0; j < data_points; ++j) xs.push_back(ensembles::sample_haar_state(N, rng));
    FiniteFunctionFamily fam;
    fam.values = rmat(functions, data_points);
    for (std::size_t i = 0; i < functions; ++i) {
        cmat U = ensembles::sample_haar(N, rng);
        cmat Ophi = U * O.matrix() * U.adjoint();
        for (std::size_t j = 0; j < data_points; ++j)
            fam.values(i, j) = xs[j].amplitudes().dot(Ophi * xs[j].amplitudes()).real();
    }
    fam.fweights = rvec::Constant(functions, 1.0 / double(functions));
    fam.xweights = rvec::Constant(data_points, 1.0 / double(data_points));
    return fam;
}

SelfLearnVarianceCheck selflearn_loss_variance_check(const FiniteFunctionFamily& family,
                                                     std::size_t probe_thetas, Rng& rng) {
    const Eigen::Index m = family.values.rows();
    if (m < 2) throw dim_error("selflearn_loss_variance_check: need at least two functions");
    auto inner = [&](Eigen::Index a, Eigen::Index b) {
        double acc = 0;
        for (Eigen::Index j = 0; j < family.values.cols(); ++j)
            acc += family.xweights[j] * family.values(a, j) * family.values(b, j);
        return acc;
    };

    // rhs: functional variance of the family
    double exx = 0;
    for (Eigen::Index i = 0; i < m; ++i) exx += family.fweights[i] * inner(i, i);
    double emix = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            emix += family.fweights[i] * family.fweights[j] * inner(i, j);
    double fvar = exx - emix;

    SelfLearnVarianceCheck out;
    out.rhs = 4.0 * std::sqrt(std::max(0.0, fvar));

    // lhs: loss variance at sampled theta, exactly over the family
    for (std::size_t p = 0; p < probe_thetas; ++p) {
        Eigen::Index th = Eigen::Index(rng.integer(std::uint64_t(m)));
        double mean = 0, second = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            double loss = 0;
            for (Eigen::Index j = 0; j < family.values.cols(); ++j) {
                double diff = family.values(i, j) - family.values(th, j);
                loss += family.xweights[j] * diff * diff;
            }
            loss *= 0.5;
            mean += family.fweights[i] * loss;
            second += family.fweights[i] * loss * loss;
        }
        out.lhs = std::max(out.lhs, second - mean * mean);
    }
    out.pass = out.lhs <= out.rhs + 1e-12;
    return out;
}

// ---------------------------------------------------------------------------
// Parameter-shift probes
// ---------------------------------------------------------------------------

ShiftableModel::ShiftableModel(int n, int layers, Observable O)
    : n_(n), layers_(layers), O_(std::move(O)) {
    if (n < 1 || n > 12) throw budget_error("ShiftableModel: n out of range");
    if (layers < 1) throw dim_error("ShiftableModel: layers >= 1");
    if (O_.dim() != (1 << n)) throw dim_error("ShiftableModel: observable dimension");
}

double ShiftableModel::loss(const rvec& theta) const {
    if (theta.size() != num_params()) throw dim_error("ShiftableModel::loss: bad parameter count");
    const std::int64_t N = std::int64_t(1) << n_;
    cvec v = cvec::Zero(N);
    v[0] = 1.0;
    cmat cz = cmat::Identity(4, 4);
    cz(3, 3) = -1.0;
    int p = 0;
    for (int l = 0; l < layers_; ++l) {
        for (int q = 0; q < n_; ++q) {
            double tz = theta[p++], ty = theta[p++];
            cmat rz(2, 2);
            rz << std::exp(cplx(0, -tz / 2)), 0, 0, std::exp(cplx(0, tz / 2));
            cmat ry(2, 2);
            ry << std::cos(ty / 2), -std::sin(ty / 2), std::sin(ty / 2), std::cos(ty / 2);
            apply_single_qubit(v, n_, q, rz);
            apply_single_qubit(v, n_, q, ry);
        }
        for (int q = 0; q + 1 < n_; ++q) apply_two_qubit(v, n_, q, q + 1, cz);
    }
    double e = v.dot(O_.matrix() * v).real();
    return 0.5 * (1.0 + e);
}

double parameter_shift_gradient(const ShiftableModel& model, const rvec& theta, int i) {
    rvec up = theta, dn = theta;
    up[i] += M_PI / 2;
    dn[i] -= M_PI / 2;
    return 0.5 * (model.loss(up) - model.loss(dn));
}

double finite_difference_gradient(const ShiftableModel& model, const rvec& theta, int i,
                                  double step) {
    rvec up = theta, dn = theta;
    up[i] += step;
    dn[i] -= step;
    return (model.loss(up) - model.loss(dn)) / (2 * step);
}

double BPReport::max_tail() const {
    double m = 0;
    for (double t : tail_estimates) m = std::max(m, t);
    return m;
}

std::string BPReport::to_json() const {
    nlohmann::json j;
    j["model"] = model;
    j["tau"] = tau;
    j["tail_estimates"] = tail_estimates;
    j["gradient_variances"] = gradient_variances;
    j["loss_variance"] = loss_variance;
    j["max_shift_fd_deviation"] = max_shift_fd_deviation;
    j["samples"] = samples;
    return j.dump();
}

BPReport bp_probe(const ShiftableModel& model, double tau, std::size_t samples, Rng rng) {
    const int m = model.num_params();
    BPReport rep;
    rep.model = "shiftable-circuit(n=" + std::to_string(model.qubits()) + ")";
    rep.tau = tau;
    rep.samples = samples;
    rep.tail_estimates.assign(m, 0.0);
    rep.gradient_variances.assign(m, 0.0);

    std::vector<std::vector<double>> grads(m);
    std::vector<double> losses;
    for (std::size_t s = 0; s < samples; ++s) {
        rvec theta(m);
        for (int i = 0; i < m; ++i) theta[i] = rng.uniform(0, 2 * M_PI);
        losses.push_back(model.loss(theta));
        for (int i = 0; i < m; ++i) {
            double g = parameter_shift_gradient(model, theta, i);
            grads[i].push_back(g);
            if (std::abs(g) > tau) rep.tail_estimates[i] += 1.0;
        }
        if (s < 4) {
            // audit a few points against finite differences
            for (int i = 0; i < std::min(m, 3); ++i) {
                double fd = finite_difference_gradient(model, theta, i);
                rep.max_shift_fd_deviation =
                    std::max(rep.max_shift_fd_deviation,
                             std::abs(fd - parameter_shift_gradient(model, theta, i)));
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        rep.tail_estimates[i] /= double(samples);
        rep.gradient_variances[i] = variance_estimate(grads[i]).value;
    }
    rep.loss_variance = variance_estimate(losses).value;
    return rep;
}

VarianceReport random_init_expected_variance(const std::vector<Observable>& hamiltonians,
                                             double c, int n, std::size_t samples, Rng rng) {
    if (hamiltonians.empty()) throw dim_error("random_init_expected_variance: empty family");
    const int N = 1 << n;
    for (const auto& H : hamiltonians) {
        if (H.dim() != N) throw dim_error("random_init_expected_variance: dimension mismatch");
        if (std::abs(H.matrix().trace().real()) > 1e-9)
            throw error("random_init_expected_variance: Hamiltonians must be traceless");
        if (H.op_norm() > c + 1e-9)
            throw error("random_init_expected_variance: operator norm exceeds c");
    }

    std::vector<double> vals;
    for (std::size_t s = 0; s < samples; ++s) {
        PureState psi = ensembles::sample_haar_state(N, rng);
        // exact variance over the finite family at this initialization
        double mean = 0, second = 0;
        for (const auto& H : hamiltonians) {
            double l = expectation(psi, H) / c;
            mean += l;
            second += l * l;
        }
        mean /= double(hamiltonians.size());
        second /= double(hamiltonians.size());
        vals.push_back(second - mean * mean);
    }
    auto est = mean_estimate(vals);

    VarianceReport rep;
    rep.ensemble = "vqe-random-init/haar";
    rep.observable = "family(" + std::to_string(hamiltonians.size()) + ")";
    rep.n = n;
    rep.copies = 1;
    rep.estimate = est.value;
    rep.standard_error = est.stderr_;
    rep.analytic_bound = 1.0 / (double(N) + 1.0);
    rep.bound_name = "1/(N+1)";
    rep.pass = rep.estimate <= rep.analytic_bound + 3.0 * rep.standard_error;
    return rep;
}

VarianceReport dataupload_pauli_variance(int n, int block, const PauliWeyl& P, int depth,
                                         std::size_t samples, Rng rng) {
    if (n % block != 0) throw dim_error("dataupload_pauli_variance: block must divide n");
    if (P.n != n) throw dim_error("dataupload_pauli_variance: Pauli string size");
    const std::int64_t N = std::int64_t(1) << n;
    const int blocks = n / block;
    const int K = 1 << block;

    int blocks_hit = 0;
    for (int b = 0; b < blocks; ++b) {
        bool hit = false;
        for (int q = b * block; q < (b + 1) * block; ++q)
            if (((P.a >> q) & 1ULL) || ((P.b >> q) & 1ULL)) hit = true;
        if (hit) ++blocks_hit;
    }

    cmat Pd = P.dense();
    std::vector<double> vals;
    for (std::size_t s = 0; s < samples; ++s) {
        cvec v = cvec::Zero(N);
        v[0] = 1.0;
        for (int l = 0; l < depth; ++l) {
            // encoding layer: on-site unitaries; variational layer: block Haar
            for (int q = 0; q < n; ++q)
                apply_single_qubit(v, n, q, ensembles::sample_haar(2, rng));
            for (int b = 0; b < blocks; ++b) {
                cmat U = ensembles::sample_haar(K, rng);
                if (block == 1)
                    apply_single_qubit(v, n, b, U);
                else if (block == 2)
                    apply_two_qubit(v, n, 2 * b, 2 * b + 1, U);
                else
                    throw budget_error("dataupload_pauli_variance: block <= 2");
            }
        }
        double f = v.dot(Pd * v).real();
        vals.push_back(f * f); // mean is zero by the local 2-design property
    }
    auto est = mean_estimate(vals);

    VarianceReport rep;
    rep.ensemble = "data-reupload(block=" + std::to_string(block) + ",depth=" +
                   std::to_string(depth) + ")";
    rep.observable = "pauli-string";
    rep.n = n;
    rep.copies = 1;
    rep.estimate = est.value;
    rep.standard_error = est.stderr_;
    rep.analytic_bound = std::pow(1.0 / double(K - 1), blocks_hit);
    rep.bound_name = "local-block-envelope";
    rep.pass = rep.estimate <= rep.analytic_bound + 3.0 * rep.standard_error;
    return rep;
}

} // namespace evalq::hardness
