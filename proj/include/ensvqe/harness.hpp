#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ansatz.hpp"
#include "dense.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "fcidump.hpp"
#include "fermion.hpp"
#include "optimizer.hpp"
#include "qdft.hpp"
#include "stats.hpp"

namespace ensvqe {

// ---------------------------------------------------------------------------
// Built-in synthetic two-state family

/// CAS(4,3) model: three spatial orbitals with energies eps0, eps1 and
/// eps1 + delta, on-site repulsion `hubbard`, inter-orbital Coulomb
/// `coulomb` and exchange `exchange`, plus a hopping `coupling` between
/// orbitals 1 and 2. Scanning delta moves the open-shell singlet 1 -> 2
/// through the closed-shell state. With coupling = 0 the model conserves the
/// parity of the occupation of orbital 2.
struct SyntheticTwoStateSpec {
    double eps0 = -1.0;
    double eps1 = -0.5;
    double delta = 0.6;
    double hubbard = 1.0;
    double coulomb = 0.3;
    double exchange = 0.1;
    double coupling = 0.05;
    double core = 0.0;

    double& field(const std::string& name) {
        if (name == "eps0") return eps0;
        if (name == "eps1") return eps1;
        if (name == "delta") return delta;
        if (name == "hubbard") return hubbard;
        if (name == "coulomb") return coulomb;
        if (name == "exchange") return exchange;
        if (name == "coupling") return coupling;
        if (name == "core") return core;
        throw ConfigError("synthetic_two_state: unknown parameter '" + name + "'");
    }
};

inline MolecularIntegrals synthetic_two_state_integrals(const SyntheticTwoStateSpec& s) {
    auto m = MolecularIntegrals::zeros(3);
    m.core_energy = s.core;
    m.one_body(0, 0) = s.eps0;
    m.one_body(1, 1) = s.eps1;
    m.one_body(2, 2) = s.eps1 + s.delta;
    m.one_body(1, 2) = m.one_body(2, 1) = s.coupling;
    for (int p = 0; p < 3; ++p) {
        m.two_body.set_symmetric(p, p, p, p, s.hubbard);
        for (int q = p + 1; q < 3; ++q) {
            m.two_body.set_symmetric(p, p, q, q, s.coulomb);
            m.two_body.set_symmetric(p, q, q, p, s.exchange);
        }
    }
    m.electrons = 4;
    return m;
}

// ---------------------------------------------------------------------------
// Scenario configuration

enum class SourceKind { fcidump, matrix, chain, synthetic };
enum class AnsatzKind { guccsd, rycnot };
enum class InitKind { zeros, uniform, perturbed };

struct ChainSpec {
    int sites = 16;
    double onsite = 0.0;
    double hopping = -1.0;
};

struct ProblemSource {
    SourceKind kind = SourceKind::synthetic;
    std::string path;
    ActiveSpaceSpec active;  ///< fcidump only; empty active list means all orbitals
    ChainSpec chain;
    SyntheticTwoStateSpec synthetic;
};

struct AnsatzSpec {
    AnsatzKind kind = AnsatzKind::guccsd;
    int repetitions = 1;
    int layers = 1;
};

struct InitSpec {
    InitKind kind = InitKind::zeros;
    double scale = 0.1;  ///< half-width for `perturbed`
};

struct NamedScheme {
    std::string name;
    WeightKind kind = WeightKind::equi;
    std::vector<double> values;  ///< explicit schemes only

    [[nodiscard]] WeightScheme make(int k) const {
        if (kind != WeightKind::explicit_values) return weights(kind, k);
        if (static_cast<int>(values.size()) != k) {
            throw ConfigError("weights '" + name + "': " + std::to_string(values.size()) + " values for K=" +
                              std::to_string(k));
        }
        return explicit_weights(values);
    }
};

struct ScanSpec {
    std::string variable;
    std::vector<double> values;
    std::vector<std::string> files;  ///< variable "file": one input per value
};

struct ScenarioConfig {
    std::string name = "scenario";
    ProblemSource source;
    AnsatzSpec ansatz;
    std::vector<NamedScheme> schemes;
    int ensemble_size = 2;
    std::vector<std::string> initial_states;  ///< labels; empty selects defaults
    double penalty_strength = 0.0;
    OptimizerConfig optimizer;
    std::optional<InitSpec> init;  ///< unset: zeros for guccsd, uniform for rycnot
    int trials = 1;
    std::uint64_t seed = 0;
    std::optional<ScanSpec> scan;

    [[nodiscard]] std::size_t point_count() const { return scan ? scan->values.size() : 1; }
    [[nodiscard]] double scan_value(std::size_t i) const { return scan ? scan->values[i] : 0.0; }
    [[nodiscard]] InitSpec effective_init() const {
        if (init) return *init;
        return {ansatz.kind == AnsatzKind::guccsd ? InitKind::zeros : InitKind::uniform, 0.1};
    }
    [[nodiscard]] bool fermionic() const {
        return source.kind == SourceKind::fcidump || source.kind == SourceKind::synthetic;
    }

    void validate() const {
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (ensemble_size < 1) throw ConfigError("K must be >= 1");
        if (schemes.empty()) throw ConfigError("at least one weight scheme is required");
        for (std::size_t a = 0; a < schemes.size(); ++a)
            for (std::size_t b = a + 1; b < schemes.size(); ++b)
                if (schemes[a].name == schemes[b].name) throw ConfigError("duplicate scheme name '" + schemes[a].name + "'");
        if (!(penalty_strength >= 0.0)) throw ConfigError("penalty strength must be >= 0");
        if (penalty_strength > 0.0 && !fermionic()) throw ConfigError("the S^2 penalty needs a fermionic problem");
        if (ansatz.kind == AnsatzKind::guccsd && !fermionic()) throw ConfigError("guccsd needs a fermionic problem");
        if (ansatz.repetitions < 1 || ansatz.layers < 1) throw ConfigError("ansatz repetitions/layers must be >= 1");
        if (scan) {
            if (scan->values.empty()) throw ConfigError("scan: empty value list");
            if (scan->variable == "file") {
                if (source.kind != SourceKind::fcidump && source.kind != SourceKind::matrix) {
                    throw ConfigError("scan over files needs an fcidump or matrix source");
                }
                if (scan->files.size() != scan->values.size()) throw ConfigError("scan: files and values differ in length");
            }
        }
        optimizer.validate();
    }
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
    const std::filesystem::path path(p);
    if (path.is_absolute() || base.empty()) return p;
    return (base / path).lexically_normal().string();
}

inline NamedScheme parse_scheme(const nlohmann::json& j, std::size_t index) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "equi") return {"equi", WeightKind::equi, {}};
        if (s == "optimal") return {"optimal", WeightKind::optimal, {}};
        throw ConfigError("unknown weight scheme '" + s + "'");
    }
    if (j.is_array()) return {"explicit" + std::to_string(index), WeightKind::explicit_values, j.get<std::vector<double>>()};
    if (j.is_object()) {
        NamedScheme s = j.contains("values") ? NamedScheme{"explicit" + std::to_string(index), WeightKind::explicit_values,
                                                           json_get<std::vector<double>>(j, "values", {})}
                                             : parse_scheme(j.at("kind"), index);
        s.name = json_get<std::string>(j, "name", s.name);
        return s;
    }
    throw ConfigError("weights: expected a string, array or object");
}

}  // namespace detail

/// Relative paths are resolved against `base_dir`.
inline ScenarioConfig parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    using detail::json_get;
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    ScenarioConfig c;
    c.name = json_get<std::string>(j, "name", c.name);

    if (!j.contains("problem")) throw ConfigError("missing 'problem'");
    const auto& p = j.at("problem");
    const auto type = json_get<std::string>(p, "type", "");
    if (type == "fcidump") {
        c.source.kind = SourceKind::fcidump;
        // index lists, or counts: `frozen: n` is orbitals 0..n-1, `active: m` the next m
        auto indices = [&](const char* key, int start) {
            if (!p.contains(key)) return std::vector<int>{};
            if (p.at(key).is_number_integer()) {
                std::vector<int> v(static_cast<std::size_t>(std::max(0, p.at(key).get<int>())));
                std::iota(v.begin(), v.end(), start);
                return v;
            }
            return json_get<std::vector<int>>(p, key, {});
        };
        c.source.active.frozen = indices("frozen", 0);
        c.source.active.active = indices("active", static_cast<int>(c.source.active.frozen.size()));
        c.source.active.active_electrons = json_get<int>(p, "active_electrons", 0);
    } else if (type == "matrix") {
        c.source.kind = SourceKind::matrix;
    } else if (type == "chain") {
        c.source.kind = SourceKind::chain;
        c.source.chain.sites = json_get<int>(p, "sites", c.source.chain.sites);
        c.source.chain.onsite = json_get<double>(p, "onsite", c.source.chain.onsite);
        c.source.chain.hopping = json_get<double>(p, "hopping", c.source.chain.hopping);
    } else if (type == "synthetic_two_state") {
        c.source.kind = SourceKind::synthetic;
        for (const auto& [k, v] : p.items()) {
            if (k == "type") continue;
            if (!v.is_number()) throw ConfigError("synthetic_two_state: '" + k + "' must be a number");
            c.source.synthetic.field(k) = v.get<double>();
        }
    } else {
        throw ConfigError("problem.type must be one of fcidump, matrix, chain, synthetic_two_state");
    }
    if (c.source.kind == SourceKind::fcidump || c.source.kind == SourceKind::matrix) {
        const auto path = json_get<std::string>(p, "path", "");
        if (path.empty() && !(j.contains("scan") && json_get<std::string>(j.at("scan"), "variable", "") == "file")) {
            throw ConfigError("problem.path is required");
        }
        if (!path.empty()) c.source.path = detail::resolve_path(path, base_dir);
    }

    if (j.contains("ansatz")) {
        const auto& a = j.at("ansatz");
        const auto kind = json_get<std::string>(a, "type", "guccsd");
        if (kind == "guccsd") c.ansatz.kind = AnsatzKind::guccsd;
        else if (kind == "rycnot") c.ansatz.kind = AnsatzKind::rycnot;
        else throw ConfigError("ansatz.type must be guccsd or rycnot");
        c.ansatz.repetitions = json_get<int>(a, "repetitions", 1);
        c.ansatz.layers = json_get<int>(a, "layers", 1);
    }

    c.schemes.clear();
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        // a flat numeric array is one explicit scheme; otherwise a list of schemes
        const bool single_explicit = w.is_array() && !w.empty() && w.front().is_number();
        if (w.is_array() && !single_explicit) {
            for (std::size_t i = 0; i < w.size(); ++i) c.schemes.push_back(detail::parse_scheme(w[i], i));
        } else {
            c.schemes.push_back(detail::parse_scheme(w, 0));
        }
    } else {
        c.schemes.push_back({"equi", WeightKind::equi, {}});
    }

    c.ensemble_size = json_get<int>(j, "K", c.ensemble_size);
    c.initial_states = json_get<std::vector<std::string>>(j, "initial_states", {});
    c.penalty_strength = json_get<double>(j, "penalty", 0.0);

    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        c.optimizer.memory = json_get<int>(o, "memory", c.optimizer.memory);
        c.optimizer.gradient_tolerance = json_get<double>(o, "gradient_tolerance", c.optimizer.gradient_tolerance);
        c.optimizer.max_iterations = json_get<int>(o, "max_iterations", c.optimizer.max_iterations);
        c.optimizer.armijo_c1 = json_get<double>(o, "armijo_c1", c.optimizer.armijo_c1);
        c.optimizer.shrink = json_get<double>(o, "shrink", c.optimizer.shrink);
        c.optimizer.max_backtracks = json_get<int>(o, "max_backtracks", c.optimizer.max_backtracks);
    }
    if (j.contains("init")) {
        const auto& in = j.at("init");
        InitSpec s;
        const auto kind = in.is_string() ? in.get<std::string>() : json_get<std::string>(in, "kind", "zeros");
        if (kind == "zeros") s.kind = InitKind::zeros;
        else if (kind == "uniform") s.kind = InitKind::uniform;
        else if (kind == "perturbed") s.kind = InitKind::perturbed;
        else throw ConfigError("init must be zeros, uniform or perturbed");
        if (in.is_object()) s.scale = json_get<double>(in, "scale", s.scale);
        c.init = s;
    }
    c.trials = json_get<int>(j, "trials", 1);
    c.seed = json_get<std::uint64_t>(j, "seed", 0);
    if (j.contains("scan")) {
        const auto& s = j.at("scan");
        ScanSpec sc;
        sc.variable = json_get<std::string>(s, "variable", "");
        sc.values = json_get<std::vector<double>>(s, "values", {});
        for (const auto& f : json_get<std::vector<std::string>>(s, "files", {}))
            sc.files.push_back(detail::resolve_path(f, base_dir));
        c.scan = sc;
    }
    c.validate();
    return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open scenario: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("scenario " + path + ": " + e.what());
    }
    return parse_scenario(j, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Problem materialization

/// Everything one scan point needs: Hamiltonian, reference states, circuit and
/// the exact reference spectrum of H + mu S^2 in the sector of the states.
struct ScanPoint {
    double scan_value = 0.0;
    PauliOperator hamiltonian{1};
    std::optional<PauliOperator> penalty;
    std::vector<InitialState> initial_states;
    std::optional<AnsatzCircuit> circuit;
    Eigen::VectorXd oracle;  ///< ascending, at least K values
    std::string sector;      ///< description, e.g. "N=4,Sz=0"
};

namespace detail {

inline std::pair<int, int> particle_sector(std::uint64_t b) {
    constexpr std::uint64_t up = 0x5555555555555555ULL;
    return {std::popcount(b), std::popcount(b & up) - std::popcount(b & ~up)};
}

/// (N, 2 Sz) shared by every determinant of every state, if any.
inline std::optional<std::pair<int, int>> common_sector(const std::vector<InitialState>& states) {
    std::optional<std::pair<int, int>> s;
    for (const auto& st : states)
        for (const auto& [b, a] : st.amplitudes) {
            if (std::abs(a) == 0.0) continue;
            const auto here = particle_sector(b);
            if (s && *s != here) return std::nullopt;
            s = here;
        }
    return s;
}

inline std::vector<std::string> default_fermionic_states(int electrons, int orbitals, int k) {
    std::vector<std::string> out{"hf(" + std::to_string(electrons) + ")"};
    const int homo = electrons / 2 - 1;
    for (int a = electrons / 2; static_cast<int>(out.size()) < k && a < orbitals; ++a)
        out.push_back("csf(" + std::to_string(electrons) + "," + std::to_string(homo) + "," + std::to_string(a) + ")");
    if (static_cast<int>(out.size()) < k) throw ConfigError("K too large for default initial states; list them explicitly");
    return out;
}

}  // namespace detail

inline ScanPoint materialize(const ScenarioConfig& cfg, std::size_t point) {
    ScanPoint sp;
    sp.scan_value = cfg.scan_value(point);
    const bool file_scan = cfg.scan && cfg.scan->variable == "file";
    const std::string path = file_scan ? cfg.scan->files[point] : cfg.source.path;
    int qubits = 0;
    int orbitals = 0;
    int electrons = 0;

    switch (cfg.source.kind) {
        case SourceKind::synthetic:
        case SourceKind::fcidump: {
            FrozenCoreHamiltonian h;
            if (cfg.source.kind == SourceKind::synthetic) {
                auto spec = cfg.source.synthetic;
                if (cfg.scan) spec.field(cfg.scan->variable) = sp.scan_value;
                h = full_space(synthetic_two_state_integrals(spec));
                electrons = 4;
            } else {
                if (cfg.scan && !file_scan) throw ConfigError("fcidump sources only scan over 'file'");
                const auto ints = read_fcidump(path);
                if (!cfg.source.active.active.empty()) {
                    h = freeze_core(ints, cfg.source.active);
                    electrons = cfg.source.active.active_electrons;
                } else {
                    h = full_space(ints);
                    electrons = ints.electrons;
                }
            }
            orbitals = h.active_orbitals;
            qubits = 2 * orbitals;
            sp.hamiltonian = jordan_wigner(h);
            if (cfg.penalty_strength > 0.0) sp.penalty = s_squared_operator(orbitals);
            break;
        }
        case SourceKind::matrix:
        case SourceKind::chain: {
            OneBodyMatrix m;
            if (cfg.source.kind == SourceKind::matrix) {
                if (cfg.scan && !file_scan) throw ConfigError("matrix sources only scan over 'file'");
                m = read_matrix_file(path);
            } else {
                auto chain = cfg.source.chain;
                if (cfg.scan) {
                    if (cfg.scan->variable == "hopping") chain.hopping = sp.scan_value;
                    else if (cfg.scan->variable == "onsite") chain.onsite = sp.scan_value;
                    else throw ConfigError("chain: unknown scan variable '" + cfg.scan->variable + "'");
                }
                m = chain_hamiltonian(chain.sites, chain.onsite, chain.hopping);
            }
            sp.hamiltonian = binary_map(m);
            qubits = m.qubit_count();
            break;
        }
    }

    auto labels = cfg.initial_states;
    if (labels.empty()) {
        if (cfg.fermionic()) {
            if (electrons < 2) throw ConfigError("electron count unknown; list initial states explicitly");
            labels = detail::default_fermionic_states(electrons, orbitals, cfg.ensemble_size);
        } else {
            for (int k = 0; k < cfg.ensemble_size; ++k) labels.push_back("basis(" + std::to_string(k) + ")");
        }
    }
    if (static_cast<int>(labels.size()) != cfg.ensemble_size) {
        throw ConfigError(std::to_string(labels.size()) + " initial states for K=" + std::to_string(cfg.ensemble_size));
    }
    for (const auto& l : labels) {
        try {
            sp.initial_states.push_back(prepare_initial(l, qubits));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    if (cfg.ansatz.kind == AnsatzKind::guccsd) sp.circuit = build_guccsd(orbitals, cfg.ansatz.repetitions);
    else sp.circuit = build_rycnot(qubits, cfg.ansatz.layers);

    PauliOperator effective = sp.hamiltonian;
    if (sp.penalty) effective += cfg.penalty_strength * *sp.penalty;
    SectorPredicate keep;
    sp.sector = "full";
    if (cfg.fermionic()) {
        if (const auto s = detail::common_sector(sp.initial_states)) {
            keep = [s](std::uint64_t b) { return detail::particle_sector(b) == *s; };
            sp.sector = "N=" + std::to_string(s->first) + ",2Sz=" + std::to_string(s->second);
        }
    }
    sp.oracle = sector_spectrum(effective, keep);
    if (sp.oracle.size() < cfg.ensemble_size) throw ConfigError("sector holds fewer states than K");
    return sp;
}

// ---------------------------------------------------------------------------
// Running

/// Smallest cost reachable by any K orthonormal states: the largest weight
/// paired with the lowest eigenvalue, and so on.
inline double optimal_cost(const Eigen::VectorXd& oracle, const WeightScheme& w) {
    std::vector<double> sorted = w.values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double s = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) s += sorted[j] * oracle(static_cast<Eigen::Index>(j));
    return s;
}

inline double oracle_trace(const Eigen::VectorXd& oracle, std::size_t k) {
    return oracle.head(static_cast<Eigen::Index>(k)).mean();
}

/// Trace of H + mu S^2 over the ensemble, the quantity the oracle spectrum
/// bounds; equals the cost under equal weights.
inline double effective_trace(const IterationRecord& r) {
    double t = r.trace;
    for (double p : r.per_state_penalties) t += p / static_cast<double>(r.per_state_penalties.size());
    return t;
}

struct RunResult {
    std::string scheme;
    std::size_t point = 0;
    double scan_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<double> params;
    ConvergenceRecord record;
    std::vector<double> cost_errors;   ///< per iteration
    std::vector<double> trace_errors;  ///< per iteration
    std::vector<std::size_t> swaps;    ///< iterations where the energy order changed
    std::vector<double> postdiag_errors;  ///< |post-diagonalized - exact|, ascending order
    std::vector<double> state_errors;     ///< |E_j - exact eigenvalue matched by weight rank|

    [[nodiscard]] int iterations() const { return static_cast<int>(record.iterations.size()) - 1; }
    [[nodiscard]] double final_cost_error() const { return cost_errors.back(); }
    [[nodiscard]] double final_trace_error() const { return trace_errors.back(); }
};

struct TrialSummary {
    std::string scheme;
    double scan_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    int iterations = 0;
    std::string status;
    double cost_error = 0.0;
    double trace_error = 0.0;
    std::size_t swap_events = 0;
    double auc = 0.0;  ///< trapezoidal area of final trace error over the scan, per (scheme, trial)
    double postdiag_max_error = 0.0;
};

/// Seed of trial t; identical across schemes and scan points so runs are paired.
inline std::uint64_t trial_seed(std::uint64_t seed, int trial) { return seed + static_cast<std::uint64_t>(trial); }

inline std::vector<double> initial_parameters(const InitSpec& init, int count, std::uint64_t seed) {
    std::vector<double> x(static_cast<std::size_t>(count), 0.0);
    if (init.kind == InitKind::zeros) return x;
    std::mt19937_64 rng(seed);
    const double half = init.kind == InitKind::uniform ? std::numbers::pi : init.scale;
    for (double& v : x) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
        v = half * (2.0 * u - 1.0);
    }
    return x;
}

/// Builds the problem for one scheme, minimizes and scores every iterate
/// against the oracle.
inline RunResult run_single(const ScenarioConfig& cfg, const ScanPoint& sp, const NamedScheme& scheme,
                            std::size_t point, int trial) {
    RunResult r;
    r.scheme = scheme.name;
    r.point = point;
    r.scan_value = sp.scan_value;
    r.trial = trial;
    r.seed = trial_seed(cfg.seed, trial);
    const WeightScheme w = scheme.make(cfg.ensemble_size);
    const EnsembleProblem problem(sp.hamiltonian, sp.initial_states, *sp.circuit, w, sp.penalty,
                                  sp.penalty ? cfg.penalty_strength : 0.0);
    auto x0 = initial_parameters(cfg.effective_init(), problem.parameter_count(), r.seed);
    auto res = minimize(problem, std::move(x0), cfg.optimizer);
    r.params = std::move(res.params);
    r.record = std::move(res.record);

    const double best = optimal_cost(sp.oracle, w);
    const double tr = oracle_trace(sp.oracle, w.size());
    std::vector<std::vector<double>> energies;
    for (const auto& it : r.record.iterations) {
        r.cost_errors.push_back(std::abs(it.cost - best));
        r.trace_errors.push_back(std::abs(effective_trace(it) - tr));
        energies.push_back(it.per_state_energies);
    }
    r.swaps = swap_events(energies);

    const auto pd = post_diagonalize(problem, r.params);
    for (Eigen::Index k = 0; k < pd.eigenvalues.size(); ++k)
        r.postdiag_errors.push_back(std::abs(pd.eigenvalues(k) - sp.oracle(k)));
    // state j is meant to reach the eigenvalue whose rank matches its weight rank
    std::vector<std::size_t> rank(w.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    r.state_errors.assign(w.size(), 0.0);
    const auto& last = r.record.iterations.back();
    for (std::size_t pos = 0; pos < rank.size(); ++pos) {
        const std::size_t j = rank[pos];
        const double pen = last.per_state_penalties.empty() ? 0.0 : last.per_state_penalties[j];
        r.state_errors[j] = std::abs(last.per_state_energies[j] + pen - sp.oracle(static_cast<Eigen::Index>(pos)));
    }
    return r;
}

struct RunOptions {
    int threads = 1;
    std::optional<std::filesystem::path> out_dir;
    double smooth_sigma = 0.0;  ///< > 0 writes smoothed plot exports
};

// ---------------------------------------------------------------------------
// CSV / JSON output

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string record_file_name(const RunResult& r) {
    return r.scheme + "_p" + std::to_string(r.point) + "_t" + std::to_string(r.trial) + ".csv";
}

}  // namespace detail

inline void write_record_csv(std::ostream& out, const RunResult& r, const std::vector<InitialState>& states) {
    out << "iteration,cost,trace,cost_error,trace_error,gradient_inf_norm,swap";
    for (std::size_t j = 0; j < states.size(); ++j) out << ",E_" << state_label(j);
    out << '\n';
    std::size_t next_swap = 0;
    for (std::size_t i = 0; i < r.record.iterations.size(); ++i) {
        const auto& it = r.record.iterations[i];
        const bool swap = next_swap < r.swaps.size() && r.swaps[next_swap] == i;
        if (swap) ++next_swap;
        out << it.iteration << ',' << detail::fmt(it.cost) << ',' << detail::fmt(it.trace) << ','
            << detail::fmt(r.cost_errors[i]) << ',' << detail::fmt(r.trace_errors[i]) << ','
            << detail::fmt(it.gradient_inf_norm) << ',' << (swap ? 1 : 0);
        for (double e : it.per_state_energies) out << ',' << detail::fmt(e);
        out << '\n';
    }
    out << "# status," << to_string(r.record.status) << '\n';
}

inline void write_plot_csv(std::ostream& out, const RunResult& r, double sigma) {
    const auto c = gaussian_smooth(r.cost_errors, sigma);
    const auto t = gaussian_smooth(r.trace_errors, sigma);
    out << "iteration,cost_error,trace_error\n";
    for (std::size_t i = 0; i < c.size(); ++i) out << i << ',' << detail::fmt(c[i]) << ',' << detail::fmt(t[i]) << '\n';
}

inline const char* summary_header() {
    return "scheme,scan_value,trial,seed,iterations,status,cost_error,trace_error,swap_events,auc,postdiag_max_error";
}

inline void write_summary_csv(std::ostream& out, const std::vector<TrialSummary>& rows) {
    out << summary_header() << '\n';
    for (const auto& s : rows) {
        out << s.scheme << ',' << detail::fmt(s.scan_value) << ',' << s.trial << ',' << s.seed << ',' << s.iterations
            << ',' << s.status << ',' << detail::fmt(s.cost_error) << ',' << detail::fmt(s.trace_error) << ','
            << s.swap_events << ',' << detail::fmt(s.auc) << ',' << detail::fmt(s.postdiag_max_error) << '\n';
    }
}

inline std::vector<TrialSummary> read_summary_csv(std::istream& in) {
    std::string line;
    std::size_t n = 1;
    if (!std::getline(in, line) || line != summary_header()) throw ParseError("unexpected summary header", n);
    std::vector<TrialSummary> rows;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 11) throw ParseError("expected 11 fields", n);
        try {
            rows.push_back({f[0], std::stod(f[1]), std::stoi(f[2]), std::stoull(f[3]), std::stoi(f[4]), f[5],
                            std::stod(f[6]), std::stod(f[7]), std::stoull(f[8]), std::stod(f[9]), std::stod(f[10])});
        } catch (const std::logic_error&) {
            throw ParseError("malformed summary row", n);
        }
    }
    return rows;
}

inline std::vector<TrialSummary> read_summary_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open summary: " + path);
    return read_summary_csv(f);
}

// ---------------------------------------------------------------------------
// Statistics over trial summaries

struct PointTest {
    double scan_value = 0.0;
    int n = 0;
    std::optional<double> statistic;  ///< empty when every difference is zero
    std::optional<double> p_value;
    std::optional<double> p_adjusted;
    bool significant = false;
};

/// Paired comparison of scheme b against scheme a on the final trace error:
/// differences are b - a per trial.
struct StatReport {
    std::string scheme_a, scheme_b;
    std::vector<PointTest> points;
    std::optional<double> auc_statistic, auc_p_value;
    std::vector<double> band_scan_values, band_mean, band_lower, band_upper;
};

inline StatReport compare_schemes(const std::vector<TrialSummary>& rows, const std::string& a, const std::string& b,
                                  std::uint64_t seed = 0, double q = 0.05) {
    // (scan value, trial) -> trace error, per scheme
    std::map<double, std::map<int, double>> ea, eb;
    std::map<int, double> auc_a, auc_b;
    for (const auto& r : rows) {
        if (r.scheme == a) {
            ea[r.scan_value][r.trial] = r.trace_error;
            auc_a[r.trial] = r.auc;
        } else if (r.scheme == b) {
            eb[r.scan_value][r.trial] = r.trace_error;
            auc_b[r.trial] = r.auc;
        }
    }
    if (ea.empty() || eb.empty()) throw ConfigError("summary lacks scheme '" + (ea.empty() ? a : b) + "'");
    StatReport rep{a, b, {}, {}, {}, {}, {}, {}, {}};
    std::vector<double> raw;
    std::vector<std::size_t> defined;
    std::map<int, std::vector<double>> curves;  // trial -> difference curve
    for (const auto& [x, ta] : ea) {
        const auto it = eb.find(x);
        if (it == eb.end()) continue;
        std::vector<double> d;
        for (const auto& [t, v] : ta) {
            const auto jt = it->second.find(t);
            if (jt == it->second.end()) continue;
            d.push_back(jt->second - v);
            curves[t].push_back(jt->second - v);
        }
        PointTest pt;
        pt.scan_value = x;
        pt.n = static_cast<int>(d.size());
        if (std::any_of(d.begin(), d.end(), [](double v) { return v != 0.0; })) {
            const auto w = wilcoxon_signed_rank(d);
            pt.statistic = w.statistic;
            pt.p_value = w.p_value;
            raw.push_back(w.p_value);
            defined.push_back(rep.points.size());
        }
        rep.points.push_back(pt);
        rep.band_scan_values.push_back(x);
    }
    if (!raw.empty()) {
        const auto bh = benjamini_hochberg(raw, q);
        for (std::size_t i = 0; i < defined.size(); ++i) {
            rep.points[defined[i]].p_adjusted = bh.adjusted[i];
            rep.points[defined[i]].significant = bh.significant[i];
        }
    }
    std::vector<double> dauc;
    for (const auto& [t, v] : auc_a)
        if (auc_b.count(t)) dauc.push_back(auc_b[t] - v);
    if (std::any_of(dauc.begin(), dauc.end(), [](double v) { return v != 0.0; })) {
        const auto w = wilcoxon_signed_rank(dauc);
        rep.auc_statistic = w.statistic;
        rep.auc_p_value = w.p_value;
    }
    std::vector<std::vector<double>> c;
    for (auto& [t, v] : curves)
        if (v.size() == rep.band_scan_values.size()) c.push_back(v);
    if (c.size() >= 2) {
        const auto band = bootstrap_band(c, 0.95, 2000, seed);
        rep.band_mean = band.mean;
        rep.band_lower = band.lower;
        rep.band_upper = band.upper;
    }
    return rep;
}

inline nlohmann::json to_json(const StatReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["scheme_a"] = r.scheme_a;
    j["scheme_b"] = r.scheme_b;
    j["metric"] = "trace_error";
    j["points"] = nlohmann::json::array();
    for (const auto& p : r.points) {
        j["points"].push_back({{"scan_value", p.scan_value},
                               {"n", p.n},
                               {"statistic", opt(p.statistic)},
                               {"p_value", opt(p.p_value)},
                               {"p_adjusted", opt(p.p_adjusted)},
                               {"significant", p.significant}});
    }
    j["auc"] = {{"statistic", opt(r.auc_statistic)}, {"p_value", opt(r.auc_p_value)}};
    j["band"] = {{"confidence", 0.95},
                 {"resamples", 2000},
                 {"scan_values", r.band_scan_values},
                 {"mean", r.band_mean},
                 {"lower", r.band_lower},
                 {"upper", r.band_upper}};
    return j;
}

/// One comparison per scheme after the first, each against the first.
inline std::vector<StatReport> compare_all(const std::vector<TrialSummary>& rows, std::uint64_t seed = 0) {
    std::vector<std::string> names;
    for (const auto& r : rows)
        if (std::find(names.begin(), names.end(), r.scheme) == names.end()) names.push_back(r.scheme);
    std::vector<StatReport> out;
    for (std::size_t i = 1; i < names.size(); ++i) out.push_back(compare_schemes(rows, names[0], names[i], seed));
    return out;
}

// ---------------------------------------------------------------------------
// Scenario driver

struct ScenarioResult {
    std::vector<ScanPoint> points;
    std::vector<RunResult> runs;  ///< ordered by (scheme, point, trial)
    std::vector<TrialSummary> summaries;
    std::vector<StatReport> reports;  ///< empty with one scheme or one trial
};

inline std::vector<TrialSummary> summarize(const ScenarioConfig& cfg, const std::vector<RunResult>& runs) {
    std::vector<double> xs;
    for (std::size_t p = 0; p < cfg.point_count(); ++p) xs.push_back(cfg.scan_value(p));
    std::map<std::pair<std::string, int>, std::vector<double>> curves;
    for (const auto& r : runs) curves[{r.scheme, r.trial}].push_back(r.final_trace_error());
    std::vector<TrialSummary> out;
    for (const auto& r : runs) {
        const auto& y = curves[{r.scheme, r.trial}];
        out.push_back({r.scheme, r.scan_value, r.trial, r.seed, r.iterations(), to_string(r.record.status),
                       r.final_cost_error(), r.final_trace_error(), r.swaps.size(),
                       y.size() == xs.size() ? trapezoid_auc(xs, y) : 0.0,
                       *std::max_element(r.postdiag_errors.begin(), r.postdiag_errors.end())});
    }
    return out;
}

/// Runs every (scheme, scan point, trial) job. Jobs are independent and may
/// run on several threads; outputs do not depend on the thread count.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opt = {}) {
    cfg.validate();
    if (opt.threads < 1) throw ConfigError("threads must be >= 1");
    ScenarioResult res;
    for (std::size_t p = 0; p < cfg.point_count(); ++p) res.points.push_back(materialize(cfg, p));

    struct Job {
        std::size_t scheme, point;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s)
        for (std::size_t p = 0; p < cfg.point_count(); ++p)
            for (int t = 0; t < cfg.trials; ++t) jobs.push_back({s, p, t});

    if (opt.out_dir) {
        std::filesystem::create_directories(*opt.out_dir / "records");
        if (opt.smooth_sigma > 0.0) std::filesystem::create_directories(*opt.out_dir / "plots");
    }

    res.runs.resize(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                const auto& jb = jobs[i];
                const auto& sp = res.points[jb.point];
                res.runs[i] = run_single(cfg, sp, cfg.schemes[jb.scheme], jb.point, jb.trial);
                if (opt.out_dir) {
                    std::ofstream f(*opt.out_dir / "records" / detail::record_file_name(res.runs[i]));
                    write_record_csv(f, res.runs[i], sp.initial_states);
                    if (opt.smooth_sigma > 0.0) {
                        std::ofstream g(*opt.out_dir / "plots" / detail::record_file_name(res.runs[i]));
                        write_plot_csv(g, res.runs[i], opt.smooth_sigma);
                    }
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n_threads = std::min<int>(opt.threads, static_cast<int>(jobs.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    res.summaries = summarize(cfg, res.runs);
    if (cfg.schemes.size() >= 2 && cfg.trials >= 2) res.reports = compare_all(res.summaries, cfg.seed);

    if (opt.out_dir) {
        std::ofstream f(*opt.out_dir / "summary.csv");
        write_summary_csv(f, res.summaries);
        if (!res.reports.empty()) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : res.reports) j.push_back(to_json(r));
            std::ofstream g(*opt.out_dir / "stat_report.json");
            g << j.dump(2) << '\n';
        }
    }
    return res;
}

}  // namespace ensvqe
