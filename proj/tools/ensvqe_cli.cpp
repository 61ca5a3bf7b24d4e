#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ensvqe.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

bool looks_like_fcidump(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ensvqe::ConfigError("cannot open " + path);
    std::string head(256, '\0');
    f.read(head.data(), static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(f.gcount()));
    std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::toupper(c); });
    return head.find("&FCI") != std::string::npos;
}

void print_values(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) std::printf("%ld %.17g\n", static_cast<long>(i), v(i));
}

int cmd_oracle(const std::string& path) {
    using namespace ensvqe;
    if (looks_like_fcidump(path)) {
        const auto ints = read_fcidump(path);
        const auto h = jordan_wigner(full_space(ints));
        SectorPredicate keep;
        if (ints.electrons > 0) {
            const int n = ints.electrons, ms2 = ints.ms2;
            keep = [n, ms2](std::uint64_t b) { return detail::particle_sector(b) == std::pair{n, ms2}; };
            std::printf("# sector N=%d 2Sz=%d\n", n, ms2);
        }
        print_values(sector_spectrum(h, keep));
    } else {
        const auto m = read_matrix_file(path);
        std::printf("# %ld x %ld matrix, %d qubits\n", static_cast<long>(m.dimension()),
                    static_cast<long>(m.dimension()), m.qubit_count());
        print_values(sector_spectrum(binary_map(m)));
    }
    return 0;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, int threads,
            const std::string& out_dir, double sigma) {
    using namespace ensvqe;
    auto cfg = load_scenario(config);
    if (seed) cfg.seed = *seed;
    RunOptions opt;
    opt.threads = threads;
    opt.smooth_sigma = sigma;
    opt.out_dir = out_dir.empty() ? std::filesystem::path("out") / cfg.name : std::filesystem::path(out_dir);
    const auto res = run_scenario(cfg, opt);
    std::printf("%s: %zu runs -> %s\n", cfg.name.c_str(), res.runs.size(), opt.out_dir->string().c_str());
    for (const auto& s : res.summaries) {
        std::printf("  %-10s x=%-8g trial=%-3d it=%-5d %-20s cost_err=%.3e trace_err=%.3e\n", s.scheme.c_str(),
                    s.scan_value, s.trial, s.iterations, s.status.c_str(), s.cost_error, s.trace_error);
    }
    return 0;
}

int cmd_stats(const std::vector<std::string>& files, std::uint64_t seed, const std::string& out_dir) {
    using namespace ensvqe;
    std::vector<TrialSummary> rows;
    for (const auto& f : files) {
        auto r = read_summary_csv(f);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : compare_all(rows, seed)) j.push_back(to_json(r));
    if (j.empty()) throw ConfigError("stats: need at least two weight schemes");
    const auto text = j.dump(2);
    std::printf("%s\n", text.c_str());
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / "stat_report.json") << text << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted- and equi-ensemble VQE workbench"};
    app.require_subcommand(1);

    std::string config, oracle_path, out_dir;
    std::vector<std::string> summaries;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    double sigma = 0.0;

    auto* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config, "scenario JSON")->required();
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--out-dir", out_dir, "output directory (default out/<name>)");
    run->add_option("--smooth-sigma", sigma, "Gaussian width for plot exports, in iterations")
        ->check(CLI::NonNegativeNumber);

    auto* stats = app.add_subcommand("stats", "paired tests between weight schemes");
    stats->add_option("summaries", summaries, "summary.csv files")->required();
    stats->add_option("--seed", seed, "bootstrap seed");
    stats->add_option("--out-dir", out_dir, "write stat_report.json here");

    auto* oracle = app.add_subcommand("oracle", "print the exact spectrum of an FCIDUMP or matrix file");
    oracle->add_option("input", oracle_path, "FCIDUMP or matrix file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config, seed, threads, out_dir, sigma);
        if (*stats) return cmd_stats(summaries, seed.value_or(0), out_dir);
        return cmd_oracle(oracle_path);
    } catch (const ensvqe::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
}
