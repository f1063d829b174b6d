// spinbath command-line front end: sweep, oracle, scaling, presets
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "spinbath/sweep.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw spinbath::ConfigError({{path, 0, "file", "cannot open for reading"}});
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

template <typename T>
std::optional<T> env_number(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    T out{};
    if (!spinbath::detail::Resolver::parse_number(v, out)) {
        throw spinbath::ConfigError({{"environment", 0, name, std::string("cannot parse '") + v + "'"}});
    }
    return out;
}

// Flags beat environment variables, which beat the config file.
void apply_overrides(spinbath::RunConfig& cfg, const std::optional<unsigned>& threads,
                     const std::optional<std::uint64_t>& seed) {
    if (auto t = env_number<unsigned>("SPINBATH_THREADS")) cfg.execution.threads = *t;
    if (auto s = env_number<std::uint64_t>("SPINBATH_SEED")) cfg.execution.seed = *s;
    if (threads) cfg.execution.threads = *threads;
    if (seed) cfg.execution.seed = *seed;
    if (cfg.execution.threads < 1) throw spinbath::ConfigError({{"command line", 0, "threads", "must be >= 1"}});
}

int cmd_sweep(const std::string& config_path, const std::string& manifest_path, const std::string& out_dir,
              const std::optional<unsigned>& threads, const std::optional<std::uint64_t>& seed) {
    spinbath::RunConfig cfg = manifest_path.empty()
                                  ? spinbath::parse_config(read_text(config_path), config_path)
                                  : spinbath::config_from_manifest(read_text(manifest_path), manifest_path);
    apply_overrides(cfg, threads, seed);
    spinbath::SweepResult res;
    const auto files = spinbath::run_sweep(cfg, out_dir, cfg.execution.threads, &res);
    std::cout << "wrote " << files.csv.string() << " (" << res.rows.size() << " points, " << res.wall_seconds
              << " s)\n"
              << "wrote " << files.manifest.string() << "\n";
    if (res.degenerate_samples > 0) {
        std::cout << "note: " << res.degenerate_samples << " degenerate samples skipped at " << res.points_with_degenerate
                  << " grid points\n";
    }
    return 0;
}

void print_row(const std::string& name, double reference, double value, double tolerance) {
    const double diff = std::abs(value - reference);
    std::printf("  %-34s reference % .12e  value % .12e  |diff| %.3e  tol %.1e  %s\n", name.c_str(), reference, value,
                diff, tolerance, diff <= tolerance ? "ok" : "MISMATCH");
}

int cmd_oracle(const std::string& which, std::uint64_t seed, unsigned threads) {
    using namespace spinbath;
    if (which == "uniaxial" || which == "commuting") {
        const SmallBath bath{{0.8e6, 1.1e6, 1.7e6, 0.45e6, 1.3e6, 2.1e6}, which == "uniaxial" ? Axis::X : Axis::Z};
        std::cout << "case " << which << ": 6 spins, couplings (rad/s) 0.8e6 1.1e6 1.7e6 0.45e6 1.3e6 2.1e6\n";
        for (double t_M : {0.5e-6, 2e-6, 8e-6}) {
            for (double t_I : {0.0, 1e-6, 5e-6}) {
                const auto o = protocol_oracle(bath, t_M, t_I, 512, seed, threads);
                std::printf(" t_M %.2e s  t_I %.2e s\n", t_M, t_I);
                if (which == "uniaxial") {
                    std::vector<CouplingCluster> clusters;
                    for (double A : bath.couplings) clusters.push_back({0, A, 1});
                    const double c = correlation_uniaxial({clusters, std::nullopt, t_M, t_I, 0.5, DotMode::Single});
                    print_row("closed form vs oracle two-term", o.c_two_term, c, 1e-10);
                    print_row("full protocol vs two-term", o.c_two_term, o.c_exact, 1e-12);
                    std::printf("  %-34s %.6e\n", "FID envelope (dropped-term scale)", o.fid_amplitude);
                } else {
                    const auto ref = protocol_oracle(bath, t_M, 0.0, 512, seed, threads);
                    print_row("C(t_I) vs C(0)", ref.c_exact, o.c_exact, 1e-12);
                }
            }
        }
        return 0;
    }
    if (which == "gaussian") {
        std::mt19937_64 eng(seed);
        std::normal_distribution<double> g;
        std::cout << "case gaussian: T = H - iK (H Hermitian, K positive semidefinite), 1e5 samples\n";
        for (int dim = 1; dim <= 6; ++dim) {
            ComplexMatrix X(dim, dim), Y(dim, dim);
            for (int i = 0; i < dim; ++i) {
                for (int j = 0; j < dim; ++j) {
                    X(i, j) = {g(eng), g(eng)};
                    Y(i, j) = {g(eng), g(eng)};
                }
            }
            const ComplexMatrix T = 0.3 * (X + X.adjoint()) - cplx(0, 0.2) * (Y * Y.adjoint());
            const auto r = gaussian_identity_check(T, 100000, seed + static_cast<std::uint64_t>(dim));
            std::printf("  dim %d  closed %+.6f%+.6fi  mc %+.6f%+.6fi  stderr %.2e  %s\n", dim, r.closed_form.real(),
                        r.closed_form.imag(), r.mc_mean.real(), r.mc_mean.imag(), r.std_error,
                        r.consistent(3.0) ? "ok" : "MISMATCH");
        }
        return 0;
    }
    if (which == "classical-vector") {
        // One cluster per GaAs isotope: three components with distinct Larmor frequencies.
        const auto cfg = parse_config(presets::find("gaas-se-se-se")->text, "preset:gaas-se-se-se");
        const double B = cfg.semiclassical.b_ext;
        const auto comps = make_components(build_clusters(cfg.geometry, cfg.species, 1), cfg.species, cfg.constants, B);
        std::vector<double> gamma;
        for (const auto& s : cfg.species) gamma.push_back(s.gamma);
        const double t_M = 1e-6;
        std::cout << "case classical-vector: GaAs, one component per isotope, delta_B = 0, single dot, 1e5 oracle samples\n";
        for (double t_I : {0.0, 2e-6, 5e-6}) {
            for (auto inter : {ProtocolKind::SE, ProtocolKind::FID}) {
                const ProtocolSpec spec{inter, 1, {}};
                SemiclassicalConfig sc;
                sc.components = comps;
                sc.species_gamma = gamma;
                sc.constants = cfg.constants;
                sc.B_ext = B;
                sc.t_M = t_M;
                sc.t_I = t_I;
                sc.sequence = {PulseProtocol::spin_echo(t_M), spec.make(t_I)};
                sc.dots = DotMode::Single;
                const auto tm = correlation_semiclassical(sc, threads);
                const ClassicalVectorConfig cv{comps, gamma, cfg.constants, B, 0.0, t_M, t_I, sc.sequence, false};
                const auto mc = classical_vector_mc(cv, 100000, seed, threads);
                const double tol = 3.0 * std::hypot(tm.std_error, mc.std_error);
                std::printf(" t_I %.1e s  SE-%s-SE\n", t_I, spec.name().c_str());
                print_row("T-matrix vs classical vectors", mc.C, tm.C, tol);
            }
        }
        return 0;
    }
    throw ConfigError({{"command line", 0, "oracle.case", "unknown case '" + which +
                                                          "' (uniaxial | commuting | gaussian | classical-vector)"}});
}

int cmd_scaling(const std::string& config_path) {
    using namespace spinbath;
    const auto cfg = parse_config(read_text(config_path), config_path);
    ScalingOptions opt;
    opt.n_clusters = cfg.scaling.n_clusters;
    opt.dots = cfg.uniaxial.dots;
    const auto pts = scaling_contour(cfg.scaling.n_values, cfg.species, cfg.geometry, opt);
    std::printf("N,t_s,t_times_tau_s2,mean_A_rad_per_s\n");
    for (const auto& p : pts) {
        if (p.found) std::printf("%llu,%.17g,%.17g,%.17g\n", static_cast<unsigned long long>(p.N), p.t, p.product, p.mean_A);
        else std::printf("%llu,nan,nan,%.17g\n", static_cast<unsigned long long>(p.N), p.mean_A);
    }
    std::printf("# fitted exponent of t*tau vs N: %.6f\n", scaling_exponent(pts));
    return 0;
}

int cmd_presets(const std::string& name) {
    if (name.empty()) {
        for (const auto& p : spinbath::presets::all()) std::cout << p.name << "  " << p.description << "\n";
        return 0;
    }
    const auto p = spinbath::presets::find(name);
    if (!p) throw spinbath::ConfigError({{"command line", 0, "presets", "unknown preset '" + name + "'"}});
    std::cout << p->text;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spinbath: qubit measurement correlations under nuclear-spin-bath backaction"};
    app.require_subcommand(1);

    std::string config_path, manifest_path, out_dir = ".";
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    auto* sweep = app.add_subcommand("sweep", "evaluate C on the configured (t_M, t_I) grid");
    auto* cfg_opt = sweep->add_option("--config", config_path, "config file");
    auto* man_opt = sweep->add_option("--manifest", manifest_path, "rerun from a manifest written by a previous sweep");
    cfg_opt->excludes(man_opt);
    sweep->add_option("--out", out_dir, "output directory")->required();
    sweep->add_option("--threads", threads, "worker threads");
    sweep->add_option("--seed", seed, "master seed");

    std::string oracle_case;
    std::uint64_t oracle_seed = 1;
    auto* oracle = app.add_subcommand("oracle", "compare production code against a brute-force reference");
    oracle->add_option("--case", oracle_case, "uniaxial | commuting | gaussian | classical-vector")->required();
    oracle->add_option("--seed", oracle_seed, "seed");
    oracle->add_option("--threads", threads, "worker threads");

    std::string scaling_config;
    auto* scaling = app.add_subcommand("scaling", "C = e^-1/2 crossing along t_M = t_I for several N");
    scaling->add_option("--config", scaling_config, "uniaxial config file")->required();

    std::string preset_name;
    auto* presets = app.add_subcommand("presets", "list shipped presets or print one");
    presets->add_option("name", preset_name, "preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sweep) {
            if (config_path.empty() && manifest_path.empty()) {
                throw spinbath::ConfigError({{"command line", 0, "sweep", "one of --config or --manifest is required"}});
            }
            return cmd_sweep(config_path, manifest_path, out_dir, threads, seed);
        }
        if (*oracle) return cmd_oracle(oracle_case, oracle_seed, threads.value_or(spinbath::default_threads()));
        if (*scaling) return cmd_scaling(scaling_config);
        if (*presets) return cmd_presets(preset_name);
    } catch (const spinbath::ConfigError& e) {
        std::cerr << "config error:\n" << e.what();
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
