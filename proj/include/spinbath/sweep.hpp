// sweep.hpp: (t_M, t_I) grid evaluation, CSV output and JSON run manifest
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "spinbath/config.hpp"
#include "spinbath/error.hpp"
#include "spinbath/oracles.hpp"
#include "spinbath/parallel.hpp"
#include "spinbath/rng.hpp"
#include "spinbath/tmatrix.hpp"
#include "spinbath/uniaxial.hpp"

namespace spinbath {

inline constexpr const char* kVersion = "1.0.0";

struct GridPoint {
    double t_M{0.0};
    double t_I{0.0};
    std::size_t index{0};
};

// Row-major over (t_M index, t_I index); the index doubles as the random stream id.
inline std::vector<GridPoint> grid_points(const RunConfig& cfg) {
    const auto tm = cfg.t_M.values();
    const auto ti = cfg.t_I.values();
    std::vector<GridPoint> pts;
    pts.reserve(tm.size() * ti.size());
    for (double a : tm) {
        for (double b : ti) pts.push_back({a, b, pts.size()});
    }
    return pts;
}

struct SweepResult {
    std::vector<CorrelationResult> rows;
    std::uint64_t degenerate_samples{0};
    std::uint64_t points_with_degenerate{0};
    double wall_seconds{0.0};
};

// Model inputs derived once per run and shared read-only by every grid point.
class SweepEvaluator {
public:
    explicit SweepEvaluator(const RunConfig& cfg) : cfg_(cfg) {
        if (cfg.model == ModelKind::Oracle) return;
        const std::size_t n = cfg.model == ModelKind::Uniaxial ? cfg.uniaxial.n_clusters : cfg.semiclassical.n_clusters;
        clusters_L_ = build_clusters(cfg.geometry, cfg.species, n);
        clusters_R_ = cfg.geometry_R ? build_clusters(*cfg.geometry_R, cfg.species, n) : clusters_L_;
        for (const auto& s : cfg.species) gamma_.push_back(s.gamma);
    }

    [[nodiscard]] CorrelationResult evaluate(const GridPoint& p) const {
        switch (cfg_.model) {
        case ModelKind::Uniaxial: {
            const auto& u = cfg_.uniaxial;
            UniaxialConfig uc{clusters_L_, std::nullopt, p.t_M, p.t_I, u.polarization, u.dots};
            if (u.dots == DotMode::Pair) uc.clusters_R = clusters_R_;
            return {p.t_M, p.t_I, correlation_uniaxial(uc), 0.0, 1, 0};
        }
        case ModelKind::Semiclassical: {
            const auto& s = cfg_.semiclassical;
            SemiclassicalConfig sc;
            sc.components = make_components(clusters_L_, cfg_.species, cfg_.constants, s.b_ext);
            if (s.dots == DotMode::Pair) sc.components_R = make_components(clusters_R_, cfg_.species, cfg_.constants, s.b_ext);
            sc.species_gamma = gamma_;
            sc.constants = cfg_.constants;
            sc.B_ext = s.b_ext;
            sc.delta_B_rms = s.delta_b_rms;
            sc.t_M = p.t_M;
            sc.t_I = p.t_I;
            sc.sequence = {s.outer.make(p.t_M), s.intermediate.make(p.t_I)};
            sc.mc_samples = cfg_.execution.mc_samples;
            sc.seed = cfg_.execution.seed;
            sc.stream = p.index;
            sc.dots = s.dots;
            sc.correlated_delta_b = s.correlated_delta_b;
            return correlation_semiclassical(sc, 1);
        }
        case ModelKind::Oracle: {
            SmallBath bath{cfg_.oracle.couplings, cfg_.oracle.axis};
            const auto r = protocol_oracle(bath, p.t_M, p.t_I, cfg_.oracle.samples,
                                           substream_seed(cfg_.execution.seed, p.index, 0), 1);
            return {p.t_M, p.t_I, r.c_exact, r.std_error, r.n_states, 0};
        }
        }
        throw RuntimeFailure("sweep: unknown model");
    }

private:
    RunConfig cfg_;
    std::vector<CouplingCluster> clusters_L_;
    std::vector<CouplingCluster> clusters_R_;
    std::vector<double> gamma_;
};

inline SweepResult evaluate_grid(const RunConfig& cfg, unsigned threads) {
    const auto start = std::chrono::steady_clock::now();
    const SweepEvaluator eval(cfg);
    const auto pts = grid_points(cfg);
    SweepResult out;
    out.rows.resize(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) { out.rows[i] = eval.evaluate(pts[i]); });
    for (const auto& r : out.rows) {
        out.degenerate_samples += r.n_degenerate;
        if (r.n_degenerate > 0) ++out.points_with_degenerate;
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline std::string format_csv(const std::vector<CorrelationResult>& rows) {
    std::string s = "t_M_s,t_I_s,C,stderr,n_samples\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%llu\n", r.t_M, r.t_I, r.C, r.std_error,
                      static_cast<unsigned long long>(r.n_samples));
        s += buf;
    }
    return s;
}

inline nlohmann::ordered_json make_manifest(const RunConfig& cfg, const SweepResult& res, unsigned threads) {
    nlohmann::ordered_json j;
    j["software"] = "spinbath";
    j["version"] = kVersion;
    j["seed"] = cfg.execution.seed;
    j["threads"] = threads;
    j["grid_points"] = res.rows.size();
    j["wall_time_s"] = res.wall_seconds;
    j["degenerate_samples"] = res.degenerate_samples;
    j["points_with_degenerate_samples"] = res.points_with_degenerate;
    j["config"] = to_config_text(cfg);
    return j;
}

struct SweepFiles {
    std::filesystem::path csv;
    std::filesystem::path manifest;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
    f << text;
    f.close();
    if (!f) throw RuntimeFailure("failed writing '" + path.string() + "'");
}

// Evaluates the grid and writes <out_dir>/<stem>.csv plus <out_dir>/<stem>.json.
inline SweepFiles run_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir, unsigned threads,
                            SweepResult* result = nullptr) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw RuntimeFailure("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    const auto stem = std::filesystem::path(cfg.output.path).stem();
    SweepFiles files{out_dir / stem, out_dir / stem};
    files.csv += ".csv";
    files.manifest += ".json";

    // Probe writability before spending compute.
    write_file(files.csv, "");
    auto res = evaluate_grid(cfg, threads);
    write_file(files.csv, format_csv(res.rows));
    write_file(files.manifest, make_manifest(cfg, res, threads).dump(2) + "\n");
    if (result) *result = std::move(res);
    return files;
}

// The resolved config stored in a manifest; parsing it reproduces the original run.
inline RunConfig config_from_manifest(const std::string& manifest_text, const std::string& source) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(manifest_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError({{source, 0, "manifest", std::string("not valid JSON: ") + e.what()}});
    }
    if (!j.contains("config") || !j["config"].is_string()) {
        throw ConfigError({{source, 0, "manifest.config", "missing resolved config text"}});
    }
    return parse_config(j["config"].get<std::string>(), source + "#config");
}

} // namespace spinbath
