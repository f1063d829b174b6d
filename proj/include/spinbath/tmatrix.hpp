// tmatrix.hpp: semiclassical correlation for isotropic coupling under dynamical decoupling
//
// Transverse Overhauser components b_k = b_rms_k z_k (z standard complex Gaussian) precess at
// omega_k + delta_omega_k. Each echo window accumulates a phase quadratic in b; averaging
// exp(i phase) over z gives 1 / det(I + i T) for the window pair's T-matrix.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "spinbath/bath_model.hpp"
#include "spinbath/error.hpp"
#include "spinbath/parallel.hpp"
#include "spinbath/pulse_protocol.hpp"
#include "spinbath/rng.hpp"
#include "spinbath/uniaxial.hpp"

namespace spinbath {

using ComplexMatrix = Eigen::MatrixXcd;

enum class Sign { Plus, Minus };
enum class ElectronSpin { Up, Down };
enum class Dot { L, R };

inline double sign_value(Sign s) { return s == Sign::Plus ? 1.0 : -1.0; }
inline double sigma_value(ElectronSpin s) { return s == ElectronSpin::Up ? 0.5 : -0.5; }

struct SemiclassicalConfig {
    std::vector<BathComponent> components;                  // dot L, or the single dot
    std::optional<std::vector<BathComponent>> components_R; // DotMode::Pair only
    std::vector<double> species_gamma;                      // rad s^-1 T^-1, indexed by component.species
    PhysicalConstants constants;
    double B_ext{0.04};
    double delta_B_rms{0.0};
    double t_M{0.0};
    double t_I{0.0};
    ExperimentSequence sequence;
    std::uint64_t mc_samples{1};
    std::uint64_t seed{0};
    std::uint64_t stream{0};          // grid index; selects the random substream family
    DotMode dots{DotMode::Symmetric};
    bool correlated_delta_b{false};   // DotMode::Pair: share delta B between the dots

    void validate() const {
        constants.validate();
        if (!(B_ext > 0.0)) throw std::invalid_argument("semiclassical: B_ext must be > 0");
        if (!(delta_B_rms >= 0.0)) throw std::invalid_argument("semiclassical: delta_B_rms must be >= 0");
        if (mc_samples < 1) throw std::invalid_argument("semiclassical: mc_samples must be >= 1");
        if (!(t_M >= 0.0) || !(t_I >= 0.0)) throw std::invalid_argument("semiclassical: times must be >= 0");
        if (std::abs(sequence.outer.duration() - t_M) > 1e-12 * std::max(1.0, t_M) ||
            std::abs(sequence.intermediate.duration() - t_I) > 1e-12 * std::max(1.0, t_I)) {
            throw std::invalid_argument("semiclassical: sequence durations differ from t_M / t_I");
        }
        if (t_M > 0.0 && std::abs(sequence.outer.flip_integral(t_M)) > 1e-12 * t_M) {
            throw std::invalid_argument(
                "semiclassical: the outer protocol must be echo-balanced (zero net switching integral); "
                "longitudinal Overhauser dynamics are not modelled");
        }
        if (dots == DotMode::Pair && !components_R) {
            throw std::invalid_argument("semiclassical: pair mode needs a second component list");
        }
        for (const auto* comps : {&components, components_R ? &*components_R : nullptr}) {
            if (!comps) continue;
            for (const auto& c : *comps) {
                if (c.species >= species_gamma.size()) {
                    throw std::invalid_argument("semiclassical: component refers to an unknown species");
                }
            }
        }
    }
};

// delta_omega per component for one dot, one Monte Carlo sample.
struct DeltaFieldSample {
    std::vector<double> delta_omega;
};

struct DeltaFieldPair {
    DeltaFieldSample L;
    DeltaFieldSample R;
};

// One Gaussian delta B per species per dot, drawn from the substream (seed, stream, index).
inline DeltaFieldPair draw_delta_fields(const SemiclassicalConfig& cfg, std::uint64_t sample_index) {
    const std::size_t n_species = cfg.species_gamma.size();
    DeltaFieldPair out;
    auto fill = [&](const std::vector<BathComponent>& comps, const std::vector<double>& dB) {
        DeltaFieldSample s;
        s.delta_omega.reserve(comps.size());
        for (const auto& c : comps) s.delta_omega.push_back(cfg.species_gamma[c.species] * dB[c.species]);
        return s;
    };
    std::vector<double> dB_L(n_species, 0.0);
    std::vector<double> dB_R(n_species, 0.0);
    if (cfg.delta_B_rms > 0.0) {
        auto eng = make_engine(cfg.seed, cfg.stream, sample_index);
        std::normal_distribution<double> gauss(0.0, cfg.delta_B_rms);
        for (auto& v : dB_L) v = gauss(eng);
        for (auto& v : dB_R) v = gauss(eng);
        if (cfg.correlated_delta_b) dB_R = dB_L;
    }
    out.L = fill(cfg.components, dB_L);
    if (cfg.components_R) out.R = fill(*cfg.components_R, dB_R);
    return out;
}

// Integral of c(t) exp(i x t) over one window, exact per constant-sign segment.
inline cplx filter_integral(const PulseProtocol& protocol, double x) {
    using namespace std::complex_literals;
    cplx acc = 0.0;
    double start = 0.0;
    double sign = 1.0;
    auto segment = [&](double a, double b) {
        const double h = 0.5 * (b - a);
        const double y = x * h;
        const double sinc = std::abs(y) < 1e-4 ? 1.0 - y * y / 6.0 : std::sin(y) / y;
        return std::exp(1i * (x * (a + h))) * (2.0 * h * sinc);
    };
    for (double f : protocol.flip_times()) {
        acc += sign * segment(start, f);
        start = f;
        sign = -sign;
    }
    acc += sign * segment(start, protocol.duration());
    return acc;
}

struct TMatrix {
    ComplexMatrix entries;
    Sign sign{Sign::Plus};
    ElectronSpin sigma{ElectronSpin::Up};
    Dot dot{Dot::L};
};

// Entry (k, l):
//   (4 g mu_B b_k b_l / (hbar B)) * F(x)/4 * (1 +- exp(i(x (t_M + t_I) + sigma A_kl Phi_I)))
// with x = omega_kl + delta_omega_kl, F the outer window's filter integral
// (4 exp(i x t_M/2) sin^2(x t_M/4) / (i x) for a spin echo) and Phi_I the intermediate
// protocol's net switching integral. F is smooth through x = 0, so diagonal entries and
// degenerate frequency pairs need no special casing.
inline TMatrix build_tmatrix(const SemiclassicalConfig& cfg, Sign sign, ElectronSpin sigma,
                             const DeltaFieldSample& sample, Dot dot = Dot::L) {
    using namespace std::complex_literals;
    const auto& comps = (dot == Dot::R && cfg.components_R) ? *cfg.components_R : cfg.components;
    const std::size_t n = comps.size();
    if (sample.delta_omega.size() != n) throw std::invalid_argument("build_tmatrix: sample size mismatch");

    const auto& pc = cfg.constants;
    const double pref = 4.0 * pc.g_electron * pc.mu_B / (pc.hbar * cfg.B_ext);
    const double phi_I = cfg.sequence.intermediate.flip_integral(cfg.t_I);
    const double s = sign_value(sign);
    const double sg = sigma_value(sigma);

    TMatrix T{ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), sign, sigma, dot};
    if (cfg.t_M == 0.0) return T;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            const double x = (comps[k].omega - comps[l].omega) + (sample.delta_omega[k] - sample.delta_omega[l]);
            const double A_kl = comps[k].A - comps[l].A;
            const cplx F = filter_integral(cfg.sequence.outer, x);
            const cplx revival = 1.0 + s * std::exp(1i * (x * (cfg.t_M + cfg.t_I) + sg * A_kl * phi_I));
            T.entries(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
                pref * comps[k].b_rms * comps[l].b_rms * 0.25 * F * revival;
        }
    }
    return T;
}

// True when the electron-spin dependence has dropped out: T^{s,up} == T^{s,down} elementwise.
inline bool spin_independent(const TMatrix& up, const TMatrix& down, double tol = 1e-12) {
    const double scale = std::max(1.0, up.entries.cwiseAbs().maxCoeff());
    return (up.entries - down.entries).cwiseAbs().maxCoeff() <= tol * scale;
}

// log det(I + i * factor * T) via partial-pivot LU; nullopt when the factor is singular.
inline std::optional<cplx> log_det_shifted(const ComplexMatrix& T, double factor) {
    using namespace std::complex_literals;
    const auto n = T.rows();
    if (n == 0) return cplx{0.0};
    const ComplexMatrix M = ComplexMatrix::Identity(n, n) + (1i * factor) * T;
    Eigen::PartialPivLU<ComplexMatrix> lu(M);
    const auto& U = lu.matrixLU();
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx u = U(i, i);
        if (u == 0.0) return std::nullopt;
        acc += std::log(u);
    }
    if (lu.permutationP().determinant() < 0) acc += cplx{0.0, std::numbers::pi};
    return acc;
}

// prod_m (1 + i * factor * lambda_m) via the eigenvalues of T (validation path).
inline cplx eigen_product(const ComplexMatrix& T, double factor) {
    using namespace std::complex_literals;
    if (T.rows() == 0) return 1.0;
    Eigen::ComplexEigenSolver<ComplexMatrix> es(T, false);
    cplx p = 1.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) p *= 1.0 + (1i * factor) * es.eigenvalues()(i);
    return p;
}

struct SampleValue {
    double C{0.0};
    bool degenerate{false};
};

// Below this |det| a factor counts as singular.
inline constexpr double kDegenerateLogDet = -690.7755278982137;  // log(1e-300)

struct TMatrixSet {
    // Indexed [sign][sigma]; R is empty unless DotMode::Pair.
    std::array<std::array<TMatrix, 2>, 2> L;
    std::optional<std::array<std::array<TMatrix, 2>, 2>> R;
};

inline TMatrixSet build_tmatrix_set(const SemiclassicalConfig& cfg, const DeltaFieldPair& sample) {
    TMatrixSet set;
    for (int si = 0; si < 2; ++si) {
        for (int sg = 0; sg < 2; ++sg) {
            const Sign s = si == 0 ? Sign::Plus : Sign::Minus;
            const ElectronSpin e = sg == 0 ? ElectronSpin::Up : ElectronSpin::Down;
            set.L[si][sg] = build_tmatrix(cfg, s, e, sample.L, Dot::L);
        }
    }
    if (cfg.dots == DotMode::Pair) {
        set.R.emplace();
        for (int si = 0; si < 2; ++si) {
            for (int sg = 0; sg < 2; ++sg) {
                const Sign s = si == 0 ? Sign::Plus : Sign::Minus;
                const ElectronSpin e = sg == 0 ? ElectronSpin::Up : ElectronSpin::Down;
                (*set.R)[si][sg] = build_tmatrix(cfg, s, e, sample.R, Dot::R);
            }
        }
    }
    return set;
}

// Correlation for one delta-field sample.
//   Single:    1/2 Re sum_s 1/2 sum_sigma 1/det(I + i T^{s,sigma})
//   Symmetric: 1/2 Re sum_s 1/(det(I + i T^{s,up}) det(I - i T^{s,down}))
//   Pair:      1/4 Re sum_s [1/(det(I + i T_L^{s,up}) det(I - i T_R^{s,down})) + (up <-> down)]
// When skip_echoed_spin is set and the sigma-dependence vanished, the down determinants reuse the up ones.
inline SampleValue correlation_value(const TMatrixSet& set, DotMode dots, bool skip_echoed_spin = true) {
    SampleValue out;
    auto logdet = [&](const TMatrix& T, double factor) -> cplx {
        auto ld = log_det_shifted(T.entries, factor);
        if (!ld || ld->real() < kDegenerateLogDet) {
            out.degenerate = true;
            return 0.0;
        }
        return *ld;
    };
    auto echoed = [&](const std::array<TMatrix, 2>& mats) {
        return skip_echoed_spin && spin_independent(mats[0], mats[1], 0.0);
    };

    double acc = 0.0;
    for (int si = 0; si < 2; ++si) {
        const auto& Ls = set.L[si];
        switch (dots) {
        case DotMode::Single: {
            const cplx up = logdet(Ls[0], 1.0);
            const cplx down = echoed(Ls) ? up : logdet(Ls[1], 1.0);
            acc += 0.25 * (std::exp(-up).real() + std::exp(-down).real());
            break;
        }
        case DotMode::Symmetric: {
            const cplx up = logdet(Ls[0], 1.0);
            const cplx down = logdet(echoed(Ls) ? Ls[0] : Ls[1], -1.0);
            acc += 0.5 * std::exp(-(up + down)).real();
            break;
        }
        case DotMode::Pair: {
            const auto& Rs = (*set.R)[si];
            const cplx l_up = logdet(Ls[0], 1.0);
            const cplx l_down = echoed(Ls) ? l_up : logdet(Ls[1], 1.0);
            const cplx r_up = logdet(Rs[0], -1.0);
            const cplx r_down = echoed(Rs) ? r_up : logdet(Rs[1], -1.0);
            acc += 0.25 * (std::exp(-(l_up + r_down)).real() + std::exp(-(l_down + r_up)).real());
            break;
        }
        }
    }
    if (!out.degenerate) out.C = acc;
    return out;
}

struct CorrelationResult {
    double t_M{0.0};
    double t_I{0.0};
    double C{0.0};
    double std_error{0.0};
    std::uint64_t n_samples{0};
    std::uint64_t n_degenerate{0};
};

// Maximum fraction of degenerate samples tolerated before the evaluation is rejected.
inline constexpr double kMaxDegenerateFraction = 0.01;

inline CorrelationResult correlation_semiclassical(const SemiclassicalConfig& cfg, unsigned threads = 1,
                                                   bool skip_echoed_spin = true) {
    cfg.validate();
    const std::uint64_t n = cfg.delta_B_rms == 0.0 ? 1 : cfg.mc_samples;
    std::vector<SampleValue> values(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto sample = draw_delta_fields(cfg, i);
        values[i] = correlation_value(build_tmatrix_set(cfg, sample), cfg.dots, skip_echoed_spin);
    });

    CorrelationResult r{cfg.t_M, cfg.t_I};
    double sum = 0.0;
    double sum2 = 0.0;
    for (const auto& v : values) {
        if (v.degenerate) {
            ++r.n_degenerate;
            continue;
        }
        sum += v.C;
        sum2 += v.C * v.C;
    }
    const std::uint64_t used = n - r.n_degenerate;
    if (used == 0) throw RuntimeFailure("semiclassical: every Monte Carlo sample was degenerate");
    if (static_cast<double>(r.n_degenerate) > kMaxDegenerateFraction * static_cast<double>(n)) {
        throw RuntimeFailure("semiclassical: " + std::to_string(r.n_degenerate) + " of " + std::to_string(n) +
                             " samples degenerate (more than 1%)");
    }
    const double m = static_cast<double>(used);
    r.C = sum / m;
    r.n_samples = used;
    if (used > 1) {
        const double var = std::max(0.0, (sum2 - m * r.C * r.C) / (m - 1.0));
        r.std_error = std::sqrt(var / m);
    }
    return r;
}

} // namespace spinbath
