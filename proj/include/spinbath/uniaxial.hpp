// uniaxial.hpp: closed-form correlation for switched uniaxial (z / x / z) coupling
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "spinbath/bath_model.hpp"

namespace spinbath {

using cplx = std::complex<double>;

enum class DotMode {
    Single,     // one electron
    Symmetric,  // two identical dots (singlet-triplet qubit), per-dot factors squared
    Pair,       // two dots with their own cluster lists
};

// <up| U' |up> for one nucleus: outer z-rotations framing an x-rotation of angle A t_I / 2.
inline cplx element_up_prime(double A, double t_M, double t_I) {
    using namespace std::complex_literals;
    const double a = 0.5 * A * t_M;
    const double c = std::cos(0.25 * A * t_I);
    return std::exp(-1i * a) * (-2.0i * std::sin(a) * c * c + std::exp(1i * a));
}

// <up| U'' |up>: same bracket, opposite outer phase.
inline cplx element_up_doubleprime(double A, double t_M, double t_I) {
    using namespace std::complex_literals;
    const double a = 0.5 * A * t_M;
    const double c = std::cos(0.25 * A * t_I);
    return std::exp(1i * a) * (-2.0i * std::sin(a) * c * c + std::exp(1i * a));
}

// A complex number held as log-magnitude and phase so that products over ~10^6
// factors neither underflow nor lose the phase.
struct LogComplex {
    double log_mag{0.0};
    double phase{0.0};
    bool zero{false};

    LogComplex& operator*=(const LogComplex& o) {
        zero = zero || o.zero;
        log_mag += o.log_mag;
        phase += o.phase;
        return *this;
    }
    [[nodiscard]] LogComplex conj() const { return {log_mag, -phase, zero}; }
    [[nodiscard]] double magnitude() const { return zero ? 0.0 : std::exp(log_mag); }
    [[nodiscard]] double real() const { return zero ? 0.0 : std::exp(log_mag) * std::cos(phase); }
    [[nodiscard]] cplx value() const { return zero ? cplx{} : std::polar(std::exp(log_mag), phase); }
};

// (p a + (1 - p) a*)^N in log form: binomial average over N spin-1/2 nuclei whose
// spin-down element is the conjugate of the spin-up element a.
inline LogComplex cluster_factor_log(cplx element, std::uint64_t N, double p) {
    const cplx w = p * element + (1.0 - p) * std::conj(element);
    if (N == 0) return {};
    const double mag = std::abs(w);
    if (mag == 0.0) return {0.0, 0.0, true};
    const double n = static_cast<double>(N);
    return {n * std::log(mag), n * std::arg(w), false};
}

inline cplx cluster_factor(cplx element, std::uint64_t N, double p) {
    return cluster_factor_log(element, N, p).value();
}

struct UniaxialConfig {
    std::vector<CouplingCluster> clusters;                  // dot L (or the single dot)
    std::optional<std::vector<CouplingCluster>> clusters_R; // DotMode::Pair only
    double t_M{0.0};
    double t_I{0.0};
    double polarization_p{0.5};
    DotMode dots{DotMode::Symmetric};

    void validate() const {
        if (!(t_M >= 0.0) || !(t_I >= 0.0)) throw std::invalid_argument("uniaxial: times must be >= 0");
        if (!(polarization_p >= 0.0 && polarization_p <= 1.0)) {
            throw std::invalid_argument("uniaxial: polarization must lie in [0, 1]");
        }
        if (dots == DotMode::Pair && !clusters_R) {
            throw std::invalid_argument("uniaxial: pair mode needs a second cluster list");
        }
    }
};

namespace detail {

struct DotFactors {
    LogComplex first;   // product over clusters built from U'
    LogComplex second;  // product over clusters built from U''
};

inline DotFactors dot_factors(const std::vector<CouplingCluster>& clusters, double t_M, double t_I, double p) {
    DotFactors f;
    for (const auto& c : clusters) {
        f.first *= cluster_factor_log(element_up_prime(c.A, t_M, t_I), c.N, p);
        f.second *= cluster_factor_log(element_up_doubleprime(c.A, t_M, t_I), c.N, p);
    }
    return f;
}

} // namespace detail

inline double correlation_uniaxial(const UniaxialConfig& cfg) {
    cfg.validate();
    const auto L = detail::dot_factors(cfg.clusters, cfg.t_M, cfg.t_I, cfg.polarization_p);
    switch (cfg.dots) {
    case DotMode::Single:
        return 0.5 * L.first.real() + 0.5 * L.second.real();
    case DotMode::Symmetric: {
        const double m1 = L.first.magnitude();
        const double m2 = L.second.magnitude();
        return 0.5 * m1 * m1 + 0.5 * m2 * m2;
    }
    case DotMode::Pair: {
        const auto R = detail::dot_factors(*cfg.clusters_R, cfg.t_M, cfg.t_I, cfg.polarization_p);
        auto t1 = L.first;
        t1 *= R.first.conj();
        auto t2 = L.second;
        t2 *= R.second.conj();
        return 0.5 * t1.real() + 0.5 * t2.real();
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

struct ScalingPoint {
    std::uint64_t N{0};
    bool found{false};
    double t{0.0};          // s, t_M = t_I at the crossing
    double product{0.0};    // s^2, t_M * t_I
    double mean_A{0.0};     // rad/s, total_hyperfine / N
};

struct ScalingOptions {
    std::size_t n_clusters{50};
    double target{0.5 * std::exp(-1.0)};
    double t_min_A{1e-3};   // search window along the diagonal, in units of 1 / mean_A
    double t_max_A{1e2};
    std::size_t scan_points{2000};
    DotMode dots{DotMode::Symmetric};
};

// First crossing of C = target along t_M = t_I, by log-spaced scan then bisection.
inline ScalingPoint diagonal_crossing(const std::vector<CouplingCluster>& clusters, double mean_A,
                                      const ScalingOptions& opt) {
    ScalingPoint pt;
    pt.mean_A = mean_A;
    auto f = [&](double t) {
        UniaxialConfig cfg{clusters, std::nullopt, t, t, 0.5, opt.dots};
        return correlation_uniaxial(cfg) - opt.target;
    };
    const double lo_log = std::log(opt.t_min_A / mean_A);
    const double hi_log = std::log(opt.t_max_A / mean_A);
    double prev_t = std::exp(lo_log);
    double prev_f = f(prev_t);
    for (std::size_t i = 1; i < opt.scan_points; ++i) {
        const double t = std::exp(lo_log + (hi_log - lo_log) * static_cast<double>(i) /
                                               static_cast<double>(opt.scan_points - 1));
        const double ft = f(t);
        if ((prev_f > 0.0) != (ft > 0.0)) {
            double a = prev_t, b = t, fa = prev_f;
            for (int it = 0; it < 200 && (b - a) > 1e-15 * b; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = f(m);
                if ((fm > 0.0) == (fa > 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            pt.found = true;
            pt.t = 0.5 * (a + b);
            pt.product = pt.t * pt.t;
            return pt;
        }
        prev_t = t;
        prev_f = ft;
    }
    return pt;
}

// Geometry rescaled to n nuclei while keeping n * nu0 / (L^2 z0) fixed, i.e. the same
// coupling-distribution shape with couplings scaling as 1/n.
inline DotGeometry rescale_geometry(const DotGeometry& ref, std::uint64_t n) {
    DotGeometry g = ref;
    g.n_total = n;
    g.L = ref.L * std::sqrt(static_cast<double>(n) / static_cast<double>(ref.n_total));
    return g;
}

inline std::vector<ScalingPoint> scaling_contour(const std::vector<std::uint64_t>& N_values,
                                                 const std::vector<NuclearSpecies>& species,
                                                 const DotGeometry& geometry,
                                                 const ScalingOptions& opt = {}) {
    if (N_values.size() < 2) throw std::invalid_argument("scaling_contour: need at least two N values");
    double total_A = 0.0;
    for (const auto& s : species) total_A += s.abundance * s.total_hyperfine;
    std::vector<ScalingPoint> out;
    for (auto n : N_values) {
        const auto clusters = build_clusters(rescale_geometry(geometry, n), species, opt.n_clusters);
        auto pt = diagonal_crossing(clusters, total_A / static_cast<double>(n), opt);
        pt.N = n;
        out.push_back(pt);
    }
    return out;
}

// Least-squares slope of log(t * tau) against log(N) over the found points.
inline double scaling_exponent(const std::vector<ScalingPoint>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = 0;
    for (const auto& p : pts) {
        if (!p.found) continue;
        const double x = std::log(static_cast<double>(p.N));
        const double y = std::log(p.product);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        n += 1;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace spinbath
