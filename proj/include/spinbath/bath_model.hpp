// bath_model.hpp: nuclear species, dot geometry and hyperfine coupling clusters
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "spinbath/error.hpp"

namespace spinbath {

struct PhysicalConstants {
    double hbar{1.054571817e-34};    // J s
    double mu_B{9.2740100783e-24};   // J/T
    double g_electron{-0.44};

    void validate() const {
        if (!(hbar > 0.0) || !(mu_B > 0.0) || g_electron == 0.0 || !std::isfinite(g_electron)) {
            throw std::invalid_argument("physical constants: need hbar > 0, mu_B > 0, g != 0");
        }
    }
};

struct NuclearSpecies {
    std::string name;
    double gamma{0.0};            // rad s^-1 T^-1
    double total_hyperfine{0.0};  // rad/s, the species constant (sum of couplings over a full dot)
    double abundance{1.0};        // fraction of all nuclei
    double spin{0.5};
};

struct DotGeometry {
    double z0{8e-9};      // m, well thickness
    double L{20e-9};      // m, Fock-Darwin radius
    double nu0{2.2584193555e-29}; // m^3, volume per nucleus (GaAs: a^3 / 8)
    std::uint64_t n_total{1000000};

    void validate() const {
        if (!(z0 > 0.0) || !(L > 0.0) || !(nu0 > 0.0)) {
            throw std::invalid_argument("dot geometry: z0, L and nu0 must be positive");
        }
        if (n_total < 1) {
            throw std::invalid_argument("dot geometry: n_total must be >= 1");
        }
    }

    // Peak value of |psi|^2, reached at the dot centre.
    [[nodiscard]] double peak_weight() const {
        return 2.0 * nu0 / (z0 * std::numbers::pi * L * L);
    }
};

struct CouplingCluster {
    std::size_t species{0};  // index into the species list
    double A{0.0};           // rad/s per nucleus
    std::uint64_t N{1};
};

struct BathComponent {
    std::size_t species{0};
    double A{0.0};        // rad/s
    std::uint64_t N{1};
    double b_rms{0.0};    // T, rms of each Cartesian transverse component
    double omega{0.0};    // rad/s
};

// Largest-remainder apportionment of `total` items over `weights` (need not be normalised).
// Ties go to the lower index so the result is deterministic.
inline std::vector<std::uint64_t> apportion(const std::vector<double>& weights, std::uint64_t total) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (weights.empty() || !(sum > 0.0)) {
        throw std::invalid_argument("apportion: weights must have a positive sum");
    }
    std::vector<std::uint64_t> out(weights.size());
    std::vector<double> remainder(weights.size());
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = static_cast<double>(total) * weights[i] / sum;
        out[i] = static_cast<std::uint64_t>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(out[i]);
        assigned += out[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t j = 0; assigned < total; ++j, ++assigned) {
        ++out[order[j % order.size()]];
    }
    return out;
}

// |psi(r)|^2 for the quantum-well wavefunction: cos along z, Gaussian in-plane.
// psi carries a factor sqrt(nu0), so this is the dimensionless per-site weight
// and sums to one over a lattice with one site per nu0.
inline double wavefunction_weight(const std::array<double, 3>& r, const DotGeometry& geo) {
    const double z = r[2];
    if (std::abs(z) > 0.5 * geo.z0 * (1.0 + 1e-15)) {
        throw DomainError("wavefunction_weight: |z| exceeds half the well thickness");
    }
    const double c = std::cos(std::numbers::pi * z / geo.z0);
    const double rho2 = r[0] * r[0] + r[1] * r[1];
    return geo.peak_weight() * c * c * std::exp(-rho2 / (geo.L * geo.L));
}

// Coupling-strength distribution of the cosine/Gaussian wavefunction over a continuum of
// sites with density 1/nu0. Relative weight u = |psi|^2 / peak in (0, 1].
class WavefunctionProfile {
public:
    explicit WavefunctionProfile(DotGeometry geo) : geo_(geo) { geo_.validate(); }

    // Number of sites with relative weight above s.
    [[nodiscard]] double sites_above(double s) const {
        const double theta = std::acos(std::sqrt(s));
        auto f = [s](double t) { return 2.0 * std::log(std::cos(t)) - std::log(s); };
        const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, 0.0, theta, 15, 1e-13);
        return 2.0 * geo_.L * geo_.L * geo_.z0 * integral / geo_.nu0;
    }

    // Probability mass (sum of |psi|^2) carried by sites with relative weight above s.
    [[nodiscard]] static double mass_above(double s) {
        const double theta = std::acos(std::sqrt(s));
        return 4.0 / std::numbers::pi * (0.5 * theta + 0.25 * std::sin(2.0 * theta) - s * theta);
    }

    // Relative weight threshold above which exactly `count` sites lie.
    [[nodiscard]] double threshold_for(double count) const {
        if (count <= 0.0) return 1.0;
        auto g = [&](double log_s) { return sites_above(std::exp(log_s)) - count; };
        double lo = -1.0;
        while (g(lo) < 0.0) {  // sites_above grows without bound as s -> 0
            lo *= 2.0;
            if (lo < -700.0) {
                throw DomainError("dot geometry too small to hold n_total nuclei");
            }
        }
        std::uintmax_t iters = 200;
        auto [a, b] = boost::math::tools::toms748_solve(
            g, lo, 0.0, boost::math::tools::eps_tolerance<double>(50), iters);
        return std::exp(0.5 * (a + b));
    }

    // Probability fraction carried by each of n equal-population quantile bins of the
    // n_total most strongly coupled sites, strongest first, renormalised to sum to one.
    [[nodiscard]] std::vector<double> bin_masses(std::size_t n) const {
        const double total = static_cast<double>(geo_.n_total);
        std::vector<double> masses(n);
        double prev_mass = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
            const double s = threshold_for(total * static_cast<double>(j) / static_cast<double>(n));
            const double m = mass_above(s);
            masses[j - 1] = m - prev_mass;
            prev_mass = m;
        }
        for (double& m : masses) m /= prev_mass;
        return masses;
    }

    [[nodiscard]] const DotGeometry& geometry() const { return geo_; }

private:
    DotGeometry geo_;
};

// Every site couples equally.
class UniformProfile {
public:
    explicit UniformProfile(std::uint64_t n_total) : geo_{} { geo_.n_total = n_total; }

    [[nodiscard]] std::vector<double> bin_masses(std::size_t n) const {
        return std::vector<double>(n, 1.0 / static_cast<double>(n));
    }
    [[nodiscard]] const DotGeometry& geometry() const { return geo_; }

private:
    DotGeometry geo_;
};

template <typename P>
concept CouplingProfile = requires(const P& p, std::size_t n) {
    { p.bin_masses(n) } -> std::convertible_to<std::vector<double>>;
    { p.geometry() } -> std::convertible_to<const DotGeometry&>;
};

inline void validate_species(const std::vector<NuclearSpecies>& species) {
    if (species.empty()) throw std::invalid_argument("species list is empty");
    double sum = 0.0;
    for (const auto& s : species) {
        if (!std::isfinite(s.gamma)) throw std::invalid_argument("species " + s.name + ": gamma not finite");
        if (!(s.total_hyperfine >= 0.0)) {
            throw std::invalid_argument("species " + s.name + ": total_hyperfine must be >= 0");
        }
        if (!(s.abundance >= 0.0 && s.abundance <= 1.0)) {
            throw std::invalid_argument("species " + s.name + ": abundance outside [0, 1]");
        }
        sum += s.abundance;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("species abundances sum to " + std::to_string(sum) + ", expected 1");
    }
}

// Nucleus count per species, summing exactly to n_total.
inline std::vector<std::uint64_t> species_counts(const std::vector<NuclearSpecies>& species,
                                                 std::uint64_t n_total) {
    std::vector<double> w;
    w.reserve(species.size());
    for (const auto& s : species) w.push_back(s.abundance);
    return apportion(w, n_total);
}

// Partition each species' nuclei into n_clusters equal-population bins ordered by coupling
// strength; a cluster's A is the mean coupling of its bin. Output is grouped by species,
// strongest bin first.
template <CouplingProfile P>
std::vector<CouplingCluster> build_clusters(const P& profile,
                                            const std::vector<NuclearSpecies>& species,
                                            std::size_t n_clusters) {
    const DotGeometry& geo = profile.geometry();
    if (n_clusters < 1) throw std::invalid_argument("build_clusters: n_clusters must be >= 1");
    if (geo.n_total < n_clusters) throw std::invalid_argument("build_clusters: n_total < n_clusters");
    validate_species(species);

    const auto counts = species_counts(species, geo.n_total);
    const auto masses = profile.bin_masses(n_clusters);
    const double sites_per_bin = static_cast<double>(geo.n_total) / static_cast<double>(n_clusters);

    std::vector<CouplingCluster> out;
    out.reserve(species.size() * n_clusters);
    for (std::size_t k = 0; k < species.size(); ++k) {
        if (counts[k] == 0) continue;
        if (counts[k] < n_clusters) {
            throw std::invalid_argument("build_clusters: species " + species[k].name + " has " +
                                        std::to_string(counts[k]) + " nuclei, fewer than n_clusters");
        }
        const auto pops = apportion(std::vector<double>(n_clusters, 1.0), counts[k]);
        for (std::size_t j = 0; j < n_clusters; ++j) {
            out.push_back({k, species[k].total_hyperfine * masses[j] / sites_per_bin, pops[j]});
        }
    }
    return out;
}

inline std::vector<CouplingCluster> build_clusters(const DotGeometry& geo,
                                                   const std::vector<NuclearSpecies>& species,
                                                   std::size_t n_clusters) {
    return build_clusters(WavefunctionProfile(geo), species, n_clusters);
}

inline std::vector<double> larmor_frequencies(const std::vector<NuclearSpecies>& species, double B_ext) {
    if (!(B_ext >= 0.0)) throw std::invalid_argument("larmor_frequencies: B_ext must be >= 0");
    std::vector<double> out;
    out.reserve(species.size());
    for (const auto& s : species) out.push_back(s.gamma * B_ext);
    return out;
}

// rms of each Cartesian transverse Overhauser component of N spin-3/2 nuclei of coupling A.
inline double overhauser_rms(double A, std::uint64_t N, const PhysicalConstants& pc) {
    return pc.hbar * A / (2.0 * std::abs(pc.g_electron) * pc.mu_B) * std::sqrt(5.0 * static_cast<double>(N));
}

inline std::vector<BathComponent> make_components(const std::vector<CouplingCluster>& clusters,
                                                  const std::vector<NuclearSpecies>& species,
                                                  const PhysicalConstants& pc, double B_ext) {
    const auto omega = larmor_frequencies(species, B_ext);
    std::vector<BathComponent> out;
    out.reserve(clusters.size());
    for (const auto& c : clusters) {
        out.push_back({c.species, c.A, c.N, overhauser_rms(c.A, c.N, pc), omega.at(c.species)});
    }
    return out;
}

} // namespace spinbath
