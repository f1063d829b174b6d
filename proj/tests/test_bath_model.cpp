#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spinbath/config.hpp"
#include "spinbath/uniaxial.hpp"

using namespace spinbath;

namespace {

std::vector<NuclearSpecies> gaas_species() {
    return parse_config(presets::find("gaas-se-se-se")->text, "preset").species;
}

std::vector<NuclearSpecies> single_species(double total_hyperfine = 1e9) {
    return {{"x", 6e7, total_hyperfine, 1.0, 0.5}};
}

} // namespace

TEST(PhysicalConstants, RejectsNonPhysicalValues) {
    PhysicalConstants pc;
    EXPECT_NO_THROW(pc.validate());
    pc.g_electron = 0.0;
    EXPECT_THROW(pc.validate(), std::invalid_argument);
    pc = {};
    pc.hbar = -1.0;
    EXPECT_THROW(pc.validate(), std::invalid_argument);
}

TEST(WavefunctionWeight, PeakAtOriginAndNodeAtWellEdge) {
    const DotGeometry geo;
    EXPECT_DOUBLE_EQ(wavefunction_weight({0, 0, 0}, geo), 2.0 * geo.nu0 / (geo.z0 * std::numbers::pi * geo.L * geo.L));
    EXPECT_NEAR(wavefunction_weight({0, 0, geo.z0 / 2}, geo), 0.0, 1e-20 * geo.peak_weight());
    EXPECT_THROW(wavefunction_weight({0, 0, 0.51 * geo.z0}, geo), DomainError);
}

TEST(WavefunctionWeight, EvenAndRadiallyDecreasing) {
    const DotGeometry geo;
    const double z = 0.2 * geo.z0;
    double prev = wavefunction_weight({0, 0, z}, geo);
    for (int i = 1; i < 50; ++i) {
        const double x = 0.1 * i * geo.L;
        const double w = wavefunction_weight({x, 0.3 * x, z}, geo);
        EXPECT_LT(w, prev);
        EXPECT_DOUBLE_EQ(w, wavefunction_weight({-x, -0.3 * x, -z}, geo));
        prev = w;
    }
}

// Direct lattice sum with one site per nu0; the box reaches 6 L in-plane.
TEST(WavefunctionWeight, LatticeSumIsOne) {
    const DotGeometry geo;
    const double a = std::cbrt(geo.nu0);
    const int nxy = static_cast<int>(6.0 * geo.L / a);
    const int nz = static_cast<int>(0.5 * geo.z0 / a);
    double sum = 0.0;
    for (int k = -nz; k <= nz; ++k) {
        for (int i = -nxy; i <= nxy; ++i) {
            for (int j = -nxy; j <= nxy; ++j) sum += wavefunction_weight({i * a, j * a, k * a}, geo);
        }
    }
    EXPECT_NEAR(sum, 1.0, 0.01);
}

TEST(WavefunctionProfile, MassAboveMatchesQuadrature) {
    // Mass above relative weight s, integrated directly over the cylinder coordinates.
    for (double s : {0.9, 0.5, 0.1, 1e-3, 1e-8}) {
        auto inner = [s](double t) {
            const double c2 = std::cos(t) * std::cos(t);
            const double rho2_max = std::log(c2 / s);  // in units of L^2
            return c2 * (1.0 - s / c2) * (rho2_max > 0 ? 1.0 : 0.0);
        };
        const double theta = std::acos(std::sqrt(s));
        const double direct = 4.0 / std::numbers::pi *
                              boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, 0.0, theta, 15, 1e-14);
        EXPECT_NEAR(WavefunctionProfile::mass_above(s), direct, 1e-12) << "s = " << s;
    }
    EXPECT_NEAR(WavefunctionProfile::mass_above(1e-300), 1.0, 1e-12);
    EXPECT_NEAR(WavefunctionProfile::mass_above(1.0), 0.0, 1e-15);
}

TEST(WavefunctionProfile, ThresholdInvertsSiteCount) {
    const WavefunctionProfile prof{DotGeometry{}};
    for (double count : {10.0, 1e3, 1e5, 1e6}) {
        EXPECT_NEAR(prof.sites_above(prof.threshold_for(count)), count, 1e-6 * count);
    }
}

TEST(Apportion, ConservesTotalAndUsesLargestRemainder) {
    EXPECT_EQ(apportion({1, 1, 1}, 10), (std::vector<std::uint64_t>{4, 3, 3}));
    EXPECT_EQ(apportion({0.301, 0.199, 0.5}, 1000), (std::vector<std::uint64_t>{301, 199, 500}));
    const auto v = apportion({0.2, 0.7, 0.1}, 7);
    EXPECT_EQ(std::accumulate(v.begin(), v.end(), std::uint64_t{0}), 7u);
    EXPECT_THROW(apportion({0.0, 0.0}, 3), std::invalid_argument);
}

TEST(BuildClusters, SingleClusterIsTheMeanCoupling) {
    DotGeometry geo;
    geo.n_total = 5000;
    geo.nu0 *= 200.0;
    const auto c = build_clusters(geo, single_species(2e9), 1);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].N, 5000u);
    EXPECT_NEAR(c[0].A, 2e9 / 5000.0, 1e-9 * c[0].A);
}

TEST(BuildClusters, UniformProfileGivesEqualClusters) {
    const auto c = build_clusters(UniformProfile(1000), single_species(), 4);
    ASSERT_EQ(c.size(), 4u);
    std::uint64_t total = 0;
    for (const auto& x : c) {
        EXPECT_DOUBLE_EQ(x.A, c[0].A);
        EXPECT_EQ(x.N, 250u);
        total += x.N;
    }
    EXPECT_EQ(total, 1000u);
}

TEST(BuildClusters, ConservesCountsAndCouplingSum) {
    const auto species = gaas_species();
    const DotGeometry geo;
    const auto counts = species_counts(species, geo.n_total);
    for (std::size_t n : {25, 50, 100}) {
        const auto c = build_clusters(geo, species, n);
        for (std::size_t k = 0; k < species.size(); ++k) {
            std::uint64_t pop = 0;
            double sum = 0.0;
            for (const auto& x : c) {
                if (x.species != k) continue;
                pop += x.N;
                sum += static_cast<double>(x.N) * x.A;
                EXPECT_GE(x.A, 0.0);
                EXPECT_GE(x.N, 1u);
            }
            EXPECT_EQ(pop, counts[k]);
            const double expect = species[k].abundance * species[k].total_hyperfine;
            EXPECT_LT(std::abs(sum - expect) / expect, 0.02);
        }
    }
}

TEST(BuildClusters, ClustersOrderedStrongestFirst) {
    const auto c = build_clusters(DotGeometry{}, single_species(), 30);
    for (std::size_t j = 1; j < c.size(); ++j) EXPECT_GT(c[j - 1].A, c[j].A);
}

// Brute force: enumerate a cell-centred lattice, keep the n_total strongest sites, split them
// into equal-population bins and average the couplings per bin.
TEST(BuildClusters, MatchesLatticeEnumeration) {
    DotGeometry geo;
    geo.z0 = 20e-9;
    geo.L = 20e-9;
    geo.nu0 = std::pow(0.5e-9, 3);
    geo.n_total = 200000;
    const double a = std::cbrt(geo.nu0);
    std::vector<double> w;
    const int nxy = static_cast<int>(4.0 * geo.L / a);
    const int nz = static_cast<int>(0.5 * geo.z0 / a);
    for (int k = -nz; k < nz; ++k) {
        for (int i = -nxy; i < nxy; ++i) {
            for (int j = -nxy; j < nxy; ++j) {
                w.push_back(wavefunction_weight({(i + 0.5) * a, (j + 0.5) * a, (k + 0.5) * a}, geo));
            }
        }
    }
    std::sort(w.begin(), w.end(), std::greater<>());
    w.resize(geo.n_total);
    const double captured = std::accumulate(w.begin(), w.end(), 0.0);

    const std::size_t n = 10;
    const double total_hyperfine = 1e10;
    const auto clusters = build_clusters(geo, single_species(total_hyperfine), n);
    const std::size_t per_bin = geo.n_total / n;
    for (std::size_t j = 0; j < n; ++j) {
        const double mean = std::accumulate(w.begin() + j * per_bin, w.begin() + (j + 1) * per_bin, 0.0) /
                            static_cast<double>(per_bin);
        const double lattice_A = total_hyperfine * mean / captured;
        EXPECT_NEAR(clusters[j].A, lattice_A, 0.01 * lattice_A) << "bin " << j;
    }
}

TEST(BuildClusters, RejectsTooManyClusters) {
    DotGeometry geo;
    geo.n_total = 100;
    geo.nu0 *= 1e4;
    EXPECT_THROW(build_clusters(geo, single_species(), 101), std::invalid_argument);
    EXPECT_THROW(build_clusters(geo, single_species(), 0), std::invalid_argument);
    // 199 nuclei of the rarest isotope cannot fill 200 clusters.
    geo.n_total = 1000;
    EXPECT_THROW(build_clusters(geo, gaas_species(), 200), std::invalid_argument);
}

TEST(BuildClusters, UniaxialCorrelationConvergesInClusterCount) {
    // Fixed point t_M = t_I = 1e-3 / A_mean in the GaAs geometry, where C is about 0.57.
    const auto species = gaas_species();
    const DotGeometry geo;
    double mean_A = 0.0;
    for (const auto& s : species) mean_A += s.abundance * s.total_hyperfine / static_cast<double>(geo.n_total);
    const double t = 1e-3 / mean_A;
    auto C = [&](std::size_t n) {
        return correlation_uniaxial({build_clusters(geo, species, n), std::nullopt, t, t, 0.5, DotMode::Symmetric});
    };
    const double c25 = C(25), c50 = C(50), c100 = C(100);
    EXPECT_GT(c50, 0.3);
    EXPECT_LT(c50, 0.9);
    EXPECT_LT(std::abs(c50 - c100), 1e-3);
    EXPECT_LE(std::abs(c50 - c100), std::abs(c25 - c100));
}

TEST(Larmor, LinearInField) {
    const std::vector<NuclearSpecies> s{{"a", 2 * std::numbers::pi * 10e6, 0, 1, 0.5}};
    EXPECT_DOUBLE_EQ(larmor_frequencies(s, 0.0)[0], 0.0);
    EXPECT_NEAR(larmor_frequencies(s, 0.1)[0], 2 * std::numbers::pi * 1e6, 1e-6);
    EXPECT_THROW(larmor_frequencies(s, -0.1), std::invalid_argument);

    const auto w = larmor_frequencies(gaas_species(), 0.04);
    EXPECT_NE(w[0], w[1]);
    EXPECT_NE(w[1], w[2]);
    EXPECT_NE(w[0], w[2]);
}

TEST(BathComponent, RmsFieldIdentity) {
    const auto species = gaas_species();
    const PhysicalConstants pc;
    const auto comps = make_components(build_clusters(DotGeometry{}, species, 8), species, pc, 0.04);
    for (const auto& c : comps) {
        EXPECT_DOUBLE_EQ(c.b_rms, pc.hbar * c.A / (2.0 * 0.44 * pc.mu_B) * std::sqrt(5.0 * static_cast<double>(c.N)));
        EXPECT_DOUBLE_EQ(c.omega, species[c.species].gamma * 0.04);
    }
}
