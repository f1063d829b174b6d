// oracles.hpp: brute-force reference calculations (desk scale only)
//
//  * protocol_oracle: state-vector simulation of the two-measurement protocol for <= 12 spin-1/2 nuclei
//  * gaussian_identity_check: Monte Carlo of exp(-(i/2) z^T T z*) against 1/det(I + iT)
//  * classical_vector_mc: direct Overhauser-phase simulation with transverse field vectors
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "spinbath/bath_model.hpp"
#include "spinbath/parallel.hpp"
#include "spinbath/pulse_protocol.hpp"
#include "spinbath/rng.hpp"
#include "spinbath/tmatrix.hpp"

namespace spinbath {

// ---------------------------------------------------------------------------------------------
// Exact protocol simulation

enum class Axis { X, Z };

struct SmallBath {
    std::vector<double> couplings;           // rad/s, one per nucleus
    Axis intermediate_axis{Axis::X};         // z during outer windows; x (non-commuting) or z here

    static constexpr std::size_t kMaxSpins = 12;
    static constexpr std::size_t kMaxEnumerated = 8;
};

struct ProtocolOracleResult {
    double c_exact{0.0};        // literal simulation with Born-rule outcome probabilities
    double c_two_term{0.0};          // closed expression 1/2 <U0+ UI+ U0+ U1 UI U1> + 1/2 <U1+ UI+ U0+ U1 UI U0>
    double fid_amplitude{0.0};  // |<U0^dag U1>| over the mixture: size of the normalisation term the two-term form drops
    double std_error{0.0};      // of c_exact; 0 when all basis states are enumerated
    double max_probability_defect{0.0};
    std::uint64_t n_states{0};
    bool sampled{false};
};

namespace detail {

using StateVector = Eigen::VectorXcd;

// exp(-i theta_i J^z_i) on every spin i; bit i of the index set means spin i is down.
inline void apply_z(StateVector& v, const std::vector<double>& theta) {
    using namespace std::complex_literals;
    const auto dim = v.size();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const cplx up = std::exp(-0.5i * theta[i]);
        const cplx down = std::exp(0.5i * theta[i]);
        const Eigen::Index bit = Eigen::Index{1} << i;
        for (Eigen::Index j = 0; j < dim; ++j) v[j] *= (j & bit) ? down : up;
    }
}

// exp(-i theta_i J^x_i) on every spin i.
inline void apply_x(StateVector& v, const std::vector<double>& theta) {
    const auto dim = v.size();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double c = std::cos(0.5 * theta[i]);
        const cplx s{0.0, -std::sin(0.5 * theta[i])};
        const Eigen::Index bit = Eigen::Index{1} << i;
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (j & bit) continue;
            const cplx a = v[j];
            const cplx b = v[j | bit];
            v[j] = c * a + s * b;
            v[j | bit] = s * a + c * b;
        }
    }
}

inline std::vector<double> scaled(const std::vector<double>& A, double f) {
    std::vector<double> out(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) out[i] = f * A[i];
    return out;
}

struct BasisStateResult {
    double exact{0.0};
    double two_term{0.0};
    cplx fid_overlap{};
    double probability_defect{0.0};
};

// The qubit's |0> branch evolves the bath with exp(+i A/2 J^z t), |1> with exp(-i A/2 J^z t);
// measurement and preparation are in the |+->, i.e. S^x, basis.
inline BasisStateResult simulate_basis_state(const SmallBath& bath, std::uint64_t j, double t_M, double t_I) {
    const auto n = static_cast<Eigen::Index>(std::uint64_t{1} << bath.couplings.size());
    const auto& A = bath.couplings;
    const auto th_M = scaled(A, 0.5 * t_M);   // U1 = exp(-i th_M J^z), U0 = exp(+i th_M J^z)
    const auto th_I = scaled(A, 0.5 * t_I);
    const auto neg_M = scaled(A, -0.5 * t_M);
    const auto neg_I = scaled(A, -0.5 * t_I);

    auto U0 = [&](StateVector& v) { apply_z(v, neg_M); };
    auto U1 = [&](StateVector& v) { apply_z(v, th_M); };
    auto U0dag = U1;
    auto U1dag = U0;
    // Intermediate evolution for the electron spin component s = +-1/2 along the intermediate axis.
    auto intermediate = [&](StateVector& v, double s) {
        const auto& th = s > 0 ? th_I : neg_I;
        if (bath.intermediate_axis == Axis::X) apply_x(v, th); else apply_z(v, th);
    };

    StateVector J = StateVector::Zero(n);
    J[static_cast<Eigen::Index>(j)] = 1.0;

    BasisStateResult r;

    // Closed expression, U_I taken for the +1/2 electron state.
    {
        StateVector v = J;
        U1(v); intermediate(v, 0.5); U1(v); U0dag(v); intermediate(v, -0.5); U0dag(v);
        const cplx t1 = v[static_cast<Eigen::Index>(j)];
        v = J;
        U0(v); intermediate(v, 0.5); U1(v); U0dag(v); intermediate(v, -0.5); U1dag(v);
        const cplx t2 = v[static_cast<Eigen::Index>(j)];
        r.two_term = 0.5 * t1.real() + 0.5 * t2.real();
    }

    // Literal protocol.
    auto second_measurement = [&](const StateVector& chi, double& defect) {
        StateVector a = chi, b = chi;
        U0(a);
        U1(b);
        double expect = 0.0, total = 0.0;
        for (int m2 : {1, -1}) {
            const StateVector amp = 0.5 * (a + static_cast<double>(m2) * b);
            const double p = amp.squaredNorm();
            expect += m2 * p;
            total += p;
        }
        defect = std::max(defect, std::abs(total - 1.0));
        return expect;
    };

    StateVector psi0 = J, psi1 = J;
    U0(psi0);
    U1(psi1);
    r.fid_overlap = psi0.dot(psi1);
    double p_total = 0.0;
    double defect = 0.0;
    for (int m1 : {1, -1}) {
        StateVector bath_state = 0.5 * (psi0 + static_cast<double>(m1) * psi1);
        const double p1 = bath_state.squaredNorm();
        p_total += p1;
        if (p1 < 1e-300) continue;
        bath_state /= std::sqrt(p1);

        double m2_mean = 0.0;
        if (bath.intermediate_axis == Axis::X) {
            // Qubit sits in the S^x eigenstate m1/2, so the bath sees a single rotation.
            StateVector chi = bath_state;
            intermediate(chi, 0.5 * m1);
            m2_mean = second_measurement(chi, defect);
        } else {
            // |m1> is an equal superposition of the S^z branches; the qubit is reset afterwards,
            // leaving the bath in the corresponding mixture.
            for (double s : {0.5, -0.5}) {
                StateVector chi = bath_state;
                intermediate(chi, s);
                m2_mean += 0.5 * second_measurement(chi, defect);
            }
        }
        r.exact += m1 * p1 * m2_mean;
    }
    r.probability_defect = std::max(defect, std::abs(p_total - 1.0));
    return r;
}

} // namespace detail

inline ProtocolOracleResult protocol_oracle(const SmallBath& bath, double t_M, double t_I,
                                            std::uint64_t samples = 512, std::uint64_t seed = 1,
                                            unsigned threads = 1) {
    const std::size_t n_spins = bath.couplings.size();
    if (n_spins > SmallBath::kMaxSpins) {
        throw std::invalid_argument("protocol_oracle: at most 12 spins (Hilbert dimension 4096)");
    }
    const std::uint64_t dim = std::uint64_t{1} << n_spins;
    const bool sample = n_spins > SmallBath::kMaxEnumerated;
    const std::uint64_t count = sample ? samples : dim;

    std::vector<detail::BasisStateResult> per_state(count);
    parallel_for(count, threads, [&](std::size_t i) {
        std::uint64_t j = i;
        if (sample) {
            auto eng = make_engine(seed, 0x0ac1e, i);
            j = std::uniform_int_distribution<std::uint64_t>(0, dim - 1)(eng);
        }
        per_state[i] = detail::simulate_basis_state(bath, j, t_M, t_I);
    });

    ProtocolOracleResult r;
    r.n_states = count;
    r.sampled = sample;
    double sq = 0.0;
    cplx overlap{};
    for (const auto& s : per_state) {
        r.c_exact += s.exact;
        r.c_two_term += s.two_term;
        overlap += s.fid_overlap;
        sq += s.exact * s.exact;
        r.max_probability_defect = std::max(r.max_probability_defect, s.probability_defect);
    }
    const double m = static_cast<double>(count);
    r.c_exact /= m;
    r.c_two_term /= m;
    r.fid_amplitude = std::abs(overlap) / m;
    if (sample && count > 1) {
        r.std_error = std::sqrt(std::max(0.0, (sq - m * r.c_exact * r.c_exact) / (m - 1.0)) / m);
    }
    return r;
}

// ---------------------------------------------------------------------------------------------
// Gaussian integral identity

struct GaussianCheck {
    cplx mc_mean;
    cplx closed_form;
    double std_error{0.0};

    [[nodiscard]] bool consistent(double n_sigma = 3.0) const {
        return std::abs(mc_mean - closed_form) <= n_sigma * std_error + 1e-12;
    }
};

// z_k = x + iy with x, y ~ N(0, 1).
inline GaussianCheck gaussian_identity_check(const ComplexMatrix& T, std::uint64_t n_samples, std::uint64_t seed) {
    using namespace std::complex_literals;
    if (n_samples < 1000) throw std::invalid_argument("gaussian_identity_check: need at least 1000 samples");
    if (T.rows() != T.cols()) throw std::invalid_argument("gaussian_identity_check: T must be square");
    const auto n = T.rows();
    std::mt19937_64 eng(substream_seed(seed, 0x6a55, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd z(n);
    cplx sum = 0.0;
    double sum_re2 = 0.0, sum_im2 = 0.0;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double x = gauss(eng);
            const double y = gauss(eng);
            z[k] = cplx{x, y};
        }
        const cplx q = z.transpose() * T * z.conjugate();
        const cplx v = std::exp(-0.5i * q);
        sum += v;
        sum_re2 += v.real() * v.real();
        sum_im2 += v.imag() * v.imag();
    }
    const double m = static_cast<double>(n_samples);
    GaussianCheck r;
    r.mc_mean = sum / m;
    const double var_re = std::max(0.0, (sum_re2 - m * r.mc_mean.real() * r.mc_mean.real()) / (m - 1.0));
    const double var_im = std::max(0.0, (sum_im2 - m * r.mc_mean.imag() * r.mc_mean.imag()) / (m - 1.0));
    r.std_error = std::sqrt((var_re + var_im) / m);
    const auto ld = log_det_shifted(T, 1.0);
    r.closed_form = ld ? std::exp(-*ld) : cplx{std::numeric_limits<double>::infinity()};
    return r;
}

// ---------------------------------------------------------------------------------------------
// Classical transverse-field simulation

struct ClassicalVectorConfig {
    std::vector<BathComponent> components;   // single dot, <= 8
    std::vector<double> species_gamma;
    PhysicalConstants constants;
    double B_ext{0.04};
    double delta_B_rms{0.0};
    double t_M{0.0};
    double t_I{0.0};
    ExperimentSequence sequence;
    bool suppress_backaction{false};          // drop the sigma A_k phase of the intermediate window

    static constexpr std::size_t kMaxComponents = 8;
};

struct ClassicalVectorResult {
    double C{0.0};
    double std_error{0.0};
    std::uint64_t n_samples{0};
};

namespace detail {

// sum_{sigma = +-1/2} integral_0^t_M c(t) exp(i x t + i sigma A_kl Phi(t)) dt, composite Simpson per
// constant-sign segment with step <= min(2 pi / (20 max|x|), t_M / 200).
inline Eigen::MatrixXcd phase_kernel(const std::vector<double>& omega, const std::vector<double>& A,
                                     const PulseProtocol& outer) {
    using namespace std::complex_literals;
    const auto n = static_cast<Eigen::Index>(omega.size());
    const double t_M = outer.duration();
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(n, n);
    if (t_M == 0.0) return G;
    double max_x = 0.0;
    for (auto a : omega) for (auto b : omega) max_x = std::max(max_x, std::abs(a - b));
    double h_max = t_M / 200.0;
    if (max_x > 0.0) h_max = std::min(h_max, 2.0 * std::numbers::pi / (20.0 * max_x));

    std::vector<double> edges{0.0};
    for (double f : outer.flip_times()) edges.push_back(f);
    edges.push_back(t_M);

    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
            const double x = omega[k] - omega[l];
            const double a_kl = A[k] - A[l];
            cplx acc = 0.0;
            for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
                const double a = edges[seg], b = edges[seg + 1];
                if (b <= a) continue;
                const double sign = (seg % 2 == 0) ? 1.0 : -1.0;
                const double phi_a = outer.flip_integral(a);
                std::size_t m = static_cast<std::size_t>(std::ceil((b - a) / h_max));
                m += m % 2;
                m = std::max<std::size_t>(m, 2);
                const double h = (b - a) / static_cast<double>(m);
                auto f = [&](double t) {
                    const double phi = phi_a + sign * (t - a);
                    return std::exp(1i * x * t) * (2.0 * std::cos(0.5 * a_kl * phi));
                };
                cplx s = f(a) + f(b);
                for (std::size_t i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
                acc += sign * s * (h / 3.0);
            }
            G(k, l) = acc;
        }
    }
    return G;
}

} // namespace detail

// Per-sample correlation estimates, in sample order.
inline std::vector<double> classical_vector_samples(const ClassicalVectorConfig& cfg, std::uint64_t n_samples,
                                                    std::uint64_t seed, unsigned threads = 1) {
    using namespace std::complex_literals;
    const auto& comps = cfg.components;
    if (comps.size() > ClassicalVectorConfig::kMaxComponents) {
        throw std::invalid_argument("classical_vector_mc: at most 8 components");
    }
    cfg.constants.validate();
    const auto n = static_cast<Eigen::Index>(comps.size());
    const auto& pc = cfg.constants;
    const double coupling = pc.g_electron * pc.mu_B / (4.0 * pc.hbar * std::abs(cfg.B_ext));
    const double phi_out = cfg.sequence.outer.flip_integral(cfg.t_M);
    const double phi_I = cfg.sequence.intermediate.flip_integral(cfg.t_I);

    std::vector<double> A(comps.size()), omega0(comps.size());
    for (std::size_t k = 0; k < comps.size(); ++k) {
        A[k] = comps[k].A;
        omega0[k] = comps[k].omega;
    }
    const Eigen::MatrixXcd G0 = detail::phase_kernel(omega0, A, cfg.sequence.outer);
    const std::size_t n_species = cfg.species_gamma.size();

    std::vector<double> out(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t i) {
        auto eng = make_engine(seed, 0xc1a55, i);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> omega = omega0;
        Eigen::MatrixXcd G_local;
        const Eigen::MatrixXcd* G = &G0;
        if (cfg.delta_B_rms > 0.0) {
            std::vector<double> dB(n_species);
            for (auto& v : dB) v = cfg.delta_B_rms * gauss(eng);
            for (std::size_t k = 0; k < comps.size(); ++k) omega[k] += cfg.species_gamma[comps[k].species] * dB[comps[k].species];
            G_local = detail::phase_kernel(omega, A, cfg.sequence.outer);
            G = &G_local;
        }
        Eigen::VectorXcd b(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double x = gauss(eng);
            const double y = gauss(eng);
            b[k] = comps[static_cast<std::size_t>(k)].b_rms * cplx{x, y};
        }
        const double phi1 = coupling * (b.transpose() * (*G) * b.conjugate())(0).real();
        double acc = 0.0;
        for (double sigma : {0.5, -0.5}) {
            Eigen::VectorXcd b2(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                const auto ks = static_cast<std::size_t>(k);
                double phase = omega[ks] * (cfg.t_M + cfg.t_I);
                if (!cfg.suppress_backaction) phase += sigma * A[ks] * (phi_out + phi_I);
                b2[k] = b[k] * std::exp(1i * phase);
            }
            const double phi2 = coupling * (b2.transpose() * (*G) * b2.conjugate())(0).real();
            acc += 0.5 * 0.5 * (std::cos(phi1 + phi2) + std::cos(phi1 - phi2));
        }
        out[i] = acc;
    });
    return out;
}

inline ClassicalVectorResult classical_vector_mc(const ClassicalVectorConfig& cfg, std::uint64_t n_samples,
                                                 std::uint64_t seed, unsigned threads = 1) {
    const auto v = classical_vector_samples(cfg, n_samples, seed, threads);
    ClassicalVectorResult r;
    r.n_samples = n_samples;
    double s = 0.0, s2 = 0.0;
    for (double x : v) {
        s += x;
        s2 += x * x;
    }
    const double m = static_cast<double>(n_samples);
    r.C = s / m;
    if (n_samples > 1) r.std_error = std::sqrt(std::max(0.0, (s2 - m * r.C * r.C) / (m - 1.0)) / m);
    return r;
}

} // namespace spinbath
