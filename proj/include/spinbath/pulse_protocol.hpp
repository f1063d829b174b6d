// pulse_protocol.hpp: qubit pi-pulse sequences as a switching function c(t) = +-1
#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinbath {

enum class ProtocolKind { FID, SE, CPMG, Custom };

// Instantaneous pi-pulses at flip_times inside (0, duration); c(t) starts at +1.
class PulseProtocol {
public:
    PulseProtocol() = default;

    PulseProtocol(ProtocolKind kind, double duration, std::vector<double> flip_times)
        : kind_(kind), duration_(duration), flips_(std::move(flip_times)) {
        if (!(duration_ >= 0.0)) throw std::invalid_argument("pulse protocol: duration must be >= 0");
        for (std::size_t i = 0; i < flips_.size(); ++i) {
            if (!(flips_[i] > 0.0 && flips_[i] < duration_)) {
                throw std::invalid_argument("pulse protocol: flip times must lie strictly inside (0, duration)");
            }
            if (i > 0 && !(flips_[i] > flips_[i - 1])) {
                throw std::invalid_argument("pulse protocol: flip times must be strictly increasing");
            }
        }
    }

    static PulseProtocol fid(double duration) { return {ProtocolKind::FID, duration, {}}; }

    static PulseProtocol spin_echo(double duration) {
        if (duration == 0.0) return {ProtocolKind::SE, 0.0, {}};
        return {ProtocolKind::SE, duration, {0.5 * duration}};
    }

    // Carr-Purcell-Meiboom-Gill with n pulses at (2j - 1) tau / (2n).
    static PulseProtocol cpmg(std::size_t n, double duration) {
        if (n < 1) throw std::invalid_argument("CPMG needs at least one pulse");
        std::vector<double> flips;
        if (duration > 0.0) {
            for (std::size_t j = 1; j <= n; ++j) {
                flips.push_back(duration * static_cast<double>(2 * j - 1) / static_cast<double>(2 * n));
            }
        }
        return {ProtocolKind::CPMG, duration, std::move(flips)};
    }

    // Custom flip times given as fractions of the duration, so the shape survives rescaling.
    static PulseProtocol custom(const std::vector<double>& fractions, double duration) {
        std::vector<double> flips;
        if (duration > 0.0) {
            for (double f : fractions) flips.push_back(f * duration);
        }
        return {ProtocolKind::Custom, duration, std::move(flips)};
    }

    [[nodiscard]] ProtocolKind kind() const { return kind_; }
    [[nodiscard]] double duration() const { return duration_; }
    [[nodiscard]] const std::vector<double>& flip_times() const { return flips_; }

    [[nodiscard]] int switching_value(double t) const {
        check_range(t);
        const auto n = std::upper_bound(flips_.begin(), flips_.end(), t) - flips_.begin();
        return (n % 2 == 0) ? 1 : -1;
    }

    // Exact integral of c over [0, t].
    [[nodiscard]] double flip_integral(double t) const {
        check_range(t);
        double acc = 0.0;
        double last = 0.0;
        int sign = 1;
        for (double f : flips_) {
            if (f >= t) break;
            acc += sign * (f - last);
            last = f;
            sign = -sign;
        }
        return acc + sign * (t - last);
    }

private:
    void check_range(double t) const {
        if (!(t >= 0.0 && t <= duration_)) {
            throw std::out_of_range("pulse protocol: t outside [0, duration]");
        }
    }

    ProtocolKind kind_{ProtocolKind::FID};
    double duration_{0.0};
    std::vector<double> flips_;
};

// Outer protocol for both measurement windows (duration t_M) and the intermediate one (t_I).
struct ExperimentSequence {
    PulseProtocol outer;
    PulseProtocol intermediate;
};

// Protocol description independent of duration; instantiated per grid point.
struct ProtocolSpec {
    ProtocolKind kind{ProtocolKind::SE};
    std::size_t cpmg_pulses{1};
    std::vector<double> custom_fractions;

    [[nodiscard]] PulseProtocol make(double duration) const {
        switch (kind) {
        case ProtocolKind::FID: return PulseProtocol::fid(duration);
        case ProtocolKind::SE: return PulseProtocol::spin_echo(duration);
        case ProtocolKind::CPMG: return PulseProtocol::cpmg(cpmg_pulses, duration);
        case ProtocolKind::Custom: return PulseProtocol::custom(custom_fractions, duration);
        }
        return PulseProtocol::fid(duration);
    }

    [[nodiscard]] std::string name() const {
        switch (kind) {
        case ProtocolKind::FID: return "FID";
        case ProtocolKind::SE: return "SE";
        case ProtocolKind::CPMG: return "CPMG-" + std::to_string(cpmg_pulses);
        case ProtocolKind::Custom: return "custom";
        }
        return "FID";
    }
};

} // namespace spinbath
