#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rfiqkd {

// Physical description of the link: detectors, channel loss and the
// misalignment angle between the transmitter and receiver phase frames.
struct ChannelParams {
    double eta_d = 0.7;    // detection efficiency, [0,1]
    double p_d = 1e-8;     // dark-count probability per gate, [0,1)
    double e_d_z = 0.007;  // intrinsic optical error rate, Z basis
    double e_d_xy = 0.014; // intrinsic optical error rate, X/Y bases
    double loss_db = 0.0;  // total transmission loss, dB
    double theta = 0.0;    // reference-frame misalignment, rad

    void validate() const {
        if (!(eta_d >= 0.0 && eta_d <= 1.0))
            throw std::invalid_argument("ChannelParams: eta_d outside [0,1]");
        if (!(p_d >= 0.0 && p_d < 1.0))
            throw std::invalid_argument("ChannelParams: p_d outside [0,1)");
        if (!(e_d_z >= 0.0 && e_d_z <= 0.5) || !(e_d_xy >= 0.0 && e_d_xy <= 0.5))
            throw std::invalid_argument("ChannelParams: intrinsic error rate outside [0,0.5]");
        if (!(loss_db >= 0.0))
            throw std::invalid_argument("ChannelParams: loss_db must be >= 0");
        if (!std::isfinite(theta))
            throw std::invalid_argument("ChannelParams: theta must be finite");
    }
};

/// Overall transmittance eta = eta_d * 10^(-loss_db/10).
inline double transmittance(const ChannelParams& ch) {
    return ch.eta_d * std::pow(10.0, -ch.loss_db / 10.0);
}

// Operating parameters chosen by the users: pulse intensities and the
// preparation/measurement probabilities. Basis probabilities are shared
// between the transmitter and the receiver.
struct ProtocolParams {
    double mu = 0.388; // signal intensity, mean photons per pulse
    double nu = 0.123; // decoy intensity, strictly below mu
    double p_mu = 0.5;
    double p_nu = 0.5;
    double p_z = 0.476;
    double p_x = 0.262;
    double p_y = 0.262;

    static constexpr double kSumTol = 1e-9;

    void validate() const {
        if (!(mu > 0.0 && nu > 0.0))
            throw std::invalid_argument("ProtocolParams: intensities must be positive");
        if (!(nu < mu))
            throw std::invalid_argument("ProtocolParams: decoy intensity must be below signal");
        for (double p : {p_mu, p_nu, p_z, p_x, p_y})
            if (!(p > 0.0 && p < 1.0))
                throw std::invalid_argument("ProtocolParams: probabilities must lie in (0,1)");
        if (std::abs(p_mu + p_nu - 1.0) > kSumTol)
            throw std::invalid_argument("ProtocolParams: p_mu + p_nu != 1");
        if (std::abs(p_z + p_x + p_y - 1.0) > kSumTol)
            throw std::invalid_argument("ProtocolParams: basis probabilities do not sum to 1");
    }
};

// Session bookkeeping: how many pulses are sent and at what rate.
struct SessionParams {
    double n_tot = 8.1e11;     // total pulses sent
    double rep_rate_hz = 1.5e8; // repetition rate, converts R to bit/s

    void validate() const {
        if (!(n_tot >= 1.0))
            throw std::invalid_argument("SessionParams: n_tot must be >= 1");
        if (!(rep_rate_hz > 0.0))
            throw std::invalid_argument("SessionParams: rep_rate_hz must be positive");
    }
};

} // namespace rfiqkd
