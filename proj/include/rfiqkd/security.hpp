#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "rfiqkd/finitekey.hpp"
#include "rfiqkd/params.hpp"
#include "rfiqkd/statmodel.hpp"
#include "rfiqkd/tally.hpp"

namespace rfiqkd {

// Security core of the protocol: the frame-independent quantity C, the bound
// on the information leaked to an eavesdropper, and the finite-key secret
// key rate.

struct SecurityResult {
    double c_value = 0;             // in [0, 4]; 2 for an ideal single-photon channel
    double e_zz_1u = 0;             // single-photon error bound in the key basis
    double e_zz = 0;                // observed key-basis QBER, both intensities
    double u_value = 0;             // in [0, 1]
    double v_value = 0;
    double i_e_upper = 0;           // leaked bits per single-photon event, [0, 1]
    double s0_lower = 0;
    double s1_lower = 0;
    double skr_per_pulse = 0;       // secret fraction R, clamped at 0
    double skr_bits_per_second = 0; // R x repetition rate
};

/// Binary Shannon entropy h(x) with the 0 log 0 = 0 convention.
inline double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

/// The quantity C: sum of the four squared X/Y correlators,
/// sum (1 - 2 e^{1,U})^2 over XX, XY, YX, YY. Independent of the frame
/// misalignment angle for an ideal single-photon channel, where it equals 2.
inline double c_quantity(double e_xx, double e_xy, double e_yx, double e_yy) {
    for (double e : {e_xx, e_xy, e_yx, e_yy})
        if (!(e >= 0.0 && e <= 0.5))
            throw std::invalid_argument("c_quantity: error bound outside [0,0.5]");
    const auto sq = [](double e) {
        const double c = 1.0 - 2.0 * e;
        return c * c;
    };
    return sq(e_xx) + sq(e_xy) + sq(e_yx) + sq(e_yy);
}

struct EveInformation {
    double u = 0;
    double v = 0;
    double i_e_upper = 0;
};

/// Eve's information bound I_E^U from the key-basis single-photon error
/// bound and C. When e_zz vanishes, the v term is weighted by zero, so v is
/// defined as 0 there; a negative radicand is clamped before the root.
inline EveInformation eve_information(double e_zz_1u, double c) {
    if (!(e_zz_1u >= 0.0 && e_zz_1u < 0.5))
        throw std::invalid_argument("eve_information: e_zz_1u outside [0,0.5)");
    if (!(c >= 0.0 && c <= 4.0)) throw std::invalid_argument("eve_information: C outside [0,4]");
    EveInformation out;
    out.u = std::min(std::sqrt(c / 2.0) / (1.0 - e_zz_1u), 1.0);
    if (e_zz_1u > 0.0) {
        const double rad = c / 2.0 - (1.0 - e_zz_1u) * (1.0 - e_zz_1u) * out.u * out.u;
        // Physical states satisfy C/2 <= (1-e)^2 + e^2, which keeps v <= 1;
        // clamp so out-of-region inputs stay inside the entropy domain.
        out.v = std::min(std::sqrt(std::max(rad, 0.0)) / e_zz_1u, 1.0);
    }
    out.i_e_upper = (1.0 - e_zz_1u) * binary_entropy((1.0 + out.u) / 2.0) +
                    e_zz_1u * binary_entropy((1.0 + out.v) / 2.0);
    return out;
}

/// Finite-key secret key rate. The key-basis raw key and QBER combine both
/// intensities; the rate is clamped at zero.
inline SecurityResult secret_key_rate(const TallyTable& t, const DecoyBounds& bounds_zz,
                                      double e_zz_1u, double c, const EpsilonBudget& eb,
                                      const SessionParams& sess, double f) {
    eb.validate();
    sess.validate();
    if (!(f >= 1.0)) throw std::invalid_argument("secret_key_rate: error-correction efficiency below 1");
    const double n_zz = t.n_total(BasisPair::ZZ);
    if (n_zz <= 0.0) throw std::invalid_argument("secret_key_rate: no key-basis detections");

    SecurityResult res;
    res.c_value = c;
    res.e_zz_1u = e_zz_1u;
    res.e_zz = t.m_total(BasisPair::ZZ) / n_zz;
    res.s0_lower = bounds_zz.s0_lower;
    res.s1_lower = bounds_zz.s1_lower;

    const EveInformation eve = eve_information(e_zz_1u, c);
    res.u_value = eve.u;
    res.v_value = eve.v;
    res.i_e_upper = eve.i_e_upper;

    const double key = bounds_zz.s0_lower + bounds_zz.s1_lower * (1.0 - eve.i_e_upper) -
                       n_zz * f * binary_entropy(res.e_zz) -
                       eb.a * std::log2(eb.b / eb.eps_sec) - std::log2(2.0 / eb.eps_cor);
    res.skr_per_pulse = std::max(key / sess.n_tot, 0.0);
    res.skr_bits_per_second = res.skr_per_pulse * sess.rep_rate_hz;
    return res;
}

/// Full finite-key pipeline on a tally table: decoy bounds for the key pair
/// and the four phase pairs, then C and the rate. Pairs whose single-photon
/// bound collapses contribute the pessimistic e1 = 0.5.
inline SecurityResult analyze_tallies(const TallyTable& t, const ProtocolParams& pp,
                                      const EpsilonBudget& eb, const SessionParams& sess,
                                      double f) {
    t.validate();
    const DecoyBounds zz = decoy_bounds(t, BasisPair::ZZ, pp, eb);
    std::array<double, 4> e1{};
    for (std::size_t i = 0; i < kPhasePairs.size(); ++i)
        e1[i] = decoy_bounds(t, kPhasePairs[i], pp, eb).e1_upper;
    const double c = c_quantity(e1[0], e1[1], e1[2], e1[3]);
    // A fully saturated key-basis error bound leaks everything; report a
    // null rate instead of leaving eve_information's domain.
    const double e_zz_1u = std::min(zz.e1_upper, 0.5 - 1e-15);
    return secret_key_rate(t, zz, e_zz_1u, c, eb, sess, f);
}

/// C evaluated with the true single-photon error rates of the channel, the
/// infinite-statistics reference for the frame-independence check.
inline double asymptotic_c_value(const ChannelParams& ch) {
    std::array<double, 4> e1{};
    for (std::size_t i = 0; i < kPhasePairs.size(); ++i)
        e1[i] = single_photon_qber(ch, kPhasePairs[i]);
    return c_quantity(e1[0], e1[1], e1[2], e1[3]);
}

/// Misalignment angle from the measured signal-intensity QBER of the XX
/// pair: theta = arccos(1 - 2 E). Valid while the per-pulse detected energy
/// stays far below one photon and dark counts are negligible.
inline double estimate_theta(double e_xx_mu) {
    if (!(e_xx_mu >= 0.0 && e_xx_mu <= 0.5))
        throw std::invalid_argument("estimate_theta: QBER outside [0,0.5]");
    return std::acos(1.0 - 2.0 * e_xx_mu);
}

} // namespace rfiqkd
