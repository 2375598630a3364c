#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rfiqkd/params.hpp"
#include "rfiqkd/tally.hpp"

namespace rfiqkd {

// Analytic forward model of the link: from channel and operating parameters
// to the expected detection statistics per basis pair and intensity.

struct PairProbabilities {
    double p00 = 0; // correct detector fires, transmitter bit 0
    double p01 = 0; // wrong detector fires, transmitter bit 0
    double p10 = 0;
    double p11 = 0;
};

namespace detail {

// Fraction of the pulse intensity steered to the correct / wrong detector
// for each basis pair. The Z pair never leaks light into the wrong detector;
// the phase pairs split by the misalignment angle.
struct IntensitySplit {
    double correct;
    double wrong;
};

inline IntensitySplit intensity_split(BasisPair pair, double theta) {
    switch (pair) {
        case BasisPair::ZZ: return {1.0, 0.0};
        case BasisPair::XX:
        case BasisPair::YY: return {(1.0 + std::cos(theta)) / 2.0, (1.0 - std::cos(theta)) / 2.0};
        case BasisPair::XY: return {(1.0 - std::sin(theta)) / 2.0, (1.0 + std::sin(theta)) / 2.0};
        case BasisPair::YX: return {(1.0 + std::sin(theta)) / 2.0, (1.0 - std::sin(theta)) / 2.0};
    }
    throw std::invalid_argument("unknown basis pair");
}

inline double intrinsic_error(const ChannelParams& ch, BasisPair pair) {
    return pair == BasisPair::ZZ ? ch.e_d_z : ch.e_d_xy;
}

} // namespace detail

/// Click probabilities for one basis pair at intensity k. A click on
/// detector d means detector d fires and the opposite detector stays silent.
inline PairProbabilities pair_probabilities(const ChannelParams& ch, BasisPair pair, double k) {
    if (!(k >= 0.0)) throw std::invalid_argument("pair_probabilities: negative intensity");
    const double eta = transmittance(ch);
    const auto split = detail::intensity_split(pair, ch.theta);
    const double front = std::exp(-k * eta) * (1.0 - ch.p_d);
    // expm1 keeps e^{k eta w} + p_d - 1 exact when k eta w is tiny.
    const auto click = [&](double w) { return front * (std::expm1(k * eta * w) + ch.p_d); };
    PairProbabilities p;
    p.p00 = p.p11 = click(split.correct);
    p.p01 = p.p10 = click(split.wrong);
    return p;
}

/// Gain Q: detection probability per sent pulse, averaged over the
/// transmitter bit. The two bit values contribute symmetric halves, so the
/// four-term average collapses to p00 + p01; this keeps Q_XY == Q_YX exact.
inline double gain(const ChannelParams& ch, BasisPair pair, double k) {
    const PairProbabilities p = pair_probabilities(ch, pair, k);
    return p.p00 + p.p01;
}

namespace detail {

// E~ = e_d(1-2e) + e, evaluated for both bit assignments of the same click
// fractions: min{E~, 1-E~} written this way is symmetric under swapping the
// correct and wrong detectors, so E_XY == E_YX holds bit for bit.
inline double folded_qber(double wrong, double correct, double e_d) {
    const double total = correct + wrong;
    if (total <= 0.0) throw std::domain_error("qber: zero gain, QBER undefined");
    const auto fold = [&](double x) { return e_d * (1.0 - 2.0 * x) + x; };
    return std::min(fold(wrong / total), fold(correct / total));
}

} // namespace detail

/// QBER including the intrinsic optical error rate. The raw wrong-detector
/// fraction e is folded as E~ = e_d(1-2e) + e and clamped to min{E~, 1-E~}
/// (bit strings are flipped when the raw rate exceeds one half).
inline double qber(const ChannelParams& ch, BasisPair pair, double k) {
    const PairProbabilities p = pair_probabilities(ch, pair, k);
    return detail::folded_qber(p.p01, p.p00, detail::intrinsic_error(ch, pair));
}

/// Error rate of a true single-photon pulse in the given basis pair. The
/// photon reaches the wrong detector with the split fraction of the pair;
/// dark counts contribute when the photon is lost.
inline double single_photon_qber(const ChannelParams& ch, BasisPair pair) {
    const double eta = transmittance(ch);
    const auto split = detail::intensity_split(pair, ch.theta);
    const double dark = (1.0 - eta) * ch.p_d;
    return detail::folded_qber(eta * split.wrong + dark, eta * split.correct + dark,
                               detail::intrinsic_error(ch, pair));
}

/// Expected detection and error counts for a full session:
/// n = N_tot P_alpha P_beta P_k Q and m = n E over the five sifted pairs.
inline TallyTable expected_tallies(const ChannelParams& ch, const ProtocolParams& pp,
                                   const SessionParams& sess) {
    ch.validate();
    pp.validate();
    // A zero-pulse session is a valid (all-zero) expectation even though the
    // key-rate pipeline requires n_tot >= 1.
    if (!(sess.n_tot >= 0.0) || !std::isfinite(sess.n_tot))
        throw std::invalid_argument("expected_tallies: n_tot must be finite and non-negative");
    const auto basis_prob = [&](char b) {
        return b == 'Z' ? pp.p_z : (b == 'X' ? pp.p_x : pp.p_y);
    };
    TallyTable t;
    for (BasisPair pair : kAllPairs) {
        const char* name = to_string(pair);
        const double p_pair = basis_prob(name[0]) * basis_prob(name[1]);
        for (Intensity ki : kIntensities) {
            const double k = ki == Intensity::Signal ? pp.mu : pp.nu;
            const double p_k = ki == Intensity::Signal ? pp.p_mu : pp.p_nu;
            const double q = gain(ch, pair, k);
            const double count = sess.n_tot * p_pair * p_k * q;
            t.n(pair, ki) = count;
            t.m(pair, ki) = count > 0.0 ? count * qber(ch, pair, k) : 0.0;
        }
    }
    return t;
}

} // namespace rfiqkd
