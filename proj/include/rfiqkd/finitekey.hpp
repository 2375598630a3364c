#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rfiqkd/params.hpp"
#include "rfiqkd/tally.hpp"

namespace rfiqkd {

// One-decoy finite-key estimation: Hoeffding fluctuation intervals and the
// decoy-state bounds on vacuum events, single-photon events and the
// single-photon error rate.

struct EpsilonBudget {
    double eps_sec = 1e-9;  // secrecy failure probability
    double eps_cor = 1e-15; // correctness failure probability
    // Hoeffding failure probabilities for count / error-count intervals.
    // 1e-11 reproduces the reference dataset's single-photon bounds to
    // better than 0.1% at the two longest distances.
    double eps_1 = 1e-11;
    double eps_2 = 1e-11;
    int a = 6;  // composition constant
    int b = 43; // composition constant

    void validate() const {
        for (double e : {eps_sec, eps_cor, eps_1, eps_2})
            if (!(e > 0.0 && e < 1.0))
                throw std::invalid_argument("EpsilonBudget: failure probabilities must lie in (0,1)");
        if (a <= 0 || b <= 0)
            throw std::invalid_argument("EpsilonBudget: a and b must be positive");
    }
};

struct DecoyBounds {
    double s0_lower = 0; // vacuum events, lower bound (floored at 1e-10)
    double s0_upper = 0; // vacuum events, upper bound
    double s1_lower = 0; // single-photon events, lower bound
    double m1_upper = 0; // single-photon error counts, upper bound
    double e1_upper = 0; // single-photon error rate, upper bound in [0, 0.5]
};

// The reference analysis floors a negative vacuum-event bound at 1e-10
// instead of zero; reproduced bit for bit.
inline constexpr double kVacuumFloor = 1e-10;

/// Probability that a pulse carries i photons, mixed over both intensities:
/// tau_i = sum_k P_k e^-k k^i / i!. Only i = 0 and i = 1 enter the protocol.
inline double tau(int i, const ProtocolParams& pp) {
    if (i != 0 && i != 1) throw std::invalid_argument("tau: photon number must be 0 or 1");
    const auto term = [&](double k, double p_k) {
        return p_k * std::exp(-k) * (i == 0 ? 1.0 : k);
    };
    return term(pp.mu, pp.p_mu) + term(pp.nu, pp.p_nu);
}

/// Hoeffding half-width for a sample of size x_tot at failure probability eps.
inline double hoeffding_delta(double x_tot, double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("hoeffding_delta: eps outside (0,1]");
    if (!(x_tot >= 0.0)) throw std::invalid_argument("hoeffding_delta: negative sample size");
    return std::sqrt(x_tot / 2.0 * std::log(1.0 / eps));
}

struct HoeffdingBounds {
    double lower = 0;
    double upper = 0;
};

/// Fluctuation interval for a per-intensity count x, rescaled to the
/// Poisson-corrected estimate (e^k / p_k)(x -+ delta). The half-width uses
/// the basis-pair total x_tot over both intensities. Lower clamps at zero.
inline HoeffdingBounds hoeffding_bounds(double x, double x_tot, double k, double p_k,
                                        double eps) {
    if (!(x >= 0.0)) throw std::invalid_argument("hoeffding_bounds: negative count");
    if (!(p_k > 0.0 && p_k <= 1.0)) throw std::invalid_argument("hoeffding_bounds: p_k outside (0,1]");
    const double d = hoeffding_delta(x_tot, eps);
    const double scale = std::exp(k) / p_k;
    return {std::max(scale * (x - d), 0.0), scale * (x + d)};
}

namespace detail {

inline DecoyBounds decoy_bounds_impl(const TallyTable& t, BasisPair pair,
                                     const ProtocolParams& pp, double eps_1, double eps_2) {
    pp.validate();
    if (pp.mu - pp.nu < 1e-6)
        throw std::invalid_argument("decoy_bounds: intensities too close to separate photon numbers");

    const double mu = pp.mu, nu = pp.nu;
    const double t0 = tau(0, pp), t1 = tau(1, pp);
    const double n_tot = t.n_total(pair);
    const double m_tot = t.m_total(pair);
    const double dn = hoeffding_delta(n_tot, eps_1);

    const auto n_mu = hoeffding_bounds(t.n(pair, Intensity::Signal), n_tot, mu, pp.p_mu, eps_1);
    const auto n_nu = hoeffding_bounds(t.n(pair, Intensity::Decoy), n_tot, nu, pp.p_nu, eps_1);
    const auto m_mu = hoeffding_bounds(t.m(pair, Intensity::Signal), m_tot, mu, pp.p_mu, eps_2);
    const auto m_nu = hoeffding_bounds(t.m(pair, Intensity::Decoy), m_tot, nu, pp.p_nu, eps_2);

    DecoyBounds out;
    out.s0_lower = std::max(t0 / (mu - nu) * (mu * n_nu.lower - nu * n_mu.upper), kVacuumFloor);

    // Vacuum upper bound: errors bound vacuum events; the per-intensity
    // estimate is available for either intensity, keep the tightest.
    const double via_totals = 2.0 * (m_tot + dn);
    const double via_mu = 2.0 * t0 * m_mu.upper + 2.0 * dn;
    const double via_nu = 2.0 * t0 * m_nu.upper + 2.0 * dn;
    out.s0_upper = std::max(std::min({via_totals, via_mu, via_nu}), out.s0_lower);

    out.s1_lower = std::max(
        t1 * mu / (nu * (mu - nu)) *
            (n_nu.lower - nu * nu / (mu * mu) * n_mu.upper -
             (mu * mu - nu * nu) / (mu * mu) * out.s0_upper / t0),
        0.0);
    out.m1_upper = std::max(t1 / (mu - nu) * (m_mu.upper - m_nu.lower), 0.0);
    out.e1_upper = out.s1_lower > 0.0 ? std::min(out.m1_upper / out.s1_lower, 0.5) : 0.5;
    return out;
}

} // namespace detail

/// Decoy-state bounds for one basis pair. Degenerate decoy separation
/// (mu - nu below 1e-6) is rejected. An empty single-photon bound yields the
/// maximally pessimistic e1_upper = 0.5 rather than an error, so the rate
/// pipeline stays total.
inline DecoyBounds decoy_bounds(const TallyTable& t, BasisPair pair, const ProtocolParams& pp,
                                const EpsilonBudget& eb) {
    eb.validate();
    return detail::decoy_bounds_impl(t, pair, pp, eb.eps_1, eb.eps_2);
}

/// Zero-fluctuation limit of the decoy bounds: what the estimator converges
/// to when the tallies grow without bound (the Hoeffding widths vanish
/// relative to the counts).
inline DecoyBounds asymptotic_decoy_bounds(const TallyTable& t, BasisPair pair,
                                           const ProtocolParams& pp) {
    return detail::decoy_bounds_impl(t, pair, pp, 1.0, 1.0);
}

} // namespace rfiqkd
