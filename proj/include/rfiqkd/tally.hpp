#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rfiqkd {

// The five basis pairs that survive sifting. Mixed Z/X, Z/Y, ... events are
// discarded and never tallied.
enum class BasisPair { ZZ, XX, XY, YX, YY };

enum class Intensity { Signal, Decoy }; // mu, nu

inline constexpr std::array<BasisPair, 5> kAllPairs = {
    BasisPair::ZZ, BasisPair::XX, BasisPair::XY, BasisPair::YX, BasisPair::YY};

inline constexpr std::array<BasisPair, 4> kPhasePairs = {
    BasisPair::XX, BasisPair::XY, BasisPair::YX, BasisPair::YY};

inline constexpr std::array<Intensity, 2> kIntensities = {Intensity::Signal,
                                                          Intensity::Decoy};

inline const char* to_string(BasisPair p) {
    switch (p) {
        case BasisPair::ZZ: return "ZZ";
        case BasisPair::XX: return "XX";
        case BasisPair::XY: return "XY";
        case BasisPair::YX: return "YX";
        case BasisPair::YY: return "YY";
    }
    throw std::invalid_argument("unknown basis pair");
}

/// File-format token for an intensity ("mu" / "nu").
inline const char* to_string(Intensity k) {
    return k == Intensity::Signal ? "mu" : "nu";
}

inline BasisPair basis_pair_from_string(std::string_view s) {
    for (BasisPair p : kAllPairs)
        if (s == to_string(p)) return p;
    throw std::invalid_argument("unknown basis pair '" + std::string(s) + "'");
}

inline Intensity intensity_from_string(std::string_view s) {
    if (s == "mu") return Intensity::Signal;
    if (s == "nu") return Intensity::Decoy;
    throw std::invalid_argument("unknown intensity '" + std::string(s) + "'");
}

// Detection counts n and error counts m per (basis pair, intensity).
// Values are real so the same type carries analytic expectations and
// integer counts sampled by the simulator or read from record files.
class TallyTable {
  public:
    double& n(BasisPair p, Intensity k) { return n_[idx(p)][kidx(k)]; }
    double& m(BasisPair p, Intensity k) { return m_[idx(p)][kidx(k)]; }
    double n(BasisPair p, Intensity k) const { return n_[idx(p)][kidx(k)]; }
    double m(BasisPair p, Intensity k) const { return m_[idx(p)][kidx(k)]; }

    /// Detections in a basis pair summed over both intensities.
    double n_total(BasisPair p) const {
        return n_[idx(p)][0] + n_[idx(p)][1];
    }
    double m_total(BasisPair p) const {
        return m_[idx(p)][0] + m_[idx(p)][1];
    }

    TallyTable scaled(double c) const {
        TallyTable out = *this;
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                out.n_[i][j] *= c;
                out.m_[i][j] *= c;
            }
        return out;
    }

    bool is_integral(double tol = 1e-9) const {
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                if (std::abs(n_[i][j] - std::round(n_[i][j])) > tol ||
                    std::abs(m_[i][j] - std::round(m_[i][j])) > tol)
                    return false;
        return true;
    }

    void validate() const {
        for (BasisPair p : kAllPairs)
            for (Intensity k : kIntensities) {
                if (!(n(p, k) >= 0.0) || !(m(p, k) >= 0.0))
                    throw std::invalid_argument(std::string("TallyTable: negative tally in ") +
                                                to_string(p));
                if (m(p, k) > n(p, k))
                    throw std::invalid_argument(std::string("TallyTable: m > n in ") +
                                                to_string(p) + "." + to_string(k));
            }
    }

    friend bool operator==(const TallyTable&, const TallyTable&) = default;

  private:
    static std::size_t idx(BasisPair p) { return static_cast<std::size_t>(p); }
    static std::size_t kidx(Intensity k) { return static_cast<std::size_t>(k); }

    double n_[5][2] = {};
    double m_[5][2] = {};
};

} // namespace rfiqkd
