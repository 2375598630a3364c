#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rfiqkd/record.hpp"
#include "rfiqkd/security.hpp"
#include "oracles.hpp"

using namespace rfiqkd;
using Catch::Approx;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kF = 1.16;
} // namespace

TEST_CASE("binary entropy") {
    CHECK(binary_entropy(0.5) == 1.0);
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.11) == Approx(oracle::kEntropy011).epsilon(1e-12));
    CHECK_THROWS_AS(binary_entropy(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(binary_entropy(1.1), std::invalid_argument);
}

TEST_CASE("quantity C") {
    CHECK(c_quantity(0.0, 0.5, 0.5, 0.0) == Approx(2.0));
    CHECK(c_quantity(0.5, 0.5, 0.5, 0.5) == 0.0);
    CHECK_THROWS_AS(c_quantity(0.6, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("eavesdropper information bound") {
    SECTION("ideal single-photon channel leaks nothing") {
        const EveInformation eve = eve_information(0.0, 2.0);
        CHECK(eve.u == 1.0);
        CHECK(eve.v == 0.0);
        CHECK(eve.i_e_upper == 0.0);
    }
    SECTION("no phase correlations leak everything") {
        const EveInformation eve = eve_information(0.0, 0.0);
        CHECK(eve.u == 0.0);
        CHECK(eve.i_e_upper == Approx(1.0));
    }
    SECTION("regression at the 250 km published point") {
        const EveInformation eve = eve_information(0.0247, 0.78);
        CHECK(eve.u == Approx(oracle::kUValue).epsilon(1e-12));
        CHECK(eve.v == 0.0); // u below 1 exhausts the radicand exactly
        CHECK(eve.i_e_upper == Approx(oracle::kEveInfo).epsilon(1e-12));
    }
    SECTION("monotone in C at fixed error bound") {
        double prev = 1.0;
        for (double c = 0.0; c <= 2.0; c += 0.05) {
            const double ie = eve_information(0.03, c).i_e_upper;
            CHECK(ie <= prev + 1e-12);
            prev = ie;
        }
    }
}

TEST_CASE("secret key rate on the reference dataset") {
    const auto run = [&](const char* name) {
        const ExperimentRecord rec = read_record(oracle::data_path(name));
        return analyze_tallies(rec.tallies, rec.protocol, EpsilonBudget{}, rec.session, kF);
    };
    const SecurityResult r250 = run("reference_250km.json");
    CHECK(r250.c_value == Approx(oracle::kC250).epsilon(1e-9));
    CHECK(std::abs(r250.c_value - 0.78) <= 0.03);
    CHECK(r250.skr_bits_per_second == Approx(oracle::kSkr250).epsilon(1e-9));
    CHECK(r250.skr_bits_per_second == Approx(0.65).epsilon(0.10));

    const SecurityResult r200 = run("reference_200km.json");
    CHECK(r200.skr_bits_per_second == Approx(oracle::kSkr200).epsilon(1e-6));
    CHECK(r200.skr_bits_per_second == Approx(49.65).epsilon(0.10));
}

TEST_CASE("secret key rate clamps at zero under total leakage") {
    const ExperimentRecord rec = read_record(oracle::data_path("reference_250km.json"));
    DecoyBounds zz = decoy_bounds(rec.tallies, BasisPair::ZZ, rec.protocol, EpsilonBudget{});
    zz.s0_lower = kVacuumFloor;
    const SecurityResult r =
        secret_key_rate(rec.tallies, zz, 0.2, 0.0, EpsilonBudget{}, rec.session, kF);
    CHECK(r.i_e_upper == Approx(1.0)); // u = v = 0
    CHECK(r.skr_per_pulse == 0.0);
    CHECK(r.skr_bits_per_second == 0.0);
}

TEST_CASE("secret key rate input checks") {
    const ExperimentRecord rec = read_record(oracle::data_path("reference_250km.json"));
    const DecoyBounds zz = decoy_bounds(rec.tallies, BasisPair::ZZ, rec.protocol, EpsilonBudget{});
    CHECK_THROWS_AS(
        secret_key_rate(rec.tallies, zz, 0.02, 1.0, EpsilonBudget{}, rec.session, 0.9),
        std::invalid_argument);
    const TallyTable empty;
    CHECK_THROWS_AS(secret_key_rate(empty, zz, 0.02, 1.0, EpsilonBudget{}, rec.session, kF),
                    std::invalid_argument);
}

TEST_CASE("C is independent of the frame misalignment") {
    for (int i = 0; i < 100; ++i) {
        ChannelParams ch = oracle::reference_channel(20.0);
        ch.p_d = 0.0;
        ch.e_d_z = ch.e_d_xy = 0.0;
        ch.theta = 2.0 * kPi * i / 100.0;
        CHECK(std::abs(asymptotic_c_value(ch) - 2.0) <= 1e-9);
    }
}

TEST_CASE("rate is non-increasing in loss at fixed parameters") {
    ProtocolParams pp;
    SessionParams sess;
    double prev = std::numeric_limits<double>::infinity();
    for (double loss = 30.0; loss <= 60.0; loss += 2.5) {
        const ChannelParams ch = oracle::reference_channel(loss);
        const TallyTable t = expected_tallies(ch, pp, sess);
        const double skr =
            analyze_tallies(t, pp, EpsilonBudget{}, sess, kF).skr_bits_per_second;
        CHECK(skr <= prev + 1e-9);
        CHECK(skr >= 0.0);
        prev = skr;
    }
}

TEST_CASE("misalignment estimation") {
    CHECK(estimate_theta(0.0) == 0.0);
    CHECK(estimate_theta(0.5) == Approx(kPi / 2.0).epsilon(1e-12));
    CHECK(estimate_theta(0.03015) == Approx(oracle::kThetaFromE).epsilon(1e-12));
    CHECK(std::abs(estimate_theta(0.03015) - kPi / 9.0) <= 1e-3);
    CHECK_THROWS_AS(estimate_theta(0.51), std::invalid_argument);
    CHECK_THROWS_AS(estimate_theta(-0.01), std::invalid_argument);
}

TEST_CASE("misalignment estimation inverts the low-flux channel") {
    ChannelParams ch;
    ch.eta_d = 1e-4; // eta = 1e-4 at zero loss
    ch.p_d = 1e-8;
    ch.e_d_z = ch.e_d_xy = 0.0;
    ch.loss_db = 0.0;
    for (double theta = 0.1; theta <= 1.2; theta += 0.05) {
        ch.theta = theta;
        const double measured = qber(ch, BasisPair::XX, 0.388);
        CHECK(std::abs(estimate_theta(measured) - theta) <= 1e-2);
    }
}

TEST_CASE("pipeline composition equals the convenience entry point") {
    const ExperimentRecord rec = read_record(oracle::data_path("reference_250km.json"));
    const EpsilonBudget eb;
    const SecurityResult full =
        analyze_tallies(rec.tallies, rec.protocol, eb, rec.session, kF);

    const DecoyBounds zz = decoy_bounds(rec.tallies, BasisPair::ZZ, rec.protocol, eb);
    const double c = c_quantity(
        decoy_bounds(rec.tallies, BasisPair::XX, rec.protocol, eb).e1_upper,
        decoy_bounds(rec.tallies, BasisPair::XY, rec.protocol, eb).e1_upper,
        decoy_bounds(rec.tallies, BasisPair::YX, rec.protocol, eb).e1_upper,
        decoy_bounds(rec.tallies, BasisPair::YY, rec.protocol, eb).e1_upper);
    const SecurityResult manual =
        secret_key_rate(rec.tallies, zz, zz.e1_upper, c, eb, rec.session, kF);

    CHECK(full.c_value == manual.c_value);
    CHECK(full.i_e_upper == manual.i_e_upper);
    CHECK(full.skr_bits_per_second == manual.skr_bits_per_second);
}
