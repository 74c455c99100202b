#include "matchsyn/circuit_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace matchsyn {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kMu0 = 4.0e-7 * kPi;      // H/m
constexpr double kFeedPhPerUm = 0.4;       // feed-line inductance, pH/um
constexpr double kSheetRes = 0.07;         // Ohm per square
constexpr double kGndFactorDepth = 0.3;    // ground-proximity reduction depth
constexpr double kGndDecayUm = 40.0;       // ground-proximity decay length, um
constexpr double kMaxCoupling = 0.75;      // coupling at equal radii
constexpr double kCapPerUm = 0.3;          // parasitic capacitance, fF/um

void require_positive_geometry(const Geometry& g) {
    const bool ok = g.w_oa > 0.0 && g.w_ob > 0.0 && g.r0 > 0.0 && g.r1 > 0.0 &&
                    g.x_gnd > 0.0 && g.l_f > 0.0;
    if (!ok) throw std::invalid_argument("geometry fields must be strictly positive");
}

}  // namespace

double loop_inductance(double radius_um, double width_um, double feed_len_um) {
    if (!(radius_um > 0.0) || !(width_um > 0.0) || feed_len_um < 0.0)
        throw std::invalid_argument("loop_inductance: radius and width must be positive, feed length nonnegative");
    const double ratio = 8.0 * radius_um / width_um;
    // ln(ratio) - 2 must be positive for a physical loop term.
    if (ratio <= std::exp(2.0))
        throw std::domain_error("loop_inductance: 8*radius/width must exceed e^2");
    // mu0 * r * (ln(8r/w) - 2) with r in meters, expressed in pH.
    const double loop_ph = kMu0 * radius_um * (std::log(ratio) - 2.0) * 1.0e6;
    return loop_ph + kFeedPhPerUm * feed_len_um;
}

CircuitParams geometry_to_circuit(const Geometry& g, const EnvConfig& env) {
    require_positive_geometry(g);
    const double m = 1.0 - kGndFactorDepth * std::exp(-g.x_gnd / kGndDecayUm);

    CircuitParams c;
    c.l1 = m * loop_inductance(g.r0, g.w_oa, g.l_f);
    c.l2 = m * loop_inductance(g.r1, g.w_ob, g.l_f);

    const double radius_ratio = 2.0 * std::min(g.r0, g.r1) / (g.r0 + g.r1);
    c.k = kMaxCoupling * radius_ratio * radius_ratio * radius_ratio;

    const double omega = 2.0 * kPi * env.freq;
    const double res1 = kSheetRes * (2.0 * kPi * g.r0 / g.w_oa);
    const double res2 = kSheetRes * (2.0 * kPi * g.r1 / g.w_ob);
    c.q1 = omega * (c.l1 * 1.0e-12) / res1;
    c.q2 = omega * (c.l2 * 1.0e-12) / res2;

    c.cp = kCapPerUm * (g.r0 * g.w_oa + g.r1 * g.w_ob) / g.x_gnd;
    return c;
}

std::complex<double> input_impedance(const CircuitParams& c, double c1_ff,
                                     double c2_ff, const EnvConfig& env) {
    if (!(c.l1 > 0.0) || !(c.l2 > 0.0) || !(c.q1 > 0.0) || !(c.q2 > 0.0))
        throw std::invalid_argument("input_impedance: inductances and quality factors must be positive");
    if (c.k < 0.0 || c.k >= 1.0)
        throw std::invalid_argument("input_impedance: coupling must lie in [0, 1)");
    if (c.cp < 0.0 || c1_ff < 0.0 || c2_ff < 0.0)
        throw std::invalid_argument("input_impedance: capacitances must be nonnegative");

    const double omega = 2.0 * kPi * env.freq;
    const double l1 = c.l1 * 1.0e-12;   // pH -> H
    const double l2 = c.l2 * 1.0e-12;
    const double cap1 = c1_ff * 1.0e-15;  // fF -> F
    const double cap2 = c2_ff * 1.0e-15;
    const double capp = c.cp * 1.0e-15;

    const double r1 = omega * l1 / c.q1;
    const double r2 = omega * l2 / c.q2;
    const double mutual = c.k * std::sqrt(l1 * l2);

    const std::complex<double> j(0.0, 1.0);
    // Z_L = R_load || 1/(j w C2)
    const std::complex<double> z_load =
        env.r_load / (1.0 + j * (omega * cap2 * env.r_load));
    // Reflected secondary: (wM)^2 / (R2 + j w L2 + Z_L)
    const std::complex<double> z_sec = r2 + j * (omega * l2) + z_load;
    const std::complex<double> z_p =
        r1 + j * (omega * l1) + (omega * mutual) * (omega * mutual) / z_sec;
    // Input shunt C1 + Cp across the primary.
    return z_p / (1.0 + j * (omega * (cap1 + capp)) * z_p);
}

Performance performance_from_geometry(const Geometry& g, double c1_ff,
                                      double c2_ff, const EnvConfig& env) {
    const CircuitParams c = geometry_to_circuit(g, env);
    const std::complex<double> z = input_impedance(c, c1_ff, c2_ff, env);
    return Performance{z.real(), z.imag(), c1_ff, c2_ff};
}

}  // namespace matchsyn
