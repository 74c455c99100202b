#pragma once

#include <complex>

namespace matchsyn {

// Transformer 3D geometry. All lengths in micrometers.
struct Geometry {
    double w_oa = 0.0;   // trace width of coil A
    double w_ob = 0.0;   // trace width of coil B
    double r0 = 0.0;     // inner coil radius
    double r1 = 0.0;     // outer coil radius
    double x_gnd = 0.0;  // ground spacing
    double l_f = 0.0;    // input/output feed length
};

// Lumped parameters of the coupled-coil two-port.
struct CircuitParams {
    double l1 = 0.0;  // primary inductance, pH
    double l2 = 0.0;  // secondary inductance, pH
    double k = 0.0;   // magnetic coupling coefficient
    double q1 = 0.0;  // primary quality factor
    double q2 = 0.0;  // secondary quality factor
    double cp = 0.0;  // parasitic shunt capacitance at the primary, fF
};

// Network performance: target input impedance plus the two loading
// capacitors that must be absorbed into the match.
struct Performance {
    double re_z = 0.0;  // Re(Z), Ohm
    double im_z = 0.0;  // Im(Z), Ohm
    double c1 = 0.0;    // input loading capacitor, fF
    double c2 = 0.0;    // output loading capacitor, fF
};

struct EnvConfig {
    double freq = 3.0e10;   // operating frequency, Hz
    double r_load = 50.0;   // load resistance, Ohm
};

// Single-loop inductance in pH for a circular coil of the given radius
// and trace width, plus the feed-line contribution. Throws
// std::domain_error when 8*radius/width <= e^2 (loop term would not be
// positive) and std::invalid_argument for non-positive dimensions.
double loop_inductance(double radius_um, double width_um, double feed_len_um);

// Analytic surrogate for the EM solver: geometry -> lumped circuit
// parameters at the operating frequency.
CircuitParams geometry_to_circuit(const Geometry& g, const EnvConfig& env);

// Input impedance of the loaded matching network. The transformer is a
// coupled-inductor two-port with series loss; C1 and the parasitic Cp
// shunt the primary input node, C2 shunts the load.
std::complex<double> input_impedance(const CircuitParams& c, double c1_ff,
                                     double c2_ff, const EnvConfig& env);

// geometry_to_circuit followed by input_impedance, packaged as the
// 4-dimensional performance vector.
Performance performance_from_geometry(const Geometry& g, double c1_ff,
                                      double c2_ff, const EnvConfig& env);

}  // namespace matchsyn
