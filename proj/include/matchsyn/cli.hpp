#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "matchsyn/checkpoint.hpp"

namespace matchsyn {

struct SynthesisResult {
    Geometry geometry;
    Performance target;
    std::complex<double> achieved;     // surrogate verification of the prediction
    std::array<double, 4> z_scores{};  // normalized target coordinates
    bool out_of_distribution = false;  // any |z| > 4
    bool geometry_valid = false;       // all six fields strictly positive
    bool verified = false;             // surrogate evaluation succeeded
};

// Predict a geometry for the target performance and verify it through
// the analytic surrogate with the same loading capacitors. The
// geometry is quantized to 0.01 um before verification so the verified
// network is exactly the one reported.
SynthesisResult synthesize_target(const LoadedModel& model, const Performance& target,
                                  const EnvConfig& env);

namespace cli {

// Entry point behind the `matchsyn` binary. args excludes the program
// name. Returns 0 on success, 2 on usage errors, 1 on runtime errors.
int run(const std::vector<std::string>& args);

}  // namespace cli

}  // namespace matchsyn
