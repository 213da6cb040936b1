#pragma once

#include <complex>
#include <optional>

#include <Eigen/Dense>

#include "tsgen/grid.hpp"

namespace tsgen {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

enum class FaultState { FaultOn, PostFault };

// Three-phase fault at `position` (fraction from the `from` bus) on line
// `line_index`. FaultOn splits the line into two pi sections joined at an
// extra fault node carrying a -j1e6 pu shunt; PostFault removes the line.
struct FaultSpec {
    std::size_t line_index = 0;
    double position = 0.5;
    FaultState state = FaultState::FaultOn;
};

inline constexpr double kFaultAdmittanceMag = 1e6;

// Bus admittance matrix with pi-model lines. A FaultOn FaultSpec means the matrix
// gains one extra node (the fault point) as the last row/column. Throws
// NumericError if removing the faulted line disconnects the network.
ComplexMatrix build_ybus(const GridCase& grid, const std::optional<FaultSpec>& fault = {});

struct PowerFlowSolution {
    Eigen::VectorXd v_mag;     // pu, per bus
    Eigen::VectorXd v_angle;   // rad, per bus
    Eigen::VectorXd gen_p;     // pu, per generator (slack absorbs the residual)
    Eigen::VectorXd gen_q;     // pu, per generator
    Eigen::VectorXd load_p;    // pu, per load (scaled)
    Eigen::VectorXd load_q;    // pu, per load (scaled)
    double load_scale = 1.0;
    int iterations = 0;
};

// Newton-Raphson AC power flow at the given load scale. Loads and the base
// generator dispatch are both scaled by `load_scale`; the slack picks up the
// mismatch. Converges to max |mismatch| < 1e-8 pu within 50 iterations or
// throws NumericError (also thrown when any |V| < 0.5 pu).
PowerFlowSolution solve_power_flow(const GridCase& grid, double load_scale);

}  // namespace tsgen
