#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "tsgen/powerflow.hpp"

namespace tsgen {

// Classical-model reduction of one network state: loads as constant
// admittances at the power-flow voltages, generators as EMFs behind x'd,
// every non-internal node eliminated by Kron reduction.
struct DynamicModel {
    ComplexMatrix y_reduced;      // GxG internal-node admittance matrix
    Eigen::VectorXd emf_mag;      // |E| per generator
    Eigen::VectorXd delta0;       // initial rotor angles, rad
    Eigen::VectorXd p_mech;       // mechanical power, pu
    Eigen::VectorXd inertia_2h;   // 2*H per generator, s
    Eigen::VectorXd damping;      // D per generator
    double omega_s = 2.0 * 3.14159265358979323846 * 60.0;

    // Full-network recovery state for the clearing-instant snapshot.
    Eigen::FullPivLU<ComplexMatrix> network_lu;  // factors Y_NN
    ComplexMatrix y_ng;                          // network-to-internal block
    ComplexVector load_admittance;               // per load
    std::vector<std::size_t> load_bus;           // internal bus index per load
    std::vector<std::size_t> gen_bus;            // internal bus index per generator
    ComplexVector gen_admittance;                // 1/(j x'd) per generator
    std::size_t n_network_buses = 0;             // grid buses (fault node excluded)

    // P_e per generator at rotor angles `delta` on the reduced network.
    Eigen::VectorXd electrical_power(const Eigen::VectorXd& delta) const;

    // Full-network bus voltages given rotor angles.
    ComplexVector recover_voltages(const Eigen::VectorXd& delta) const;
};

DynamicModel prepare_dynamic_model(const GridCase& grid, const PowerFlowSolution& pf,
                                   const std::optional<FaultSpec>& fault = {});

enum class StabilityLabel { Stable, Unstable };

struct SwingResult {
    double max_coi_spread = 0.0;   // max over time of (max_i - min_i) COI-relative angle, rad
    bool early_stopped = false;
    Eigen::VectorXd delta_at_clearing;
    Eigen::VectorXd delta_final;
    // Optional recording for diagnostics and tests.
    std::vector<double> times;
    std::vector<Eigen::VectorXd> deltas;
};

struct SnapshotModels {
    const DynamicModel* prefault = nullptr;
    const DynamicModel* fault_on = nullptr;
    const DynamicModel* postfault = nullptr;
};

// Fixed-step RK4 on the swing equations: fault-on model on [0, t_cl),
// postfault on [t_cl, horizon]. Integration stops early once the label is
// decided (spread beyond the instability threshold) or the state diverges.
SwingResult simulate_swing(const SnapshotModels& models, double clearing_time, double horizon,
                           double step, bool record_trajectory = false);

inline constexpr double kInstabilityThresholdRad = 2.0 * 3.14159265358979323846;

StabilityLabel label_stability(const SwingResult& result);

}  // namespace tsgen
