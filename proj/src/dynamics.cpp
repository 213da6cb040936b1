#include "tsgen/dynamics.hpp"

#include <cmath>

#include "tsgen/errors.hpp"

namespace tsgen {

namespace {
using Complex = std::complex<double>;
}

Eigen::VectorXd DynamicModel::electrical_power(const Eigen::VectorXd& delta) const {
    const std::size_t g = gen_bus.size();
    ComplexVector emf(g);
    for (std::size_t i = 0; i < g; ++i) {
        emf(i) = std::polar(emf_mag(i), delta(static_cast<Eigen::Index>(i)));
    }
    const ComplexVector inj = y_reduced * emf;
    return (emf.array() * inj.array().conjugate()).real();
}

ComplexVector DynamicModel::recover_voltages(const Eigen::VectorXd& delta) const {
    const std::size_t g = gen_bus.size();
    ComplexVector emf(g);
    for (std::size_t i = 0; i < g; ++i) {
        emf(i) = std::polar(emf_mag(i), delta(static_cast<Eigen::Index>(i)));
    }
    return network_lu.solve(-(y_ng * emf));
}

DynamicModel prepare_dynamic_model(const GridCase& grid, const PowerFlowSolution& pf,
                                   const std::optional<FaultSpec>& fault) {
    const std::size_t n = grid.buses.size();
    const std::size_t g = grid.generators.size();
    if (g == 0) throw DataError("dynamic model needs at least one generator");

    ComplexMatrix y_net = build_ybus(grid, fault);
    const std::size_t dim = static_cast<std::size_t>(y_net.rows());

    DynamicModel model;
    model.omega_s = 2.0 * M_PI * grid.f_nominal_hz;
    model.n_network_buses = n;
    model.load_admittance.resize(grid.loads.size());
    model.load_bus.resize(grid.loads.size());
    for (std::size_t k = 0; k < grid.loads.size(); ++k) {
        const std::size_t i = grid.bus_index(grid.loads[k].bus);
        const double vsq = pf.v_mag(i) * pf.v_mag(i);
        const Complex y = Complex(pf.load_p(k), -pf.load_q(k)) / vsq;
        model.load_admittance(k) = y;
        model.load_bus[k] = i;
        y_net(i, i) += y;
    }

    model.gen_bus.resize(g);
    model.gen_admittance.resize(g);
    model.emf_mag.resize(g);
    model.delta0.resize(g);
    model.inertia_2h.resize(g);
    model.damping.resize(g);
    ComplexMatrix y_gg = ComplexMatrix::Zero(g, g);
    model.y_ng = ComplexMatrix::Zero(dim, g);
    for (std::size_t k = 0; k < g; ++k) {
        const auto& gen = grid.generators[k];
        const std::size_t i = grid.bus_index(gen.bus);
        const Complex y_gen = 1.0 / Complex(0.0, gen.xd_transient);
        model.gen_bus[k] = i;
        model.gen_admittance(k) = y_gen;
        y_net(i, i) += y_gen;
        y_gg(k, k) = y_gen;
        model.y_ng(i, k) = -y_gen;

        const Complex v_t = std::polar(pf.v_mag(i), pf.v_angle(i));
        const Complex s(pf.gen_p(k), pf.gen_q(k));
        const Complex current = std::conj(s / v_t);
        const Complex emf = v_t + Complex(0.0, gen.xd_transient) * current;
        model.emf_mag(k) = std::abs(emf);
        model.delta0(k) = std::arg(emf);
        model.inertia_2h(k) = 2.0 * gen.inertia_h;
        model.damping(k) = gen.damping;
    }

    model.network_lu.compute(y_net);
    if (!model.network_lu.isInvertible()) {
        throw NumericError("singular network matrix in model reduction");
    }
    // Kron reduction: Y_red = Y_GG - Y_GN * Y_NN^-1 * Y_NG.
    model.y_reduced = y_gg - model.y_ng.transpose() * model.network_lu.solve(model.y_ng);

    // Turbine power is the power-flow electrical output, whatever the network
    // state; the prefault reduced network reproduces it at delta0.
    model.p_mech = pf.gen_p;
    return model;
}

namespace {

struct SwingState {
    Eigen::VectorXd delta;
    Eigen::VectorXd omega;  // speed deviation, rad/s
};

void swing_rates(const DynamicModel& m, const SwingState& s, Eigen::VectorXd& ddelta,
                 Eigen::VectorXd& domega) {
    ddelta = s.omega;
    const Eigen::VectorXd pe = m.electrical_power(s.delta);
    domega = (m.omega_s * (m.p_mech - pe - m.damping.cwiseProduct(s.omega)).array() /
              m.inertia_2h.array())
                 .matrix();
}

void rk4_step(const DynamicModel& m, SwingState& s, double h) {
    Eigen::VectorXd k1d, k1w, k2d, k2w, k3d, k3w, k4d, k4w;
    swing_rates(m, s, k1d, k1w);
    SwingState t{s.delta + 0.5 * h * k1d, s.omega + 0.5 * h * k1w};
    swing_rates(m, t, k2d, k2w);
    t.delta = s.delta + 0.5 * h * k2d;
    t.omega = s.omega + 0.5 * h * k2w;
    swing_rates(m, t, k3d, k3w);
    t.delta = s.delta + h * k3d;
    t.omega = s.omega + h * k3w;
    swing_rates(m, t, k4d, k4w);
    s.delta += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    s.omega += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
}

// Max-min of COI-relative angles; the common COI shift cancels.
double coi_spread(const Eigen::VectorXd& delta) {
    if (delta.size() == 1) return 0.0;
    return delta.maxCoeff() - delta.minCoeff();
}

}  // namespace

SwingResult simulate_swing(const SnapshotModels& models, double clearing_time, double horizon,
                           double step, bool record_trajectory) {
    if (!models.fault_on || !models.postfault) {
        throw ConfigError("simulate_swing needs fault-on and postfault models");
    }
    if (!(clearing_time >= 0.0 && clearing_time < horizon)) {
        throw ConfigError("clearing time must lie inside the horizon");
    }
    if (!(step > 0.0)) throw ConfigError("integration step must be positive");

    const DynamicModel& fault_on = *models.fault_on;
    const DynamicModel& postfault = *models.postfault;

    SwingResult result;
    SwingState state{fault_on.delta0, Eigen::VectorXd::Zero(fault_on.delta0.size())};
    result.max_coi_spread = coi_spread(state.delta);

    const auto record = [&](double t) {
        if (record_trajectory) {
            result.times.push_back(t);
            result.deltas.push_back(state.delta);
        }
    };
    const auto diverged = [&]() {
        return !state.delta.allFinite() || state.delta.cwiseAbs().maxCoeff() > 1e4;
    };

    record(0.0);
    double t = 0.0;
    // Fault-on interval [0, t_cl): full steps plus one partial to land exactly.
    while (t < clearing_time - 1e-12) {
        const double h = std::min(step, clearing_time - t);
        rk4_step(fault_on, state, h);
        t += h;
        result.max_coi_spread = std::max(result.max_coi_spread, coi_spread(state.delta));
        record(t);
        if (diverged()) {
            result.early_stopped = true;
            result.max_coi_spread = std::max(result.max_coi_spread, 2.0 * kInstabilityThresholdRad);
            result.delta_at_clearing = state.delta;
            result.delta_final = state.delta;
            return result;
        }
    }
    result.delta_at_clearing = state.delta;

    while (t < horizon - 1e-12) {
        const double h = std::min(step, horizon - t);
        rk4_step(postfault, state, h);
        t += h;
        result.max_coi_spread = std::max(result.max_coi_spread, coi_spread(state.delta));
        record(t);
        if (diverged()) {
            result.early_stopped = true;
            result.max_coi_spread = std::max(result.max_coi_spread, 2.0 * kInstabilityThresholdRad);
            break;
        }
        // Label is decided once the spread crosses the threshold.
        if (result.max_coi_spread > kInstabilityThresholdRad) break;
    }
    result.delta_final = state.delta;
    return result;
}

StabilityLabel label_stability(const SwingResult& result) {
    return result.max_coi_spread > kInstabilityThresholdRad ? StabilityLabel::Unstable
                                                            : StabilityLabel::Stable;
}

}  // namespace tsgen
