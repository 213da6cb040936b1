#include "tsgen/powerflow.hpp"

#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "tsgen/errors.hpp"

namespace tsgen {

namespace {

using Complex = std::complex<double>;

void stamp_branch(ComplexMatrix& y, std::size_t i, std::size_t j, double r, double x, double b) {
    const Complex series = 1.0 / Complex(r, x);
    const Complex shunt(0.0, b / 2.0);
    y(i, i) += series + shunt;
    y(j, j) += series + shunt;
    y(i, j) -= series;
    y(j, i) -= series;
}

void check_connected(const GridCase& grid, std::size_t skip_line) {
    const std::size_t n = grid.buses.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t k = 0; k < grid.lines.size(); ++k) {
        if (k == skip_line) continue;
        const std::size_t a = grid.bus_index(grid.lines[k].from);
        const std::size_t b = grid.bus_index(grid.lines[k].to);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (const std::size_t v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++reached;
                stack.push_back(v);
            }
        }
    }
    if (reached != n) {
        throw NumericError("network splits after removing line " + std::to_string(skip_line));
    }
}

}  // namespace

ComplexMatrix build_ybus(const GridCase& grid, const std::optional<FaultSpec>& fault) {
    grid.validate();
    const std::size_t n = grid.buses.size();
    if (fault) {
        if (fault->line_index >= grid.lines.size()) {
            throw DataError("faulted line index out of range");
        }
        if (fault->state == FaultState::FaultOn &&
            !(fault->position >= 0.20 && fault->position <= 0.80)) {
            throw DataError("fault position outside [0.20, 0.80]");
        }
        // Splitting a line keeps it in service; only removal can island.
        if (fault->state == FaultState::PostFault) check_connected(grid, fault->line_index);
    }

    const bool fault_node = fault && fault->state == FaultState::FaultOn;
    const std::size_t dim = n + (fault_node ? 1 : 0);
    ComplexMatrix y = ComplexMatrix::Zero(dim, dim);

    for (std::size_t k = 0; k < grid.lines.size(); ++k) {
        if (fault && k == fault->line_index) continue;
        const auto& l = grid.lines[k];
        stamp_branch(y, grid.bus_index(l.from), grid.bus_index(l.to), l.r, l.x, l.b);
    }

    if (fault_node) {
        const auto& l = grid.lines[fault->line_index];
        const double p = fault->position;
        const std::size_t f = grid.bus_index(l.from);
        const std::size_t t = grid.bus_index(l.to);
        stamp_branch(y, f, n, l.r * p, l.x * p, l.b * p);
        stamp_branch(y, n, t, l.r * (1.0 - p), l.x * (1.0 - p), l.b * (1.0 - p));
        y(n, n) += Complex(0.0, -kFaultAdmittanceMag);
    }
    return y;
}

PowerFlowSolution solve_power_flow(const GridCase& grid, double load_scale) {
    grid.validate();
    if (!(load_scale >= 0.0 && std::isfinite(load_scale))) {
        throw ConfigError("load_scale must be a finite nonnegative value");
    }

    const std::size_t n = grid.buses.size();
    const std::size_t slack = grid.slack_index();
    const ComplexMatrix ybus = build_ybus(grid);
    const Eigen::MatrixXd g = ybus.real();
    const Eigen::MatrixXd b = ybus.imag();

    // Net scheduled injections: scaled base dispatch minus scaled load.
    Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(n);
    for (const auto& gen : grid.generators) {
        const std::size_t i = grid.bus_index(gen.bus);
        if (i != slack) p_spec(i) += gen.p_dispatch * load_scale;
    }
    for (const auto& load : grid.loads) {
        const std::size_t i = grid.bus_index(load.bus);
        p_spec(i) -= load.p0 * load_scale;
        q_spec(i) -= load.q0 * load_scale;
    }

    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
    std::vector<std::size_t> pq;       // V and theta unknown
    std::vector<std::size_t> non_slack;
    for (std::size_t i = 0; i < n; ++i) {
        if (grid.buses[i].type != BusType::PQ) vm(i) = grid.buses[i].v_set;
        if (i != slack) non_slack.push_back(i);
        if (grid.buses[i].type == BusType::PQ) pq.push_back(i);
    }
    const std::size_t n_ang = non_slack.size();
    const std::size_t n_mag = pq.size();
    std::vector<int> ang_pos(n, -1), mag_pos(n, -1);
    for (std::size_t k = 0; k < n_ang; ++k) ang_pos[non_slack[k]] = static_cast<int>(k);
    for (std::size_t k = 0; k < n_mag; ++k) mag_pos[pq[k]] = static_cast<int>(k);

    Eigen::VectorXd p_calc(n), q_calc(n);
    const auto eval_injections = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            double pi = 0.0, qi = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double th = va(i) - va(j);
                const double ct = std::cos(th), st = std::sin(th);
                pi += vm(j) * (g(i, j) * ct + b(i, j) * st);
                qi += vm(j) * (g(i, j) * st - b(i, j) * ct);
            }
            p_calc(i) = vm(i) * pi;
            q_calc(i) = vm(i) * qi;
        }
    };

    constexpr double kTol = 1e-8;
    constexpr int kMaxIter = 50;
    int iter = 0;
    for (;; ++iter) {
        eval_injections();
        Eigen::VectorXd mismatch(n_ang + n_mag);
        for (std::size_t k = 0; k < n_ang; ++k) {
            mismatch(k) = p_spec(non_slack[k]) - p_calc(non_slack[k]);
        }
        for (std::size_t k = 0; k < n_mag; ++k) {
            mismatch(n_ang + k) = q_spec(pq[k]) - q_calc(pq[k]);
        }
        if (mismatch.size() == 0 || mismatch.cwiseAbs().maxCoeff() < kTol) break;
        if (iter >= kMaxIter) {
            throw NumericError("power flow did not converge in 50 iterations at load scale " +
                               std::to_string(load_scale));
        }

        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_ang + n_mag, n_ang + n_mag);
        for (std::size_t i = 0; i < n; ++i) {
            const int pi = ang_pos[i];
            const int qi = mag_pos[i];
            if (pi < 0 && qi < 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                const int pj = ang_pos[j];
                const int qj = mag_pos[j];
                const double th = va(i) - va(j);
                const double ct = std::cos(th), st = std::sin(th);
                if (i == j) {
                    if (pi >= 0 && pj >= 0) {
                        jac(pi, pj) = -q_calc(i) - b(i, i) * vm(i) * vm(i);
                    }
                    if (pi >= 0 && qj >= 0) {
                        jac(pi, n_ang + qj) = p_calc(i) / vm(i) + g(i, i) * vm(i);
                    }
                    if (qi >= 0 && pj >= 0) {
                        jac(n_ang + qi, pj) = p_calc(i) - g(i, i) * vm(i) * vm(i);
                    }
                    if (qi >= 0 && qj >= 0) {
                        jac(n_ang + qi, n_ang + qj) = q_calc(i) / vm(i) - b(i, i) * vm(i);
                    }
                } else {
                    const double hij = vm(i) * vm(j) * (g(i, j) * st - b(i, j) * ct);
                    const double nij = vm(i) * (g(i, j) * ct + b(i, j) * st);
                    if (pi >= 0 && pj >= 0) jac(pi, pj) = hij;
                    if (pi >= 0 && qj >= 0) jac(pi, n_ang + qj) = nij;
                    if (qi >= 0 && pj >= 0) jac(n_ang + qi, pj) = -nij * vm(j);
                    if (qi >= 0 && qj >= 0) jac(n_ang + qi, n_ang + qj) = hij / vm(j);
                }
            }
        }

        const Eigen::VectorXd dx = jac.partialPivLu().solve(mismatch);
        if (!dx.allFinite()) throw NumericError("singular power-flow Jacobian");
        for (std::size_t k = 0; k < n_ang; ++k) va(non_slack[k]) += dx(k);
        for (std::size_t k = 0; k < n_mag; ++k) vm(pq[k]) += dx(n_ang + k);
        if (vm.minCoeff() < 0.5) {
            throw NumericError("voltage collapse at load scale " + std::to_string(load_scale));
        }
    }
    if (vm.minCoeff() < 0.5) {
        throw NumericError("voltage collapse at load scale " + std::to_string(load_scale));
    }

    eval_injections();
    PowerFlowSolution sol;
    sol.v_mag = vm;
    sol.v_angle = va;
    sol.load_scale = load_scale;
    sol.iterations = iter;
    sol.load_p.resize(grid.loads.size());
    sol.load_q.resize(grid.loads.size());
    Eigen::VectorXd load_p_bus = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd load_q_bus = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < grid.loads.size(); ++k) {
        sol.load_p(k) = grid.loads[k].p0 * load_scale;
        sol.load_q(k) = grid.loads[k].q0 * load_scale;
        load_p_bus(grid.bus_index(grid.loads[k].bus)) += sol.load_p(k);
        load_q_bus(grid.bus_index(grid.loads[k].bus)) += sol.load_q(k);
    }
    sol.gen_p.resize(grid.generators.size());
    sol.gen_q.resize(grid.generators.size());
    for (std::size_t k = 0; k < grid.generators.size(); ++k) {
        const std::size_t i = grid.bus_index(grid.generators[k].bus);
        // Generator output covers the bus injection plus the local load.
        sol.gen_p(k) = p_calc(i) + load_p_bus(i);
        sol.gen_q(k) = q_calc(i) + load_q_bus(i);
    }
    return sol;
}

}  // namespace tsgen
