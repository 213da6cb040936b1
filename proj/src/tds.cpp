#include "tsgen/tds.hpp"

#include <cmath>
#include <exception>

#include "tsgen/errors.hpp"
#include "tsgen/rng.hpp"

namespace tsgen {

void ScenarioConfig::validate() const {
    const auto bad = [](const std::string& why) { throw ConfigError("scenario config: " + why); };
    if (!(load_scale_min >= 0.60 && load_scale_max <= 1.45 && load_scale_min <= load_scale_max)) {
        bad("load scale range must lie within [0.60, 1.45]");
    }
    if (!(fault_position_min >= 0.20 && fault_position_max <= 0.80 &&
          fault_position_min <= fault_position_max)) {
        bad("fault position range must lie within [0.20, 0.80]");
    }
    if (!(clearing_time_min >= 1.0 / 60.0 - 1e-12 && clearing_time_max <= 1.0 / 3.0 + 1e-12 &&
          clearing_time_min <= clearing_time_max)) {
        bad("clearing time range must lie within [1/60, 1/3] s");
    }
    if (!(step > 0.0 && step <= 0.02)) bad("step must lie in (0, 0.02] s");
    if (!(horizon >= clearing_time_max)) bad("horizon must cover the clearing time");
}

std::string load_level_label(int index) {
    return std::to_string(60 + 5 * index) + "%";
}

int load_level_bucket(double scale) {
    const int level = static_cast<int>(std::lround(scale / 0.05));
    return std::min(std::max(level - 12, 0), kLoadLevelCount - 1);
}

std::vector<std::string> feature_names(const GridCase& grid) {
    std::vector<std::string> names;
    for (const auto& b : grid.buses) names.push_back("vm_" + std::to_string(b.id));
    for (const auto& b : grid.buses) names.push_back("va_" + std::to_string(b.id));
    for (const auto& l : grid.loads) names.push_back("pl_" + std::to_string(l.bus));
    for (const auto& l : grid.loads) names.push_back("ql_" + std::to_string(l.bus));
    for (const auto& g : grid.generators) names.push_back("pg_" + std::to_string(g.bus));
    for (const auto& g : grid.generators) names.push_back("qg_" + std::to_string(g.bus));
    return names;
}

Schema dataset_schema(const GridCase& grid) {
    Schema schema;
    const std::size_t nb = grid.buses.size();
    const auto names = feature_names(grid);
    for (std::size_t i = 0; i < names.size(); ++i) {
        ColumnSchema col;
        col.name = names[i];
        col.kind = ColumnKind::Continuous;
        col.unit = (i >= nb && i < 2 * nb) ? "rad" : "pu";
        col.role = ColumnRole::Feature;
        schema.push_back(std::move(col));
    }
    ColumnSchema level;
    level.name = "load_level";
    level.kind = ColumnKind::Categorical;
    level.unit = "percent";
    level.role = ColumnRole::Condition;
    for (int i = 0; i < kLoadLevelCount; ++i) level.categories.push_back(load_level_label(i));
    schema.push_back(std::move(level));

    ColumnSchema label;
    label.name = "stability";
    label.kind = ColumnKind::Categorical;
    label.role = ColumnRole::Label;
    label.categories = {"stable", "unstable"};
    schema.push_back(std::move(label));
    return schema;
}

namespace {

// Snapshot on the postfault network at the clearing instant: bus voltages
// from the rotor angles, then load and generator powers from those voltages.
std::vector<double> make_snapshot(const GridCase& grid, const DynamicModel& post,
                                  const Eigen::VectorXd& delta) {
    const std::size_t nb = grid.buses.size();
    const ComplexVector v = post.recover_voltages(delta);
    std::vector<double> features;
    features.reserve(2 * nb + 2 * post.load_bus.size() + 2 * post.gen_bus.size());
    for (std::size_t i = 0; i < nb; ++i) features.push_back(std::abs(v(i)));
    for (std::size_t i = 0; i < nb; ++i) features.push_back(std::arg(v(i)));

    const std::size_t nl = post.load_bus.size();
    std::vector<double> lp(nl), lq(nl);
    for (std::size_t k = 0; k < nl; ++k) {
        const std::complex<double> vb = v(post.load_bus[k]);
        const std::complex<double> s = vb * std::conj(post.load_admittance(k) * vb);
        lp[k] = s.real();
        lq[k] = s.imag();
    }
    features.insert(features.end(), lp.begin(), lp.end());
    features.insert(features.end(), lq.begin(), lq.end());

    const std::size_t ng = post.gen_bus.size();
    std::vector<double> gp(ng), gq(ng);
    for (std::size_t k = 0; k < ng; ++k) {
        const std::complex<double> vb = v(post.gen_bus[k]);
        const std::complex<double> emf =
            std::polar(post.emf_mag(k), delta(static_cast<Eigen::Index>(k)));
        const std::complex<double> current = (emf - vb) * post.gen_admittance(k);
        const std::complex<double> s = vb * std::conj(current);
        gp[k] = s.real();
        gq[k] = s.imag();
    }
    features.insert(features.end(), gp.begin(), gp.end());
    features.insert(features.end(), gq.begin(), gq.end());
    return features;
}

bool snapshot_ok(const GridCase& grid, const std::vector<double>& features) {
    const std::size_t nb = grid.buses.size();
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!std::isfinite(features[i])) return false;
        if (i < nb && !(features[i] > 0.0 && features[i] < 2.0)) return false;
    }
    return true;
}

}  // namespace

SimResult run_scenario(const GridCase& grid, const ScenarioConfig& config,
                       std::uint64_t scenario_seed) {
    config.validate();
    grid.validate();

    for (std::uint64_t attempt = 0; attempt <= 100; ++attempt) {
        Rng rng(derive_seed(scenario_seed, attempt));
        const double scale = rng.uniform(config.load_scale_min, config.load_scale_max);
        const std::size_t line = static_cast<std::size_t>(rng.below(grid.lines.size()));
        const double position = rng.uniform(config.fault_position_min, config.fault_position_max);
        const double t_cl = rng.uniform(config.clearing_time_min, config.clearing_time_max);
        try {
            const PowerFlowSolution pf = solve_power_flow(grid, scale);
            const DynamicModel prefault = prepare_dynamic_model(grid, pf);
            const DynamicModel fault_on = prepare_dynamic_model(
                grid, pf, FaultSpec{line, position, FaultState::FaultOn});
            const DynamicModel postfault = prepare_dynamic_model(
                grid, pf, FaultSpec{line, position, FaultState::PostFault});

            const SwingResult swing = simulate_swing({&prefault, &fault_on, &postfault}, t_cl,
                                                     config.horizon, config.step);
            SimResult result;
            result.features = make_snapshot(grid, postfault, swing.delta_at_clearing);
            if (!snapshot_ok(grid, result.features)) {
                throw NumericError("snapshot out of range");
            }
            result.label = label_stability(swing);
            result.load_level_index = load_level_bucket(scale);
            result.faulted_line = line;
            result.fault_position = position;
            result.clearing_time = t_cl;
            result.load_scale = scale;
            return result;
        } catch (const NumericError&) {
            continue;  // rejected scenario; resample from the next derived seed
        }
    }
    throw ConfigError("more than 100 consecutive scenario rejections; check case and config");
}

namespace {

std::vector<double> result_row(const SimResult& r) {
    std::vector<double> row = r.features;
    row.push_back(static_cast<double>(r.load_level_index));
    row.push_back(r.label == StabilityLabel::Stable ? 0.0 : 1.0);
    return row;
}

SampleTable run_batch(const GridCase& grid, const ScenarioConfig& config, std::size_t n,
                      bool parallel) {
    if (n < 1) throw ConfigError("dataset size must be at least 1");
    config.validate();
    SampleTable table;
    table.schema = dataset_schema(grid);
    table.rows.assign(n, {});

    if (parallel) {
        std::exception_ptr error = nullptr;
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            try {
                const SimResult r = run_scenario(
                    grid, config, derive_seed(config.seed, static_cast<std::uint64_t>(i)));
                table.rows[static_cast<std::size_t>(i)] = result_row(r);
            } catch (...) {
#pragma omp critical
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const SimResult r = run_scenario(grid, config, derive_seed(config.seed, i));
            table.rows[i] = result_row(r);
        }
    }
    return table;
}

}  // namespace

SampleTable generate_dataset(const GridCase& grid, const ScenarioConfig& config, std::size_t n) {
    return run_batch(grid, config, n, true);
}

SampleTable generate_dataset_serial(const GridCase& grid, const ScenarioConfig& config,
                                    std::size_t n) {
    return run_batch(grid, config, n, false);
}

}  // namespace tsgen
