#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tsgen {

enum class BusType { Slack, PV, PQ };

struct Bus {
    int id = 0;  // external 1-based id from the case file
    BusType type = BusType::PQ;
    double v_set = 1.0;  // slack/PV setpoint, pu
};

struct Line {
    int from = 0;  // external bus ids
    int to = 0;
    double r = 0.0;  // series resistance, pu
    double x = 0.0;  // series reactance, pu
    double b = 0.0;  // total shunt susceptance, pu
};

struct Generator {
    int bus = 0;
    double inertia_h = 1.0;      // s
    double xd_transient = 0.1;   // pu
    double damping = 0.0;        // pu
    double p_dispatch = 0.0;     // base active dispatch, pu
    double p_min = 0.0;
    double p_max = 10.0;
};

struct Load {
    int bus = 0;
    double p0 = 0.0;  // base active power, pu
    double q0 = 0.0;  // base reactive power, pu
};

// Static network description, all quantities in per unit on the system base.
struct GridCase {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    double f_nominal_hz = 60.0;

    std::size_t bus_index(int id) const;  // internal index; throws on unknown id
    std::size_t slack_index() const;
    void validate() const;
};

// Sectioned plain-text case format (bus / line / gen / load records).
GridCase load_grid_case(const std::string& path);

}  // namespace tsgen
