#include "tsgen/grid.hpp"

#include <fstream>
#include <sstream>

#include "tsgen/errors.hpp"

namespace tsgen {

std::size_t GridCase::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return i;
    }
    throw DataError("unknown bus id " + std::to_string(id));
}

std::size_t GridCase::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].type == BusType::Slack) return i;
    }
    throw DataError("grid case has no slack bus");
}

void GridCase::validate() const {
    if (buses.empty()) throw DataError("grid case has no buses");
    std::size_t slacks = 0;
    for (const auto& b : buses) {
        if (b.type == BusType::Slack) ++slacks;
    }
    if (slacks != 1) {
        throw DataError("grid case must have exactly one slack bus, found " +
                        std::to_string(slacks));
    }
    for (const auto& l : lines) {
        bus_index(l.from);
        bus_index(l.to);
        if (!(l.x > 0.0)) throw DataError("line reactance must be positive");
    }
    std::vector<int> gen_buses;
    for (const auto& g : generators) {
        bus_index(g.bus);
        if (!(g.inertia_h > 0.0)) throw DataError("generator inertia must be positive");
        if (!(g.xd_transient > 0.0)) throw DataError("generator x'd must be positive");
        for (const int other : gen_buses) {
            if (other == g.bus) {
                throw DataError("more than one generator at bus " + std::to_string(g.bus));
            }
        }
        gen_buses.push_back(g.bus);
    }
    for (const auto& l : loads) bus_index(l.bus);
}

GridCase load_grid_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open grid case '" + path + "'");

    GridCase grid;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;

        const auto fail = [&](const std::string& why) {
            throw DataError("grid case '" + path + "' line " + std::to_string(line_no) + ": " +
                            why);
        };
        if (tag == "frequency") {
            if (!(ss >> grid.f_nominal_hz)) fail("expected: frequency <hz>");
        } else if (tag == "bus") {
            Bus b;
            std::string type;
            if (!(ss >> b.id >> type)) fail("expected: bus <id> <slack|pv|pq> [vset]");
            if (type == "slack") {
                b.type = BusType::Slack;
            } else if (type == "pv") {
                b.type = BusType::PV;
            } else if (type == "pq") {
                b.type = BusType::PQ;
            } else {
                fail("unknown bus type '" + type + "'");
            }
            ss >> b.v_set;
            grid.buses.push_back(b);
        } else if (tag == "line") {
            Line l;
            if (!(ss >> l.from >> l.to >> l.r >> l.x >> l.b)) {
                fail("expected: line <from> <to> <r> <x> <b>");
            }
            grid.lines.push_back(l);
        } else if (tag == "gen") {
            Generator g;
            if (!(ss >> g.bus >> g.inertia_h >> g.xd_transient >> g.damping >> g.p_dispatch)) {
                fail("expected: gen <bus> <H> <x'd> <D> <P> [pmin pmax]");
            }
            ss >> g.p_min >> g.p_max;
            grid.generators.push_back(g);
        } else if (tag == "load") {
            Load l;
            if (!(ss >> l.bus >> l.p0 >> l.q0)) fail("expected: load <bus> <P0> <Q0>");
            grid.loads.push_back(l);
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    grid.validate();
    return grid;
}

}  // namespace tsgen
