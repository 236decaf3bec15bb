#include "soen/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace soen {

namespace {

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << "time";
    for (const auto& n : trace.names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        out << fmt9(trace.times[i]);
        for (const auto& c : trace.columns) out << ',' << fmt9(c[i]);
        out << '\n';
    }
}

void write_trace_csv(const std::string& path, const Trace& trace) {
    auto f = open_out(path);
    write_trace_csv(f, trace);
}

void write_fluxons_csv(std::ostream& out, const Trace& trace) {
    out << "element,time,polarity\n";
    for (const auto& e : trace.fluxon_events) out << e.element << ',' << fmt9(e.time) << ',' << e.polarity << '\n';
}

void write_fluxons_csv(const std::string& path, const Trace& trace) {
    auto f = open_out(path);
    write_fluxons_csv(f, trace);
}

Trace read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    Trace t;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty trace file " + path);
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    while (std::getline(header, cell, ',')) t.names.push_back(cell);
    t.columns.resize(t.names.size());
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::getline(row, cell, ',');
        t.times.push_back(std::stod(cell));
        for (auto& c : t.columns) {
            if (!std::getline(row, cell, ',')) throw std::runtime_error("short row in " + path);
            c.push_back(std::stod(cell));
        }
    }
    return t;
}

}  // namespace soen
