#pragma once

#include <ostream>
#include <string>

#include "soen/transient_engine.hpp"

namespace soen {

/// `time,<col>,...` with 9 significant digits.
void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv(const std::string& path, const Trace& trace);

/// `element,time,polarity`, one row per 2π winding.
void write_fluxons_csv(std::ostream& out, const Trace& trace);
void write_fluxons_csv(const std::string& path, const Trace& trace);

/// Reads a file written by write_trace_csv (columns and times only).
Trace read_trace_csv(const std::string& path);

}  // namespace soen
