#pragma once

// Line-oriented netlist text format.
//
//   * comment
//   L<name> n+ n- 90p
//   R<name> n+ n- 25
//   B<name> n+ n- ic=40u betac=0.95 r=5
//   K<name> La Lb m=18p          (or k=0.5; sign sets polarity)
//   I<name> n+ n- dc(2u)
//   I<name> n+ n- pulse(amp,rise,fall,high,period[,start[,count]])
//   I<name> n+ n- pwl(t0,v0,t1,v1,...)
//   S<name> n+ n- rh=5k th=200p events=(10n,35n) [edge=1p]
//   .tran dt_max t_stop [decim=N] [ramp=5n] [settle=0]
//
// Node "0" is ground. Unit suffixes f p n u m k meg are case-insensitive.
// Current sources follow the SPICE convention: current enters the circuit at n-.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "soen/circuit_model.hpp"

namespace soen {

struct SourceSpan {
    int line = 1;
    int column = 1;
    int length = 1;
};

enum class Severity { error, warning };

struct ParseDiagnostic {
    SourceSpan span;
    Severity severity = Severity::error;
    std::string message;
};

struct ParseResult {
    std::optional<Netlist> netlist;
    std::vector<ParseDiagnostic> diagnostics;

    bool ok() const { return netlist.has_value(); }
};

ParseResult parse_netlist(std::string_view text);

/// Parses a number with optional SI suffix ("4.5p", "5k", "2meg").
/// Returns nullopt and fills `error` on failure.
std::optional<double> parse_si_number(std::string_view token, std::string* error = nullptr);

/// Shortest SI-suffixed text with at least 6 significant digits that
/// parses back to exactly `value`.
std::string format_si(double value);

/// Canonical text: elements sorted by name, SI-suffixed values.
/// Throws ValidationError if the netlist does not validate.
std::string serialize_netlist(const Netlist& netlist);

/// Reads a whole file; throws std::runtime_error if it cannot be opened.
std::string read_text_file(const std::string& path);

}  // namespace soen
