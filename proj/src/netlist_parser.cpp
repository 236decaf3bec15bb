#include "soen/netlist_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace soen {

namespace {

struct Token {
    std::string text;
    int column = 1;  // 1-based
};

struct Suffix {
    std::string_view text;
    int exponent;
};

// "meg" must be tried before "m".
constexpr std::array<Suffix, 8> kSuffixes{{{"meg", 6},
                                           {"f", -15},
                                           {"p", -12},
                                           {"n", -9},
                                           {"u", -6},
                                           {"m", -3},
                                           {"k", 3},
                                           {"", 0}}};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Splits a line into whitespace/comma separated tokens, keeping
// parenthesised groups together.
std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) || line[i] == ',')) ++i;
        if (i >= line.size()) break;
        const std::size_t start = i;
        int depth = 0;
        while (i < line.size()) {
            const char c = line[i];
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (depth <= 0 && (std::isspace(static_cast<unsigned char>(c)) || c == ',')) break;
            ++i;
        }
        out.push_back({std::string(line.substr(start, i - start)), static_cast<int>(start) + 1});
    }
    return out;
}

class LineParser {
public:
    LineParser(int line, std::vector<ParseDiagnostic>& diags) : line_(line), diags_(diags) {}

    void error(int column, int length, std::string message) {
        diags_.push_back({{line_, column, std::max(1, length)}, Severity::error, std::move(message)});
        failed_ = true;
    }

    std::optional<double> number(std::string_view text, int column) {
        std::string err;
        auto v = parse_si_number(text, &err);
        if (!v) error(column, static_cast<int>(text.size()), err);
        return v;
    }

    // Splits "key=value" and returns lower-cased key.
    std::optional<std::pair<std::string, std::string>> key_value(const Token& tok) {
        auto eq = tok.text.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == tok.text.size()) {
            error(tok.column, static_cast<int>(tok.text.size()), "expected key=value, got '" + tok.text + "'");
            return std::nullopt;
        }
        return std::pair{lower(tok.text.substr(0, eq)), tok.text.substr(eq + 1)};
    }

    // Numbers inside "name(a,b,c)". Column points at each argument.
    std::optional<std::vector<double>> call_args(const Token& tok, std::string_view body, int body_column) {
        std::vector<double> out;
        std::size_t i = 0;
        while (i <= body.size()) {
            std::size_t j = body.find(',', i);
            if (j == std::string_view::npos) j = body.size();
            std::string_view arg = body.substr(i, j - i);
            std::size_t lead = 0;
            while (lead < arg.size() && std::isspace(static_cast<unsigned char>(arg[lead]))) ++lead;
            arg.remove_prefix(lead);
            while (!arg.empty() && std::isspace(static_cast<unsigned char>(arg.back()))) arg.remove_suffix(1);
            if (arg.empty()) {
                if (body.empty()) break;
                error(tok.column, static_cast<int>(tok.text.size()), "empty argument in '" + tok.text + "'");
                return std::nullopt;
            }
            auto v = number(arg, body_column + static_cast<int>(i + lead));
            if (!v) return std::nullopt;
            out.push_back(*v);
            i = j + 1;
        }
        return out;
    }

    bool failed() const { return failed_; }

private:
    int line_;
    std::vector<ParseDiagnostic>& diags_;
    bool failed_ = false;
};

struct PendingMutual {
    std::size_t element_index;
    SourceSpan span_a;
    SourceSpan span_b;
    SourceSpan span_value;
};

std::optional<Waveform> parse_source(LineParser& lp, const Token& tok) {
    const auto open = tok.text.find('(');
    if (open == std::string::npos || tok.text.back() != ')') {
        lp.error(tok.column, static_cast<int>(tok.text.size()),
                 "expected dc(...), pulse(...) or pwl(...), got '" + tok.text + "'");
        return std::nullopt;
    }
    const std::string kind = lower(tok.text.substr(0, open));
    std::string_view body(tok.text);
    body = body.substr(open + 1, body.size() - open - 2);
    auto args = lp.call_args(tok, body, tok.column + static_cast<int>(open) + 1);
    if (!args) return std::nullopt;
    try {
        if (kind == "dc") {
            if (args->size() != 1) {
                lp.error(tok.column, static_cast<int>(tok.text.size()), "dc() takes exactly one value");
                return std::nullopt;
            }
            return Waveform::dc((*args)[0]);
        }
        if (kind == "pulse") {
            if (args->size() < 5 || args->size() > 7) {
                lp.error(tok.column, static_cast<int>(tok.text.size()),
                         "pulse() takes amplitude, rise, fall, high, period[, start[, count]]");
                return std::nullopt;
            }
            SquareTrain s;
            s.amplitude = (*args)[0];
            s.rise_time = (*args)[1];
            s.fall_time = (*args)[2];
            s.high_duration = (*args)[3];
            s.period = (*args)[4];
            s.start = args->size() > 5 ? (*args)[5] : 0.0;
            if (args->size() > 6) {
                const double c = (*args)[6];
                if (c < 1 || c != std::floor(c)) {
                    lp.error(tok.column, static_cast<int>(tok.text.size()), "pulse count must be a positive integer");
                    return std::nullopt;
                }
                s.count = static_cast<int>(c);
            }
            return Waveform::square_train(s);
        }
        if (kind == "pwl") {
            if (args->empty() || args->size() % 2 != 0) {
                lp.error(tok.column, static_cast<int>(tok.text.size()), "pwl() takes time/value pairs");
                return std::nullopt;
            }
            std::vector<std::pair<double, double>> pts;
            for (std::size_t i = 0; i < args->size(); i += 2) pts.emplace_back((*args)[i], (*args)[i + 1]);
            return Waveform::piecewise_linear(std::move(pts));
        }
    } catch (const ValidationError& e) {
        lp.error(tok.column, static_cast<int>(tok.text.size()), e.what());
        return std::nullopt;
    }
    lp.error(tok.column, static_cast<int>(open), "unknown source function '" + kind + "'");
    return std::nullopt;
}

}  // namespace

std::optional<double> parse_si_number(std::string_view token, std::string* error) {
    auto fail = [&](std::string msg) -> std::optional<double> {
        if (error) *error = std::move(msg);
        return std::nullopt;
    };
    std::size_t i = 0;
    if (i < token.size() && (token[i] == '+' || token[i] == '-')) ++i;
    const std::size_t digits_start = i;
    while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i;
    if (i < token.size() && token[i] == '.') {
        ++i;
        while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i;
    }
    if (i == digits_start || (i == digits_start + 1 && token[digits_start] == '.'))
        return fail("malformed number '" + std::string(token) + "'");
    int exponent = 0;
    if (i < token.size() && (token[i] == 'e' || token[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < token.size() && (token[j] == '+' || token[j] == '-')) ++j;
        const std::size_t exp_digits = j;
        while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
        if (j == exp_digits) return fail("malformed number '" + std::string(token) + "'");
        std::from_chars(token.data() + (token[i + 1] == '+' ? i + 2 : i + 1), token.data() + j, exponent);
        i = j;
    }
    const std::string mantissa(token.substr(0, i));
    const std::string rest = lower(token.substr(i));
    int suffix_exp = 0;
    bool matched = false;
    for (const auto& s : kSuffixes) {
        if (rest == s.text) {
            suffix_exp = s.exponent;
            matched = true;
            break;
        }
    }
    if (!matched) return fail("unknown unit suffix " + std::string(token.substr(i)));
    // Fold the suffix into the decimal exponent so the conversion rounds once.
    std::string plain = mantissa;
    if (auto e = plain.find_first_of("eE"); e != std::string::npos) plain.resize(e);
    const std::string full = plain + "e" + std::to_string(exponent + suffix_exp);
    double value = 0.0;
    auto res = std::from_chars(full.data(), full.data() + full.size(), value);
    if (res.ec != std::errc() || res.ptr != full.data() + full.size() || !std::isfinite(value))
        return fail("malformed number '" + std::string(token) + "'");
    return value;
}

std::string format_si(double value) {
    if (value == 0.0) return "0";
    const double mag = std::abs(value);
    int exp3 = static_cast<int>(std::floor(std::log10(mag) / 3.0)) * 3;
    exp3 = std::clamp(exp3, -15, 6);
    const Suffix* chosen = &kSuffixes.back();
    for (const auto& s : kSuffixes)
        if (s.exponent == exp3) chosen = &s;
    for (int precision = 6; precision <= 17; ++precision) {
        const std::string mant_exact = [&] {
            // Print mantissa digits by formatting value in scientific form
            // and shifting the exponent; avoids a lossy multiply.
            char buf[64];
            auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific, precision - 1);
            std::string sci(buf, r.ptr);
            const auto epos = sci.find('e');
            int exp10 = std::stoi(sci.substr(epos + 1));
            std::string digits = sci.substr(0, epos);
            const bool neg = digits[0] == '-';
            if (neg) digits.erase(0, 1);
            digits.erase(std::remove(digits.begin(), digits.end(), '.'), digits.end());
            int point = exp10 - chosen->exponent + 1;  // digits before decimal point
            std::string out;
            if (point <= 0) {
                out = "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
            } else if (point >= static_cast<int>(digits.size())) {
                out = digits + std::string(static_cast<std::size_t>(point) - digits.size(), '0');
            } else {
                out = digits.substr(0, static_cast<std::size_t>(point)) + "." + digits.substr(static_cast<std::size_t>(point));
            }
            if (out.find('.') != std::string::npos) {
                while (out.back() == '0') out.pop_back();
                if (out.back() == '.') out.pop_back();
            }
            return (neg ? "-" : "") + out;
        }();
        std::string candidate = mant_exact + std::string(chosen->text);
        auto back = parse_si_number(candidate);
        if (back && *back == value) return candidate;
    }
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, r.ptr);
}

ParseResult parse_netlist(std::string_view text) {
    ParseResult result;
    Netlist netlist;
    std::map<std::string, SourceSpan> name_spans;
    std::vector<PendingMutual> pending;
    bool saw_tran = false;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        const bool last = end == text.size();
        pos = end + 1;

        auto toks = tokenize(line);
        if (toks.empty() || toks[0].text[0] == '*') {
            if (last) break;
            continue;
        }
        LineParser lp(line_no, result.diagnostics);
        const Token& head = toks[0];
        const int head_len = static_cast<int>(head.text.size());

        if (head.text[0] == '.') {
            if (lower(head.text) == ".end") break;
            if (lower(head.text) != ".tran") {
                lp.error(head.column, head_len, "unknown directive " + head.text);
            } else if (toks.size() < 3) {
                lp.error(head.column, head_len, ".tran needs dt_max and t_stop");
            } else {
                TransientSpec tran;
                auto dt = lp.number(toks[1].text, toks[1].column);
                auto ts = lp.number(toks[2].text, toks[2].column);
                if (dt) tran.dt_max = *dt;
                if (ts) tran.t_stop = *ts;
                for (std::size_t k = 3; k < toks.size(); ++k) {
                    auto kv = lp.key_value(toks[k]);
                    if (!kv) continue;
                    auto v = lp.number(kv->second, toks[k].column + static_cast<int>(kv->first.size()) + 1);
                    if (!v) continue;
                    if (kv->first == "decim") {
                        if (*v < 1 || *v != std::floor(*v))
                            lp.error(toks[k].column, static_cast<int>(toks[k].text.size()), "decim must be a positive integer");
                        else
                            tran.output_decimation = static_cast<int>(*v);
                    } else if (kv->first == "ramp") {
                        tran.ramp_time = *v;
                    } else if (kv->first == "settle") {
                        tran.settle_time = *v;
                    } else {
                        lp.error(toks[k].column, static_cast<int>(kv->first.size()), "unknown .tran option " + kv->first);
                    }
                }
                if (!lp.failed()) {
                    if (saw_tran)
                        result.diagnostics.push_back({{line_no, head.column, head_len}, Severity::warning,
                                                      "repeated .tran directive overrides the earlier one"});
                    netlist.tran() = tran;
                    saw_tran = true;
                }
            }
            if (last) break;
            continue;
        }

        const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(head.text[0])));
        if (std::string_view("LRBKIS").find(letter) == std::string_view::npos) {
            lp.error(head.column, 1, std::string("unknown element letter ") + head.text[0]);
            if (last) break;
            continue;
        }
        const std::string& name = head.text;
        if (auto it = name_spans.find(name); it != name_spans.end()) {
            lp.error(head.column, head_len,
                     "duplicate name " + name + " (first defined on line " + std::to_string(it->second.line) + ")");
            if (last) break;
            continue;
        }

        const std::size_t needed_positional = letter == 'B' || letter == 'S' ? 3 : 4;
        if (toks.size() < needed_positional) {
            const int col = static_cast<int>(line.size()) + 1;
            if (toks.size() < 3)
                lp.error(col, 1, "missing terminal for " + name);
            else
                lp.error(col, 1, "missing value for " + name);
            if (last) break;
            continue;
        }

        Element element;
        element.name = name;
        bool have_element = false;

        if (letter == 'K') {
            element.kind = Mutual{toks[1].text, toks[2].text, 0.0, std::nullopt};
            auto kv = lp.key_value(toks[3]);
            if (kv) {
                auto v = lp.number(kv->second, toks[3].column + static_cast<int>(kv->first.size()) + 1);
                if (v) {
                    auto& m = std::get<Mutual>(element.kind);
                    if (kv->first == "m") {
                        m.mutual = *v;
                        have_element = true;
                    } else if (kv->first == "k") {
                        m.coupling = *v;
                        have_element = true;
                    } else {
                        lp.error(toks[3].column, static_cast<int>(kv->first.size()), "expected m= or k=, got " + kv->first + "=");
                    }
                }
            }
            if (toks.size() > 4) lp.error(toks[4].column, static_cast<int>(toks[4].text.size()), "unexpected token " + toks[4].text);
            if (have_element && !lp.failed()) {
                pending.push_back({netlist.elements().size(),
                                   {line_no, toks[1].column, static_cast<int>(toks[1].text.size())},
                                   {line_no, toks[2].column, static_cast<int>(toks[2].text.size())},
                                   {line_no, toks[3].column, static_cast<int>(toks[3].text.size())}});
            }
        } else {
            element.node_pos = toks[1].text;
            element.node_neg = toks[2].text;
            if (letter == 'L' || letter == 'R') {
                auto v = lp.number(toks[3].text, toks[3].column);
                if (toks.size() > 4) lp.error(toks[4].column, static_cast<int>(toks[4].text.size()), "unexpected token " + toks[4].text);
                if (v) {
                    if (letter == 'L') element.kind = Inductor{*v};
                    else element.kind = Resistor{*v};
                    have_element = true;
                }
            } else if (letter == 'I') {
                auto w = parse_source(lp, toks[3]);
                if (toks.size() > 4) lp.error(toks[4].column, static_cast<int>(toks[4].text.size()), "unexpected token " + toks[4].text);
                if (w) {
                    element.kind = CurrentSource{*w};
                    have_element = true;
                }
            } else if (letter == 'B') {
                std::map<std::string, double> params;
                for (std::size_t k = 3; k < toks.size(); ++k) {
                    auto kv = lp.key_value(toks[k]);
                    if (!kv) continue;
                    if (kv->first != "ic" && kv->first != "betac" && kv->first != "r") {
                        lp.error(toks[k].column, static_cast<int>(kv->first.size()), "unknown junction parameter " + kv->first);
                        continue;
                    }
                    auto v = lp.number(kv->second, toks[k].column + static_cast<int>(kv->first.size()) + 1);
                    if (v) params[kv->first] = *v;
                }
                if (!params.count("ic")) {
                    lp.error(head.column, head_len, "junction " + name + " needs ic=");
                } else if (!lp.failed()) {
                    try {
                        element.kind = Junction{make_junction(params["ic"],
                                                              params.count("betac") ? params["betac"] : kDefaultBetaC,
                                                              params.count("r") ? params["r"] : kDefaultJunctionResistance)};
                        have_element = true;
                    } catch (const ValidationError& e) {
                        lp.error(head.column, static_cast<int>(line.size()) - head.column + 1, e.what());
                    }
                }
            } else if (letter == 'S') {
                SpdParams sp;
                for (std::size_t k = 3; k < toks.size(); ++k) {
                    auto kv = lp.key_value(toks[k]);
                    if (!kv) continue;
                    const int vcol = toks[k].column + static_cast<int>(kv->first.size()) + 1;
                    if (kv->first == "events") {
                        const std::string& body = kv->second;
                        if (body.size() < 2 || body.front() != '(' || body.back() != ')') {
                            lp.error(vcol, static_cast<int>(body.size()), "events must be a parenthesised list");
                            continue;
                        }
                        auto args = lp.call_args(toks[k], std::string_view(body).substr(1, body.size() - 2), vcol + 1);
                        if (args) sp.photon_arrival_times = *args;
                    } else if (kv->first == "rh" || kv->first == "th" || kv->first == "edge") {
                        auto v = lp.number(kv->second, vcol);
                        if (!v) continue;
                        if (kv->first == "rh") sp.hotspot_resistance = *v;
                        else if (kv->first == "th") sp.hotspot_duration = *v;
                        else sp.edge_time = *v;
                    } else {
                        lp.error(toks[k].column, static_cast<int>(kv->first.size()), "unknown spd parameter " + kv->first);
                    }
                }
                if (!lp.failed()) {
                    element.kind = Spd{sp};
                    have_element = true;
                }
            }
        }

        name_spans[name] = {line_no, head.column, head_len};
        if (have_element && !lp.failed()) netlist.add(std::move(element));
        if (last) break;
    }

    // Resolve mutual couplings now that every inductor is known.
    for (const auto& p : pending) {
        auto& m = std::get<Mutual>(netlist.elements()[p.element_index].kind);
        const Element* a = netlist.find(m.inductor_a);
        const Element* b = netlist.find(m.inductor_b);
        if (!a || !a->as<Inductor>()) {
            result.diagnostics.push_back({p.span_a, Severity::error, "unknown inductor " + m.inductor_a});
            continue;
        }
        if (!b || !b->as<Inductor>()) {
            result.diagnostics.push_back({p.span_b, Severity::error, "unknown inductor " + m.inductor_b});
            continue;
        }
        if (m.coupling) m.mutual = *m.coupling * std::sqrt(a->as<Inductor>()->inductance * b->as<Inductor>()->inductance);
    }

    const bool has_error = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                                       [](const ParseDiagnostic& d) { return d.severity == Severity::error; });
    if (!has_error) result.netlist = std::move(netlist);
    return result;
}

std::string serialize_netlist(const Netlist& netlist) {
    require_valid(netlist);
    std::vector<const Element*> order;
    for (const auto& e : netlist.elements()) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](const Element* a, const Element* b) { return a->name < b->name; });

    std::ostringstream os;
    for (const Element* e : order) {
        os << e->name;
        if (!e->is_mutual()) os << ' ' << e->node_pos << ' ' << e->node_neg;
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Junction>) {
                    os << " ic=" << format_si(k.params.critical_current) << " betac=" << format_si(k.params.stewart_mccumber)
                       << " r=" << format_si(k.params.shunt_resistance);
                } else if constexpr (std::is_same_v<T, Inductor>) {
                    os << ' ' << format_si(k.inductance);
                } else if constexpr (std::is_same_v<T, Resistor>) {
                    os << ' ' << format_si(k.resistance);
                } else if constexpr (std::is_same_v<T, Mutual>) {
                    os << ' ' << k.inductor_a << ' ' << k.inductor_b;
                    if (k.coupling) os << " k=" << format_si(*k.coupling);
                    else os << " m=" << format_si(k.mutual);
                } else if constexpr (std::is_same_v<T, CurrentSource>) {
                    const auto& v = k.waveform.variant();
                    if (const auto* d = std::get_if<DcLevel>(&v)) {
                        os << " dc(" << format_si(d->level) << ')';
                    } else if (const auto* s = std::get_if<SquareTrain>(&v)) {
                        os << " pulse(" << format_si(s->amplitude) << ',' << format_si(s->rise_time) << ','
                           << format_si(s->fall_time) << ',' << format_si(s->high_duration) << ','
                           << format_si(s->period) << ',' << format_si(s->start) << ',' << s->count << ')';
                    } else if (const auto* p = std::get_if<PiecewiseLinear>(&v)) {
                        os << " pwl(";
                        for (std::size_t i = 0; i < p->points.size(); ++i) {
                            if (i) os << ',';
                            os << format_si(p->points[i].first) << ',' << format_si(p->points[i].second);
                        }
                        os << ')';
                    }
                } else if constexpr (std::is_same_v<T, Spd>) {
                    os << " rh=" << format_si(k.params.hotspot_resistance) << " th=" << format_si(k.params.hotspot_duration);
                    if (k.params.edge_time != 1e-12) os << " edge=" << format_si(k.params.edge_time);
                    os << " events=(";
                    for (std::size_t i = 0; i < k.params.photon_arrival_times.size(); ++i) {
                        if (i) os << ',';
                        os << format_si(k.params.photon_arrival_times[i]);
                    }
                    os << ')';
                }
            },
            e->kind);
        os << '\n';
    }
    const auto& t = netlist.tran();
    os << ".tran " << format_si(t.dt_max) << ' ' << format_si(t.t_stop);
    if (t.output_decimation != 1) os << " decim=" << t.output_decimation;
    if (t.ramp_time != TransientSpec{}.ramp_time) os << " ramp=" << format_si(t.ramp_time);
    if (t.settle_time != 0.0) os << " settle=" << format_si(t.settle_time);
    os << '\n';
    return os.str();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace soen
