#include "soen/circuit_model.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace soen {

JosephsonJunctionParams make_junction(double critical_current, double beta_c,
                                      double shunt_resistance) {
    if (!(critical_current > 0.0))
        throw ValidationError("critical_current", "junction critical_current must be > 0");
    if (!(beta_c > 0.0)) throw ValidationError("stewart_mccumber", "junction beta_c must be > 0");
    if (!(shunt_resistance > 0.0))
        throw ValidationError("shunt_resistance", "junction shunt_resistance must be > 0");
    JosephsonJunctionParams p;
    p.critical_current = critical_current;
    p.stewart_mccumber = beta_c;
    p.shunt_resistance = shunt_resistance;
    p.capacitance = beta_c * kFluxQuantum /
                    (2.0 * std::numbers::pi * critical_current * shunt_resistance * shunt_resistance);
    return p;
}

double SpdParams::resistance_at(double t) const {
    // Arrival times are sorted; find the last photon at or before t.
    auto it = std::upper_bound(photon_arrival_times.begin(), photon_arrival_times.end(), t);
    double r = 0.0;
    // Overlapping windows are possible in principle; take the max over the two
    // most recent arrivals, which is enough since each window is short.
    for (int back = 0; back < 2 && it != photon_arrival_times.begin(); ++back) {
        --it;
        const double local = t - *it;
        double frac = 0.0;
        if (local < edge_time) {
            frac = local / edge_time;
        } else if (local <= edge_time + hotspot_duration) {
            frac = 1.0;
        } else if (local < 2.0 * edge_time + hotspot_duration) {
            frac = 1.0 - (local - edge_time - hotspot_duration) / edge_time;
        }
        r = std::max(r, frac * hotspot_resistance);
    }
    return r;
}

std::vector<double> SpdParams::breakpoints() const {
    std::vector<double> out;
    for (double t0 : photon_arrival_times) {
        out.push_back(t0);
        out.push_back(t0 + edge_time);
        out.push_back(t0 + edge_time + hotspot_duration);
        out.push_back(t0 + 2.0 * edge_time + hotspot_duration);
    }
    std::sort(out.begin(), out.end());
    return out;
}

char element_letter(const ElementKind& kind) {
    return std::visit(
        [](const auto& k) -> char {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Junction>) return 'B';
            if constexpr (std::is_same_v<T, Inductor>) return 'L';
            if constexpr (std::is_same_v<T, Resistor>) return 'R';
            if constexpr (std::is_same_v<T, Mutual>) return 'K';
            if constexpr (std::is_same_v<T, CurrentSource>) return 'I';
            if constexpr (std::is_same_v<T, Spd>) return 'S';
        },
        kind);
}

Netlist::Netlist() { nodes_.push_back(kGround); }

bool Netlist::add_node(const std::string& name) {
    if (has_node(name)) return false;
    nodes_.push_back(name);
    return true;
}

bool Netlist::has_node(const std::string& name) const {
    return std::find(nodes_.begin(), nodes_.end(), name) != nodes_.end();
}

void Netlist::add(Element element, bool declare_nodes) {
    if (declare_nodes && !element.is_mutual()) {
        add_node(element.node_pos);
        add_node(element.node_neg);
    }
    elements_.push_back(std::move(element));
}

void Netlist::add_junction(const std::string& name, const std::string& a, const std::string& b,
                           const JosephsonJunctionParams& params) {
    add(Element{name, a, b, Junction{params}});
}

void Netlist::add_inductor(const std::string& name, const std::string& a, const std::string& b,
                           double inductance) {
    add(Element{name, a, b, Inductor{inductance}});
}

void Netlist::add_resistor(const std::string& name, const std::string& a, const std::string& b,
                           double resistance) {
    add(Element{name, a, b, Resistor{resistance}});
}

void Netlist::add_mutual(const std::string& name, const std::string& inductor_a,
                         const std::string& inductor_b, double mutual) {
    add(Element{name, "", "", Mutual{inductor_a, inductor_b, mutual, std::nullopt}});
}

void Netlist::add_coupling(const std::string& name, const std::string& inductor_a,
                           const std::string& inductor_b, double k) {
    const Element* a = find(inductor_a);
    const Element* b = find(inductor_b);
    if (!a || !a->as<Inductor>()) throw ValidationError(name, "coupling references unknown inductor " + inductor_a);
    if (!b || !b->as<Inductor>()) throw ValidationError(name, "coupling references unknown inductor " + inductor_b);
    Mutual m{inductor_a, inductor_b,
             k * std::sqrt(a->as<Inductor>()->inductance * b->as<Inductor>()->inductance), k};
    add(Element{name, "", "", std::move(m)});
}

void Netlist::add_source(const std::string& name, const std::string& from, const std::string& into,
                         Waveform waveform) {
    add(Element{name, from, into, CurrentSource{std::move(waveform)}});
}

void Netlist::add_spd(const std::string& name, const std::string& a, const std::string& b,
                      SpdParams params) {
    add(Element{name, a, b, Spd{std::move(params)}});
}

const Element* Netlist::find(const std::string& name) const {
    for (const auto& e : elements_)
        if (e.name == name) return &e;
    return nullptr;
}

Element* Netlist::find(const std::string& name) {
    for (auto& e : elements_)
        if (e.name == name) return &e;
    return nullptr;
}

bool equivalent(const Netlist& a, const Netlist& b) {
    if (a.tran() != b.tran()) return false;
    auto na = a.nodes();
    auto nb = b.nodes();
    std::sort(na.begin(), na.end());
    std::sort(nb.begin(), nb.end());
    if (na != nb) return false;
    if (a.elements().size() != b.elements().size()) return false;
    for (const auto& e : a.elements()) {
        const Element* other = b.find(e.name);
        if (!other || !(*other == e)) return false;
    }
    return true;
}

namespace {

void check_positive(std::vector<Diagnostic>& out, const Element& e, const char* what, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << "non-positive value: " << e.name << " " << what << " = " << v;
        out.push_back({os.str(), e.name});
    }
}

}  // namespace

std::vector<Diagnostic> validate_netlist(const Netlist& netlist) {
    std::vector<Diagnostic> out;
    const auto& nodes = netlist.nodes();
    std::map<std::string, std::size_t> node_index;
    for (std::size_t i = 0; i < nodes.size(); ++i) node_index.emplace(nodes[i], i);

    std::set<std::string> seen;
    for (const auto& e : netlist.elements()) {
        if (!seen.insert(e.name).second)
            out.push_back({"duplicate element name " + e.name, e.name});
    }

    std::vector<int> degree(nodes.size(), 0);
    for (const auto& e : netlist.elements()) {
        if (e.is_mutual()) continue;
        for (const auto* n : {&e.node_pos, &e.node_neg}) {
            auto it = node_index.find(*n);
            if (it == node_index.end())
                out.push_back({"undeclared node " + *n, e.name});
            else
                ++degree[it->second];
        }
        if (e.node_pos == e.node_neg)
            out.push_back({"element " + e.name + " has both terminals on node " + e.node_pos, e.name});
    }

    for (const auto& e : netlist.elements()) {
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Junction>) {
                    check_positive(out, e, "ic", k.params.critical_current);
                    check_positive(out, e, "betac", k.params.stewart_mccumber);
                    check_positive(out, e, "r", k.params.shunt_resistance);
                    check_positive(out, e, "c", k.params.capacitance);
                    if (k.params.capacitance > 0.0 && k.params.stewart_mccumber > 0.0) {
                        const double rel = std::abs(k.params.beta_c_from_circuit() / k.params.stewart_mccumber - 1.0);
                        if (rel > 1e-9) out.push_back({"inconsistent junction parameters in " + e.name, e.name});
                    }
                } else if constexpr (std::is_same_v<T, Inductor>) {
                    check_positive(out, e, "l", k.inductance);
                } else if constexpr (std::is_same_v<T, Resistor>) {
                    check_positive(out, e, "r", k.resistance);
                } else if constexpr (std::is_same_v<T, Spd>) {
                    check_positive(out, e, "rh", k.params.hotspot_resistance);
                    check_positive(out, e, "th", k.params.hotspot_duration);
                    check_positive(out, e, "edge", k.params.edge_time);
                    const auto& ts = k.params.photon_arrival_times;
                    for (std::size_t i = 1; i < ts.size(); ++i)
                        if (!(ts[i] > ts[i - 1]))
                            out.push_back({"photon arrival times not increasing in " + e.name, e.name});
                } else if constexpr (std::is_same_v<T, Mutual>) {
                    const Element* a = netlist.find(k.inductor_a);
                    const Element* b = netlist.find(k.inductor_b);
                    if (!a || !a->as<Inductor>()) {
                        out.push_back({"mutual " + e.name + " references unknown inductor " + k.inductor_a, e.name});
                    } else if (!b || !b->as<Inductor>()) {
                        out.push_back({"mutual " + e.name + " references unknown inductor " + k.inductor_b, e.name});
                    } else if (k.inductor_a == k.inductor_b) {
                        out.push_back({"mutual " + e.name + " couples an inductor to itself", e.name});
                    } else {
                        const double limit = std::sqrt(a->as<Inductor>()->inductance * b->as<Inductor>()->inductance);
                        if (std::abs(k.mutual) > limit * (1.0 + 1e-12))
                            out.push_back({"unphysical coupling " + e.name + ": |M| exceeds sqrt(La*Lb)", e.name});
                    }
                }
            },
            e.kind);
    }

    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (degree[i] < 2) out.push_back({"dangling node " + nodes[i], ""});
    }

    // Connectivity to ground through non-source elements.
    std::vector<std::size_t> parent(nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : netlist.elements()) {
        if (e.is_mutual() || e.as<CurrentSource>()) continue;
        auto a = node_index.find(e.node_pos);
        auto b = node_index.find(e.node_neg);
        if (a == node_index.end() || b == node_index.end()) continue;
        parent[root(a->second)] = root(b->second);
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (degree[i] > 0 && root(i) != root(0))
            out.push_back({"disconnected subgraph: node " + nodes[i] + " has no path to ground", ""});
    }

    const auto& tran = netlist.tran();
    if (!(tran.t_stop > 0.0)) out.push_back({"transient t_stop must be > 0", ""});
    if (!(tran.dt_max > 0.0)) out.push_back({"transient dt_max must be > 0", ""});
    if (tran.output_decimation < 1) out.push_back({"transient output decimation must be >= 1", ""});
    if (tran.ramp_time < 0.0 || tran.settle_time < 0.0)
        out.push_back({"transient ramp/settle times must be >= 0", ""});
    return out;
}

void require_valid(const Netlist& netlist) {
    auto diags = validate_netlist(netlist);
    if (diags.empty()) return;
    std::string msg = "invalid netlist:";
    for (const auto& d : diags) msg += "\n  " + d.message;
    throw ValidationError("netlist", msg);
}

}  // namespace soen
