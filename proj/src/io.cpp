#include "regulus/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "regulus/errors.hpp"

namespace regulus {

std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::vector<std::string> state_names(SystemKind k) {
    switch (k) {
        case SystemKind::hooke4:
        case SystemKind::twocenter_transformed: return {"z0", "z1", "z2", "z3", "w0", "w1", "w2", "w3"};
        case SystemKind::kepler3:
        case SystemKind::kepler3_reparam: return {"Q1", "Q2", "Q3", "P1", "P2", "P3"};
        case SystemKind::twocenter3:
        case SystemKind::lagrange3: return {"x1", "x2", "x3", "y1", "y2", "y3"};
        case SystemKind::ktilde_spherical: return {"r", "psi", "kappa", "P_r", "P_psi", "P_kappa", "t_phys"};
    }
    return {};
}

namespace {

void write_meta(std::ostream& os, const SystemSpec& s) {
    os << kCsvVersion << "\n";
    os << "# system=" << system_name(s.kind) << " f=" << format_double(s.f) << " m=" << format_double(s.m)
       << " m1=" << format_double(s.m1) << " m2=" << format_double(s.m2) << " m0=" << format_double(s.m0)
       << " C=" << format_double(s.C) << "\n";
}

void write_values(std::ostream& os, const Vec& y, const std::vector<ConservedQuantity>& cons) {
    for (int k = 0; k < y.size(); ++k) os << "," << format_double(y(k));
    for (const auto& c : cons) os << "," << format_double(c.eval(y));
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

double parse_number(const std::string& s) {
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw UsageError("CSV: '" + s + "' is not a number");
    return x;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const SystemSpec& spec, const Trajectory& tr) {
    write_meta(os, spec);
    const auto cons = conserved_set(spec);
    os << "t";
    for (const auto& n : state_names(spec.kind)) os << "," << n;
    for (const auto& c : cons) os << "," << c.name;
    os << "\n";
    for (const auto& s : tr.samples) {
        os << format_double(s.t);
        write_values(os, s.y, cons);
        os << "\n";
    }
}

void write_orbit_csv(std::ostream& os, const SystemSpec& spec, const BilliardOrbit& orbit) {
    write_meta(os, spec);
    os << "# termination=" << termination_name(orbit.termination);
    if (!orbit.message.empty()) os << " message=\"" << orbit.message << "\"";
    os << " reflections=" << orbit.events.size() << "\n";
    const auto cons = conserved_set(spec);
    os << "record,arc,wall,t";
    for (const auto& n : state_names(spec.kind)) os << "," << n;
    for (const auto& c : cons) os << "," << c.name;
    os << "\n";
    for (std::size_t a = 0; a < orbit.arcs.size(); ++a) {
        for (const auto& s : orbit.arcs[a]) {
            os << "sample," << a << ",-1," << format_double(s.t);
            write_values(os, s.y, cons);
            os << "\n";
        }
        if (a < orbit.events.size()) {
            const auto& e = orbit.events[a];
            os << "reflect_in," << a << "," << e.wall << "," << format_double(e.t);
            write_values(os, e.before, cons);
            os << "\n";
            os << "reflect_out," << a + 1 << "," << e.wall << "," << format_double(e.t);
            write_values(os, e.after, cons);
            os << "\n";
        }
    }
}

CsvState read_last_state_csv(std::istream& is, SystemKind kind) {
    std::string line, last;
    std::vector<std::string> header;
    bool version_ok = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line == kCsvVersion) version_ok = true;
            continue;
        }
        if (header.empty())
            header = split(line, ',');
        else
            last = line;
    }
    if (!version_ok) throw UsageError(std::string("CSV: missing '") + kCsvVersion + "' header line");
    if (last.empty()) throw UsageError("CSV: no data rows");
    const auto row = split(last, ',');
    if (row.size() != header.size()) throw UsageError("CSV: last row has the wrong number of fields");
    auto column = [&](const std::string& name) -> double {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return parse_number(row[k]);
        throw UsageError("CSV: missing column '" + name + "'");
    };
    const auto names = state_names(kind);
    CsvState out;
    out.t = column("t");
    out.y.resize(static_cast<long>(names.size()));
    for (std::size_t k = 0; k < names.size(); ++k) out.y(static_cast<long>(k)) = column(names[k]);
    return out;
}

}  // namespace regulus
