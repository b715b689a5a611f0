#include "regulus/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "regulus/billiards.hpp"
#include "regulus/errors.hpp"
#include "regulus/geometry.hpp"
#include "regulus/io.hpp"
#include "regulus/systems.hpp"
#include "regulus/transforms.hpp"
#include "regulus/verify.hpp"

namespace regulus {

namespace {

using json = nlohmann::ordered_json;

struct RunConfig {
    std::string command;
    std::string system = "hooke4";
    std::map<std::string, double> params;
    std::vector<std::string> walls;
    json state;  // null when absent
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::string method = "dopri5";
    std::vector<double> tspan{0.0, 10.0};
    long samples = 0;
    int bounces = 100;
    double max_time = std::numeric_limits<double>::infinity();
    bool zero_energy = false;
    std::string out;
    std::uint64_t seed = 42;
    std::optional<long> trials;
    std::vector<std::string> suites;
    bool timing = true;
    bool serial = false;
    std::string transform;
    std::string input;
    double theta = 0.0;
    bool inverse = false;
    std::string quadric;
};

json num(double x) { return std::isfinite(x) ? json(x) : json(x > 0 ? "inf" : x < 0 ? "-inf" : "nan"); }

json to_json(const RunConfig& c) {
    json j;
    j["command"] = c.command;
    if (c.command == "simulate" || c.command == "billiard") {
        j["system"] = c.system;
        j["params"] = c.params;
        if (c.command == "billiard") j["walls"] = c.walls;
        j["state"] = c.state;
        j["zero_energy"] = c.zero_energy;
        j["integrator"] = {{"rel_tol", c.rel_tol}, {"abs_tol", c.abs_tol}, {"max_step", num(c.max_step)},
                           {"method", c.method}};
        if (c.command == "simulate") {
            j["tspan"] = c.tspan;
            j["samples"] = c.samples;
        } else {
            j["bounces"] = c.bounces;
            j["max_time"] = num(c.max_time);
        }
    } else if (c.command == "verify") {
        j["suite"] = c.suites;
        j["seed"] = c.seed;
        j["trials"] = c.trials ? json(*c.trials) : json(nullptr);
        j["timing"] = c.timing;
    } else if (c.command == "transform") {
        j["map"] = c.transform;
        j["in"] = c.input;
        j["theta"] = c.theta;
        j["inverse"] = c.inverse;
    } else if (c.command == "classify") {
        j["quadric"] = c.quadric;
    }
    j["out"] = c.out;
    return j;
}

double to_number(const std::string& field, const std::string& s) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError(field + ": '" + s + "' is not a number");
    return x;
}

std::map<std::string, double> parse_params(const std::string& s) {
    std::map<std::string, double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--params: expected key=value, got '" + item + "'");
        out[item.substr(0, eq)] = to_number("--params " + item.substr(0, eq), item.substr(eq + 1));
    }
    return out;
}

std::vector<double> parse_list(const std::string& field, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(field, item));
    return out;
}

SystemSpec make_spec(const RunConfig& c) {
    SystemSpec s;
    s.kind = parse_system(c.system);
    for (const auto& [k, v] : c.params) {
        if (!std::isfinite(v)) throw UsageError("params: '" + k + "' must be finite");
        if (k == "f") s.f = v;
        else if (k == "m") s.m = v;
        else if (k == "m1") s.m1 = v;
        else if (k == "m2") s.m2 = v;
        else if (k == "m0") s.m0 = v;
        else if (k == "C") s.C = v;
        else if (k == "exclusion") s.exclusion = v;
        else throw UsageError("params: unknown parameter '" + k + "'");
    }
    const bool kepler = s.kind == SystemKind::kepler3 || s.kind == SystemKind::kepler3_reparam;
    if (kepler && s.m == 0.0) throw UsageError("params: kepler systems need m != 0 (attractive for m < 0)");
    if (!(s.exclusion > 0.0)) throw UsageError("params: exclusion must be positive");
    return s;
}

IntegratorOptions make_integrator(const RunConfig& c) {
    IntegratorOptions o;
    if (!(c.rel_tol > 0.0)) throw UsageError("integrator.rel_tol must be positive");
    if (!(c.abs_tol > 0.0)) throw UsageError("integrator.abs_tol must be positive");
    if (!(c.max_step > 0.0)) throw UsageError("integrator.max_step must be positive");
    o.rel_tol = c.rel_tol;
    o.abs_tol = c.abs_tol;
    o.max_step = c.max_step;
    if (c.method == "dopri5") o.method = Method::dopri5;
    else if (c.method == "dop853") o.method = Method::dop853;
    else throw UsageError("integrator.method must be dopri5 or dop853");
    return o;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError(where + ": " + e.what());
    }
}

// a path to a JSON file, or inline JSON
json json_arg(const std::string& s, const std::string& where) {
    if (std::ifstream(s).good()) return parse_json(read_file(s), where + " (" + s + ")");
    if (s == "inf") return json("inf");
    return parse_json(s, where);
}

std::vector<double> numbers(const json& j, std::size_t n, const std::string& field) {
    if (!j.is_array() || j.size() != n) throw UsageError(field + ": expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw UsageError(field + ": expected numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

Quaternion quat_of(const json& j, const std::string& field) { return Quaternion::from(
    [&] { auto v = numbers(j, 4, field); return std::array<double, 4>{v[0], v[1], v[2], v[3]}; }()); }

PureQuaternion pure_of(const json& j, const std::string& field) {
    const auto v = numbers(j, 3, field);
    return {v[0], v[1], v[2]};
}

json jq(const Quaternion& q) { return json::array({q.z0, q.z1, q.z2, q.z3}); }
json jp(const PureQuaternion& p) { return json::array({p.q1, p.q2, p.q3}); }

const json& field_of(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw UsageError(where + ": missing field '" + key + "'");
    return j.at(key);
}

struct InitialState {
    Vec y;
    std::optional<double> t0;
};

InitialState parse_state(const json& j, const SystemSpec& s) {
    const int n = state_dim(s.kind);
    InitialState st;
    if (j.is_string()) {
        const std::string path = j.get<std::string>();
        if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
            std::ifstream in(path);
            if (!in) throw UsageError("cannot read '" + path + "'");
            const CsvState cs = read_last_state_csv(in, s.kind);
            st.y = cs.y;
            st.t0 = cs.t;
            return st;
        }
        return parse_state(parse_json(read_file(path), "state (" + path + ")"), s);
    }
    if (j.is_array()) {
        const bool clockless = s.kind == SystemKind::ktilde_spherical && static_cast<int>(j.size()) == n - 1;
        const auto v = numbers(j, clockless ? n - 1 : n, "state");
        st.y = Vec::Zero(n);
        for (std::size_t k = 0; k < v.size(); ++k) st.y(static_cast<long>(k)) = v[k];
        return st;
    }
    if (!j.is_object()) throw UsageError("state: expected an array, object, or file path");
    switch (s.kind) {
        case SystemKind::hooke4:
        case SystemKind::twocenter_transformed:
            st.y = pack(PhasePointH{quat_of(field_of(j, "z", "state"), "state.z"),
                                    quat_of(field_of(j, "w", "state"), "state.w")});
            break;
        case SystemKind::kepler3:
        case SystemKind::kepler3_reparam:
            st.y = pack(PhasePointIH{pure_of(field_of(j, "Q", "state"), "state.Q"),
                                     pure_of(field_of(j, "P", "state"), "state.P")});
            break;
        case SystemKind::twocenter3:
        case SystemKind::lagrange3:
            st.y = pack(PhasePointIH{pure_of(field_of(j, "x", "state"), "state.x"),
                                     pure_of(field_of(j, "y", "state"), "state.y")});
            break;
        case SystemKind::ktilde_spherical: {
            SphericalState ss;
            auto get = [&](const char* key, double def) {
                if (!j.contains(key)) return def;
                if (!j.at(key).is_number()) throw UsageError(std::string("state.") + key + ": expected a number");
                return j.at(key).get<double>();
            };
            ss.r = get("r", 1.5);
            ss.psi = get("psi", 2.0);
            ss.kappa = get("kappa", 0.0);
            ss.P_r = get("P_r", 0.0);
            ss.P_psi = get("P_psi", 0.0);
            ss.P_kappa = get("P_kappa", s.C);
            st.y = pack(ss, get("t_phys", 0.0));
            break;
        }
    }
    return st;
}

// Rescales one momentum so that the state lies on the zero level.
void solve_zero_energy(const SystemSpec& s, Vec& y) {
    const int n = config_dim(s.kind);
    if (s.kind == SystemKind::ktilde_spherical) {
        const double rest = ktilde1(s, y(0), 0.0, y(5)) + ktilde2(s, y(1), y(4), y(5));
        if (!(rest <= 0.0))
            throw UsageError("state: no zero-energy momentum P_r at this position (K-tilde without P_r is " +
                             format_double(rest) + ")");
        const double pr = std::sqrt(-2.0 * rest) / y(0);
        y(3) = y(3) < 0.0 ? -pr : pr;
        return;
    }
    Vec q0 = y;
    q0.segment(n, n).setZero();
    const double V = eval_h(s, q0);
    const double T = eval_h(s, y) - V;
    if (!(T > 0.0)) throw UsageError("state: zero-energy construction needs a nonzero momentum direction");
    if (V > 0.0) throw UsageError("state: position is outside the zero-energy region (potential " + format_double(V) + ")");
    y.segment(n, n) *= std::sqrt(-V / T);
}

void write_out(const RunConfig& c, std::ostream& out, const std::function<void(std::ostream&)>& f) {
    if (c.out.empty() || c.out == "-") {
        f(out);
        return;
    }
    std::ofstream file(c.out);
    if (!file) throw UsageError("cannot write '" + c.out + "'");
    f(file);
}

// ---------------------------------------------------------------- commands

int cmd_transform(const RunConfig& c, std::ostream& out) {
    if (c.input.empty()) throw UsageError("transform: --in is required");
    const json in = json_arg(c.input, "--in");
    json res;
    const std::string& m = c.transform;
    auto ext = [](const auto& e, auto conv) { return e.infinite ? json("inf") : conv(e.value); };
    if (m == "hopf") {
        if (c.inverse) res = jq(hopf_lift(pure_of(in, "--in"), c.theta));
        else res = jp(hopf(quat_of(in, "--in")));
    } else if (m == "ks") {
        if (c.inverse) {
            const PhasePointH p = ks_lift({pure_of(field_of(in, "Q", "--in"), "Q"), pure_of(field_of(in, "P", "--in"), "P")}, c.theta);
            res = {{"z", jq(p.z)}, {"w", jq(p.w)}};
        } else {
            const PhasePointIH p = ks_forward({quat_of(field_of(in, "z", "--in"), "z"), quat_of(field_of(in, "w", "--in"), "w")});
            res = {{"Q", jp(p.Q)}, {"P", jp(p.P)}};
        }
    } else if (m == "lc") {
        const auto z = numbers(field_of(in, "z", "--in"), 2, "z");
        const auto w = numbers(field_of(in, "w", "--in"), 2, "w");
        const LeviCivitaResult r = levi_civita({z[0], z[1]}, {w[0], w[1]});
        res = {{"q", {r.q.real(), r.q.imag()}}, {"p", {r.p.real(), r.p.imag()}}};
    } else if (m == "bw") {
        if (in.is_array()) {
            res = ext(bw_base(quat_of(in, "--in")), jp);
        } else if (c.inverse) {
            const LambdaHatPoint p =
                bw_lift(pure_of(field_of(in, "x", "--in"), "x"), pure_of(field_of(in, "y", "--in"), "y"), c.theta);
            res = {{"z", jq(p.z)}, {"w", jq(p.w)}};
        } else {
            const BwImage r = bw_phase({quat_of(field_of(in, "z", "--in"), "z"), quat_of(field_of(in, "w", "--in"), "w")});
            res = {{"x", jp(r.x)}, {"y", jp(r.y)}};
        }
    } else if (m == "phi1") {
        const ExtQuaternion z = in.is_string() && in.get<std::string>() == "inf" ? ExtQuaternion::infinity()
                                                                                 : ExtQuaternion{quat_of(in, "--in")};
        res = ext(c.inverse ? phi1_inv(z) : phi1(z), jq);
    } else if (m == "phi2") {
        const ExtPure q = in.is_string() && in.get<std::string>() == "inf" ? ExtPure::infinity()
                                                                           : ExtPure{pure_of(in, "--in")};
        res = ext(c.inverse ? phi2_inv(q) : phi2(q), jp);
    } else {
        throw UsageError("transform: unknown map '" + m + "' (hopf, ks, lc, bw, phi1, phi2)");
    }
    write_out(c, out, [&](std::ostream& os) { os << res.dump() << "\n"; });
    return 0;
}

InitialState initial_state(const RunConfig& c, const SystemSpec& s, bool billiard) {
    InitialState st;
    if (c.state.is_null()) {
        if (!(billiard && s.kind == SystemKind::ktilde_spherical)) throw UsageError("--state is required");
        st = parse_state(json::object(), s);  // documented default position
        Vec y = st.y;
        solve_zero_energy(s, y);
        st.y = y;
        return st;
    }
    st = parse_state(c.state, s);
    if (c.zero_energy) solve_zero_energy(s, st.y);
    for (int k = 0; k < st.y.size(); ++k)
        if (!std::isfinite(st.y(k))) throw UsageError("state: component " + std::to_string(k) + " is not finite");
    return st;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const SystemSpec s = make_spec(c);
    if (c.tspan.size() != 2 || !(c.tspan[1] > c.tspan[0])) throw UsageError("--tspan: expected a,b with b > a");
    InitialState st = initial_state(c, s, false);
    const double t0 = st.t0.value_or(c.tspan[0]);
    const double t1 = st.t0 ? t0 + (c.tspan[1] - c.tspan[0]) : c.tspan[1];
    TrajectoryOptions opt;
    opt.integrator = make_integrator(c);
    if (c.samples < 0) throw UsageError("--samples must be non-negative");
    for (long k = 0; c.samples > 0 && k <= c.samples; ++k)
        opt.output_times.push_back(t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(c.samples));
    const Trajectory tr = s.kind == SystemKind::kepler3_reparam
                              ? kepler_reparam_flow(st.y, s.m, s.f, t0, t1, opt)
                              : integrate(s, st.y, t0, t1, opt);
    write_out(c, out, [&](std::ostream& os) { write_trajectory_csv(os, s, tr); });
    return 0;
}

int cmd_billiard(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const SystemSpec s = make_spec(c);
    if (c.walls.empty()) throw UsageError("billiard: at least one --wall is required");
    if (c.bounces < 0) throw UsageError("--bounces must be non-negative");
    BilliardSpec b;
    b.system = s;
    for (const auto& w : c.walls) b.walls.push_back(parse_wall(w, s.kind));
    b.max_reflections = c.bounces;
    b.max_time = c.max_time;
    b.integrator = make_integrator(c);
    const InitialState st = initial_state(c, s, true);
    BilliardOrbit orbit;
    try {
        orbit = run_billiard(b, st.y);
    } catch (const DomainError& e) {
        throw UsageError(std::string("billiard: ") + e.what());
    }
    write_out(c, out, [&](std::ostream& os) { write_orbit_csv(os, s, orbit); });
    if (orbit.termination != Termination::completed) {
        json d = {{"error", termination_name(orbit.termination)},
                  {"message", orbit.message},
                  {"reflections", orbit.events.size()}};
        err << d.dump() << "\n";
        return 3;
    }
    return 0;
}

json quadric_json(const FocusedQuadric3& q) {
    json j = {{"kind", kind_name(q.kind)}, {"center", jp(q.center)}, {"axis", jp(q.axis)}};
    switch (q.kind) {
        case FocusedQuadric3::Kind::plane: break;
        case FocusedQuadric3::Kind::centered_sphere: j["radius"] = q.semi_axis; break;
        case FocusedQuadric3::Kind::spheroid:
            j["C"] = q.semi_axis;
            j["D"] = q.semi_minor;
            break;
        case FocusedQuadric3::Kind::hyperboloid_sheet:
            j["semi_axis"] = q.semi_axis;
            j["semi_minor"] = q.semi_minor;
            j["sheet"] = q.sheet;
            break;
        case FocusedQuadric3::Kind::paraboloid: j["focal_length"] = q.focal; break;
    }
    json foci = json::array();
    for (const auto& f : q.foci()) foci.push_back(jp(f));
    j["foci"] = foci;
    if (q.focal_form) j["equation"] = {{"a", q.focal_form->first}, {"b", jp(q.focal_form->second)}};
    return j;
}

int cmd_classify(const RunConfig& c, std::ostream& out) {
    if (c.quadric.empty()) throw UsageError("classify: --quadric is required");
    const json in = json_arg(c.quadric, "--quadric");
    Eigen::Matrix4d A;
    if (in.contains("A")) {
        const auto v = numbers(in.at("A"), 16, "A");
        for (int r = 0; r < 4; ++r)
            for (int k = 0; k < 4; ++k) A(r, k) = v[4 * r + k];
        if ((A - A.transpose()).cwiseAbs().maxCoeff() > 0.0) throw UsageError("A: matrix must be symmetric");
    } else if (in.contains("kind")) {
        const std::string kind = in.at("kind").get<std::string>();
        const json& p = field_of(in, "params", "quadric");
        auto get = [&](const char* k) {
            if (!p.contains(k) || !p.at(k).is_number()) throw UsageError(std::string("params.") + k + ": expected a number");
            return p.at(k).get<double>();
        };
        if (kind == "normal_form") {
            // u1²/A² ± u2²/B² + u3²/A² ± u4²/B² = 1
            const double a = get("A"), bb = get("B");
            const double sb = p.contains("sB") ? p.at("sB").get<double>() : 1.0;
            if (!(a > 0.0 && bb > 0.0)) throw UsageError("params: A and B must be positive");
            A = u_coordinate_form(1.0 / (a * a), (sb > 0 ? 1.0 : sb < 0 ? -1.0 : 0.0) / (bb * bb));
        } else if (kind == "sphere") {
            const double r = get("R");
            if (!(r > 0.0)) throw UsageError("params.R must be positive");
            A = Eigen::Matrix4d::Identity() / (r * r);
        } else {
            throw UsageError("quadric kind must be normal_form or sphere");
        }
    } else {
        throw UsageError("quadric: expected {\"A\": [16 numbers]} or {\"kind\": .., \"params\": ..}");
    }
    const NormalForm nf = normal_form(A);
    json entries = json::array();
    for (const auto& e : nf.entries) entries.push_back({{"sigma", e.sigma}, {"a", num(e.a)}, {"eigenvalue", e.eigenvalue}});
    json res = {{"normal_form", entries}, {"s1_invariant", is_s1_invariant(A)}};
    if (!is_s1_invariant(A)) throw UsageError("quadric is not invariant under z -> exp(i theta) z");
    const S1Decomposition d = s1_decompose(A);
    res["decomposition"] = {{"a", d.a}, {"b", jp(d.b)}};
    res["image"] = quadric_json(hopf_image_classify({A}));
    write_out(c, out, [&](std::ostream& os) { os << res.dump() << "\n"; });
    return 0;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto reports = run_suite(c.suites, c.seed, c.trials, !c.serial);
    bool all = true;
    for (const auto& r : reports) all = all && r.pass;
    if (c.out.empty() || c.out == "-") {
        for (const auto& r : reports) out << report_json(r, c.timing) << "\n";
        err << summary_table(reports);
    } else {
        std::ofstream file(c.out);
        if (!file) throw UsageError("cannot write '" + c.out + "'");
        for (const auto& r : reports) file << report_json(r, c.timing) << "\n";
        out << summary_table(reports);
    }
    return all ? 0 : 1;
}

// ---------------------------------------------------------------- config

void apply_config_file(RunConfig& c, const std::string& path, const std::set<std::string>& given) {
    const json j = parse_json(read_file(path), "config " + path);
    if (!j.is_object()) throw UsageError("config " + path + ": top level must be an object");
    auto where = [&](const std::string& k) { return "config " + path + ": field '" + k + "'"; };
    auto dbl = [](const json& v) {
        if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        return v.get<double>();
    };
    for (const auto& [k, v] : j.items()) {
        try {
            if (k == "system") { if (!given.count("system")) c.system = v.get<std::string>(); }
            else if (k == "params") {
                if (!given.count("params"))
                    for (const auto& [pk, pv] : v.items()) c.params[pk] = pv.get<double>();
            }
            else if (k == "walls") { if (!given.count("wall")) c.walls = v.get<std::vector<std::string>>(); }
            else if (k == "state") { if (!given.count("state")) c.state = v; }
            else if (k == "integrator") {
                for (const auto& [ik, iv] : v.items()) {
                    if (ik == "rel_tol") { if (!given.count("rtol")) c.rel_tol = iv.get<double>(); }
                    else if (ik == "abs_tol") { if (!given.count("atol")) c.abs_tol = iv.get<double>(); }
                    else if (ik == "max_step") { if (!given.count("max-step")) c.max_step = dbl(iv); }
                    else if (ik == "method") { if (!given.count("method")) c.method = iv.get<std::string>(); }
                    else throw UsageError(where("integrator." + ik) + " is unknown");
                }
            }
            else if (k == "tspan") { if (!given.count("tspan")) c.tspan = v.get<std::vector<double>>(); }
            else if (k == "samples") { if (!given.count("samples")) c.samples = v.get<long>(); }
            else if (k == "bounces") { if (!given.count("bounces")) c.bounces = v.get<int>(); }
            else if (k == "max_time") { if (!given.count("max-time")) c.max_time = dbl(v); }
            else if (k == "zero_energy") { if (!given.count("zero-energy")) c.zero_energy = v.get<bool>(); }
            else if (k == "seed") { if (!given.count("seed")) c.seed = v.get<std::uint64_t>(); }
            else if (k == "trials") { if (!given.count("trials")) c.trials = v.get<long>(); }
            else if (k == "suite") { if (!given.count("suite")) c.suites = v.get<std::vector<std::string>>(); }
            else if (k == "out") { if (!given.count("out")) c.out = v.get<std::string>(); }
            else if (k == "theta") { if (!given.count("theta")) c.theta = v.get<double>(); }
            else if (k == "in") { if (!given.count("in")) c.input = v.is_string() ? v.get<std::string>() : v.dump(); }
            else if (k == "quadric") { if (!given.count("quadric")) c.quadric = v.is_string() ? v.get<std::string>() : v.dump(); }
            else if (k == "map") { if (c.transform.empty()) c.transform = v.get<std::string>(); }
            else if (k == "inverse") { if (!given.count("inverse")) c.inverse = v.get<bool>(); }
            else if (k == "timing") { if (!given.count("no-timing")) c.timing = v.get<bool>(); }
            else if (k == "command") {}
            else throw UsageError(where(k) + " is unknown");
        } catch (const json::exception& e) {
            throw UsageError(where(k) + ": " + e.what());
        }
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    if (const char* env = std::getenv("REGULUS_SEED")) {
        try {
            c.seed = std::stoull(env);
        } catch (const std::exception&) {
            err << "REGULUS_SEED: '" << env << "' is not an unsigned integer\n";
            return 2;
        }
    }

    CLI::App app{"Quaternionic regularization transforms, Hamiltonian flows and billiards"};
    app.require_subcommand(1);
    std::string config_path;
    bool dump = false;
    std::string params, tspan;
    std::string state_arg;
    long trials = 0;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", config_path, "JSON configuration file");
        s->add_flag("--dump-config", dump, "print the effective configuration and exit");
        s->add_option("--out", c.out, "output file (default: standard output)");
    };
    auto dynamics = [&](CLI::App* s) {
        s->add_option("--system", c.system, "hooke4, kepler3, kepler3_reparam, twocenter3, twocenter_transformed, ktilde, lagrange3");
        s->add_option("--params", params, "comma-separated key=value list of f, m, m1, m2, m0, C, exclusion");
        s->add_option("--state", state_arg, "initial state: JSON array/object, .json file, or .csv output to continue");
        s->add_flag("--zero-energy", c.zero_energy, "rescale one momentum so the state lies on the zero level");
        s->add_option("--rtol", c.rel_tol, "integrator relative tolerance");
        s->add_option("--atol", c.abs_tol, "integrator absolute tolerance");
        s->add_option("--max-step", c.max_step, "integrator maximum step");
        s->add_option("--method", c.method, "dopri5 or dop853");
    };

    auto* tr = app.add_subcommand("transform", "apply one of the transforms to a point");
    tr->add_option("map", c.transform, "hopf, ks, lc, bw, phi1, phi2")->required();
    tr->add_option("--in", c.input, "inline JSON or a JSON file");
    tr->add_option("--theta", c.theta, "fiber angle for lifts");
    tr->add_flag("--inverse", c.inverse, "apply the inverse map or fiber lift");
    common(tr);

    auto* sim = app.add_subcommand("simulate", "integrate a Hamiltonian flow");
    dynamics(sim);
    sim->add_option("--tspan", tspan, "a,b");
    sim->add_option("--samples", c.samples, "number of uniform output intervals (0: every step)");
    common(sim);

    auto* bil = app.add_subcommand("billiard", "run a mechanical billiard");
    dynamics(bil);
    bil->add_option("--wall", c.walls, "wall shorthand, e.g. sphere:r=2, cone:psi=1.0, spheroid:b=0.8");
    bil->add_option("--bounces", c.bounces, "number of reflections");
    bil->add_option("--max-time", c.max_time, "time limit");
    common(bil);

    auto* cls = app.add_subcommand("classify", "classify the Hopf image of a centered quadric");
    cls->add_option("--quadric", c.quadric, "inline JSON or a JSON file");
    common(cls);

    auto* ver = app.add_subcommand("verify", "run the verification suite");
    ver->add_option("--suite", c.suites, "check names (default: all)");
    ver->add_option("--seed", c.seed, "seed (default: REGULUS_SEED or 42)");
    ver->add_option("--trials", trials, "samples per check");
    ver->add_flag("--no-timing{false}", c.timing, "omit wall_clock from the report");
    ver->add_flag("--serial", c.serial, "run checks one after another");
    ver->add_flag("--list", [&](std::int64_t) {
        for (const auto& i : check_registry()) out << i.name << "\t" << i.anchor << "\n";
        throw CLI::Success();
    }, "list the registered checks");
    common(ver);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        c.command = sub->get_name();
        std::set<std::string> given;
        for (const auto* o : sub->get_options())
            if (o->count() > 0) given.insert(o->get_name(false, true).substr(o->get_name(false, true).find_first_not_of('-')));
        if (!params.empty()) c.params = parse_params(params);
        if (!tspan.empty()) c.tspan = parse_list("--tspan", tspan);
        if (!state_arg.empty()) {
            const auto first = state_arg.find_first_not_of(" \t");
            c.state = first != std::string::npos && (state_arg[first] == '[' || state_arg[first] == '{')
                          ? parse_json(state_arg, "--state")
                          : json(state_arg);
        }
        if (given.count("trials")) c.trials = trials;
        if (!config_path.empty()) apply_config_file(c, config_path, given);
        if (c.trials && *c.trials < 1) throw UsageError("--trials must be positive");

        if (dump) {
            out << to_json(c).dump(2) << "\n";
            return 0;
        }
        if (c.command == "transform") return cmd_transform(c, out);
        if (c.command == "simulate") return cmd_simulate(c, out);
        if (c.command == "billiard") return cmd_billiard(c, out, err);
        if (c.command == "classify") return cmd_classify(c, out);
        return cmd_verify(c, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConstraintError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ChartError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const SingularError& e) {
        json d = {{"error", "singular"}, {"message", e.what()}, {"t", e.t()}, {"last_state", e.last_state()}};
        err << d.dump() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        json d = {{"error", "numerical"}, {"message", e.what()}, {"diagnostics", e.diagnostics()}};
        err << d.dump() << "\n";
        return 3;
    } catch (const Error& e) {
        json d = {{"error", "numerical"}, {"message", e.what()}};
        err << d.dump() << "\n";
        return 3;
    }
}

}  // namespace regulus
