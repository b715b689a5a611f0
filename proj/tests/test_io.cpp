#include <doctest.h>

#include <sstream>

#include "regulus/errors.hpp"
#include "regulus/io.hpp"

using namespace regulus;

TEST_CASE("doubles are written with full precision") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(-2.0) == "-2");
    CHECK(std::stod(format_double(M_PI)) == M_PI);
}

TEST_CASE("state column names") {
    CHECK(state_names(SystemKind::hooke4).size() == 8);
    CHECK(state_names(SystemKind::ktilde_spherical).back() == "t_phys");
    CHECK(state_names(SystemKind::kepler3).front() == "Q1");
}

TEST_CASE("trajectory CSV round trip") {
    SystemSpec s{SystemKind::hooke4};
    s.f = 0.5;
    s.m = -1;
    Trajectory tr;
    Vec y(8);
    y << 0.1, 0.2, 0.3, 0.4, 1.0 / 3.0, -0.5, 0.25, 1e-17;
    tr.samples.push_back({0.0, y});
    tr.samples.push_back({0.7, 2 * y});
    std::stringstream ss;
    write_trajectory_csv(ss, s, tr);
    const std::string text = ss.str();
    CHECK(text.rfind(kCsvVersion, 0) == 0);
    CHECK(text.find("t,z0,z1,z2,z3,w0,w1,w2,w3,H,BL") != std::string::npos);
    std::stringstream in(text);
    const CsvState last = read_last_state_csv(in, s.kind);
    CHECK(last.t == 0.7);
    CHECK((last.y - 2 * y).norm() == 0.0);
}

TEST_CASE("orbit CSV records reflections") {
    SystemSpec s{SystemKind::twocenter3};
    BilliardOrbit o;
    o.kind = s.kind;
    Vec a(6), b(6);
    a << 0.5, 0, 0, 1, 0, 0;
    b << 0.5, 0, 0, -1, 0, 0;
    o.arcs = {{{0.0, a}}, {{1.0, b}}};
    ReflectionEvent e;
    e.t = 1.0;
    e.wall = 0;
    e.before = a;
    e.after = b;
    o.events.push_back(e);
    std::stringstream ss;
    write_orbit_csv(ss, s, o);
    const std::string text = ss.str();
    CHECK(text.find("# termination=completed reflections=1") != std::string::npos);
    CHECK(text.find("reflect_in,0,0,1,") != std::string::npos);
    CHECK(text.find("reflect_out,1,0,1,") != std::string::npos);
    std::stringstream in(text);
    CHECK((read_last_state_csv(in, s.kind).y - b).norm() == 0.0);
}

TEST_CASE("malformed CSV is rejected") {
    std::stringstream no_version("t,x1\n0,1\n");
    CHECK_THROWS_AS(read_last_state_csv(no_version, SystemKind::twocenter3), UsageError);
    std::stringstream missing(std::string(kCsvVersion) + "\nt,x1,x2,x3,y1,y2\n0,1,2,3,4,5\n");
    CHECK_THROWS_AS(read_last_state_csv(missing, SystemKind::twocenter3), UsageError);
    std::stringstream bad(std::string(kCsvVersion) + "\nt,x1,x2,x3,y1,y2,y3\n0,1,2,3,4,5,six\n");
    CHECK_THROWS_AS(read_last_state_csv(bad, SystemKind::twocenter3), UsageError);
    std::stringstream empty(std::string(kCsvVersion) + "\nt,x1,x2,x3,y1,y2,y3\n");
    CHECK_THROWS_AS(read_last_state_csv(empty, SystemKind::twocenter3), UsageError);
}
