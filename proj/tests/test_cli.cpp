#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "regulus/cli.hpp"
#include "regulus/io.hpp"

using namespace regulus;
using json = nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "regulus");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string data_path(const std::string& name) {
    std::filesystem::create_directories(REGULUS_TEST_DATA);
    return std::string(REGULUS_TEST_DATA) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("transform hopf of j") {
    const Result r = run({"transform", "hopf", "--in", "[0,0,1,0]"});
    CHECK(r.code == 0);
    CHECK(json::parse(r.out) == json::array({-1.0, 0.0, 0.0}));
    CHECK(r.err.empty());
}

TEST_CASE("transform maps and infinity") {
    Result r = run({"transform", "bw", "--in", "[3,0,0,0]"});
    CHECK(r.code == 0);
    CHECK(json::parse(r.out) == "inf");
    r = run({"transform", "phi1", "--in", "inf"});
    CHECK(json::parse(r.out) == json::array({0.0, 1.0, 0.0, 0.0}));
    r = run({"transform", "ks", "--in", R"({"z":[1,0,0,0],"w":[0,0,4,0]})"});
    CHECK(r.code == 0);
    const json ks = json::parse(r.out);
    CHECK(ks["Q"] == json::array({1.0, 0.0, 0.0}));
    CHECK(ks["P"] == json::array({0.0, 0.0, 2.0}));
    r = run({"transform", "ks", "--in", R"({"z":[1,0,0,0],"w":[0,1,0,0]})"});
    CHECK(r.code == 2);
    r = run({"transform", "lc", "--in", R"({"z":[1,1],"w":[2,0]})"});
    CHECK(json::parse(r.out)["q"] == json::array({0.0, 2.0}));
    r = run({"transform", "nope", "--in", "[1,0,0,0]"});
    CHECK(r.code == 2);
    r = run({"transform", "hopf", "--in", "[1,0,0"});
    CHECK(r.code == 2);
}

TEST_CASE("verify writes one JSON line per check") {
    const Result r = run({"verify", "--suite", "hopf_fiber", "--seed", "42"});
    CHECK(r.code == 0);
    const auto nl = r.out.find('\n');
    REQUIRE(nl != std::string::npos);
    CHECK(r.out.find('\n', nl + 1) == std::string::npos);
    const json rep = json::parse(r.out.substr(0, nl));
    CHECK(rep["check"] == "hopf_fiber");
    CHECK(rep["pass"] == true);
    CHECK(rep["seed"] == 42);
    CHECK(rep["max_residual"].get<double>() <= 1e-12);
    CHECK(run({"verify", "--suite", "no_such_check"}).code == 2);

    const std::string path = data_path("report.jsonl");
    const Result f = run({"verify", "--suite", "hopf_fiber", "bw_composition", "--trials", "50", "--out", path,
                          "--no-timing"});
    CHECK(f.code == 0);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        CHECK_FALSE(json::parse(line).contains("wall_clock"));
        ++lines;
    }
    CHECK(lines == 2);
}

TEST_CASE("verify reports are reproducible for a seed") {
    const Result a = run({"verify", "--suite", "ks_two_form", "--seed", "9", "--trials", "20", "--no-timing"});
    const Result b = run({"verify", "--suite", "ks_two_form", "--seed", "9", "--trials", "20", "--no-timing"});
    CHECK(a.out == b.out);
}

TEST_CASE("simulate output continues from its own CSV") {
    const std::string state = R"({"z":[0.6,0.2,0.1,0.3],"w":[0.1,0.4,0.2,0.3]})";
    const std::string whole = data_path("whole.csv"), first = data_path("first.csv"), second = data_path("second.csv");
    const std::vector<std::string> common{"--system", "hooke4", "--params", "f=0.5,m=-1", "--rtol", "1e-12", "--atol", "1e-14"};
    auto with = [&](std::vector<std::string> v) {
        v.insert(v.begin() + 1, common.begin(), common.end());
        return run(v);
    };
    REQUIRE(with({"simulate", "--state", state, "--zero-energy", "--tspan", "0,4", "--samples", "4", "--out", whole}).code == 0);
    REQUIRE(with({"simulate", "--state", state, "--zero-energy", "--tspan", "0,2", "--samples", "2", "--out", first}).code == 0);
    REQUIRE(with({"simulate", "--state", first, "--tspan", "0,2", "--samples", "2", "--out", second}).code == 0);
    std::ifstream a(whole), b(second);
    const CsvState sa = read_last_state_csv(a, SystemKind::hooke4), sb = read_last_state_csv(b, SystemKind::hooke4);
    CHECK(sa.t == doctest::Approx(4.0));
    CHECK(sb.t == doctest::Approx(4.0));
    CHECK((sa.y - sb.y).norm() <= 1e-9);
    const std::string text = slurp(whole);
    CHECK(text.rfind(kCsvVersion, 0) == 0);
}

TEST_CASE("billiard writes the orbit with conserved columns") {
    const std::string path = data_path("orbit.csv");
    const Result r = run({"billiard", "--system", "ktilde", "--params", "f=-0.5,m1=-1,m2=-1,C=0.3", "--wall",
                          "sphere:r=2", "--wall", "cone:psi=1.0", "--bounces", "100", "--out", path});
    CHECK(r.code == 0);
    std::ifstream in(path);
    std::string line, header;
    std::vector<std::vector<double>> rows;
    int reflections = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header.empty()) {
            header = line;
            continue;
        }
        std::stringstream ss(line);
        std::string cell, kind;
        std::getline(ss, kind, ',');
        if (kind == "reflect_in") ++reflections;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        rows.push_back(v);
    }
    CHECK(reflections == 100);
    CHECK(header.find("Ktilde1,Ktilde2") != std::string::npos);
    // columns after "record": arc, wall, t, 7 state entries, Ktilde, Ktilde1, Ktilde2, P_kappa
    double d1 = 0, d2 = 0;
    for (const auto& v : rows) {
        d1 = std::max(d1, std::abs(v[11] - rows[0][11]));
        d2 = std::max(d2, std::abs(v[12] - rows[0][12]));
    }
    CHECK(d1 <= 1e-6 * (1 + std::abs(rows[0][11])));
    CHECK(d2 <= 1e-6 * (1 + std::abs(rows[0][12])));
}

TEST_CASE("exit codes") {
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"simulate", "--system", "hooke4", "--state", "[1,0,0,0,0,0,0,0]", "--rtol", "-1"}).code == 2);
    CHECK(run({"simulate", "--system", "kepler3", "--params", "m=0", "--state", "[1,0,0,0,1,0]"}).code == 2);
    CHECK(run({"simulate", "--system", "hooke4", "--params", "q=1", "--state", "[1,0,0,0,0,0,0,0]"}).code == 2);
    CHECK(run({"billiard", "--system", "ktilde", "--params", "f=1,m1=1,m2=1,C=0.3", "--wall", "sphere:r=2"}).code == 2);
    CHECK(run({"billiard", "--system", "twocenter3", "--wall", "torus:r=1", "--state", "[0,0.5,0,1,0,0]"}).code == 2);
    const Result sing = run({"simulate", "--system", "twocenter3", "--params", "m1=-1,m2=-0.5", "--state",
                             R"({"x":[1.5,0,0],"y":[-0.3,0,0]})", "--tspan", "0,50"});
    CHECK(sing.code == 3);
    const json diag = json::parse(sing.err);
    CHECK(diag["error"] == "singular");
    CHECK(diag["last_state"].size() == 6);
    // quadric4 walls live in the 4D phase space, not in the physical one
    CHECK(run({"billiard", "--system", "twocenter3", "--wall", "quadric4:A=1,B=1", "--state",
               "[0,0.5,0,1,0,0]"}).code == 2);
}

TEST_CASE("config file and precedence") {
    const std::string cfg = data_path("config.json");
    std::ofstream(cfg) << R"({"system":"ktilde","params":{"f":-0.5,"m1":-1,"m2":-1,"C":0.3},
        "walls":["sphere:r=2","cone:psi=1.0"],"integrator":{"rel_tol":1e-11},"bounces":3})";
    Result r = run({"billiard", "--config", cfg, "--bounces", "7", "--dump-config"});
    CHECK(r.code == 0);
    const json eff = json::parse(r.out);
    CHECK(eff["bounces"] == 7);
    CHECK(eff["integrator"]["rel_tol"] == 1e-11);
    CHECK(eff["walls"].size() == 2);
    // the dumped configuration is itself a valid config
    const std::string dumped = data_path("dumped.json");
    std::ofstream(dumped) << r.out;
    const std::string out = data_path("config_orbit.csv");
    r = run({"billiard", "--config", dumped, "--out", out});
    CHECK(r.code == 0);
    CHECK(slurp(out).find("reflections=7") != std::string::npos);

    std::ofstream(data_path("bad.json")) << R"({"bogus": 1})";
    r = run({"verify", "--config", data_path("bad.json")});
    CHECK(r.code == 2);
    CHECK(r.err.find("bogus") != std::string::npos);
}

TEST_CASE("classify") {
    Result r = run({"classify", "--quadric", R"({"kind":"normal_form","params":{"A":1.4142135623730951,"B":1}})"});
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["image"]["kind"] == "spheroid");
    CHECK(j["image"]["C"].get<double>() == doctest::Approx(1.5));
    CHECK(j["image"]["D"].get<double>() == doctest::Approx(std::sqrt(2.0)));
    r = run({"classify", "--quadric", R"({"A":[1,0,0,0,0,2,0,0,0,0,3,0,0,0,0,4]})"});
    CHECK(r.code == 2);
    r = run({"classify", "--quadric", R"({"A":[0.25,0,0,0,0,0.25,0,0,0,0,0.25,0,0,0,0,0.25]})"});
    CHECK(json::parse(r.out)["image"]["kind"] == "centered_sphere");
    CHECK(json::parse(r.out)["image"]["radius"].get<double>() == doctest::Approx(4.0));
}

TEST_CASE("help and list") {
    Result r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("billiard") != std::string::npos);
    r = run({"verify", "--list"});
    CHECK(r.code == 0);
    CHECK(r.out.find("ztheta_deck_transformation_probe") != std::string::npos);
}
