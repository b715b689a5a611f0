#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "regulus/billiards.hpp"
#include "regulus/systems.hpp"

namespace regulus {

/// Locale-independent, 17 significant digits.
std::string format_double(double x);

/// Column names of the state vector of a system.
std::vector<std::string> state_names(SystemKind k);

inline constexpr const char* kCsvVersion = "# regulus-csv v1";

/// Header comment lines plus one row per sample: t, state, conserved quantities.
void write_trajectory_csv(std::ostream& os, const SystemSpec& spec, const Trajectory& tr);

/// Rows tagged "sample" for arc samples and "reflect_in"/"reflect_out" at each reflection.
void write_orbit_csv(std::ostream& os, const SystemSpec& spec, const BilliardOrbit& orbit);

/// Last data row of a file written by write_trajectory_csv or write_orbit_csv.
struct CsvState {
    double t = 0.0;
    Vec y;
};
CsvState read_last_state_csv(std::istream& is, SystemKind kind);

}  // namespace regulus
