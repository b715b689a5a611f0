#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace regulus {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConstraintError : public Error {
public:
    using Error::Error;
};

class ChartError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

/// Raised when a flow reaches a singular set. Carries the last state that was accepted.
class SingularError : public Error {
public:
    explicit SingularError(const std::string& what, double t = 0.0, std::vector<double> last = {})
        : Error(what), t_(t), last_state_(std::move(last)) {}
    double t() const { return t_; }
    const std::vector<double>& last_state() const { return last_state_; }

private:
    double t_;
    std::vector<double> last_state_;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, std::string diagnostics = {})
        : Error(what), diagnostics_(std::move(diagnostics)) {}
    const std::string& diagnostics() const { return diagnostics_; }

private:
    std::string diagnostics_;
};

class GrazingError : public Error {
public:
    using Error::Error;
};

class CornerError : public Error {
public:
    using Error::Error;
};

}  // namespace regulus
