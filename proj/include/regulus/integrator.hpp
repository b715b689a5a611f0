#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace regulus {

using Vec = Eigen::VectorXd;

/// Right-hand side. May throw SingularError for states inside an excluded set; the step
/// is then rejected and retried with a smaller size.
using RhsFn = std::function<Vec(double, const Vec&)>;

enum class Method { dopri5, dop853 };

struct IntegratorOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double first_step = 0.0;  ///< 0 selects automatically
    Method method = Method::dopri5;
    long max_steps = 20'000'000;
};

struct IntegratorStats {
    long steps = 0;
    long rejected = 0;
    long rhs_evals = 0;
    double max_energy_drift = 0.0;
};

/// Adaptive embedded Runge-Kutta stepper with dense output.
class Stepper {
public:
    Stepper(RhsFn f, double t0, Vec y0, double t_bound, IntegratorOptions opts);

    bool finished() const { return t_ >= t_bound_; }
    /// One accepted step. Throws SingularError when the step size underflows.
    void step();

    double t() const { return t_; }
    double t_old() const { return t_old_; }
    const Vec& y() const { return y_; }
    const Vec& y_old() const { return y_old_; }
    double h_abs() const { return h_abs_; }
    const IntegratorStats& stats() const { return stats_; }
    const IntegratorOptions& options() const { return opts_; }

    /// Interpolant over the last step, t in [t_old, t].
    Vec dense(double t);
    /// Fresh single step of the main formula from (t_old, y_old) to t.
    Vec refine(double t);

    /// Continue from a new state (e.g. after a reflection) at time t <= t().
    void restart(double t, const Vec& y);
    void set_bound(double t_bound) { t_bound_ = t_bound; }

private:
    Vec eval(double t, const Vec& y);
    bool try_step(double h, Vec& y_new, Vec& f_new, double& err);
    double initial_step();
    void build_dense();

    RhsFn rhs_;
    IntegratorOptions opts_;
    double t_, t_old_, t_bound_;
    Vec y_, y_old_, fy_, f_old_;
    double h_abs_ = 0.0;
    double h_prev_ = 0.0;
    Eigen::MatrixXd k_;       // stage derivatives of the last accepted step, one per column
    Eigen::MatrixXd dense_;   // interpolation coefficients
    bool dense_ready_ = false;
    IntegratorStats stats_;
};

struct Sample {
    double t;
    Vec y;
};

struct EventSpec {
    std::function<double(double, const Vec&)> g;
    bool terminal = false;
};

struct EventHit {
    int index;
    double t;
    Vec y;
};

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<EventHit> events;
    IntegratorStats stats;
};

/// Integrates y' = f over [t0, t1]. Samples are taken at every accepted step, or at
/// output_times (sorted, inside [t0, t1]) when given.
Trajectory integrate_rhs(const RhsFn& f, const Vec& y0, double t0, double t1, const IntegratorOptions& opts,
                         const std::vector<double>& output_times = {}, const std::vector<EventSpec>& events = {});

/// Locates the first zero of g inside the last step of the stepper where the sign leaves
/// `side` (+1 or -1). Returns nothing when there is no such crossing.
struct Crossing {
    double t;
    Vec y;
    double g;
};

std::optional<Crossing> find_crossing(Stepper& st, const std::function<double(double, const Vec&)>& g, int side,
                                      bool skip_initial, double gtol = 1e-10, int max_iter = 200);

}  // namespace regulus
