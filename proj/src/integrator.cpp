#include "regulus/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "regulus/detail/rk_tableaux.hpp"
#include "regulus/errors.hpp"

namespace regulus {

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

int n_stages(Method m) { return m == Method::dopri5 ? 6 : detail::dop853::n_stages; }
int error_order(Method m) { return m == Method::dopri5 ? 4 : 7; }

double stage_a(Method m, int s, int j) { return m == Method::dopri5 ? detail::rk45::a[s][j] : detail::dop853::a[s][j]; }
double stage_b(Method m, int j) { return m == Method::dopri5 ? detail::rk45::b[j] : detail::dop853::b[j]; }
double stage_c(Method m, int s) { return m == Method::dopri5 ? detail::rk45::c[s] : detail::dop853::c[s]; }

double rms(const Vec& v) { return v.size() ? v.norm() / std::sqrt(static_cast<double>(v.size())) : 0.0; }

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Stepper::Stepper(RhsFn f, double t0, Vec y0, double t_bound, IntegratorOptions opts)
    : rhs_(std::move(f)), opts_(opts), t_(t0), t_old_(t0), t_bound_(t_bound), y_(std::move(y0)) {
    if (!(t_bound >= t0)) throw DomainError("integration interval must satisfy t1 >= t0");
    if (!(opts_.rel_tol > 0.0) || !(opts_.abs_tol > 0.0)) throw DomainError("tolerances must be positive");
    if (!(opts_.max_step > 0.0)) throw DomainError("max_step must be positive");
    for (int k = 0; k < y_.size(); ++k)
        if (!std::isfinite(y_(k))) throw DomainError("initial state has non-finite components");
    try {
        fy_ = eval(t_, y_);
    } catch (const SingularError& e) {
        throw SingularError(std::string("initial state is singular: ") + e.what(), t_, to_std(y_));
    }
    y_old_ = y_;
    f_old_ = fy_;
    h_abs_ = opts_.first_step > 0.0 ? opts_.first_step : initial_step();
    k_.resize(y_.size(), n_stages(opts_.method) + 1);
}

Vec Stepper::eval(double t, const Vec& y) {
    ++stats_.rhs_evals;
    Vec r = rhs_(t, y);
    for (int k = 0; k < r.size(); ++k)
        if (!std::isfinite(r(k))) throw SingularError("non-finite vector field", t, to_std(y));
    return r;
}

double Stepper::initial_step() {
    const Vec& y0 = y_;
    const Vec& f0 = f_old_;
    if (y0.size() == 0 || t_bound_ == t_) return std::max(t_bound_ - t_, 1e-6);
    const Vec scale = (opts_.abs_tol + y0.cwiseAbs().array() * opts_.rel_tol).matrix();
    const double d0 = rms(y0.cwiseQuotient(scale));
    const double d1 = rms(f0.cwiseQuotient(scale));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, t_bound_ - t_, opts_.max_step});
    double d2 = 0.0;
    try {
        const Vec f1 = eval(t_ + h0, y0 + h0 * f0);
        d2 = rms((f1 - f0).cwiseQuotient(scale)) / h0;
    } catch (const SingularError&) {
        return h0 * 1e-3;
    }
    double h1;
    if (d1 <= 1e-15 && d2 <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
    else
        h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / (error_order(opts_.method) + 1));
    return std::min({100.0 * h0, h1, opts_.max_step});
}

bool Stepper::try_step(double h, Vec& y_new, Vec& f_new, double& err) {
    const Method m = opts_.method;
    const int ns = n_stages(m);
    const long n = y_.size();
    try {
        k_.col(0) = fy_;
        for (int s = 1; s < ns; ++s) {
            Vec dy = Vec::Zero(n);
            for (int j = 0; j < s; ++j) {
                const double a = stage_a(m, s, j);
                if (a != 0.0) dy += a * k_.col(j);
            }
            k_.col(s) = eval(t_ + stage_c(m, s) * h, y_ + h * dy);
        }
        Vec acc = Vec::Zero(n);
        for (int j = 0; j < ns; ++j) acc += stage_b(m, j) * k_.col(j);
        y_new = y_ + h * acc;
        f_new = eval(t_ + h, y_new);
        k_.col(ns) = f_new;
    } catch (const SingularError&) {
        return false;
    }

    const Vec scale = (opts_.abs_tol + y_.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array() * opts_.rel_tol).matrix();
    if (m == Method::dopri5) {
        Vec e = Vec::Zero(n);
        for (int j = 0; j <= ns; ++j) e += detail::rk45::e[j] * k_.col(j);
        err = rms((h * e).cwiseQuotient(scale));
    } else {
        Vec e5 = Vec::Zero(n), e3 = Vec::Zero(n);
        for (int j = 0; j <= ns; ++j) {
            e5 += detail::dop853::e5[j] * k_.col(j);
            e3 += detail::dop853::e3[j] * k_.col(j);
        }
        e5 = e5.cwiseQuotient(scale);
        e3 = e3.cwiseQuotient(scale);
        const double n5 = e5.squaredNorm(), n3 = e3.squaredNorm();
        if (n5 == 0.0 && n3 == 0.0) {
            err = 0.0;
        } else {
            const double denom = n5 + 0.01 * n3;
            err = std::abs(h) * n5 / std::sqrt(denom * static_cast<double>(n));
        }
    }
    return std::isfinite(err);
}

void Stepper::step() {
    if (finished()) return;
    if (stats_.steps >= opts_.max_steps) throw NumericalError("maximum number of steps exceeded");
    const double min_step = 10.0 * std::abs(std::nextafter(t_, INFINITY) - t_);
    double h_abs = std::min(h_abs_, opts_.max_step);
    if (h_abs < min_step) h_abs = min_step;
    const double exponent = -1.0 / (error_order(opts_.method) + 1);

    bool rejected = false;
    Vec y_new, f_new;
    for (;;) {
        if (h_abs < min_step) throw SingularError("step size underflow", t_, to_std(y_));
        double t_new = t_ + h_abs;
        if (t_new > t_bound_) t_new = t_bound_;
        const double h = t_new - t_;
        h_abs = h;
        double err = 0.0;
        if (!try_step(h, y_new, f_new, err)) {
            h_abs *= 0.25;
            rejected = true;
            ++stats_.rejected;
            continue;
        }
        if (err < 1.0) {
            double factor = err == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, exponent));
            if (rejected) factor = std::min(1.0, factor);
            t_old_ = t_;
            y_old_ = y_;
            f_old_ = fy_;
            h_prev_ = h;
            t_ = t_new;
            y_ = y_new;
            fy_ = f_new;
            h_abs_ = h_abs * factor;
            dense_ready_ = false;
            ++stats_.steps;
            return;
        }
        h_abs *= std::max(kMinFactor, kSafety * std::pow(err, exponent));
        rejected = true;
        ++stats_.rejected;
    }
}

void Stepper::restart(double t, const Vec& y) {
    t_ = t;
    y_ = y;
    fy_ = eval(t_, y_);
    t_old_ = t_;
    y_old_ = y_;
    f_old_ = fy_;
    h_prev_ = 0.0;
    dense_ready_ = false;
}

void Stepper::build_dense() {
    const long n = y_.size();
    const double h = h_prev_;
    if (opts_.method == Method::dopri5) {
        dense_.resize(n, 4);
        for (int c = 0; c < 4; ++c) {
            Vec q = Vec::Zero(n);
            for (int j = 0; j < 7; ++j) q += detail::rk45::p[j][c] * k_.col(j);
            dense_.col(c) = h * q;
        }
    } else {
        using namespace detail::dop853;
        Eigen::MatrixXd kx(n, 16);
        kx.leftCols(detail::dop853::n_stages + 1) = k_;
        for (int s = detail::dop853::n_stages + 1; s < 16; ++s) {
            Vec dy = Vec::Zero(n);
            for (int j = 0; j < s; ++j)
                if (a[s][j] != 0.0) dy += a[s][j] * kx.col(j);
            kx.col(s) = eval(t_old_ + c[s] * h, y_old_ + h * dy);
        }
        const Vec dy = y_ - y_old_;
        dense_.resize(n, 7);
        dense_.col(0) = dy;
        dense_.col(1) = h * f_old_ - dy;
        dense_.col(2) = 2.0 * dy - h * (fy_ + f_old_);
        for (int r = 0; r < 4; ++r) {
            Vec acc = Vec::Zero(n);
            for (int j = 0; j < 16; ++j) acc += d[r][j] * kx.col(j);
            dense_.col(3 + r) = h * acc;
        }
    }
    dense_ready_ = true;
}

Vec Stepper::dense(double t) {
    if (h_prev_ == 0.0) return y_;
    if (!dense_ready_) build_dense();
    const double x = (t - t_old_) / h_prev_;
    if (opts_.method == Method::dopri5) {
        Vec y = y_old_;
        double p = 1.0;
        for (int c = 0; c < 4; ++c) {
            p *= x;
            y += p * dense_.col(c);
        }
        return y;
    }
    Vec y = Vec::Zero(y_.size());
    for (int i = 0; i < 7; ++i) {
        y += dense_.col(6 - i);
        y *= (i % 2 == 0) ? x : (1.0 - x);
    }
    return y + y_old_;
}

Vec Stepper::refine(double t) {
    const double h = t - t_old_;
    if (h == 0.0) return y_old_;
    if (t == t_ && h == h_prev_) return y_;
    const Method m = opts_.method;
    const int ns = n_stages(m);
    const long n = y_old_.size();
    Eigen::MatrixXd k(n, ns);
    k.col(0) = f_old_;
    for (int s = 1; s < ns; ++s) {
        Vec dy = Vec::Zero(n);
        for (int j = 0; j < s; ++j) {
            const double a = stage_a(m, s, j);
            if (a != 0.0) dy += a * k.col(j);
        }
        k.col(s) = eval(t_old_ + stage_c(m, s) * h, y_old_ + h * dy);
    }
    Vec acc = Vec::Zero(n);
    for (int j = 0; j < ns; ++j) acc += stage_b(m, j) * k.col(j);
    return y_old_ + h * acc;
}

namespace {

// Illinois iteration on a bracket with fa > 0 > fb (side-adjusted values).
std::optional<Crossing> localize(Stepper& st, const std::function<double(double, const Vec&)>& g, int side, double a,
                                 double fa, double b, double fb, double gtol, int max_iter) {
    int last = 0;
    for (int it = 0; it < max_iter; ++it) {
        double c = (a * fb - b * fa) / (fb - fa);
        // very long brackets (steps of force-free motion can be huge) shrink geometrically first
        if (b - a > 1e6 * (1.0 + std::abs(a))) c = a + std::sqrt(b - a);
        else if (!(c > a && c < b) || it % 4 == 3) c = 0.5 * (a + b);
        const Vec yc = st.refine(c);
        const double fc = side * g(c, yc);
        if (std::abs(fc) <= gtol) return Crossing{c, yc, side * fc};
        if (fc > 0.0) {
            a = c;
            fa = fc;
            if (last == 1) fb *= 0.5;
            last = 1;
        } else {
            b = c;
            fb = fc;
            if (last == -1) fa *= 0.5;
            last = -1;
        }
        if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a))) break;
    }
    const Vec ya = st.refine(a);
    const double ga = g(a, ya);
    if (std::abs(ga) <= gtol) return Crossing{a, ya, ga};
    const Vec yb = st.refine(b);
    const double gb = g(b, yb);
    if (std::abs(gb) <= gtol) return Crossing{b, yb, gb};
    throw NumericalError("event localization failed", "bracket=[" + std::to_string(a) + "," + std::to_string(b) +
                                                          "] g=" + std::to_string(ga) + "," + std::to_string(gb));
}

}  // namespace

std::optional<Crossing> find_crossing(Stepper& st, const std::function<double(double, const Vec&)>& g, int side,
                                      bool skip_initial, double gtol, int max_iter) {
    const double t0 = st.t_old(), t1 = st.t();
    const double h = t1 - t0;
    if (h <= 0.0) return std::nullopt;
    int m = 8;
    const double max_step = st.options().max_step;
    if (std::isfinite(max_step)) m = std::max(m, static_cast<int>(std::ceil(h / (max_step / 8.0))));
    m = std::min(m, 4096);

    double prev_t = t0;
    double prev_g = side * g(t0, st.y_old());
    bool prev_inside = skip_initial ? prev_g > gtol : prev_g > 0.0;

    for (int k = 1; k <= m; ++k) {
        double tk = k == m ? t1 : t0 + h * k / m;
        double gk = side * g(tk, k == m ? st.y() : st.dense(tk));
        if (k == 1 && skip_initial && !prev_inside && gk < 0.0) {
            // Started on the wall and already outside at the first sample: the orbit may have
            // crossed the whole domain in between, so look for an inside point closer to t0.
            double outer_t = tk, outer_g = gk;
            for (int j = 1; j <= 1100; ++j) {
                const double tj = t0 + (tk - t0) * std::ldexp(1.0, -j);
                if (tj <= t0) break;
                const double gj = side * g(tj, st.dense(tj));
                if (gj > gtol) {
                    prev_t = tj;
                    prev_g = gj;
                    prev_inside = true;
                    tk = outer_t;
                    gk = outer_g;
                    --k;  // resume the regular grid after this bracket
                    break;
                }
                outer_t = tj;
                outer_g = gj;
            }
        }
        if (gk < 0.0 && prev_inside) {
            const double fa = prev_t == t0 ? prev_g : side * g(prev_t, st.refine(prev_t));
            const double fb = tk == t1 ? gk : side * g(tk, st.refine(tk));
            if (fa > 0.0 && fb < 0.0) return localize(st, g, side, prev_t, fa, tk, fb, gtol, max_iter);
            if (fb >= 0.0) {
                prev_t = tk;
                prev_g = fb;
                prev_inside = fb > 0.0;
                continue;
            }
        }
        prev_t = tk;
        prev_g = gk;
        prev_inside = gk > 0.0;
    }
    return std::nullopt;
}

Trajectory integrate_rhs(const RhsFn& f, const Vec& y0, double t0, double t1, const IntegratorOptions& opts,
                         const std::vector<double>& output_times, const std::vector<EventSpec>& events) {
    Stepper st(f, t0, y0, t1, opts);
    Trajectory tr;
    std::size_t next_out = 0;
    if (output_times.empty()) {
        tr.samples.push_back({t0, y0});
    } else {
        if (!std::is_sorted(output_times.begin(), output_times.end()))
            throw DomainError("output_times must be sorted");
        while (next_out < output_times.size() && output_times[next_out] <= t0) {
            if (output_times[next_out] == t0) tr.samples.push_back({t0, y0});
            ++next_out;
        }
    }
    std::vector<int> sides(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) sides[e] = events[e].g(t0, y0) >= 0.0 ? 1 : -1;

    bool stop = false;
    while (!st.finished() && !stop) {
        st.step();
        double t_end = st.t();
        for (std::size_t e = 0; e < events.size(); ++e) {
            auto hit = find_crossing(st, events[e].g, sides[e], false);
            if (!hit) continue;
            tr.events.push_back({static_cast<int>(e), hit->t, hit->y});
            sides[e] = -sides[e];
            if (events[e].terminal) {
                stop = true;
                t_end = std::min(t_end, hit->t);
                break;
            }
        }
        if (output_times.empty()) {
            if (!stop) tr.samples.push_back({st.t(), st.y()});
        } else {
            while (next_out < output_times.size() && output_times[next_out] <= t_end) {
                const double to = output_times[next_out++];
                tr.samples.push_back({to, to == st.t() ? st.y() : st.refine(to)});
            }
        }
        if (stop && output_times.empty()) tr.samples.push_back({tr.events.back().t, tr.events.back().y});
    }
    tr.stats = st.stats();
    return tr;
}

}  // namespace regulus
