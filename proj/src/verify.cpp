#include "regulus/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "regulus/billiards.hpp"
#include "regulus/errors.hpp"
#include "regulus/geometry.hpp"
#include "regulus/oracles.hpp"
#include "regulus/rng.hpp"
#include "regulus/systems.hpp"
#include "regulus/transforms.hpp"

namespace regulus {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Residual parts of one check. A single part is reported raw; several parts are
// reported as the worst residual/tolerance ratio.
struct Parts {
    struct Item {
        std::string name;
        double res = 0.0;
        double tol = 0.0;
    };
    std::vector<Item> items;
    std::vector<std::string> notes;
    long trials = 0;

    Item& get(const std::string& name, double tol) {
        for (auto& it : items)
            if (it.name == name) return it;
        items.push_back({name, 0.0, tol});
        return items.back();
    }
    void add(const std::string& name, double res, double tol) {
        auto& it = get(name, tol);
        if (std::isnan(res)) res = kInf;
        it.res = std::max(it.res, res);
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

Quaternion rand_quat(Rng& g, double lo = -2.0, double hi = 2.0) {
    return {g.uniform(lo, hi), g.uniform(lo, hi), g.uniform(lo, hi), g.uniform(lo, hi)};
}

PureQuaternion rand_pure(Rng& g, double lo = -2.0, double hi = 2.0) {
    return {g.uniform(lo, hi), g.uniform(lo, hi), g.uniform(lo, hi)};
}

PureQuaternion rand_unit_pure(Rng& g) {
    for (;;) {
        const PureQuaternion p{g.normal(), g.normal(), g.normal()};
        const double n = norm(p);
        if (n > 1e-3) return p / n;
    }
}

Eigen::Vector4d v4(const Quaternion& q) { return {q.z0, q.z1, q.z2, q.z3}; }
Quaternion q4(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
Eigen::Vector3d v3(const PureQuaternion& p) { return {p.q1, p.q2, p.q3}; }

// w projected onto bl(z, .) = 0
Quaternion project_sigma(const Quaternion& z, const Quaternion& w) {
    const Quaternion iz = mul(kI, z);
    return w - (dot(iz, w) / norm_sq(iz)) * iz;
}

PhasePointH rand_sigma1(Rng& g) {
    Quaternion z;
    do z = rand_quat(g);
    while (norm(z) < 0.3);
    return {z, project_sigma(z, rand_quat(g))};
}

bool near_singular_lambda(const Quaternion& z, double r) {
    return norm(imag(z)) < r || norm(z - kI) < r || norm(z + kI) < r;
}

// gradient of Re((z̄+i) w (z̄-i)) in (z, w)
Eigen::Matrix<double, 8, 1> lambda_grad(const Quaternion& z, const Quaternion& w) {
    Eigen::Matrix<double, 8, 1> g;
    const Quaternion zp = conj(z) + kI, zm = conj(z) - kI;
    for (int k = 0; k < 4; ++k) {
        Quaternion e;
        e[k] = 1.0;
        const Quaternion de = conj(e);
        g(k) = (mul(mul(de, w), zm) + mul(mul(zp, w), de)).z0;
        g(4 + k) = mul(mul(zp, e), zm).z0;
    }
    return g;
}

LambdaHatPoint rand_lambda_hat(Rng& g, double radius = 0.05) {
    Quaternion z;
    do z = rand_quat(g);
    while (near_singular_lambda(z, radius));
    Quaternion w = rand_quat(g);
    const auto gr = lambda_grad(z, w);
    const Eigen::Vector4d gw = gr.tail<4>();
    w = w - q4(gw * (lambda_hat_constraint(z, w) / gw.squaredNorm()));
    return {z, w};
}

Eigen::Matrix<double, 8, 1> pack8(const Quaternion& a, const Quaternion& b) {
    Eigen::Matrix<double, 8, 1> v;
    v << v4(a), v4(b);
    return v;
}

Eigen::Matrix<double, 8, 1> rand_tangent(Rng& g) {
    Eigen::Matrix<double, 8, 1> u;
    for (int k = 0; k < 8; ++k) u(k) = g.uniform(-1.0, 1.0);
    return u;
}

Eigen::Matrix<double, 8, 1> project_out(const Eigen::Matrix<double, 8, 1>& u, const Eigen::Matrix<double, 8, 1>& n) {
    return u - (u.dot(n) / n.squaredNorm()) * n;
}

// Re(dw̄ ∧ dz) on (z, w) tangents
double omega8(const Eigen::Matrix<double, 8, 1>& u, const Eigen::Matrix<double, 8, 1>& v) {
    return u.tail<4>().dot(v.head<4>()) - v.tail<4>().dot(u.head<4>());
}

// Re(dp̄ ∧ dq) on (q, p) tangents of 𝕀ℍ × 𝕀ℍ
double omega6(const Eigen::Matrix<double, 6, 1>& u, const Eigen::Matrix<double, 6, 1>& v) {
    return u.tail<3>().dot(v.head<3>()) - v.tail<3>().dot(u.head<3>());
}

using Map8to6 = std::function<Eigen::Matrix<double, 6, 1>(const Eigen::Matrix<double, 8, 1>&)>;

Eigen::Matrix<double, 6, 8> fd_jacobian(const Map8to6& F, const Eigen::Matrix<double, 8, 1>& x, double h = 1e-5) {
    Eigen::Matrix<double, 6, 8> J;
    for (int k = 0; k < 8; ++k) {
        Eigen::Matrix<double, 8, 1> xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        J.col(k) = (F(xp) - F(xm)) / (2.0 * h);
    }
    return J;
}

Eigen::Matrix<double, 6, 1> ks_map6(const Eigen::Matrix<double, 8, 1>& x) {
    const PhasePointIH r = ks_forward({q4(x.head<4>()), q4(x.tail<4>())}, KsMode::unrestricted);
    Eigen::Matrix<double, 6, 1> o;
    o << v3(r.Q), v3(r.P);
    return o;
}

Eigen::Matrix<double, 6, 1> bw_map6(const Eigen::Matrix<double, 8, 1>& x) {
    const BwImage r = bw_phase({q4(x.head<4>()), q4(x.tail<4>())}, 1e-3);
    Eigen::Matrix<double, 6, 1> o;
    o << v3(r.x), v3(r.y);
    return o;
}

// S^1-invariant form with eigenvalue lam13 twice and lam24 twice, oriented along n
Eigen::Matrix4d invariant_form(double lam13, double lam24, const PureQuaternion& n) {
    return s1_form(0.5 * (lam13 + lam24), 0.5 * (lam13 - lam24) * n);
}

std::vector<Quaternion> sample_quadric(const Eigen::Matrix4d& A, Rng& g, int count, double max_norm = 20.0) {
    std::vector<Quaternion> out;
    int guard = 0;
    while (static_cast<int>(out.size()) < count && guard++ < 200 * count) {
        Eigen::Vector4d d(g.normal(), g.normal(), g.normal(), g.normal());
        d.normalize();
        const double q = d.dot(A * d);
        if (!(q > 0.0)) continue;
        const double t = 1.0 / std::sqrt(q);
        if (t > max_norm) continue;
        out.push_back(q4(t * d));
    }
    return out;
}

double min_focus_distance(const std::vector<PureQuaternion>& foci, const PureQuaternion& target) {
    double best = kInf;
    for (const auto& f : foci) best = std::min(best, norm(f - target));
    return best;
}

// distance between two focus sets, matched greedily
double foci_set_distance(std::vector<PureQuaternion> a, std::vector<PureQuaternion> b) {
    if (a.size() != b.size()) return kInf;
    double worst = 0.0;
    while (!a.empty()) {
        const PureQuaternion p = a.back();
        a.pop_back();
        std::size_t best = 0;
        double d = kInf;
        for (std::size_t k = 0; k < b.size(); ++k) {
            const double dk = norm(p - b[k]);
            if (dk < d) {
                d = dk;
                best = k;
            }
        }
        worst = std::max(worst, d);
        b.erase(b.begin() + static_cast<long>(best));
    }
    return worst;
}

long capped(long trials, long cap) { return std::clamp(trials, 1L, cap); }

// Zero-energy hooke4 state inside the wall, on Σ¹.
Vec hooke_start(Rng& g, const SystemSpec& s, const Eigen::Matrix4d& A, double scale) {
    for (;;) {
        const Quaternion z = rand_quat(g, -scale, scale);
        const Eigen::Vector4d zv = v4(z);
        if (zv.dot(A * zv) >= 0.8 || norm(z) < 0.05) continue;
        const double target = 8.0 * (-s.m - s.f * norm_sq(z));
        if (target <= 0.0) continue;
        Quaternion w = project_sigma(z, rand_quat(g));
        if (norm(w) < 1e-3) continue;
        w = w * std::sqrt(target / norm_sq(w));
        return pack(PhasePointH{z, w});
    }
}

// times and positions of an orbit's samples, dropping repeated times at events
void unique_samples(const BilliardOrbit& o, std::vector<double>& t, std::vector<Vec>& y) {
    for (const auto& s : o.samples()) {
        if (!t.empty() && s.t <= t.back()) continue;
        t.push_back(s.t);
        y.push_back(s.y);
    }
}

// max distance of the first n coordinates at common times
double compare_at_times(const std::vector<double>& ta, const std::vector<Vec>& ya, const BilliardOrbit& b, int n,
                        long& matched) {
    const auto sb = b.samples();
    double err = 0.0;
    std::size_t j = 0;
    matched = 0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        while (j < sb.size() && sb[j].t < ta[i]) ++j;
        if (j < sb.size() && sb[j].t == ta[i]) {
            err = std::max(err, (sb[j].y.head(n) - ya[i].head(n)).norm());
            ++matched;
        }
    }
    return err;
}

// random S^1-invariant orientation
PureQuaternion rand_axis(Rng& g) { return rand_unit_pure(g); }

// Zero-energy ktilde state, solving for P_r >= 0.
std::optional<Vec> ktilde_start(const SystemSpec& s, double r, double psi, double P_psi, double C) {
    const double rest = ktilde1(s, r, 0.0, C) + ktilde2(s, psi, P_psi, C);
    if (!(rest < 0.0)) return std::nullopt;
    SphericalState st;
    st.r = r;
    st.psi = psi;
    st.P_psi = P_psi;
    st.P_kappa = C;
    st.P_r = std::sqrt(-2.0 * rest / (r * r));
    return pack(st);
}

// ---------------------------------------------------------------- checks

void check_hopf_fiber(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const Quaternion z = rand_quat(g);
        const double th = g.uniform(0.0, 2.0 * kPi);
        const double res = norm(hopf(mul(exp_i(th), z)) - hopf(z)) / std::max(1.0, norm_sq(z));
        p.add("fiber", res, 1e-12);
    }
    p.trials = trials;
}

void check_ks_one_form(Rng& g, long trials, Parts& p) {
    const double h = 1e-5;
    for (long t = 0; t < trials; ++t) {
        const PhasePointH pt = rand_sigma1(g);
        Eigen::Matrix<double, 8, 1> n;
        n << v4(mul(kI, pt.w)), -v4(mul(kI, pt.z));
        const auto u = project_out(rand_tangent(g), n);
        const Quaternion dz = q4(u.head<4>()), dw = q4(u.tail<4>());
        const PhasePointIH img = ks_forward(pt);
        const double up = dot(pt.w, dz);
        const double scale = 1.0 + norm(pt.w) * norm(dz);

        const PureQuaternion dq_fd = (hopf(pt.z + h * dz) - hopf(pt.z - h * dz)) / (2.0 * h);
        p.add("fd", std::abs(dot(img.P, dq_fd) - up) / scale, 1e-8);

        const auto [dQ, dP] = ks_differential(pt, dz, dw);
        p.add("exact", std::abs(dot(img.P.quat(), dQ) - up) / scale, 1e-10);
    }
    p.trials = trials;
}

void check_ks_two_form(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const PhasePointH pt = rand_sigma1(g);
        Eigen::Matrix<double, 8, 1> n, x;
        n << v4(mul(kI, pt.w)), -v4(mul(kI, pt.z));
        x << v4(pt.z), v4(pt.w);
        const auto u = project_out(rand_tangent(g), n);
        const auto v = project_out(rand_tangent(g), n);
        const double up = omega8(u, v);
        const double scale = 1.0 + u.norm() * v.norm();

        const auto J = fd_jacobian(ks_map6, x);
        p.add("fd", std::abs(omega6(J * u, J * v) - up) / scale, 1e-6);

        auto exact = [&](const Eigen::Matrix<double, 8, 1>& a) {
            const auto [dQ, dP] = ks_differential(pt, q4(a.head<4>()), q4(a.tail<4>()));
            Eigen::Matrix<double, 6, 1> o;
            o << dQ.z1, dQ.z2, dQ.z3, dP.z1, dP.z2, dP.z3;
            return o;
        };
        p.add("exact", std::abs(omega6(exact(u), exact(v)) - up) / scale, 1e-10);
    }
    p.trials = trials;
}

void check_orbit_correspondence(Rng& g, long trials, Parts& p) {
    const long orbits = capped(trials, 8);
    SystemSpec hs;
    hs.kind = SystemKind::hooke4;
    hs.f = 0.5;
    hs.m = -1.0;
    TrajectoryOptions opt;
    opt.integrator.rel_tol = 1e-12;
    opt.integrator.abs_tol = 1e-14;
    const int n = 600;
    for (int k = 0; k <= n; ++k) opt.output_times.push_back(2.0 * kPi * k / n);
    for (long o = 0; o < orbits; ++o) {
        const Vec y0 = hooke_start(g, hs, Eigen::Matrix4d::Zero(), 1.0);
        const Trajectory th = integrate(hs, y0, 0.0, 2.0 * kPi, opt);
        const Vec k0 = pack(ks_forward(unpack_h(y0)));
        const Trajectory tk = kepler_reparam_flow(k0, hs.m, hs.f, 0.0, 2.0 * kPi, opt);
        std::vector<Eigen::Vector3d> a, b;
        double pointwise = 0.0;
        for (std::size_t s = 0; s < th.samples.size(); ++s) {
            a.push_back(v3(ks_forward(unpack_h(th.samples[s].y), KsMode::restricted, 1e-8).Q));
            b.push_back(tk.samples[s].y.head<3>());
            pointwise = std::max(pointwise, (a.back() - b.back()).norm());
        }
        p.add("hausdorff", hausdorff_polyline(a, b), 1e-6);
        p.add("pointwise", pointwise, 1e-6);
        double bl_max = 0.0;
        for (const auto& s : th.samples) {
            const auto h = unpack_h(s.y);
            bl_max = std::max(bl_max, std::abs(bl(h.z, h.w)));
        }
        p.add("bl", bl_max, 1e-9);
    }
    p.trials = orbits;
}

std::pair<Quaternion, Quaternion> rand_lc_basis(Rng& g) {
    Quaternion v1;
    do v1 = rand_quat(g, -1.0, 1.0);
    while (norm(v1) < 0.1);
    v1 = v1 / norm(v1);
    const Quaternion iv1 = mul(kI, v1);
    for (;;) {
        Quaternion v2 = rand_quat(g, -1.0, 1.0);
        v2 = v2 - dot(v1, v2) * v1 - dot(iv1, v2) * iv1;
        if (norm(v2) < 0.1) continue;
        return {v1, v2 / norm(v2)};
    }
}

void check_lc_plane_image(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const auto [v1, v2] = rand_lc_basis(g);
        p.add("basis_check", lc_plane_check(v1, v2) ? 0.0 : kInf, 1.0);
        Eigen::Matrix<double, 3, Eigen::Dynamic> pts(3, 40);
        for (int k = 0; k < 40; ++k) {
            const double a = g.uniform(-2.0, 2.0), b = g.uniform(-2.0, 2.0);
            pts.col(k) = v3(hopf(a * v1 + b * v2));
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(pts);
        const auto sv = svd.singularValues();
        p.add("planarity", sv(2) / sv(0), 1e-10);

        // the lift of a random plane through the origin
        const PureQuaternion w1 = rand_pure(g), w2 = rand_pure(g);
        if (norm(cross(w1, w2)) < 0.1 * norm(w1) * norm(w2)) continue;
        const auto [u1, u2] = lc_plane_lift(w1, w2);
        p.add("lift_check", lc_plane_check(u1, u2) ? 0.0 : kInf, 1.0);
        p.add("lift_first", norm(hopf(u1) - w1 / norm(w1)), 1e-12);
        const PureQuaternion nrm = cross(w1, w2) / norm(cross(w1, w2));
        for (int k = 0; k < 10; ++k) {
            const double a = g.uniform(-2.0, 2.0), b = g.uniform(-2.0, 2.0);
            const PureQuaternion x = hopf(a * u1 + b * u2);
            p.add("lift_plane", std::abs(dot(x, nrm)) / std::max(1.0, norm(x)), 1e-10);
        }
    }
    p.trials = trials;
}

void check_lc_restriction(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const auto [v1, v2] = rand_lc_basis(g);
        const PureQuaternion e1 = hopf(v1);
        const PureQuaternion e2 = imag(mul(mul(conj(v1), kI), v2));
        p.add("hopf_identity", norm(e1 + hopf(v2)), 1e-12);
        for (int k = 0; k < 20; ++k) {
            const double a = g.uniform(-2.0, 2.0), b = g.uniform(-2.0, 2.0);
            const Complex q = levi_civita({a, b}, {0.0, 0.0}).q;
            const PureQuaternion want = q.real() * e1 + q.imag() * e2;
            p.add("square_map", norm(hopf(a * v1 + b * v2) - want) / std::max(1.0, a * a + b * b), 1e-12);
        }
    }
    p.trials = trials;
}

void check_quadric_classification(Rng& g, long trials, Parts& p) {
    struct Pattern {
        const char* name;
        int s24;
        FocusedQuadric3::Kind kind;
    };
    const Pattern patterns[] = {{"++", 1, FocusedQuadric3::Kind::spheroid},
                                {"+-", -1, FocusedQuadric3::Kind::hyperboloid_sheet},
                                {"+0", 0, FocusedQuadric3::Kind::paraboloid}};
    long used = 0;
    for (const auto& pat : patterns) {
        for (long t = 0; t < trials; ++t) {
            const double A = g.uniform(0.5, 3.0), B = g.uniform(0.5, 3.0);
            const PureQuaternion n = rand_axis(g);
            const double lam13 = 1.0 / (A * A), lam24 = pat.s24 / (B * B);
            const CenteredQuadric4 q{invariant_form(lam13, lam24, n)};
            const FocusedQuadric3 img = hopf_image_classify(q);
            const std::string tag = pat.name;
            p.add("kind" + tag, img.kind == pat.kind ? 0.0 : kInf, 1.0);

            const auto zs = sample_quadric(q.A, g, 1000, 5.0);
            std::vector<PureQuaternion> xs;
            for (const auto& z : zs) {
                xs.push_back(hopf(z));
                p.add("implicit" + tag, std::abs(img.implicit(xs.back())), 1e-9);
            }
            p.add("focus" + tag, min_focus_distance(img.foci(), {}), 1e-8);

            const FittedSurface fs = analyze_fit(fit_quadric(xs));
            // foci read off a fit lose accuracy with the distance of the fitted centre
            const double fscale = std::max(1.0, norm(fs.center));
            p.add("fit_focus" + tag, min_focus_distance(fs.foci, {}) / fscale, 1e-8);
            if (pat.s24 == 1) {
                const double C = 0.5 * (A * A + B * B), D = A * B;
                p.add("CD_formula", std::max(std::abs(img.semi_axis - C), std::abs(img.semi_minor - D)) / C, 1e-12);
                p.add("CD_fit", std::max(std::abs(fs.semi_axis - C), std::abs(fs.semi_minor - D)) / C, 1e-8);
            }
            ++used;
        }
    }
    p.trials = used;
}

void check_dual_collinearity(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const double A = g.uniform(0.5, 3.0), B = g.uniform(0.5, 3.0);
        const CenteredQuadric4 q{invariant_form(1.0 / (A * A), -1.0 / (B * B), rand_axis(g))};
        const CenteredQuadric4 d = dual_quadric(q);
        NearestPointOptions opt;
        opt.seed = g.next_u64();
        opt.search_radius = 20.0;
        const PureQuaternion P = nearest_point(surface_of(hopf_image_classify(q)), {}, opt);
        opt.seed = g.next_u64();
        const PureQuaternion Pd = nearest_point(surface_of(hopf_image_classify(d)), {}, opt);
        p.add("area", norm(cross(P, Pd)) / (norm(P) * norm(Pd)), 1e-8);
    }
    p.trials = trials;
}

void check_confocal_image(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const double alpha = g.uniform(0.5, 3.0), beta = g.uniform(0.5, 3.0);
        const PureQuaternion n = rand_axis(g);
        std::vector<PureQuaternion> ref;
        for (int m = 0; m < 4; ++m) {
            // the last member may cross into the hyperboloid range
            const double lo = -std::min(alpha, beta) + 0.05;
            const double lam = m < 3 ? g.uniform(0.0, 3.0) : g.uniform(lo, 0.0);
            const double l13 = 1.0 / (alpha + lam), l24 = 1.0 / (beta + lam);
            const CenteredQuadric4 q{invariant_form(l13, l24, n)};
            const FocusedQuadric3 img = hopf_image_classify(q);
            auto foci = img.foci();
            if (ref.empty())
                ref = foci;
            else
                p.add("foci", foci_set_distance(foci, ref), 1e-8);
            // independent focus read-off from sampled points
            std::vector<PureQuaternion> xs;
            for (const auto& z : sample_quadric(q.A, g, 300)) xs.push_back(hopf(z));
            const FittedSurface fs = analyze_fit(fit_quadric(xs));
            p.add("fit_foci", foci_set_distance(fs.foci, ref) / std::max(1.0, norm(fs.center)), 1e-8);
        }
    }
    p.trials = trials;
}

void check_reflection_correspondence(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const double A = g.uniform(0.5, 3.0), B = g.uniform(0.5, 3.0);
        const int s = g.uniform() < 0.5 ? 1 : -1;
        const CenteredQuadric4 q{invariant_form(1.0 / (A * A), s / (B * B), rand_axis(g))};
        const FocusedQuadric3 img = hopf_image_classify(q);
        const auto zs = sample_quadric(q.A, g, 1, 10.0);
        if (zs.empty()) continue;
        const Quaternion z = zs.front();
        const Quaternion N = q.grad(z);
        const Quaternion v = project_sigma(z, rand_quat(g));
        p.add("normal_on_sigma", std::abs(bl(z, N)) / (norm(z) * norm(N)), 1e-12);

        auto push = [&](const Quaternion& a) { return 2.0 * mul(mul(conj(z), kI), a); };
        const Quaternion V = push(v), NN = push(N);
        p.add("pure", std::max(std::abs(V.z0) / norm(V), std::abs(NN.z0) / norm(NN)), 1e-12);
        const double c_up = dot(v, N) / (norm(v) * norm(N));
        const double c_down = dot(V, NN) / (norm(V) * norm(NN));
        p.add("angle", std::abs(c_up - c_down), 1e-10);

        const PureQuaternion gx = img.wall_grad(hopf(z));
        p.add("image_normal", norm(cross(imag(NN), gx)) / (norm(NN) * norm(gx)), 1e-9);

        const Vec vr = reflect_velocity(Vec(v4(v)), Vec(v4(N)));
        const Quaternion Vr = push(q4(vr));
        const Vec down = reflect_velocity(Vec(v3(imag(V))), Vec(v3(imag(NN))));
        p.add("reflection", (v3(imag(Vr)) - down).norm() / norm(V), 1e-10);
    }
    p.trials = trials;
}

void check_kepler_hooke_billiard(Rng& g, long trials, Parts& p) {
    const long orbits = capped(trials, 6);
    SystemSpec hs;
    hs.kind = SystemKind::hooke4;
    hs.f = 0.5;
    hs.m = -1.0;
    SystemSpec ks;
    ks.kind = SystemKind::kepler3_reparam;
    ks.f = hs.f;
    ks.m = hs.m;
    IntegratorOptions io;
    io.rel_tol = 1e-12;
    io.abs_tol = 1e-14;
    for (long o = 0; o < orbits; ++o) {
        // some starts never reach the wall; those are redrawn
        CenteredQuadric4 q;
        BilliardSpec up;
        BilliardOrbit ho;
        for (int attempt = 0; attempt < 20; ++attempt) {
            const double A = g.uniform(0.8, 1.3), B = g.uniform(0.8, 1.3);
            q = {invariant_form(1.0 / (A * A), 1.0 / (B * B), rand_axis(g))};
            up.system = hs;
            up.walls = {wall_quadric4(q)};
            up.max_reflections = 20;
            up.max_time = 400.0;
            up.integrator = io;
            ho = run_billiard(up, hooke_start(g, hs, q.A, 0.4));
            if (ho.events.size() == 20) break;
        }
        p.add("reflections", ho.events.size() == 20 ? 0.0 : kInf, 1.0);
        p.add("upstairs_complete", ho.termination == Termination::completed ? 0.0 : kInf, 1.0);
        double bl_max = 0.0;
        for (const auto& s : ho.samples()) {
            const auto h = unpack_h(s.y);
            bl_max = std::max(bl_max, std::abs(bl(h.z, h.w)));
        }
        p.add("bl", bl_max, 1e-9);

        const BilliardOrbit pushed = push_orbit_ks(ho);
        std::vector<double> ts;
        std::vector<Vec> ys;
        unique_samples(pushed, ts, ys);

        BilliardSpec down;
        down.system = ks;
        down.walls = {wall_focused(hopf_image_classify(q))};
        down.max_reflections = 20;
        down.integrator = io;
        down.output_times = ts;
        down.max_time = ts.back() + 1.0;
        const BilliardOrbit direct = run_billiard(down, ys.front());
        long matched = 0;
        p.add("pointwise", compare_at_times(ts, ys, direct, 3, matched), 1e-6);
        p.add("events", direct.events.size() == pushed.events.size() ? 0.0 : kInf, 1.0);
        p.add("coverage", matched + 1 >= static_cast<long>(ts.size()) ? 0.0 : kInf, 1.0);

        // a second lift of the same Kepler data
        const PhasePointIH k0 = unpack_ih(ys.front());
        const Vec y1 = pack(ks_lift(k0, g.uniform(0.0, 2.0 * kPi)));
        BilliardSpec up2 = up;
        up2.output_times = ts;
        up2.max_time = ts.back() + 1.0;
        const BilliardOrbit ho2 = push_orbit_ks(run_billiard(up2, y1));
        p.add("second_lift", compare_at_times(ts, ys, ho2, 3, matched), 1e-6);
    }
    p.trials = orbits;
}

void check_bw_composition(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const LambdaHatPoint pt = rand_lambda_hat(g);
        const ExtPure a = bw_base(pt.z), b = bw_base_chain(pt.z);
        if (a.infinite || b.infinite) {
            p.add("entrywise_vs_chain", a.infinite == b.infinite ? 0.0 : kInf, 1e-12);
            continue;
        }
        const double scale = std::max(1.0, norm(a.value));
        p.add("entrywise_vs_chain", norm(a.value - b.value) / scale, 1e-12);
        const BwImage img = bw_phase(pt);
        p.add("phase_position", norm(img.x - a.value) / scale, 1e-12);
    }
    for (int k = 0; k < 10; ++k) {
        const ExtPure a = bw_base({g.uniform(-5.0, 5.0), 0.0, 0.0, 0.0});
        p.add("real_to_infinity", a.infinite ? 0.0 : kInf, 1e-12);
    }
    p.trials = trials;
}

void check_bw_planar(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const double r = std::exp(g.uniform(std::log(0.2), std::log(5.0)));
        const double psi = g.uniform(0.05, kPi - 0.05), kappa = g.uniform(0.0, 2.0 * kPi);
        const Complex zeta = std::polar(r, psi);
        const Complex X = 0.5 * (zeta + 1.0 / zeta);
        const Quaternion z{0.0, zeta.real(), zeta.imag() * std::cos(kappa), zeta.imag() * std::sin(kappa)};
        const ExtPure x = bw_base(z);
        const PureQuaternion want{X.real(), X.imag() * std::cos(kappa), X.imag() * std::sin(kappa)};
        p.add("joukowski", norm(x.value - want) / std::max(1.0, std::abs(X)), 1e-12);

        // Birkhoff spheres map into the plane k2 x2 + k3 x3 = 0
        const double th = g.uniform(0.0, 2.0 * kPi), k2 = g.uniform(-1.0, 1.0), k3 = g.uniform(-1.0, 1.0);
        const BirkhoffSurface S = birkhoff_surface(th, k2, k3);
        const Quaternion zs = S.point(r, psi);
        const auto [e1, e2] = S.residuals(zs);
        p.add("surface_membership", std::max(std::abs(e1), std::abs(e2)) / std::max(1.0, norm_sq(zs)), 1e-10);
        if (near_singular_lambda(zs, 1e-3)) continue;
        const ExtPure xs = bw_base(zs);
        if (xs.infinite) continue;
        p.add("surface_image_plane",
              std::abs(k2 * xs.value.q2 + k3 * xs.value.q3) / (std::hypot(k2, k3) * std::max(1.0, norm(xs.value))),
              1e-10);
    }
    p.trials = trials;
}

void check_lemma16(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const LambdaHatPoint pt = rand_lambda_hat(g);
        const PhasePointH ab = phi1_phase(pt.z, pt.w);
        p.add("phi1_to_sigma", std::abs(bl(ab.z, ab.w)) / (1.0 + norm(ab.z) * norm(ab.w)), 1e-10);
        const Quaternion Pm = ks_momentum(ab.z, ab.w);
        p.add("pure_momentum", std::abs(Pm.z0) / (1.0 + norm(Pm)), 1e-10);
        const BwImage img = bw_phase(pt);
        const LambdaHatPoint back = bw_lift(img.x, img.y, g.uniform(0.0, 2.0 * kPi));
        p.add("lift_constraint",
              std::abs(lambda_hat_constraint(back.z, back.w)) / (1.0 + norm_sq(back.z) * norm(back.w)), 1e-10);
        const BwImage again = bw_phase(back, 1e-8);
        const double sx = std::max(1.0, norm(img.x)), sy = std::max(1.0, norm(img.y));
        p.add("lift_roundtrip", std::max(norm(again.x - img.x) / sx, norm(again.y - img.y) / sy), 1e-10);
    }
    p.trials = trials;
}

void check_lemma17(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const double mag = std::exp(g.uniform(std::log(1e-3), std::log(1e3)));
        const double x = g.uniform() < 0.5 ? -mag : mag;
        const ExtQuaternion a = phi1(Quaternion{x, 0.0, 0.0, 0.0});
        p.add("unit_circle", std::abs(norm(a.value) - 1.0), 1e-12);
        p.add("in_plane", std::hypot(a.value.z2, a.value.z3), 1e-12);
        const ExtPure b = bw_base({x, 0.0, 0.0, 0.0});
        p.add("to_infinity", b.infinite ? 0.0 : kInf, 1e-12);
        const double th = g.uniform(0.0, 2.0 * kPi);
        if (std::abs(th - 0.5 * kPi) < 1e-3) continue;
        const ExtQuaternion back = phi1_inv(exp_i(th));
        p.add("circle_to_line", norm(imag(back.value)) / std::max(1.0, norm(back.value)), 1e-12);
    }
    const ExtQuaternion inf = phi1(ExtQuaternion::infinity());
    p.add("infinity_to_i", inf.infinite ? kInf : norm(inf.value - kI), 1e-12);
    p.trials = trials;
}

void check_bw_symplectic(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const LambdaHatPoint pt = rand_lambda_hat(g, 0.2);
        const auto n = lambda_grad(pt.z, pt.w);
        const auto u = project_out(rand_tangent(g), n);
        const auto v = project_out(rand_tangent(g), n);
        const auto J = fd_jacobian(bw_map6, pack8(pt.z, pt.w));
        const Eigen::Matrix<double, 6, 1> Ju = J * u, Jv = J * v;
        const double scale = std::max({1.0, u.norm() * v.norm(), Ju.norm() * Jv.norm()});
        p.add("two_form", std::abs(omega6(Ju, Jv) - omega8(u, v)) / scale, 1e-6);
    }
    p.trials = trials;
}

void check_bw_pullback(Rng& g, long trials, Parts& p) {
    for (long t = 0; t < trials; ++t) {
        const LambdaHatPoint pt = rand_lambda_hat(g);
        const BwImage img = bw_phase(pt);
        const double d = norm(pt.z - conj(pt.z));
        const double zm = norm(pt.z - kI), zp = norm(pt.z + kI);
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
        p.add("x_minus_i", rel(norm(img.x - PureQuaternion{1, 0, 0}), zm * zm / d), 1e-10);
        p.add("x_plus_i", rel(norm(img.x + PureQuaternion{1, 0, 0}), zp * zp / d), 1e-10);
        const double y2 = std::pow(d, 4) * norm_sq(pt.w) / (4.0 * zm * zm * zp * zp);
        if (y2 > 1e-20) p.add("y_norm", rel(norm_sq(img.y), y2), 1e-10);
    }
    p.trials = trials;
}

SphericalState rand_spherical(Rng& g) {
    SphericalState s;
    do s.r = std::exp(g.uniform(std::log(0.3), std::log(3.0)));
    while (std::abs(s.r - 1.0) < 0.05);
    s.psi = g.uniform(0.1, kPi - 0.1);
    s.kappa = g.uniform(0.0, 2.0 * kPi);
    s.theta = 0.0;
    s.P_r = g.uniform(-2.0, 2.0);
    s.P_psi = g.uniform(-2.0, 2.0);
    s.P_kappa = g.uniform(-2.0, 2.0);
    return s;
}

// K̃ against the physical energy pulled back through the chain
void pullback_consistency(Rng& g, long trials, Parts& p, bool lagrange) {
    for (long t = 0; t < trials; ++t) {
        SystemSpec s;
        s.kind = SystemKind::ktilde_spherical;
        s.m1 = g.uniform(-2.0, 2.0);
        s.m2 = g.uniform(-2.0, 2.0);
        s.f = g.uniform(-1.0, 1.0);
        if (lagrange) s.m0 = g.uniform(0.1, 2.0);
        const SphericalState st = rand_spherical(g);
        const PhasePointH ph = spherical_to_phase(st);
        const BwImage xy = bw_phase({ph.z, ph.w}, 1e-8);
        const double d = norm(ph.z - conj(ph.z));
        const double factor = norm_sq(ph.z - kI) * norm_sq(ph.z + kI) / (d * d);
        const double chain = factor * twocenter_energy(s, xy.x, xy.y);
        const double direct = eval_h(s, pack(st));
        const double scale = std::max(1.0, std::abs(factor) * (1.0 + norm_sq(xy.y) + std::abs(s.f)));
        p.add("chain", std::abs(chain - direct) / scale, 1e-8);

        // canonical one-form of the chart: Re(w̄ dz) = P·dq on random tangents
        Eigen::Vector4d dq(g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1), 0.0);
        const double h = 1e-5;
        auto zof = [&](double e) {
            return v4(z_theta(st.r + e * dq(0), st.psi + e * dq(1), st.kappa + e * dq(2), st.theta + e * dq(3)));
        };
        const Eigen::Vector4d dz = (zof(h) - zof(-h)) / (2.0 * h);
        const double lhs = v4(ph.w).dot(dz);
        const double rhs = st.P_r * dq(0) + st.P_psi * dq(1) + st.P_kappa * dq(2);
        p.add("one_form", std::abs(lhs - rhs) / (1.0 + v4(ph.w).norm() * dz.norm()), 1e-8);

        const double k1 = ktilde1(s, st.r, st.P_r, st.P_kappa), k2 = ktilde2(s, st.psi, st.P_psi, st.P_kappa);
        p.add("separation_identity", std::abs(direct - k1 - k2) / std::max(1.0, std::abs(k1) + std::abs(k2)), 1e-14);
    }
}

// bounded zero-energy ktilde orbits conserve both separated parts and P_kappa
void separation_flows(Rng& g, long orbits, Parts& p, bool lagrange) {
    TrajectoryOptions opt;
    for (int k = 0; k <= 200; ++k) opt.output_times.push_back(0.5 * k);
    for (long o = 0; o < orbits; ++o) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            SystemSpec s;
            s.kind = SystemKind::ktilde_spherical;
            s.m1 = g.uniform(-2.0, -0.2);
            s.m2 = g.uniform(-2.0, 0.5);
            s.f = g.uniform(-1.0, -0.2);
            if (lagrange) s.m0 = g.uniform(0.1, 1.0);
            s.C = g.uniform(-1.0, 1.0);
            double r;
            do r = std::exp(g.uniform(std::log(0.4), std::log(2.5)));
            while (std::abs(r - 1.0) < 0.1);
            const auto y0 = ktilde_start(s, r, g.uniform(0.4, kPi - 0.4), g.uniform(-1.0, 1.0), s.C);
            if (!y0) continue;
            const Trajectory tr = integrate(s, *y0, 0.0, 100.0, opt);
            const auto cons = conserved_set(s);
            for (const auto& c : cons) {
                if (c.name == "Ktilde") continue;
                const double q0 = c.eval(*y0);
                double d = 0.0;
                for (const auto& sm : tr.samples) d = std::max(d, std::abs(c.eval(sm.y) - q0));
                p.add("drift_" + c.name, d / (1.0 + std::abs(q0)), 1e-6);
            }
            break;
        }
    }
}

void check_ktilde_consistency(Rng& g, long trials, Parts& p) {
    pullback_consistency(g, trials, p, false);
    p.trials = trials;
}

void check_ktilde_separation(Rng& g, long trials, Parts& p) {
    pullback_consistency(g, trials, p, false);
    separation_flows(g, capped(trials, 3), p, false);
    p.trials = trials;
}

void check_lagrange_separation(Rng& g, long trials, Parts& p) {
    pullback_consistency(g, trials, p, true);
    separation_flows(g, capped(trials, 3), p, true);
    p.trials = trials;
}

void check_reduced_conservation(Rng& g, long trials, Parts& p) {
    const long orbits = capped(trials, 6);
    TrajectoryOptions opt;
    for (int k = 0; k <= 200; ++k) opt.output_times.push_back(0.5 * k);
    long done = 0;
    for (long o = 0; o < orbits; ++o) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            SystemSpec s;
            s.kind = SystemKind::ktilde_spherical;
            s.m1 = g.uniform(-2.0, -0.2);
            s.m2 = g.uniform(-2.0, 0.5);
            s.f = g.uniform(-1.0, -0.2);
            s.C = g.uniform(0.05, 1.0);
            double r;
            do r = std::exp(g.uniform(std::log(0.4), std::log(2.5)));
            while (std::abs(r - 1.0) < 0.1);
            const auto y0 = ktilde_start(s, r, g.uniform(0.4, kPi - 0.4), g.uniform(-1.0, 1.0), s.C);
            if (!y0) continue;
            const Trajectory tr = integrate(s, *y0, 0.0, 100.0, opt);
            const double a0 = ktilde1(s, (*y0)(0), (*y0)(3), s.C), b0 = ktilde2(s, (*y0)(1), (*y0)(4), s.C);
            double da = 0.0, db = 0.0, dc = 0.0;
            for (const auto& sm : tr.samples) {
                da = std::max(da, std::abs(ktilde1(s, sm.y(0), sm.y(3), s.C) - a0));
                db = std::max(db, std::abs(ktilde2(s, sm.y(1), sm.y(4), s.C) - b0));
                dc = std::max(dc, std::abs(sm.y(5) - s.C));
            }
            p.add("Kred1", da / (1.0 + std::abs(a0)), 1e-6);
            p.add("Kred2", db / (1.0 + std::abs(b0)), 1e-6);
            p.add("P_kappa", dc, 1e-9);
            ++done;
            break;
        }
    }
    p.trials = done;
}

void check_spheres_cones(Rng& g, long trials, Parts& p) {
    const long orbits = capped(trials, 6);
    long done = 0;
    for (long o = 0; o < orbits; ++o) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            SystemSpec s;
            s.kind = SystemKind::ktilde_spherical;
            s.m1 = g.uniform(-2.0, -0.5);
            s.m2 = g.uniform(-2.0, -0.5);
            s.f = g.uniform(-0.8, -0.2);
            s.C = g.uniform(-0.6, 0.6);
            const double r_in = g.uniform(1.05, 1.3), r_out = g.uniform(1.8, 3.0);
            const double psi_lo = g.uniform(0.4, 1.2), psi_hi = g.uniform(1.9, 2.7);
            BilliardSpec b;
            b.system = s;
            b.walls = {wall_coordinate(0, r_in, "sphere"), wall_coordinate(0, r_out, "sphere"),
                       wall_coordinate(1, psi_lo, "cone"), wall_coordinate(1, psi_hi, "cone")};
            b.max_reflections = 100;
            const auto y0 = ktilde_start(s, 0.5 * (r_in + r_out), 0.5 * (psi_lo + psi_hi), g.uniform(-1.0, 1.0), s.C);
            if (!y0) continue;
            const BilliardOrbit orb = run_billiard(b, *y0);
            if (orb.termination != Termination::completed) {
                p.note("orbit " + std::to_string(o) + " ended: " + termination_name(orb.termination));
                p.add("completed", kInf, 1.0);
            }
            p.add("reflections", orb.events.size() == 100 ? 0.0 : kInf, 1.0);
            for (std::size_t k = 0; k < orb.conserved_names.size(); ++k)
                if (orb.conserved_names[k] != "Ktilde")
                    p.add("drift_" + orb.conserved_names[k], orb.max_relative_drift(k), 1e-6);
            double speed = 0.0;
            for (const auto& e : orb.events) {
                const Eigen::MatrixXd M = kinetic_inverse_metric(s, e.before);
                const double k_in = e.before.segment(3, 3).dot(M * e.before.segment(3, 3));
                const double k_out = e.after.segment(3, 3).dot(M * e.after.segment(3, 3));
                speed = std::max(speed, std::abs(k_out - k_in) / k_in);
            }
            p.add("kinetic", speed, 1e-12);
            ++done;
            break;
        }
    }
    p.trials = done;
}

void check_thm22(Rng& g, long trials, Parts& p) {
    // wall correspondence by the fit oracle
    auto fitted_image = [&](auto point_of) {
        std::vector<PureQuaternion> xs;
        for (int k = 0; k < 1000; ++k) xs.push_back(bw_base(point_of(k)).value);
        const QuadricFit fit = fit_quadric(xs);
        return std::make_pair(fit, analyze_fit(fit));
    };
    const std::vector<PureQuaternion> centers{{1, 0, 0}, {-1, 0, 0}};
    const double r0 = 2.0;
    auto [sfit, sphere_img] = fitted_image([&](int) {
        return z_theta(r0, g.uniform(0.05, kPi - 0.05), g.uniform(0.0, 2.0 * kPi), 0.0);
    });
    p.add("sphere_fit_residual", sfit.residual, 1e-8);
    p.add("sphere_fit_kind", sphere_img.kind == "spheroid" ? 0.0 : kInf, 1.0);
    p.add("sphere_fit_foci", foci_set_distance(sphere_img.foci, centers), 1e-8);
    p.add("sphere_fit_vs_formula", std::abs(sphere_img.semi_minor - rconfocal_from_sphere(r0).semi_minor), 1e-8);

    const double psi0 = kPi / 3.0;
    auto [cfit, cone_img] = fitted_image([&](int) {
        double r;
        do r = std::exp(g.uniform(std::log(0.2), std::log(5.0)));
        while (std::abs(r - 1.0) < 0.05);
        return z_theta(r, psi0, g.uniform(0.0, 2.0 * kPi), 0.0);
    });
    p.add("cone_fit_residual", cfit.residual, 1e-8);
    p.add("cone_fit_kind", cone_img.kind == "hyperboloid2" ? 0.0 : kInf, 1.0);
    p.add("cone_fit_foci", foci_set_distance(cone_img.foci, centers), 1e-8);
    p.add("cone_fit_vs_formula", std::abs(cone_img.semi_axis - rconfocal_from_cone(psi0).semi_axis), 1e-8);

    std::vector<PureQuaternion> eq;
    for (int k = 0; k < 1000; ++k) {
        double r;
        do r = std::exp(g.uniform(std::log(0.2), std::log(5.0)));
        while (std::abs(r - 1.0) < 0.05);
        eq.push_back(bw_base(z_theta(r, 0.5 * kPi, g.uniform(0.0, 2.0 * kPi), 0.0)).value);
    }
    p.add("equator_quadric_degenerate", analyze_fit(fit_quadric(eq)).kind == "degenerate" ? 0.0 : kInf, 1.0);
    const PlaneFit pf = fit_plane(eq);
    p.add("equator_plane", std::max({pf.residual, std::abs(std::abs(pf.normal.q1) - 1.0), std::abs(pf.offset)}), 1e-8);

    // orbit correspondence against the fitted walls
    const long orbits = capped(trials, 4);
    long done = 0;
    IntegratorOptions io;
    io.rel_tol = 1e-12;
    io.abs_tol = 1e-14;
    for (long o = 0; o < orbits; ++o) {
        SystemSpec s;
        s.kind = SystemKind::ktilde_spherical;
        double r_start = 1.5, psi_start = 2.0, P_psi = 0.3;
        if (o == 0) {
            s.m1 = s.m2 = -1.0;
            s.f = -0.5;
            s.C = 0.3;
        } else {
            s.m1 = g.uniform(-2.0, -0.5);
            s.m2 = g.uniform(-2.0, -0.5);
            s.f = g.uniform(-0.8, -0.2);
            s.C = g.uniform(0.1, 0.6);
            r_start = g.uniform(1.3, 1.7);
            psi_start = g.uniform(1.5, 2.5);
            P_psi = g.uniform(-0.5, 0.5);
        }
        const auto y0 = ktilde_start(s, r_start, psi_start, P_psi, s.C);
        if (!y0) continue;
        BilliardSpec kb;
        kb.system = s;
        kb.walls = {wall_coordinate(0, r0, "sphere"), wall_coordinate(1, psi0, "cone")};
        kb.max_reflections = 100;
        kb.integrator = io;
        const BilliardOrbit ko = run_billiard(kb, *y0);
        SystemSpec phys = s;
        phys.kind = SystemKind::twocenter3;
        const BilliardOrbit pushed = push_orbit_bw(ko, phys, kDefaultExclusion);
        std::vector<double> ts;
        std::vector<Vec> ys;
        unique_samples(pushed, ts, ys);

        BilliardSpec db;
        db.system = phys;
        db.walls = {wall_focused(rconfocal_spheroid(sphere_img.semi_minor)),
                    wall_focused(rconfocal_hyperboloid(cone_img.semi_axis, 1))};
        db.max_reflections = static_cast<int>(pushed.events.size());
        db.integrator = io;
        db.output_times = ts;
        db.max_time = ts.back() + 1.0;
        const BilliardOrbit direct = run_billiard(db, ys.front());
        long matched = 0;
        p.add("orbit_match", compare_at_times(ts, ys, direct, 3, matched), 1e-5);
        p.add("events", direct.events.size() == pushed.events.size() ? 0.0 : kInf, 1.0);
        p.add("coverage", matched + 2 >= static_cast<long>(ts.size()) ? 0.0 : kInf, 1.0);
        for (std::size_t k = 0; k < ko.conserved_names.size(); ++k)
            if (ko.conserved_names[k] == "Ktilde1" || ko.conserved_names[k] == "Ktilde2")
                p.add("drift_" + ko.conserved_names[k], ko.max_relative_drift(k), 1e-6);
        ++done;
    }
    p.trials = done;
}

void check_collision(Rng& g, long trials, Parts& p) {
    const long orbits = capped(trials, 4);
    for (long o = 0; o < orbits; ++o) {
        SystemSpec phys;
        phys.kind = SystemKind::twocenter3;
        phys.m1 = o == 0 ? -1.0 : g.uniform(-2.0, -0.3);
        phys.m2 = o == 0 ? -0.5 : g.uniform(-2.0, 0.5);
        const PureQuaternion x0{o == 0 ? 1.5 : g.uniform(1.3, 2.5), 0.0, 0.0};
        const PureQuaternion y0{o == 0 ? -0.3 : g.uniform(-0.8, -0.05), 0.0, 0.0};
        phys.f = twocenter_energy(phys, x0, y0);  // f equals the physical energy

        bool aborted = false;
        try {
            integrate(phys, pack(PhasePointIH{x0, y0}), 0.0, 50.0);
        } catch (const SingularError&) {
            aborted = true;
        }
        p.add("physical_aborts", aborted ? 0.0 : kInf, 1.0);

        SystemSpec tr = phys;
        tr.kind = SystemKind::twocenter_transformed;
        const LambdaHatPoint lp = bw_lift(x0, y0, g.uniform(0.0, 2.0 * kPi));
        const Vec z0 = pack(PhasePointH{lp.z, lp.w});
        p.add("zero_level", std::abs(eval_h(tr, z0)), 1e-10);
        TrajectoryOptions opt;
        opt.events.push_back({[](double, const Vec& y) {
                                  // d/ds |z - i|^2 / 2, with z' = w/4
                                  Eigen::Vector4d d = y.head<4>();
                                  d(1) -= 1.0;
                                  return d.dot(y.segment<4>(4)) / 4.0;
                              },
                              true});
        double closest = kInf;
        bool completed = true;
        try {
            // stops at the first minimum of |z - i|
            const Trajectory t = integrate(tr, z0, 0.0, 200.0, opt);
            if (t.events.empty()) p.note("no closest approach within s <= 200");
            for (const auto& e : t.events) {
                Eigen::Vector4d d = e.y.head<4>();
                d(1) -= 1.0;
                closest = std::min(closest, d.norm());
            }
            for (const auto& s : t.samples) {
                Eigen::Vector4d d = s.y.head<4>();
                d(1) -= 1.0;
                closest = std::min(closest, d.norm());
            }
        } catch (const Error& e) {
            completed = false;
            p.note(std::string("transformed flow failed: ") + e.what());
        }
        p.add("transformed_completes", completed ? 0.0 : kInf, 1.0);
        p.add("closest_approach", closest, 1e-3);
    }
    p.trials = orbits;
}

void check_deck_probe(Rng& g, long trials, Parts& p) {
    struct Cand {
        bool inv_r;
        bool flip_psi;
        int dk;
        int dt;
        double worst = 0.0;
    };
    std::vector<Cand> cands;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int k = 0; k < 4; ++k)
                for (int t = 0; t < 4; ++t)
                    if (a || b || k || t) cands.push_back({a == 1, b == 1, k, t});
    double literal = 0.0;
    for (long n = 0; n < trials; ++n) {
        const double r = std::exp(g.uniform(std::log(0.3), std::log(3.0)));
        const double psi = g.uniform(0.05, kPi - 0.05), kap = g.uniform(0.0, 2.0 * kPi), th = g.uniform(0.0, 2.0 * kPi);
        const Quaternion z = z_theta(r, psi, kap, th);
        const double sc = std::max(1.0, norm(z));
        for (auto& c : cands) {
            const Quaternion z2 = z_theta(c.inv_r ? 1.0 / r : r, c.flip_psi ? kPi - psi : psi, kap + c.dk * 0.5 * kPi,
                                          th + c.dt * 0.5 * kPi);
            c.worst = std::max(c.worst, norm(z2 - z) / sc);
        }
        literal = std::max(literal, norm(z_theta(r, psi, kap, th + kPi) - z) / sc);
    }
    const auto best = std::min_element(cands.begin(), cands.end(), [](auto& a, auto& b) { return a.worst < b.worst; });
    auto describe = [](const Cand& c) {
        static const char* q[] = {"", "+pi/2", "+pi", "+3pi/2"};
        return std::string("(") + (c.inv_r ? "1/r" : "r") + ", " + (c.flip_psi ? "pi-psi" : "psi") + ", kappa" +
               q[c.dk] + ", theta" + q[c.dt] + ")";
    };
    int found = 0;
    for (const auto& c : cands) {
        if (c.worst <= 1e-12) {
            p.note("deck transformation " + describe(c) + " residual " + sci(c.worst));
            ++found;
        }
    }
    p.note("literal theta+pi shift residual " + sci(literal));
    p.add("best_candidate", best->worst, 1e-12);
    p.add("nontrivial_found", found > 0 ? 0.0 : kInf, 1.0);
    p.trials = trials;
}

using CheckFn = void (*)(Rng&, long, Parts&);

struct Entry {
    CheckInfo info;
    CheckFn fn;
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> e = {
        {{"hopf_fiber", "Hopf map constant on S1 fibers", 10000}, check_hopf_fiber},
        {{"ks_one_form", "K.S. pulls back the canonical one-form on Sigma1", 1000}, check_ks_one_form},
        {{"ks_two_form", "K.S. pulls back the symplectic form on Sigma1", 1000}, check_ks_two_form},
        {{"prop_orbit_correspondence", "zero-energy Hooke orbits map to reparametrized Kepler orbits", 2},
         check_orbit_correspondence},
        {{"lc_plane_image", "Hopf image of a Levi-Civita plane is a plane through the origin", 100},
         check_lc_plane_image},
        {{"lc_restriction_is_lc", "Hopf map restricted to a Levi-Civita plane is the complex square", 100},
         check_lc_restriction},
        {{"quadric_image_classification", "Hopf images of S1-invariant centered quadrics", 100},
         check_quadric_classification},
        {{"dual_collinearity", "origin and nearest points of image and dual image are collinear", 100},
         check_dual_collinearity},
        {{"confocal_image", "confocal S1-invariant quadrics have confocal images", 100}, check_confocal_image},
        {{"reflection_correspondence", "K.S. push-forward preserves the reflection angle", 1000},
         check_reflection_correspondence},
        {{"thm_kepler_hooke_billiard", "Kepler billiards are images of restricted Hooke billiards", 2},
         check_kepler_hooke_billiard},
        {{"bw_composition", "entrywise B.W. position map equals the Mobius/Hopf composition", 1000},
         check_bw_composition},
        {{"bw_planar_birkhoff", "B.W. on a Birkhoff plane is the planar Birkhoff map", 1000}, check_bw_planar},
        {{"lemma16_images", "Phi1 maps Lambda-hat onto Sigma-hat and B.W. lands in pure quaternions", 1000},
         check_lemma16},
        {{"lemma17_real_line", "Phi1 sends the real line to the unit circle", 1000}, check_lemma17},
        {{"bw_symplectic", "B.W. pulls back the symplectic form on Lambda-hat", 1000}, check_bw_symplectic},
        {{"bw_pullback_identities", "distance identities of the B.W. map", 1000}, check_bw_pullback},
        {{"ktilde_spherical_consistency", "spherical K-tilde equals the pulled-back two-center energy", 1000},
         check_ktilde_consistency},
        {{"ktilde_separation", "K-tilde separates into radial and angular parts", 1000}, check_ktilde_separation},
        {{"reduced_conservation", "reduced system at fixed P_kappa conserves both parts", 3},
         check_reduced_conservation},
        {{"billiard_spheres_cones_integrable", "sphere and cone walls keep both separated parts", 3},
         check_spheres_cones},
        {{"thm22_equivalence", "reduced billiards equal two-center billiards with r-confocal walls", 1},
         check_thm22},
        {{"lagrange_separation", "Lagrange problem separates in the same coordinates", 1000},
         check_lagrange_separation},
        {{"collision_regularization", "transformed flow passes regularly through double collisions", 1},
         check_collision},
        {{"ztheta_deck_transformation_probe", "brute-force search for the z_theta deck transformation", 1000},
         check_deck_probe},
    };
    return e;
}

CheckReport run_one(const Entry& e, std::uint64_t seed, std::optional<long> trials) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(seed, e.info.name);
    Parts parts;
    CheckReport r;
    r.name = e.info.name;
    r.anchor = e.info.anchor;
    r.seed = seed;
    try {
        e.fn(rng, trials.value_or(e.info.default_trials), parts);
    } catch (const std::exception& ex) {
        parts.add("exception", kInf, 1.0);
        parts.note(std::string("exception: ") + ex.what());
    }
    r.trials = parts.trials;
    std::ostringstream note;
    if (parts.items.size() == 1) {
        r.max_residual = parts.items[0].res;
        r.tolerance = parts.items[0].tol;
    } else {
        r.tolerance = 1.0;
        for (const auto& it : parts.items) r.max_residual = std::max(r.max_residual, it.res / it.tol);
    }
    for (std::size_t k = 0; k < parts.items.size(); ++k) {
        if (k) note << "; ";
        note << parts.items[k].name << "=" << sci(parts.items[k].res) << " (tol " << sci(parts.items[k].tol) << ")";
    }
    for (const auto& n : parts.notes) note << "; " << n;
    r.note = note.str();
    r.pass = r.max_residual <= r.tolerance;
    r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace

const std::vector<CheckInfo>& check_registry() {
    static const std::vector<CheckInfo> infos = [] {
        std::vector<CheckInfo> v;
        for (const auto& e : entries()) v.push_back(e.info);
        return v;
    }();
    return infos;
}

std::vector<CheckReport> run_suite(const std::vector<std::string>& names, std::uint64_t seed,
                                   std::optional<long> trials, bool parallel) {
    if (trials && *trials < 1) throw UsageError("trials must be positive");
    std::vector<const Entry*> chosen;
    if (names.empty()) {
        for (const auto& e : entries()) chosen.push_back(&e);
    } else {
        for (const auto& n : names) {
            auto it = std::find_if(entries().begin(), entries().end(), [&](const Entry& e) { return e.info.name == n; });
            if (it == entries().end()) throw UsageError("unknown check '" + n + "'");
            chosen.push_back(&*it);
        }
        std::sort(chosen.begin(), chosen.end(), [](auto* a, auto* b) { return a->info.name < b->info.name; });
        chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    }
    std::vector<CheckReport> out;
    if (parallel) {
        std::vector<std::future<CheckReport>> fut;
        for (const auto* e : chosen) fut.push_back(std::async(std::launch::async, run_one, std::cref(*e), seed, trials));
        for (auto& f : fut) out.push_back(f.get());
    } else {
        for (const auto* e : chosen) out.push_back(run_one(*e, seed, trials));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

std::string report_json(const CheckReport& r, bool timing) {
    nlohmann::ordered_json j;
    j["check"] = r.name;
    j["anchor"] = r.anchor;
    j["trials"] = r.trials;
    j["max_residual"] = std::isfinite(r.max_residual) ? nlohmann::ordered_json(r.max_residual)
                                                       : nlohmann::ordered_json("inf");
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    j["seed"] = r.seed;
    if (timing) j["wall_clock"] = r.wall_clock;
    j["note"] = r.note;
    return j.dump();
}

std::string summary_table(const std::vector<CheckReport>& reports) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-36s %8s %12s %10s  %s\n", "check", "trials", "residual", "tolerance", "result");
    os << line;
    int passed = 0;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%-36s %8ld %12.3e %10.1e  %s\n", r.name.c_str(), r.trials, r.max_residual,
                      r.tolerance, r.pass ? "PASS" : "FAIL");
        os << line;
        passed += r.pass;
    }
    os << passed << "/" << reports.size() << " checks passed\n";
    return os.str();
}

}  // namespace regulus
