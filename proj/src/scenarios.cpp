#include "scm/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace scm::scenarios {

using geometry::Point;
using solver::Segment;
using linalg::Vector;

double hann_burst(const BurstSignal& s, double t) {
    if (t < 0.0 || t > s.n / s.f_c) return 0.0;
    const double w = 2.0 * std::numbers::pi * s.f_c;
    const double env = std::sin(w * t / (2.0 * s.n));
    return s.F_bar * std::sin(w * t) * env * env;
}

WaveSpeeds wave_speeds(const element::Material& m, double f_c) {
    element::validate(m);
    const double l = element::lame_lambda(m);
    const double mu = element::lame_mu(m);
    WaveSpeeds w;
    w.c_P = std::sqrt((l + 2.0 * mu) / m.rho);
    w.c_S = std::sqrt(mu / m.rho);
    w.lambda_S = f_c > 0.0 ? w.c_S / f_c : 0.0;
    return w;
}

namespace {

double interpolate(const std::vector<double>& t, const std::vector<double>& u, double x) {
    if (x <= t.front()) return u.front();
    if (x >= t.back()) return u.back();
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    const double a = (x - t[j - 1]) / (t[j] - t[j - 1]);
    return (1.0 - a) * u[j - 1] + a * u[j];
}

}  // namespace

double l2_error(const std::vector<double>& t_ref, const std::vector<double>& u_ref, const std::vector<double>& t_num,
                const std::vector<double>& u_num) {
    if (t_ref.size() != u_ref.size() || t_num.size() != u_num.size() || t_ref.size() < 2 || t_num.size() < 2)
        throw std::invalid_argument("l2_error: series need matching lengths of at least 2");
    double num = 0.0;
    double den = 0.0;
    double prev_d2 = 0.0;
    double prev_r2 = 0.0;
    for (std::size_t i = 0; i < t_num.size(); ++i) {
        const double r = interpolate(t_ref, u_ref, t_num[i]);
        const double d = r - u_num[i];
        if (i > 0) {
            const double h = t_num[i] - t_num[i - 1];
            num += 0.5 * h * (prev_d2 + d * d);
            den += 0.5 * h * (prev_r2 + r * r);
        }
        prev_d2 = d * d;
        prev_r2 = r * r;
    }
    if (!(den > 0.0)) throw std::domain_error("l2_error: reference signal has zero energy");
    return 100.0 * std::sqrt(num / den);
}

solver::Mesh mesh_of(const Scenario& s) { return solver::rectilinear_mesh(s.x0, s.y0, s.xs, s.ys); }

solver::ModelOptions model_options(const Scenario& s, int workers) {
    solver::ModelOptions o;
    o.p = s.p;
    o.k = s.k;
    o.material = s.material;
    o.evs = s.evs;
    o.dirichlet = s.dirichlet;
    o.damping = s.damping;
    o.workers = workers;
    return o;
}

namespace {

element::Material steel() { return {210e9, 0.3, 7850.0, element::PlaneState::PlaneStress}; }

element::Material aluminium(double nu) { return {70e9, nu, 2700.0, element::PlaneState::PlaneStrain}; }

}  // namespace

Scenario single_cut_element() {
    Scenario s;
    s.name = "single_cut_element";
    s.xs = {{1000.0, 1}};
    s.ys = {{1000.0, 1}};
    s.domain.primitives = {geometry::void_circle({0.0, 0.0}, 1200.0)};
    s.p = 1;
    s.k = 8;
    s.material = steel();
    s.evs = evs::variant("0e", 1e-4, 1e-4);
    return s;
}

Scenario plate_with_hole() {
    Scenario s;
    s.name = "plate_with_hole";
    s.xs = {{100.0, 2}};
    s.ys = {{100.0, 2}};
    s.domain.primitives = {geometry::void_circle({100.0, 0.0}, 70.0)};
    s.p = 2;
    s.k = 4;
    s.material = steel();
    s.dirichlet = {{0, 100.0, 0}, {1, 0.0, 1}};
    s.evs = evs::variant("0a", 1e-2, 1e-3);
    return s;
}

namespace {

Scenario rect_common(const std::string& name, double l_d, int n_x, double x_probe, double chi, double t_end) {
    const double h_l = l_d / n_x;
    const double l_phys = l_d - (1.0 - chi) * h_l;
    Scenario s;
    s.name = name;
    s.y0 = -1.0;
    s.xs = {{x_probe, static_cast<int>(std::lround(x_probe / h_l))},
            {l_d - x_probe, static_cast<int>(std::lround((l_d - x_probe) / h_l))}};
    s.ys = {{2.0, 2}};
    s.domain.primitives = {geometry::solid_rect({0.0, -1.0}, {l_phys, 1.0})};
    s.p = 4;
    s.k = 8;
    s.material = aluminium(0.3);
    s.dirichlet = {{0, 0.0, 0}};
    s.loads = {{{0.0, 1.0}, {0.0, 1.0}, {1e6, 500e3, 5}}};
    s.probes = {{"P1", {x_probe, 1.0}}};
    s.dt = 3e-9;
    s.t_end = t_end;
    s.evs = evs::variant("2b", 1e-3, 1e-3);
    return s;
}

}  // namespace

Scenario rect_waveguide(double chi) {
    if (!(chi > 0.0 && chi <= 1.0)) throw std::invalid_argument("rect_waveguide: chi must lie in (0, 1]");
    return rect_common("rect_waveguide", 200.0, 200, 100.0, chi, 120e-6);
}

Scenario rect_waveguide_short(double chi) {
    if (!(chi > 0.0 && chi <= 1.0)) throw std::invalid_argument("rect_waveguide_short: chi must lie in (0, 1]");
    return rect_common("rect_waveguide_short", 50.0, 50, 25.0, chi, 15e-6);
}

Scenario conforming_counterpart(const Scenario& rect) {
    if (rect.domain.primitives.size() != 1 || !std::holds_alternative<geometry::Rect>(rect.domain.primitives[0].shape))
        throw std::invalid_argument("conforming_counterpart: expects a single solid rectangle");
    const auto& r = std::get<geometry::Rect>(rect.domain.primitives[0].shape);
    const double l_phys = r.max.x - r.min.x;
    const double x_probe = rect.xs.front().length;
    const double h_l = rect.xs.front().length / rect.xs.front().n;
    Scenario s = rect;
    s.name = rect.name + "_conforming";
    const int n_right = std::max(1, static_cast<int>(std::lround((l_phys - x_probe) / h_l)));
    s.xs = {rect.xs.front(), {l_phys - x_probe, n_right}};
    return s;
}

Scenario porous_waveguide(double r_circ, double r_semi) {
    Scenario s;
    s.name = "porous_waveguide";
    s.y0 = -2.5;
    s.xs = {{600.0, 480}};
    s.ys = {{5.0, 4}};
    s.domain.primitives = {geometry::solid_rect({0.0, -2.5}, {600.0, 2.5})};
    for (int i = 0; i < 13; ++i) s.domain.primitives.push_back(geometry::void_circle({152.0 + 4.0 * i, 0.0}, r_circ));
    for (int i = 0; i < 12; ++i) {
        s.domain.primitives.push_back(geometry::void_circle({154.0 + 4.0 * i, 2.5}, r_semi));
        s.domain.primitives.push_back(geometry::void_circle({154.0 + 4.0 * i, -2.5}, r_semi));
    }
    s.p = 4;
    s.k = 4;
    s.material = aluminium(0.33);
    const BurstSignal sig{1e8, 200e3, 5};
    s.loads = {{{0.0, 2.5}, {0.0, 1.0}, sig}, {{0.0, -2.5}, {0.0, -1.0}, sig}};
    s.probes = {{"P1", {100.0, 2.5}}, {"P2", {300.0, 2.5}}};
    s.dt = 1e-9;
    s.t_end = 150e-6;
    s.evs = evs::variant("2b", 1e-3, 1e-3);
    return s;
}

std::vector<std::string> builtin_names() {
    return {"single_cut_element", "plate_with_hole",  "rect_waveguide",       "rect_waveguide_chi0.5",
            "rect_waveguide_short", "porous_waveguide", "porous_waveguide_r1.75"};
}

Scenario builtin(const std::string& name) {
    if (name == "single_cut_element") return single_cut_element();
    if (name == "plate_with_hole") return plate_with_hole();
    if (name == "rect_waveguide") return rect_waveguide(0.05);
    if (name == "rect_waveguide_chi0.5") {
        Scenario s = rect_waveguide(0.005);
        s.name = name;
        s.dt = 3e-10;
        return s;
    }
    if (name == "rect_waveguide_short") return rect_waveguide_short(0.05);
    if (name == "porous_waveguide") return porous_waveguide(1.0, 1.0);
    if (name == "porous_waveguide_r1.75") {
        Scenario s = porous_waveguide(1.75, 1.0);
        s.name = name;
        return s;
    }
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

RunResult simulate(const Scenario& s, int workers, bool compute_dt_cr, const std::function<void(long)>& progress) {
    if (!(s.dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
    const auto model = solver::build_model(mesh_of(s), s.domain, model_options(s, workers));
    const auto sys = solver::system_of(model);
    RunResult out;
    out.n_dof = model.n_free();
    for (const auto& e : model.elements)
        if (e.cut) out.cut_chi.push_back(e.chi);
    if (compute_dt_cr) out.dt_cr = solver::critical_dt(sys);

    struct Entry {
        int dof;
        double weight;
    };
    auto node_of = [&](Point x, const std::string& what) {
        const auto n = model.node_at(x);
        if (!n) throw std::invalid_argument(what + " at (" + std::to_string(x.x) + ", " + std::to_string(x.y) +
                                            ") is not a mesh node");
        return *n;
    };
    std::vector<std::vector<Entry>> load_dofs;
    for (const auto& l : s.loads) {
        const int node = node_of(l.at, "load");
        std::vector<Entry> e;
        for (int c = 0; c < 2; ++c) {
            const double w = c == 0 ? l.direction.x : l.direction.y;
            const int d = model.free_dof(node, c);
            if (w != 0.0 && d >= 0) e.push_back({d, w});
        }
        load_dofs.push_back(std::move(e));
    }
    std::vector<std::array<int, 2>> probe_dofs;
    for (const auto& p : s.probes) {
        const int node = node_of(p.at, "probe");
        probe_dofs.push_back({model.free_dof(node, 0), model.free_dof(node, 1)});
        out.probes.push_back({p.name, {}, {}});
    }

    const long n_steps = std::lround(s.t_end / s.dt);
    out.t.reserve(n_steps);
    for (auto& h : out.probes) {
        h.ux.reserve(n_steps);
        h.uy.reserve(n_steps);
    }
    Vector F = Vector::Zero(model.n_free());
    auto load_at = [&](double t) {
        F.setZero();
        for (std::size_t i = 0; i < s.loads.size(); ++i) {
            const double f = hann_burst(s.loads[i].signal, t);
            for (const auto& e : load_dofs[i]) F[e.dof] += e.weight * f;
        }
    };
    const solver::Cdm cdm(sys, s.dt);
    load_at(0.0);
    const Vector zero = Vector::Zero(model.n_free());
    auto state = cdm.start(zero, zero, F);
    for (long i = 0; i < n_steps; ++i) {
        load_at(i * s.dt);
        cdm.step(state, F);
        out.t.push_back(state.t);
        for (std::size_t j = 0; j < probe_dofs.size(); ++j) {
            const auto& d = probe_dofs[j];
            out.probes[j].ux.push_back(d[0] >= 0 ? state.U_curr[d[0]] : 0.0);
            out.probes[j].uy.push_back(d[1] >= 0 ? state.U_curr[d[1]] : 0.0);
        }
        if (progress) progress(state.step);
    }
    out.steps = n_steps;
    return out;
}

}  // namespace scm::scenarios
