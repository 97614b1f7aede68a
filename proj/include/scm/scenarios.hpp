#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scm/element.hpp"
#include "scm/evs.hpp"
#include "scm/geometry.hpp"
#include "scm/solver.hpp"

namespace scm::scenarios {

struct BurstSignal {
    double F_bar = 1.0;  ///< N
    double f_c = 1.0;    ///< Hz
    int n = 5;           ///< periods
    bool operator==(const BurstSignal&) const = default;
};

/// Hann-windowed sine burst F_bar sin(w t) sin^2(w t / 2n) on [0, n/f_c].
double hann_burst(const BurstSignal& s, double t);

struct WaveSpeeds {
    double c_P = 0.0;       ///< m/s
    double c_S = 0.0;       ///< m/s
    double lambda_S = 0.0;  ///< shear wavelength at f_c, m
};

WaveSpeeds wave_speeds(const element::Material& m, double f_c);

/// 100 sqrt(int (u - u~)^2 dt / int u^2 dt) in percent, trapezoidal rule on
/// the grid of the numerical series. The reference is interpolated linearly.
double l2_error(const std::vector<double>& t_ref, const std::vector<double>& u_ref, const std::vector<double>& t_num,
                const std::vector<double>& u_num);

struct PointLoad {
    geometry::Point at;         ///< mm, must be a mesh node
    geometry::Point direction;  ///< unit vector of the force
    BurstSignal signal;
    bool operator==(const PointLoad&) const = default;
};

struct Probe {
    std::string name;
    geometry::Point at;  ///< mm, must be a mesh node
    bool operator==(const Probe&) const = default;
};

struct Scenario {
    std::string name;
    double x0 = 0.0;  ///< mm
    double y0 = 0.0;
    std::vector<solver::Segment> xs;
    std::vector<solver::Segment> ys;
    geometry::ImplicitDomain domain;
    int p = 1;
    int k = 8;
    element::Material material;
    std::vector<solver::DirichletLine> dirichlet;
    std::vector<PointLoad> loads;
    std::vector<Probe> probes;
    double dt = 1e-9;     ///< s
    double t_end = 0.0;   ///< s
    evs::EvsConfig evs;
    solver::Damping damping;
    bool operator==(const Scenario&) const = default;
};

solver::Mesh mesh_of(const Scenario& s);
solver::ModelOptions model_options(const Scenario& s, int workers);

/// Square element of side 1000 mm cut by a circular void of radius 1200 mm
/// centred at its lower-left corner.
Scenario single_cut_element();

/// Quarter of a 200 x 200 mm plate with a central hole of radius 70 mm, 2 x 2 elements.
Scenario plate_with_hole();

/// 200 x 2 mm aluminium strip with 200 x 2 elements; the last column holds a
/// fraction chi of material.
Scenario rect_waveguide(double chi = 0.05);

/// The strip shortened to 50 elements. The run ends once the first S0 packet
/// has passed the probe.
Scenario rect_waveguide_short(double chi = 0.05);

/// Geometry-conforming mesh of a rectangular waveguide: the physical length
/// is meshed exactly with elements close to the original size.
Scenario conforming_counterpart(const Scenario& rect);

/// 600 x 5 mm plate with 13 interior holes of radius r_circ and 24 surface
/// notches of radius r_semi, 480 x 4 elements.
Scenario porous_waveguide(double r_circ = 1.0, double r_semi = 1.0);

std::vector<std::string> builtin_names();
/// Throws std::invalid_argument for unknown names.
Scenario builtin(const std::string& name);

struct ProbeHistory {
    std::string name;
    std::vector<double> ux;  ///< m
    std::vector<double> uy;
};

struct RunResult {
    std::vector<double> t;  ///< s, one entry per completed step
    std::vector<ProbeHistory> probes;
    double dt_cr = 0.0;
    long steps = 0;
    std::vector<double> cut_chi;
    Eigen::Index n_dof = 0;
};

/// Explicit CDM run from rest. `progress` (if set) receives the step index.
RunResult simulate(const Scenario& s, int workers, bool compute_dt_cr = true,
                   const std::function<void(long)>& progress = {});

}  // namespace scm::scenarios
