#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "scm/cli.hpp"

namespace scm::cli {

using scenarios::Scenario;

std::string to_string(Study s) {
    switch (s) {
        case Study::SingleRun:
            return "single-run";
        case Study::DtcrTable:
            return "dtcr-table";
        case Study::KappaTable:
            return "kappa-table";
        case Study::PSweep:
            return "p-sweep";
    }
    return "single-run";
}

Study parse_study(const std::string& s) {
    if (s == "single-run") return Study::SingleRun;
    if (s == "dtcr-table") return Study::DtcrTable;
    if (s == "kappa-table") return Study::KappaTable;
    if (s == "p-sweep") return Study::PSweep;
    throw std::invalid_argument("study must be single-run, dtcr-table, kappa-table or p-sweep, got '" + s + "'");
}

namespace {

bool known_variant(const std::string& code) {
    const auto& all = evs::all_variant_codes();
    return std::find(all.begin(), all.end(), code) != all.end();
}

}  // namespace

Method parse_method(const std::string& s) {
    Method m;
    const auto at = s.find('@');
    m.code = s.substr(0, at);
    if (!known_variant(m.code)) throw std::invalid_argument("unknown variant code '" + m.code + "'");
    if (at != std::string::npos) {
        const std::string a = s.substr(at + 1);
        double v = 0.0;
        const auto r = std::from_chars(a.data(), a.data() + a.size(), v);
        if (r.ec != std::errc() || r.ptr != a.data() + a.size() || v < 0.0)
            throw std::invalid_argument("bad alpha_0 in method '" + s + "'");
        m.alpha0 = v;
    }
    return m;
}

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

std::string to_string(const Method& m) { return m.alpha0 ? m.code + "@" + shortest(*m.alpha0) : m.code; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// YAML reading

namespace {

int line_of(const YAML::Node& n) {
    const auto m = n.Mark();
    return m.is_null() ? 0 : m.line + 1;
}

template <class T>
const char* type_name() {
    if constexpr (std::is_same_v<T, int>) return "an integer";
    if constexpr (std::is_same_v<T, double>) return "a number";
    if constexpr (std::is_same_v<T, bool>) return "true or false";
    return "a string";
}

template <class T>
T as(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) throw ConfigError(line_of(n), what + ": expected " + type_name<T>());
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(line_of(n), what + ": expected " + type_name<T>() + ", got '" + n.Scalar() + "'");
    }
}

void check_keys(const YAML::Node& n, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!n.IsMap()) throw ConfigError(line_of(n), where + ": expected a mapping");
    for (const auto& kv : n) {
        const auto key = kv.first.Scalar();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ConfigError(line_of(kv.first), where + ": unknown key '" + key + "'");
    }
}

YAML::Node required(const YAML::Node& parent, const char* key, const std::string& where) {
    const YAML::Node n = parent[key];
    if (!n) throw ConfigError(line_of(parent), where + ": missing '" + key + "'");
    return n;
}

geometry::Point point(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence() || n.size() != 2) throw ConfigError(line_of(n), what + ": expected [x, y]");
    return {as<double>(n[0], what), as<double>(n[1], what)};
}

std::vector<solver::Segment> segments(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence() || n.size() == 0) throw ConfigError(line_of(n), what + ": expected a list of [length, n]");
    std::vector<solver::Segment> out;
    for (const auto& s : n) {
        if (!s.IsSequence() || s.size() != 2) throw ConfigError(line_of(s), what + ": expected [length, n]");
        solver::Segment seg{as<double>(s[0], what), as<int>(s[1], what)};
        if (!(seg.length > 0.0) || seg.n < 1)
            throw ConfigError(line_of(s), what + ": need a positive length and at least one element");
        out.push_back(seg);
    }
    return out;
}

int axis_of(const YAML::Node& n, const std::string& what) {
    const auto s = as<std::string>(n, what);
    if (s == "x") return 0;
    if (s == "y") return 1;
    throw ConfigError(line_of(n), what + ": expected x or y, got '" + s + "'");
}

int component_of(const YAML::Node& n, const std::string& what) {
    const auto s = as<std::string>(n, what);
    if (s == "ux") return 0;
    if (s == "uy") return 1;
    throw ConfigError(line_of(n), what + ": expected ux or uy, got '" + s + "'");
}

template <class F>
auto enum_of(const YAML::Node& n, const std::string& what, F parse) {
    try {
        return parse(as<std::string>(n, what));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(line_of(n), e.what());
    }
}

geometry::Primitive primitive(const YAML::Node& n) {
    const std::string where = "geometry";
    check_keys(n, {"shape", "sense", "min", "max", "center", "radius", "normal", "offset"}, where);
    geometry::Primitive prim;
    const auto sense = as<std::string>(required(n, "sense", where), "sense");
    if (sense == "solid")
        prim.sense = geometry::Sense::Solid;
    else if (sense == "void")
        prim.sense = geometry::Sense::Void;
    else
        throw ConfigError(line_of(n["sense"]), "sense: expected solid or void, got '" + sense + "'");
    const auto shape = as<std::string>(required(n, "shape", where), "shape");
    if (shape == "rect") {
        geometry::Rect r{point(required(n, "min", where), "min"), point(required(n, "max", where), "max")};
        if (!(r.max.x > r.min.x && r.max.y > r.min.y)) throw ConfigError(line_of(n), "rect: max must exceed min");
        prim.shape = r;
    } else if (shape == "circle") {
        geometry::Circle c{point(required(n, "center", where), "center"),
                           as<double>(required(n, "radius", where), "radius")};
        if (!(c.radius > 0.0)) throw ConfigError(line_of(n["radius"]), "radius must be positive");
        prim.shape = c;
    } else if (shape == "half_plane") {
        const auto nn = point(required(n, "normal", where), "normal");
        if (nn.x == 0.0 && nn.y == 0.0) throw ConfigError(line_of(n["normal"]), "normal must be nonzero");
        prim.shape = geometry::HalfPlane{nn.x, nn.y, as<double>(required(n, "offset", where), "offset")};
    } else {
        throw ConfigError(line_of(n["shape"]), "shape: expected rect, circle or half_plane, got '" + shape + "'");
    }
    return prim;
}

element::Material material(const YAML::Node& n) {
    check_keys(n, {"E", "nu", "rho", "state"}, "material");
    element::Material m;
    m.E = as<double>(required(n, "E", "material"), "E");
    m.nu = as<double>(required(n, "nu", "material"), "nu");
    m.rho = as<double>(required(n, "rho", "material"), "rho");
    const auto st = as<std::string>(required(n, "state", "material"), "state");
    if (st == "plane_stress")
        m.state = element::PlaneState::PlaneStress;
    else if (st == "plane_strain")
        m.state = element::PlaneState::PlaneStrain;
    else
        throw ConfigError(line_of(n["state"]), "state: expected plane_stress or plane_strain, got '" + st + "'");
    try {
        element::validate(m);
    } catch (const std::exception& e) {
        throw ConfigError(line_of(n), e.what());
    }
    return m;
}

evs::EvsConfig evs_config(const YAML::Node& n) {
    const std::string where = "evs";
    check_keys(n,
               {"variant", "stabilize_K", "stabilize_M", "eig_basis_M", "lump_Ms", "lump_Mc", "alpha0", "eps_S",
                "eps_lambda", "factor_law", "law_beta", "law_n_epsS", "law_mat_beta", "rbm_criterion",
                "rbm_norm_threshold"},
               where);
    evs::EvsConfig c;
    if (n["eps_S"]) c.eps_S = as<double>(n["eps_S"], "eps_S");
    if (n["eps_lambda"]) c.eps_lambda = as<double>(n["eps_lambda"], "eps_lambda");
    if (n["variant"]) {
        const auto code = as<std::string>(n["variant"], "variant");
        if (!known_variant(code)) throw ConfigError(line_of(n["variant"]), "unknown variant code '" + code + "'");
        c = evs::variant(code, c.eps_S, c.eps_lambda);
    }
    if (n["stabilize_K"]) c.stabilize_K = as<bool>(n["stabilize_K"], "stabilize_K");
    if (n["stabilize_M"]) c.stabilize_M = as<bool>(n["stabilize_M"], "stabilize_M");
    if (n["eig_basis_M"]) c.eig_basis_M = enum_of(n["eig_basis_M"], "eig_basis_M", evs::parse_eig_basis);
    if (n["lump_Ms"]) c.lump_Ms = enum_of(n["lump_Ms"], "lump_Ms", evs::parse_lump_scheme);
    if (n["lump_Mc"]) c.lump_Mc = as<bool>(n["lump_Mc"], "lump_Mc");
    if (n["alpha0"]) c.alpha0 = as<double>(n["alpha0"], "alpha0");
    if (n["factor_law"]) c.factor_law = enum_of(n["factor_law"], "factor_law", evs::parse_factor_law);
    if (n["law_beta"]) c.law_beta = as<double>(n["law_beta"], "law_beta");
    if (n["law_n_epsS"]) c.law_n_epsS = as<double>(n["law_n_epsS"], "law_n_epsS");
    if (n["law_mat_beta"]) c.law_mat_beta = as<double>(n["law_mat_beta"], "law_mat_beta");
    if (n["rbm_criterion"]) c.rbm_criterion = enum_of(n["rbm_criterion"], "rbm_criterion", evs::parse_rbm_criterion);
    if (n["rbm_norm_threshold"]) c.rbm_norm_threshold = as<double>(n["rbm_norm_threshold"], "rbm_norm_threshold");
    if (c.alpha0 < 0.0 || c.eps_S < 0.0 || c.eps_lambda < 0.0)
        throw ConfigError(line_of(n), "evs: alpha0, eps_S and eps_lambda must be nonnegative");
    return c;
}

Scenario scenario_node(const YAML::Node& n) {
    const std::string where = "scenario";
    check_keys(n,
               {"name", "mesh", "geometry", "p", "k", "material", "dirichlet", "loads", "probes", "dt", "t_end", "evs",
                "damping"},
               where);
    Scenario s;
    s.name = as<std::string>(required(n, "name", where), "name");

    const auto mesh = required(n, "mesh", where);
    check_keys(mesh, {"origin", "x_segments", "y_segments"}, "mesh");
    if (mesh["origin"]) {
        const auto o = point(mesh["origin"], "origin");
        s.x0 = o.x;
        s.y0 = o.y;
    }
    s.xs = segments(required(mesh, "x_segments", "mesh"), "x_segments");
    s.ys = segments(required(mesh, "y_segments", "mesh"), "y_segments");

    if (const auto g = n["geometry"]) {
        if (!g.IsSequence()) throw ConfigError(line_of(g), "geometry: expected a list of primitives");
        for (const auto& p : g) s.domain.primitives.push_back(primitive(p));
    }
    s.p = as<int>(required(n, "p", where), "p");
    if (s.p < 1 || s.p > 10) throw ConfigError(line_of(n["p"]), "p must lie in [1, 10]");
    s.k = as<int>(required(n, "k", where), "k");
    if (s.k < 0 || s.k > 16) throw ConfigError(line_of(n["k"]), "k must lie in [0, 16]");
    s.material = material(required(n, "material", where));

    if (const auto d = n["dirichlet"]) {
        if (!d.IsSequence()) throw ConfigError(line_of(d), "dirichlet: expected a list");
        for (const auto& e : d) {
            check_keys(e, {"axis", "coord", "component"}, "dirichlet");
            s.dirichlet.push_back({axis_of(required(e, "axis", "dirichlet"), "axis"),
                                   as<double>(required(e, "coord", "dirichlet"), "coord"),
                                   component_of(required(e, "component", "dirichlet"), "component")});
        }
    }
    if (const auto l = n["loads"]) {
        if (!l.IsSequence()) throw ConfigError(line_of(l), "loads: expected a list");
        for (const auto& e : l) {
            check_keys(e, {"at", "direction", "F_bar", "f_c", "cycles"}, "loads");
            scenarios::PointLoad pl;
            pl.at = point(required(e, "at", "loads"), "at");
            pl.direction = point(required(e, "direction", "loads"), "direction");
            pl.signal.F_bar = as<double>(required(e, "F_bar", "loads"), "F_bar");
            pl.signal.f_c = as<double>(required(e, "f_c", "loads"), "f_c");
            pl.signal.n = as<int>(required(e, "cycles", "loads"), "cycles");
            if (!(pl.signal.f_c > 0.0) || pl.signal.n < 1)
                throw ConfigError(line_of(e), "loads: need f_c > 0 and at least one cycle");
            s.loads.push_back(pl);
        }
    }
    if (const auto pr = n["probes"]) {
        if (!pr.IsSequence()) throw ConfigError(line_of(pr), "probes: expected a list");
        for (const auto& e : pr) {
            check_keys(e, {"name", "at"}, "probes");
            s.probes.push_back(
                {as<std::string>(required(e, "name", "probes"), "name"), point(required(e, "at", "probes"), "at")});
        }
    }
    if (n["dt"]) s.dt = as<double>(n["dt"], "dt");
    if (!(s.dt > 0.0)) throw ConfigError(line_of(n["dt"]), "dt must be positive");
    if (n["t_end"]) s.t_end = as<double>(n["t_end"], "t_end");
    if (s.t_end < 0.0) throw ConfigError(line_of(n["t_end"]), "t_end must be nonnegative");
    if (n["evs"]) s.evs = evs_config(n["evs"]);
    if (const auto d = n["damping"]) {
        check_keys(d, {"alpha_R", "beta_R"}, "damping");
        if (d["alpha_R"]) s.damping.alpha_R = as<double>(d["alpha_R"], "alpha_R");
        if (d["beta_R"]) s.damping.beta_R = as<double>(d["beta_R"], "beta_R");
        if (s.damping.alpha_R < 0.0 || s.damping.beta_R < 0.0)
            throw ConfigError(line_of(d), "damping coefficients must be nonnegative");
    }
    return s;
}

YAML::Node parse_yaml(const std::string& text) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
    }
}

// ---------------------------------------------------------------------------
// YAML writing

void emit_point(YAML::Emitter& out, geometry::Point p) {
    out << YAML::Flow << YAML::BeginSeq << shortest(p.x) << shortest(p.y) << YAML::EndSeq;
}

void emit_segments(YAML::Emitter& out, const std::vector<solver::Segment>& segs) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& s : segs) out << YAML::Flow << YAML::BeginSeq << shortest(s.length) << s.n << YAML::EndSeq;
    out << YAML::EndSeq;
}

void emit_scenario(YAML::Emitter& out, const Scenario& s) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    out << YAML::Key << "mesh" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "origin" << YAML::Value;
    emit_point(out, {s.x0, s.y0});
    out << YAML::Key << "x_segments" << YAML::Value;
    emit_segments(out, s.xs);
    out << YAML::Key << "y_segments" << YAML::Value;
    emit_segments(out, s.ys);
    out << YAML::EndMap;

    out << YAML::Key << "geometry" << YAML::Value << YAML::BeginSeq;
    for (const auto& prim : s.domain.primitives) {
        out << YAML::Flow << YAML::BeginMap;
        if (const auto* r = std::get_if<geometry::Rect>(&prim.shape)) {
            out << YAML::Key << "shape" << YAML::Value << "rect";
            out << YAML::Key << "sense" << YAML::Value << (prim.sense == geometry::Sense::Solid ? "solid" : "void");
            out << YAML::Key << "min" << YAML::Value;
            emit_point(out, r->min);
            out << YAML::Key << "max" << YAML::Value;
            emit_point(out, r->max);
        } else if (const auto* c = std::get_if<geometry::Circle>(&prim.shape)) {
            out << YAML::Key << "shape" << YAML::Value << "circle";
            out << YAML::Key << "sense" << YAML::Value << (prim.sense == geometry::Sense::Solid ? "solid" : "void");
            out << YAML::Key << "center" << YAML::Value;
            emit_point(out, c->center);
            out << YAML::Key << "radius" << YAML::Value << shortest(c->radius);
        } else {
            const auto& h = std::get<geometry::HalfPlane>(prim.shape);
            out << YAML::Key << "shape" << YAML::Value << "half_plane";
            out << YAML::Key << "sense" << YAML::Value << (prim.sense == geometry::Sense::Solid ? "solid" : "void");
            out << YAML::Key << "normal" << YAML::Value;
            emit_point(out, {h.nx, h.ny});
            out << YAML::Key << "offset" << YAML::Value << shortest(h.offset);
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "p" << YAML::Value << s.p;
    out << YAML::Key << "k" << YAML::Value << s.k;
    out << YAML::Key << "material" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "E" << YAML::Value << shortest(s.material.E);
    out << YAML::Key << "nu" << YAML::Value << shortest(s.material.nu);
    out << YAML::Key << "rho" << YAML::Value << shortest(s.material.rho);
    out << YAML::Key << "state" << YAML::Value
        << (s.material.state == element::PlaneState::PlaneStress ? "plane_stress" : "plane_strain");
    out << YAML::EndMap;

    out << YAML::Key << "dirichlet" << YAML::Value << YAML::BeginSeq;
    for (const auto& d : s.dirichlet) {
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "axis" << YAML::Value << (d.axis == 0 ? "x" : "y");
        out << YAML::Key << "coord" << YAML::Value << shortest(d.coord);
        out << YAML::Key << "component" << YAML::Value << (d.component == 0 ? "ux" : "uy");
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "loads" << YAML::Value << YAML::BeginSeq;
    for (const auto& l : s.loads) {
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "at" << YAML::Value;
        emit_point(out, l.at);
        out << YAML::Key << "direction" << YAML::Value;
        emit_point(out, l.direction);
        out << YAML::Key << "F_bar" << YAML::Value << shortest(l.signal.F_bar);
        out << YAML::Key << "f_c" << YAML::Value << shortest(l.signal.f_c);
        out << YAML::Key << "cycles" << YAML::Value << l.signal.n;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "probes" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : s.probes) {
        out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << p.name;
        out << YAML::Key << "at" << YAML::Value;
        emit_point(out, p.at);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "dt" << YAML::Value << shortest(s.dt);
    out << YAML::Key << "t_end" << YAML::Value << shortest(s.t_end);

    const auto& e = s.evs;
    out << YAML::Key << "evs" << YAML::Value << YAML::BeginMap;
    if (const auto code = evs::variant_code(e)) out << YAML::Key << "variant" << YAML::Value << *code;
    out << YAML::Key << "stabilize_K" << YAML::Value << e.stabilize_K;
    out << YAML::Key << "stabilize_M" << YAML::Value << e.stabilize_M;
    out << YAML::Key << "eig_basis_M" << YAML::Value << evs::to_string(e.eig_basis_M);
    out << YAML::Key << "lump_Ms" << YAML::Value << evs::to_string(e.lump_Ms);
    out << YAML::Key << "lump_Mc" << YAML::Value << e.lump_Mc;
    out << YAML::Key << "alpha0" << YAML::Value << shortest(e.alpha0);
    out << YAML::Key << "eps_S" << YAML::Value << shortest(e.eps_S);
    out << YAML::Key << "eps_lambda" << YAML::Value << shortest(e.eps_lambda);
    out << YAML::Key << "factor_law" << YAML::Value << evs::to_string(e.factor_law);
    out << YAML::Key << "law_beta" << YAML::Value << shortest(e.law_beta);
    out << YAML::Key << "law_n_epsS" << YAML::Value << shortest(e.law_n_epsS);
    out << YAML::Key << "law_mat_beta" << YAML::Value << shortest(e.law_mat_beta);
    out << YAML::Key << "rbm_criterion" << YAML::Value << evs::to_string(e.rbm_criterion);
    out << YAML::Key << "rbm_norm_threshold" << YAML::Value << shortest(e.rbm_norm_threshold);
    out << YAML::EndMap;

    out << YAML::Key << "damping" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "alpha_R" << YAML::Value << shortest(s.damping.alpha_R);
    out << YAML::Key << "beta_R" << YAML::Value << shortest(s.damping.beta_R);
    out << YAML::EndMap;
    out << YAML::EndMap;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Overrides overrides_node(const YAML::Node& n) {
    check_keys(n, {"p", "k", "variant", "eps_S", "eps_lambda", "alpha0", "dt"}, "overrides");
    Overrides o;
    if (n["p"]) {
        o.p = as<int>(n["p"], "p");
        if (*o.p < 1 || *o.p > 10) throw ConfigError(line_of(n["p"]), "p must lie in [1, 10]");
    }
    if (n["k"]) {
        o.k = as<int>(n["k"], "k");
        if (*o.k < 0 || *o.k > 16) throw ConfigError(line_of(n["k"]), "k must lie in [0, 16]");
    }
    if (n["variant"]) {
        o.variant = as<std::string>(n["variant"], "variant");
        if (!known_variant(*o.variant))
            throw ConfigError(line_of(n["variant"]), "unknown variant code '" + *o.variant + "'");
    }
    auto nonneg = [&](const char* key, std::optional<double>& dst) {
        if (!n[key]) return;
        dst = as<double>(n[key], key);
        if (*dst < 0.0) throw ConfigError(line_of(n[key]), std::string(key) + " must be nonnegative");
    };
    nonneg("eps_S", o.eps_S);
    nonneg("eps_lambda", o.eps_lambda);
    nonneg("alpha0", o.alpha0);
    if (n["dt"]) {
        o.dt = as<double>(n["dt"], "dt");
        if (!(*o.dt > 0.0)) throw ConfigError(line_of(n["dt"]), "dt must be positive");
    }
    return o;
}

std::vector<Method> default_methods(Study study, const Scenario& s) {
    switch (study) {
        case Study::KappaTable:
            return {{"0a", {}}, {"0c", {}}, {"0e", {}}, {"3b", {}}, {"3b", 1e-12}, {"3b", 1e-5}};
        case Study::DtcrTable: {
            std::vector<Method> m{{"0e", {}}};
            const auto code = evs::variant_code(s.evs);
            if (code && *code != "0e") m.push_back({*code, {}});
            return m;
        }
        default: {
            const auto code = evs::variant_code(s.evs);
            return {{code.value_or("0e"), {}}};
        }
    }
}

std::vector<int> default_p(Study study) {
    switch (study) {
        case Study::DtcrTable:
            return {1, 2, 3, 4, 5, 6, 7, 8};
        case Study::KappaTable:
            return {1, 2, 3, 4};
        default:
            return {3, 4, 5};
    }
}

}  // namespace

std::string scenario_to_yaml(const Scenario& s) {
    YAML::Emitter out;
    emit_scenario(out, s);
    return std::string(out.c_str()) + "\n";
}

Scenario scenario_from_yaml(const std::string& text) { return scenario_node(parse_yaml(text)); }

void apply_overrides(Scenario& s, const Overrides& o) {
    if (o.p) s.p = *o.p;
    if (o.k) s.k = *o.k;
    if (o.dt) s.dt = *o.dt;
    if (o.variant) {
        const auto keep = s.evs;
        s.evs = evs::variant(*o.variant, keep.eps_S, keep.eps_lambda);
        s.evs.factor_law = keep.factor_law;
        s.evs.law_beta = keep.law_beta;
        s.evs.law_n_epsS = keep.law_n_epsS;
        s.evs.law_mat_beta = keep.law_mat_beta;
        s.evs.rbm_criterion = keep.rbm_criterion;
        s.evs.rbm_norm_threshold = keep.rbm_norm_threshold;
    }
    if (o.eps_S) s.evs.eps_S = *o.eps_S;
    if (o.eps_lambda) s.evs.eps_lambda = *o.eps_lambda;
    if (o.alpha0) s.evs.alpha0 = *o.alpha0;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, std::optional<Study> study) {
    const YAML::Node root = parse_yaml(text);
    if (!root || root.IsNull()) throw ConfigError(0, "empty configuration");
    check_keys(root, {"scenario", "overrides", "output_dir", "study", "sweep"}, "config");
    RunConfig cfg;
    const auto sc = required(root, "scenario", "config");
    if (sc.IsMap()) {
        cfg.scenario_ref = "inline";
        cfg.scenario = scenario_node(sc);
    } else {
        cfg.scenario_ref = as<std::string>(sc, "scenario");
        const auto names = scenarios::builtin_names();
        if (std::find(names.begin(), names.end(), cfg.scenario_ref) != names.end()) {
            cfg.scenario = scenarios::builtin(cfg.scenario_ref);
        } else {
            const std::filesystem::path p = base_dir / cfg.scenario_ref;
            if (!std::filesystem::exists(p))
                throw ConfigError(line_of(sc), "scenario '" + cfg.scenario_ref + "' is neither a builtin nor a file");
            try {
                cfg.scenario = scenario_from_yaml(read_file(p));
            } catch (const ConfigError& e) {
                throw ConfigError(e.line(), p.string() + ": " + e.what());
            }
        }
    }
    if (root["overrides"]) cfg.overrides = overrides_node(root["overrides"]);
    apply_overrides(cfg.scenario, cfg.overrides);
    if (root["output_dir"]) cfg.output_dir = as<std::string>(root["output_dir"], "output_dir");
    if (root["study"]) {
        try {
            cfg.study = parse_study(as<std::string>(root["study"], "study"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(line_of(root["study"]), e.what());
        }
    }
    if (study) cfg.study = *study;

    cfg.sweep.p_values = default_p(cfg.study);
    cfg.sweep.methods = default_methods(cfg.study, cfg.scenario);
    if (const auto sw = root["sweep"]) {
        check_keys(sw, {"p", "methods", "reference", "probe", "component"}, "sweep");
        if (const auto p = sw["p"]) {
            if (!p.IsSequence() || p.size() == 0) throw ConfigError(line_of(p), "sweep.p: expected a list of orders");
            cfg.sweep.p_values.clear();
            for (const auto& v : p) {
                const int pv = as<int>(v, "sweep.p");
                if (pv < 1 || pv > 10) throw ConfigError(line_of(v), "sweep.p: orders must lie in [1, 10]");
                cfg.sweep.p_values.push_back(pv);
            }
        }
        if (const auto m = sw["methods"]) {
            if (!m.IsSequence() || m.size() == 0)
                throw ConfigError(line_of(m), "sweep.methods: expected a list of variant codes");
            cfg.sweep.methods.clear();
            for (const auto& v : m) {
                try {
                    cfg.sweep.methods.push_back(parse_method(as<std::string>(v, "sweep.methods")));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(line_of(v), e.what());
                }
            }
        }
        if (const auto r = sw["reference"]) {
            check_keys(r, {"p", "dt_divisor", "conforming"}, "sweep.reference");
            if (r["p"]) cfg.sweep.ref_p = as<int>(r["p"], "reference.p");
            if (r["dt_divisor"]) cfg.sweep.ref_dt_divisor = as<int>(r["dt_divisor"], "reference.dt_divisor");
            if (r["conforming"]) cfg.sweep.conforming_reference = as<bool>(r["conforming"], "reference.conforming");
            if (cfg.sweep.ref_p < 1 || cfg.sweep.ref_p > 10 || cfg.sweep.ref_dt_divisor < 1)
                throw ConfigError(line_of(r), "sweep.reference: need p in [1, 10] and dt_divisor >= 1");
        }
        if (sw["probe"]) cfg.sweep.probe = as<std::string>(sw["probe"], "sweep.probe");
        if (sw["component"]) cfg.sweep.component = component_of(sw["component"], "sweep.component");
    }
    if (cfg.study == Study::PSweep) {
        const auto& pr = cfg.scenario.probes;
        if (std::none_of(pr.begin(), pr.end(), [&](const auto& p) { return p.name == cfg.sweep.probe; }))
            throw ConfigError(root["sweep"] ? line_of(root["sweep"]) : 0,
                              "sweep.probe '" + cfg.sweep.probe + "' is not a probe of the scenario");
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<Study> study) {
    const auto text = read_file(path);
    try {
        return parse_config(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(),
                            study);
    } catch (const ConfigError& e) {
        throw ConfigError(e.line(), e.message(), path.string());
    }
}

std::string config_to_yaml(const RunConfig& cfg) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "scenario" << YAML::Value;
    emit_scenario(out, cfg.scenario);
    out << YAML::Key << "output_dir" << YAML::Value << cfg.output_dir.string();
    out << YAML::Key << "study" << YAML::Value << to_string(cfg.study);
    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "p" << YAML::Value << YAML::Flow << cfg.sweep.p_values;
    out << YAML::Key << "methods" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& m : cfg.sweep.methods) out << to_string(m);
    out << YAML::EndSeq;
    out << YAML::Key << "reference" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "p" << YAML::Value << cfg.sweep.ref_p;
    out << YAML::Key << "dt_divisor" << YAML::Value << cfg.sweep.ref_dt_divisor;
    out << YAML::Key << "conforming" << YAML::Value << cfg.sweep.conforming_reference;
    out << YAML::EndMap;
    out << YAML::Key << "probe" << YAML::Value << cfg.sweep.probe;
    out << YAML::Key << "component" << YAML::Value << (cfg.sweep.component == 0 ? "ux" : "uy");
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(const std::filesystem::path& path, const Csv& csv) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(csv.header);
    for (const auto& r : csv.rows) line(r);
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Csv read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    Csv csv;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            csv.header = std::move(cells);
            first = false;
        } else {
            csv.rows.push_back(std::move(cells));
        }
    }
    return csv;
}

}  // namespace scm::cli
