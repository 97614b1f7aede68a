#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <fstream>

#include "scm/cli.hpp"
#include "scm/linalg.hpp"
#include "scm/parallel.hpp"

namespace scm::cli {

using scenarios::Scenario;

namespace {

evs::EvsConfig evs_of(const Scenario& base, const Method& m) {
    evs::EvsConfig c = evs::variant(m.code, base.evs.eps_S, base.evs.eps_lambda);
    c.factor_law = base.evs.factor_law;
    c.law_beta = base.evs.law_beta;
    c.law_n_epsS = base.evs.law_n_epsS;
    c.law_mat_beta = base.evs.law_mat_beta;
    c.rbm_criterion = base.evs.rbm_criterion;
    c.rbm_norm_threshold = base.evs.rbm_norm_threshold;
    if (m.alpha0) c.alpha0 = *m.alpha0;
    return c;
}

Scenario cell(const Scenario& base, int p, const Method& m) {
    Scenario s = base;
    s.p = p;
    s.evs = evs_of(base, m);
    return s;
}

solver::Model model_of(const Scenario& s, int workers) {
    return solver::build_model(scenarios::mesh_of(s), s.domain, scenarios::model_options(s, workers));
}

int inner_workers(int workers, std::size_t cells) {
    return std::max(1, workers / static_cast<int>(std::max<std::size_t>(cells, 1)));
}

/// Spectral norm of a symmetric positive semidefinite operator.
double norm_psd(const std::function<void(const linalg::Vector&, linalg::Vector&)>& op, Eigen::Index n) {
    return linalg::lanczos_max(op, n, 1e-10, 400);
}

Summary conditioning_of(const solver::Model& model, long dense_limit) {
    Summary out;
    const Eigen::Index n = model.n_free();
    out.n_dof = n;
    for (const auto& e : model.elements)
        if (e.cut) out.chi.push_back(e.chi);
    if (n == 0) return out;
    const linalg::Vector x = linalg::Vector::Ones(n);
    if (n <= dense_limit) {
        const auto K = model.dense_K();
        const auto M = model.dense_M();
        out.kappa_inv_K = linalg::cond_inv(K);
        out.kappa_inv_M = linalg::cond_inv(M);
        out.kappa_mvp_K = linalg::cond_mvp(K, x);
        out.kappa_mvp_M = linalg::cond_mvp(M, x);
        return out;
    }
    linalg::Vector Kx(n);
    model.apply_K(x, Kx);
    const double nK = norm_psd([&](const linalg::Vector& u, linalg::Vector& f) { model.apply_K(u, f); }, n);
    out.kappa_mvp_K = Kx.norm() > 0.0 ? nK * x.norm() / Kx.norm() : linalg::kInfinity;
    if (model.mass_diagonal) {
        const auto a = model.M_diag.cwiseAbs();
        out.kappa_inv_M = a.minCoeff() > 1e-300 ? a.maxCoeff() / a.minCoeff() : linalg::kInfinity;
        const linalg::Vector Mx = model.M_diag.cwiseProduct(x);
        out.kappa_mvp_M = a.maxCoeff() * x.norm() / Mx.norm();
    } else {
        const double nM = norm_psd([&](const linalg::Vector& u, linalg::Vector& f) { f = model.M_sparse * u; }, n);
        const linalg::Vector Mx = model.M_sparse * x;
        out.kappa_mvp_M = nM * x.norm() / Mx.norm();
    }
    return out;
}

const scenarios::ProbeHistory& probe_named(const scenarios::RunResult& r, const std::string& name) {
    for (const auto& p : r.probes)
        if (p.name == name) return p;
    throw std::invalid_argument("no probe named '" + name + "'");
}

}  // namespace

Summary conditioning(const Scenario& s, int workers, long dense_limit) {
    const auto model = model_of(s, workers);
    Summary out = conditioning_of(model, dense_limit);
    out.scenario = s.name;
    return out;
}

DtcrTable dtcr_table(const Scenario& base, const std::vector<int>& p_values, const std::vector<Method>& methods,
                     int workers) {
    DtcrTable t;
    t.p_values = p_values;
    t.methods = methods;
    // The normalization column is computed even if 0e is not requested.
    std::vector<Method> all = methods;
    const Method ref{"0e", {}};
    std::size_t ref_index = std::find(all.begin(), all.end(), ref) - all.begin();
    if (ref_index == all.size()) all.push_back(ref);

    const std::size_t np = p_values.size();
    std::vector<double> values(all.size() * np, 0.0);
    const int inner = inner_workers(workers, values.size());
    parallel_for(values.size(), workers, [&](std::size_t i) {
        const Scenario s = cell(base, p_values[i % np], all[i / np]);
        const auto model = model_of(s, inner);
        values[i] = solver::critical_dt(solver::system_of(model));
    });
    for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<double> raw(np), norm(np);
        for (std::size_t j = 0; j < np; ++j) {
            raw[j] = values[m * np + j];
            norm[j] = raw[j] / values[ref_index * np + j];
        }
        t.dt_cr.push_back(std::move(raw));
        t.normalized.push_back(std::move(norm));
    }
    return t;
}

std::vector<KappaRow> kappa_table(const Scenario& base, const std::vector<int>& p_values,
                                  const std::vector<Method>& methods, int workers) {
    std::vector<KappaRow> rows(p_values.size() * methods.size());
    const int inner = inner_workers(workers, rows.size());
    parallel_for(rows.size(), workers, [&](std::size_t i) {
        auto& r = rows[i];
        r.p = p_values[i / methods.size()];
        r.method = methods[i % methods.size()];
        const auto model = model_of(cell(base, r.p, r.method), inner);
        if (model.n_free() > 4000)
            throw std::invalid_argument("kappa-table: " + std::to_string(model.n_free()) +
                                        " DOFs is too large for a dense condition number");
        const auto c = conditioning_of(model, 4000);
        r.kappa_inv_K = *c.kappa_inv_K;
        r.kappa_inv_M = *c.kappa_inv_M;
        r.kappa_mvp_K = c.kappa_mvp_K;
        r.kappa_mvp_M = c.kappa_mvp_M;
    });
    return rows;
}

std::vector<SweepRow> p_sweep(const Scenario& base, const SweepSpec& spec, int workers) {
    Scenario ref = spec.conforming_reference ? scenarios::conforming_counterpart(base) : base;
    ref.p = spec.ref_p;
    ref.dt = base.dt / spec.ref_dt_divisor;
    const auto ref_run = scenarios::simulate(ref, workers, false);
    const auto& ref_probe = probe_named(ref_run, spec.probe);
    const auto& u_ref = spec.component == 0 ? ref_probe.ux : ref_probe.uy;

    std::vector<SweepRow> rows(spec.p_values.size() * spec.methods.size());
    const int inner = inner_workers(workers, rows.size());
    parallel_for(rows.size(), workers, [&](std::size_t i) {
        auto& r = rows[i];
        r.p = spec.p_values[i / spec.methods.size()];
        r.method = spec.methods[i % spec.methods.size()];
        const auto run = scenarios::simulate(cell(base, r.p, r.method), inner, true);
        const auto& pr = probe_named(run, spec.probe);
        r.e_L2 = scenarios::l2_error(ref_run.t, u_ref, run.t, spec.component == 0 ? pr.ux : pr.uy);
        r.dt_cr = run.dt_cr;
    });
    return rows;
}

namespace {

void emit_opt(YAML::Emitter& out, const std::optional<double>& v) {
    if (v)
        out << format_double(*v);
    else
        out << YAML::Null;
}

void write_summary(const std::filesystem::path& path, const Summary& s) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "scenario" << YAML::Value << s.scenario;
    out << YAML::Key << "dt_cr_s" << YAML::Value << format_double(s.dt_cr);
    out << YAML::Key << "kappa_inv_K" << YAML::Value;
    emit_opt(out, s.kappa_inv_K);
    out << YAML::Key << "kappa_inv_M" << YAML::Value;
    emit_opt(out, s.kappa_inv_M);
    out << YAML::Key << "kappa_mvp_K" << YAML::Value << format_double(s.kappa_mvp_K);
    out << YAML::Key << "kappa_mvp_M" << YAML::Value << format_double(s.kappa_mvp_M);
    out << YAML::Key << "n_dof" << YAML::Value << s.n_dof;
    out << YAML::Key << "steps" << YAML::Value << s.steps;
    out << YAML::Key << "cut_elements" << YAML::Value << s.chi.size();
    out << YAML::Key << "chi" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double c : s.chi) out << format_double(c);
    out << YAML::EndSeq;
    out << YAML::Key << "runtime_s" << YAML::Value << format_double(s.runtime_s);
    out << YAML::EndMap;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << out.c_str() << '\n';
}

}  // namespace

Artifacts run(const RunConfig& cfg, int workers) {
    Artifacts art;
    const auto& dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    const Scenario& s = cfg.scenario;
    auto emit = [&](const std::string& name, const Csv& csv) {
        write_csv(dir / name, csv);
        art.files.push_back(dir / name);
    };

    switch (cfg.study) {
        case Study::SingleRun: {
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = scenarios::simulate(s, workers, true);
            Summary sum = conditioning(s, workers);
            sum.dt_cr = res.dt_cr;
            sum.steps = res.steps;
            sum.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            for (const auto& p : res.probes) {
                Csv csv{{"t_s", "ux_m", "uy_m"}, {}};
                csv.rows.reserve(res.t.size());
                for (std::size_t i = 0; i < res.t.size(); ++i)
                    csv.rows.push_back({format_double(res.t[i]), format_double(p.ux[i]), format_double(p.uy[i])});
                emit(p.name + ".csv", csv);
            }
            write_summary(dir / "summary.yaml", sum);
            art.files.push_back(dir / "summary.yaml");
            break;
        }
        case Study::DtcrTable: {
            const auto t = dtcr_table(s, cfg.sweep.p_values, cfg.sweep.methods, workers);
            Csv norm{{"variant"}, {}};
            Csv raw{{"variant"}, {}};
            for (int p : t.p_values) {
                norm.header.push_back("p" + std::to_string(p));
                raw.header.push_back("p" + std::to_string(p) + "_s");
            }
            for (std::size_t m = 0; m < t.methods.size(); ++m) {
                std::vector<std::string> a{to_string(t.methods[m])}, b{to_string(t.methods[m])};
                for (std::size_t j = 0; j < t.p_values.size(); ++j) {
                    a.push_back(format_double(t.normalized[m][j]));
                    b.push_back(format_double(t.dt_cr[m][j]));
                }
                norm.rows.push_back(std::move(a));
                raw.rows.push_back(std::move(b));
            }
            emit("dtcr_table.csv", norm);
            emit("dtcr_raw.csv", raw);
            break;
        }
        case Study::KappaTable: {
            const auto rows = kappa_table(s, cfg.sweep.p_values, cfg.sweep.methods, workers);
            Csv K{{"p"}, {}};
            Csv M{{"p"}, {}};
            Csv all{{"p", "variant", "kappa_inv_K", "kappa_inv_M", "kappa_mvp_K", "kappa_mvp_M"}, {}};
            for (const auto& m : cfg.sweep.methods) {
                K.header.push_back(to_string(m));
                M.header.push_back(to_string(m));
            }
            const std::size_t nm = cfg.sweep.methods.size();
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& r = rows[i];
                if (i % nm == 0) {
                    K.rows.push_back({std::to_string(r.p)});
                    M.rows.push_back({std::to_string(r.p)});
                }
                K.rows.back().push_back(format_double(r.kappa_inv_K));
                M.rows.back().push_back(format_double(r.kappa_inv_M));
                all.rows.push_back({std::to_string(r.p), to_string(r.method), format_double(r.kappa_inv_K),
                                    format_double(r.kappa_inv_M), format_double(r.kappa_mvp_K),
                                    format_double(r.kappa_mvp_M)});
            }
            emit("kappa_K.csv", K);
            emit("kappa_M.csv", M);
            emit("kappa_all.csv", all);
            break;
        }
        case Study::PSweep: {
            const auto rows = p_sweep(s, cfg.sweep, workers);
            Csv csv{{"p", "variant", "e_L2_percent", "dt_cr_s"}, {}};
            for (const auto& r : rows)
                csv.rows.push_back(
                    {std::to_string(r.p), to_string(r.method), format_double(r.e_L2), format_double(r.dt_cr)});
            emit("p_sweep.csv", csv);
            break;
        }
    }
    return art;
}

}  // namespace scm::cli
