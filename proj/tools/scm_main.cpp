// scm: spectral cell method driver.
//
//   scm run <config>              study given in the config (default single-run)
//   scm sweep <config>            p-sweep of the e_L2 error and dt_cr
//   scm tables dtcr|kappa <config>
//   scm plot <csv> [-o out.svg]
//   scm list                      builtin scenario names
//   scm show <name|config>        resolved scenario as YAML
//
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 divergence, 4 singular mass.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "scm/cli.hpp"
#include "scm/parallel.hpp"

namespace {

using scm::cli::ConfigError;

struct CliOverrides {
    std::optional<int> p;
    std::optional<int> k;
    std::optional<std::string> variant;
    std::optional<double> eps_S;
    std::optional<double> eps_lambda;
    std::optional<double> alpha0;
    std::optional<double> dt;
    std::string out;
};

void add_override_flags(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--p", o.p, "polynomial order")->check(CLI::Range(1, 10));
    cmd->add_option("--k", o.k, "quadtree depth")->check(CLI::Range(0, 16));
    cmd->add_option("--variant", o.variant, "stabilization variant code (0a .. 3l)");
    cmd->add_option("--eps-S", o.eps_S, "stabilization parameter")->check(CLI::NonNegativeNumber);
    cmd->add_option("--eps-lambda", o.eps_lambda, "eigenvalue threshold")->check(CLI::NonNegativeNumber);
    cmd->add_option("--alpha0", o.alpha0, "fictitious-domain indicator")->check(CLI::NonNegativeNumber);
    cmd->add_option("--dt", o.dt, "time step in s")->check(CLI::PositiveNumber);
    cmd->add_option("-o,--out", o.out, "output directory");
}

scm::cli::RunConfig load(const std::string& path, const CliOverrides& o, std::optional<scm::cli::Study> study) {
    auto cfg = scm::cli::load_config(path, study);
    scm::cli::Overrides ov;
    ov.p = o.p;
    ov.k = o.k;
    if (o.variant) {
        try {
            scm::cli::parse_method(*o.variant);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(0, e.what());
        }
        ov.variant = o.variant;
    }
    ov.eps_S = o.eps_S;
    ov.eps_lambda = o.eps_lambda;
    ov.alpha0 = o.alpha0;
    ov.dt = o.dt;
    scm::cli::apply_overrides(cfg.scenario, ov);
    if (!o.out.empty()) cfg.output_dir = o.out;
    return cfg;
}

int execute(scm::cli::RunConfig cfg) {
    const int workers = scm::worker_count();
    std::cerr << "scm: " << cfg.scenario.name << ", study " << scm::cli::to_string(cfg.study) << ", p " << cfg.scenario.p
              << ", " << workers << " worker(s)\n";
    const auto art = scm::cli::run(cfg, workers);
    for (const auto& f : art.files) std::cout << f.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral cell method with eigenvalue stabilization for explicit dynamics"};
    app.require_subcommand(1);

    CliOverrides o;
    std::string config;

    auto* run = app.add_subcommand("run", "run the study described in a config file");
    run->add_option("config", config, "YAML config")->required();
    add_override_flags(run, o);

    auto* sweep = app.add_subcommand("sweep", "p-sweep of e_L2 and dt_cr against a refined reference");
    sweep->add_option("config", config, "YAML config")->required();
    add_override_flags(sweep, o);

    std::string table_kind;
    auto* tables = app.add_subcommand("tables", "normalized dt_cr or condition-number tables");
    tables->add_option("kind", table_kind, "dtcr or kappa")->required()->check(CLI::IsMember({"dtcr", "kappa"}));
    tables->add_option("config", config, "YAML config")->required();
    add_override_flags(tables, o);

    std::string csv_path, svg_path, title;
    auto* plot = app.add_subcommand("plot", "render a CSV produced by run as SVG");
    plot->add_option("csv", csv_path, "input CSV")->required();
    plot->add_option("-o,--output", svg_path, "output SVG (default: input with .svg)");
    plot->add_option("--title", title, "figure title");

    auto* list = app.add_subcommand("list", "list builtin scenarios");

    std::string show_what;
    auto* show = app.add_subcommand("show", "print a builtin scenario or a config's resolved scenario as YAML");
    show->add_option("what", show_what, "builtin name or config path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*list) {
            for (const auto& n : scm::scenarios::builtin_names()) std::cout << n << '\n';
            return 0;
        }
        if (*show) {
            const auto names = scm::scenarios::builtin_names();
            if (std::find(names.begin(), names.end(), show_what) != names.end())
                std::cout << scm::cli::scenario_to_yaml(scm::scenarios::builtin(show_what));
            else
                std::cout << scm::cli::scenario_to_yaml(scm::cli::load_config(show_what).scenario);
            return 0;
        }
        if (*plot) {
            const auto csv = scm::cli::read_csv(csv_path);
            const std::string out =
                svg_path.empty() ? std::filesystem::path(csv_path).replace_extension(".svg").string() : svg_path;
            std::ofstream f(out);
            if (!f) throw std::runtime_error("cannot write '" + out + "'");
            f << scm::cli::plot_svg(csv, title);
            std::cout << out << '\n';
            return 0;
        }
        std::optional<scm::cli::Study> study;
        if (*sweep) study = scm::cli::Study::PSweep;
        if (*tables) study = table_kind == "dtcr" ? scm::cli::Study::DtcrTable : scm::cli::Study::KappaTable;
        return execute(load(config, o, study));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const scm::solver::Divergence& e) {
        std::cerr << "divergence at step " << e.step() << ": " << e.what() << '\n';
        return 3;
    } catch (const scm::solver::SingularMass& e) {
        std::cerr << "singular mass at DOF " << e.dof() << ": " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
