#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scm/scenarios.hpp"

namespace scm::cli {

/// Invalid configuration. `line` is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& what, const std::string& source = "")
        : std::runtime_error(compose(line, what, source)), line_(line), message_(what) {}
    int line() const { return line_; }
    /// The message without source and line prefix.
    const std::string& message() const { return message_; }

private:
    static std::string compose(int line, const std::string& what, const std::string& source) {
        std::string out = source.empty() ? "" : source + ": ";
        if (line > 0) out += "line " + std::to_string(line) + ": ";
        return out + what;
    }
    int line_;
    std::string message_;
};

enum class Study { SingleRun, DtcrTable, KappaTable, PSweep };

std::string to_string(Study s);
Study parse_study(const std::string& s);

struct Overrides {
    std::optional<int> p;
    std::optional<int> k;
    std::optional<std::string> variant;
    std::optional<double> eps_S;
    std::optional<double> eps_lambda;
    std::optional<double> alpha0;
    std::optional<double> dt;
    bool operator==(const Overrides&) const = default;
};

/// One column of a table study: a variant code, optionally with its alpha_0
/// replaced ("3b@1e-5").
struct Method {
    std::string code;
    std::optional<double> alpha0;
    bool operator==(const Method&) const = default;
};

Method parse_method(const std::string& s);
std::string to_string(const Method& m);

struct SweepSpec {
    std::vector<int> p_values;
    std::vector<Method> methods;
    int ref_p = 6;
    int ref_dt_divisor = 4;
    bool conforming_reference = true;
    std::string probe = "P1";
    int component = 0;  ///< 0 = u_x, 1 = u_y
    bool operator==(const SweepSpec&) const = default;
};

struct RunConfig {
    std::string scenario_ref;  ///< builtin name, file path or "inline"
    scenarios::Scenario scenario;  ///< resolved, overrides applied
    Overrides overrides;
    std::filesystem::path output_dir = "out";
    Study study = Study::SingleRun;
    SweepSpec sweep;
};

/// Serialized form of a scenario (YAML mapping). Lengths in mm, times in s,
/// moduli in Pa, densities in kg/m^3, forces in N.
std::string scenario_to_yaml(const scenarios::Scenario& s);
scenarios::Scenario scenario_from_yaml(const std::string& text);

/// Parses a run configuration. Relative scenario paths resolve against `base_dir`.
/// `study` replaces the study named in the file; sweep defaults follow it.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".",
                       std::optional<Study> study = {});
RunConfig load_config(const std::filesystem::path& path, std::optional<Study> study = {});
std::string config_to_yaml(const RunConfig& cfg);

void apply_overrides(scenarios::Scenario& s, const Overrides& o);

/// printf("%.17g"); round-trips every double.
std::string format_double(double v);

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::filesystem::path& path, const Csv& csv);
Csv read_csv(const std::filesystem::path& path);

struct Summary {
    std::string scenario;
    double dt_cr = 0.0;
    std::optional<double> kappa_inv_K;  ///< only for systems small enough for a dense solve
    std::optional<double> kappa_inv_M;
    double kappa_mvp_K = 0.0;
    double kappa_mvp_M = 0.0;
    std::vector<double> chi;
    long steps = 0;
    long n_dof = 0;
    double runtime_s = 0.0;
};

/// Condition numbers of the assembled system of `s`. kappa_mvp uses x = 1 on
/// every free DOF. kappa_inv(K) is skipped above `dense_limit` DOFs.
Summary conditioning(const scenarios::Scenario& s, int workers, long dense_limit = 2000);

struct Artifacts {
    std::vector<std::filesystem::path> files;
};

/// Executes the study of `cfg`, writing into cfg.output_dir. Library
/// exceptions (solver::Divergence, solver::SingularMass) propagate.
Artifacts run(const RunConfig& cfg, int workers);

// Study drivers, also usable directly.
struct DtcrTable {
    std::vector<int> p_values;
    std::vector<Method> methods;
    std::vector<std::vector<double>> dt_cr;       ///< [method][p], s
    std::vector<std::vector<double>> normalized;  ///< divided by 0e at the same p
};
DtcrTable dtcr_table(const scenarios::Scenario& base, const std::vector<int>& p_values,
                     const std::vector<Method>& methods, int workers);

struct KappaRow {
    int p = 0;
    Method method;
    double kappa_inv_K = 0.0;
    double kappa_inv_M = 0.0;
    double kappa_mvp_K = 0.0;
    double kappa_mvp_M = 0.0;
};
std::vector<KappaRow> kappa_table(const scenarios::Scenario& base, const std::vector<int>& p_values,
                                  const std::vector<Method>& methods, int workers);

struct SweepRow {
    int p = 0;
    Method method;
    double e_L2 = 0.0;  ///< percent
    double dt_cr = 0.0;
};
std::vector<SweepRow> p_sweep(const scenarios::Scenario& base, const SweepSpec& spec, int workers);

/// SVG rendering of a CSV written by `run`. Probe histories (t_s, ux_m,
/// uy_m) give two panels; sweep tables (p, e_L2_percent) give a semilog
/// error plot; tables with one row per variant and columns p1.. plot each row
/// against p; anything else plots columns 2.. against column 1. Positive data
/// spanning more than three decades gets a log axis.
std::string plot_svg(const Csv& csv, const std::string& title = "");

}  // namespace scm::cli
