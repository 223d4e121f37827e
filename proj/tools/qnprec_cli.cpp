#include "qnprec/run_spec.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using namespace qnprec;

namespace {

struct FlagSet {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App& app, bool with_problem_key) {
        for (const auto& key : run_spec_keys()) {
            if (key == "problem" && !with_problem_key) continue;
            options[key] = app.add_option("--" + key, values[key]);
            if (key == "spd-policy") options[key]->expected(0, 1);
        }
    }

    Settings given() const {
        Settings out;
        for (const auto& key : run_spec_keys()) {
            auto it = options.find(key);
            if (it == options.end() || it->second->count() == 0) continue;
            const auto& v = values.at(key);
            out.emplace_back(key, v.empty() && key == "spd-policy" ? "true" : v);
        }
        return out;
    }
};

int write_trace(const RunSpec& spec, const RunOutcome& o) {
    const auto path = trace_path(spec);
    if (path.empty()) return exit_ok;
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        std::cerr << "error: cannot write trace '" << path << "'\n";
        return exit_runtime_error;
    }
    out << o.trace_csv;
    return exit_ok;
}

Settings with_problem(Settings flags, const std::string& problem) {
    if (!problem.empty()) flags.insert(flags.begin(), {"problem", problem});
    return flags;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-Newton preconditioned Newton and eigen solvers"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run one problem and write a CSV trace");
    std::string run_problem, run_config;
    FlagSet run_flags;
    run->add_option("problem", run_problem, "bratu | phi2 | mm | eig");
    run->add_option("--config", run_config, "key = value settings file (flags override)");
    run_flags.attach(*run, false);

    auto* cmp = app.add_subcommand("compare", "Run several specs over one problem and tabulate");
    std::string cmp_problem, cmp_variants, cmp_table;
    std::vector<std::string> cmp_configs;
    FlagSet cmp_flags;
    cmp->add_option("problem", cmp_problem, "bratu | phi2 | mm | eig");
    cmp->add_option("--config", cmp_configs, "one settings file per spec");
    cmp->add_option("--variants", cmp_variants, "comma list such as none,lbfgs:1,lsr1:4");
    cmp->add_option("--table", cmp_table, "write <prefix>.csv and <prefix>.txt");
    cmp_flags.attach(*cmp, false);

    auto* spec_cmd = app.add_subcommand("spectrum", "Extremal eigenvalues of the preconditioned matrix");
    index_t sp_m = 30;
    std::string sp_matrix, sp_precond = "ic0", sp_method = "lanczos";
    double sp_scale = 0.0;
    int sp_maxit = 600;
    spec_cmd->add_option("--laplacian", sp_m, "grid size m of the 2-D Laplacian");
    spec_cmd->add_option("--matrix", sp_matrix, "Matrix Market file instead of the Laplacian");
    spec_cmd->add_option("--precond", sp_precond);
    spec_cmd->add_option("--scale", sp_scale, "scaling margin (> 1 enables)");
    spec_cmd->add_option("--method", sp_method, "dense | lanczos");
    spec_cmd->add_option("--maxit", sp_maxit, "Lanczos steps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config_error;
    }

    try {
        if (*run) {
            const Settings file = run_config.empty() ? Settings{} : read_config_file(run_config);
            const RunSpec spec = build_run_spec(file, with_problem(run_flags.given(), run_problem));
            const RunOutcome o = execute(spec);
            std::cout << summary_line(o) << '\n';
            const int rc = write_trace(spec, o);
            return rc != exit_ok ? rc : o.exit_code;
        }
        if (*cmp) {
            std::vector<RunSpec> specs;
            const Settings flags = with_problem(cmp_flags.given(), cmp_problem);
            if (!cmp_variants.empty()) {
                if (cmp_configs.size() > 1) throw ConfigError("--variants takes at most one --config");
                const Settings base = cmp_configs.empty() ? Settings{} : read_config_file(cmp_configs.front());
                std::string item;
                std::istringstream is(cmp_variants);
                while (std::getline(is, item, ',')) {
                    const auto [kind, k] = parse_variant(item);
                    Settings v = flags;
                    v.emplace_back("update", std::string(to_string(kind)));
                    v.emplace_back("kmax", std::to_string(k));
                    specs.push_back(build_run_spec(base, v));
                }
            } else {
                for (const auto& c : cmp_configs) specs.push_back(build_run_spec(read_config_file(c), flags));
            }
            for (auto& s : specs) s.output = "none";
            const auto rows = compare(specs);
            write_compare_text(std::cout, rows);
            if (!cmp_table.empty()) {
                std::ofstream csv(cmp_table + ".csv"), txt(cmp_table + ".txt");
                if (!csv || !txt) throw Error("cannot write table '" + cmp_table + "'");
                write_compare_csv(csv, rows);
                write_compare_text(txt, rows);
            }
            for (const auto& r : rows)
                if (r.status != "converged") return exit_nonconvergence;
            return exit_ok;
        }
        if (*spec_cmd) {
            if (sp_method != "dense" && sp_method != "lanczos") throw ConfigError("--method: expected dense or lanczos");
            if (sp_scale != 0.0 && !(sp_scale > 1.0)) throw ConfigError("--scale margin must be > 1");
            const SparseMatrix A = sp_matrix.empty() ? laplacian_2d(sp_m) : read_matrix_market(sp_matrix);
            BasePreconditioner P = make_base_preconditioner(A, parse_precond(sp_precond));
            if (sp_scale > 1.0) scale_for_spd(P, estimate_beta(A, P, 30), sp_scale);
            const SpectrumReport rep = sp_method == "dense"
                                           ? preconditioned_spectrum_dense(A, P)
                                           : preconditioned_spectrum_lanczos(A, P, LanczosOptions{sp_maxit});
            auto j = to_json(rep);
            if (j.contains("spectrum")) j.erase("spectrum");
            write_json_line(std::cout, j);
            return exit_ok;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const BreakdownError& e) {
        std::cerr << "breakdown: " << e.what() << '\n';
        return exit_breakdown;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime_error;
    }
    return exit_ok;
}
