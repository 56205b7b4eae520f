// frisk: functional risk curves from small computer-experiment datasets.
// Batch CLI over a JSON run configuration; every command writes CSV results
// plus a JSON metadata sidecar and a resolved copy of its configuration.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "frisk/config.hpp"
#include "frisk/design.hpp"
#include "frisk/error.hpp"
#include "frisk/frc.hpp"
#include "frisk/gp.hpp"
#include "frisk/parallel.hpp"
#include "frisk/pli.hpp"
#include "frisk/sobol.hpp"
#include "frisk/testbed.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    std::optional<std::string> dataset;
    std::optional<double> threshold;
    std::optional<int> n, m, n_clt, n_pf, B;
    std::optional<std::string> flavor;
    std::optional<double> p, a;
};

void apply_overrides(json& j, const Overrides& o) {
    if (o.seed) j["seed"] = *o.seed;
    if (o.threads) j["threads"] = *o.threads;
    if (o.out_dir) j["out_dir"] = *o.out_dir;
    if (o.dataset) j["dataset"] = *o.dataset;
    if (o.threshold) j["threshold"] = *o.threshold;
    if (o.n) j["frc"]["n"] = *o.n;
    if (o.m) j["frc"]["m"] = *o.m;
    if (o.n_clt) j["frc"]["n_clt"] = *o.n_clt;
    if (o.n_pf) j["sobol"]["n_pf"] = *o.n_pf;
    if (o.B) j["sobol"]["B"] = *o.B;
    if (o.flavor) j["sobol"]["flavor"] = *o.flavor;
    if (o.p) j["sobol"]["p"] = *o.p;
    if (o.a) j["sobol"]["a"] = *o.a;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw frisk::ConfigError("cannot open '" + path.string() + "' for writing");
    f << text;
}

void write_json_file(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

class CommandRun {
public:
    CommandRun(const frisk::RunConfig& cfg, std::string command)
        : cfg_(cfg), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(cfg.out_dir);
        write_json_file(fs::path(cfg.out_dir) / "resolved_config.json", cfg.resolved);
    }

    fs::path out(const std::string& name) const { return fs::path(cfg_.out_dir) / name; }

    void finish(const std::string& primary_output, const std::vector<std::string>& warnings,
                const json& extra = json::object()) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json meta;
        meta["command"] = command_;
        meta["version"] = FRISK_VERSION_STRING;
        meta["seed"] = cfg_.seed;
        meta["settings"] = cfg_.resolved;
        meta["warnings"] = warnings;
        meta["wall_time_s"] = secs;
        for (const auto& [k, v] : extra.items()) meta[k] = v;
        write_json_file(out(primary_output + ".meta.json"), meta);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    }

private:
    const frisk::RunConfig& cfg_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
};

frisk::DesignMatrix load_dataset(const frisk::RunConfig& cfg) {
    if (cfg.dataset.empty())
        throw frisk::ConfigError("this command needs 'dataset' in the configuration");
    return frisk::load_csv(cfg.dataset);
}

fs::path gp_file(const frisk::RunConfig& cfg) {
    fs::path p(cfg.gp_path);
    if (p.is_relative()) p = fs::path(cfg.out_dir) / p;
    return p;
}

// Load the fitted GP if its file exists, otherwise fit from the dataset and
// save it for the following stages.
frisk::FittedGp ensure_gp(const frisk::RunConfig& cfg) {
    const fs::path path = gp_file(cfg);
    if (fs::exists(path)) {
        std::ifstream f(path);
        json j;
        f >> j;
        return frisk::FittedGp::from_json(j);
    }
    const frisk::DesignMatrix design = load_dataset(cfg);
    const frisk::FittedGp gp = frisk::fit_gp(design, cfg.gp_options);
    write_json_file(path, gp.to_json());
    return gp;
}

int cmd_simulate_design(const frisk::RunConfig& cfg) {
    CommandRun run(cfg, "simulate-design");
    frisk::DesignMatrix design = frisk::generate_design(
        cfg.input, cfg.design_n, cfg.design_scheme, cfg.stage_seed("design"));
    if (cfg.model) design = frisk::evaluate_analytic(*cfg.model, design);
    frisk::save_csv(run.out("design.csv").string(), design);
    run.finish("design.csv", {},
               json{{"rows", design.n()}, {"evaluated", cfg.model.has_value()}});
    return 0;
}

int cmd_fit_gp(const frisk::RunConfig& cfg) {
    CommandRun run(cfg, "fit-gp");
    const frisk::DesignMatrix design = load_dataset(cfg);
    const frisk::FittedGp gp = frisk::fit_gp(design, cfg.gp_options);
    write_json_file(gp_file(cfg), gp.to_json());
    const frisk::TrendSpec trend = gp.trend();
    json extra;
    extra["kernel"] = gp.to_json()["kernel"];
    extra["trend"] = {{"beta0", trend.beta0}, {"beta1", trend.beta1}};
    run.finish(gp_file(cfg).filename().string(), {}, extra);
    return 0;
}

int cmd_curve(const frisk::RunConfig& cfg) {
    CommandRun run(cfg, "curve");
    const frisk::FittedGp gp = ensure_gp(cfg);
    const frisk::FrcCurve curve =
        frisk::frc_double_mc(gp, cfg.input, cfg.threshold, cfg.a_grid, cfg.frc_options);
    std::ostringstream os;
    frisk::write_frc_csv(os, curve);
    write_text(run.out("curve.csv"), os.str());
    run.finish("curve.csv", curve.warnings,
               json{{"pointwise_only", curve.pointwise_only}, {"n_used", curve.n_used}});
    return 0;
}

int cmd_berens(const frisk::RunConfig& cfg) {
    CommandRun run(cfg, "berens");
    const frisk::DesignMatrix design = load_dataset(cfg);
    if (!design.has_y()) throw frisk::ConfigError("berens needs a dataset with responses");
    if (cfg.berens_boxcox && design.y.minCoeff() <= 0.0)
        throw frisk::ConfigError(
            "berens.boxcox is enabled but the dataset has non-positive responses; "
            "set berens.boxcox to false to fit the raw responses");
    const frisk::BerensFit fit = frisk::fit_berens(design.a, design.y, cfg.threshold,
                                                   cfg.berens_boxcox, cfg.berens_lambda);
    std::ostringstream os;
    os << "a,estimate,lo95,hi95\n";
    for (Eigen::Index k = 0; k < cfg.a_grid.size(); ++k) {
        double lo, hi;
        fit.frc_band(cfg.a_grid[k], 0.95, lo, hi);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", cfg.a_grid[k],
                      fit.frc(cfg.a_grid[k]), lo, hi);
        os << buf;
    }
    write_text(run.out("berens.csv"), os.str());
    json extra;
    extra["fit"] = {{"beta0", fit.beta0},     {"beta1", fit.beta1},
                    {"sigma_eps", fit.sigma_eps}, {"lambda", fit.lambda},
                    {"boxcox", fit.boxcox},   {"alpha", fit.alpha},
                    {"beta", fit.beta},       {"alpha_se", fit.alpha_se},
                    {"beta_se", fit.beta_se}};
    run.finish("berens.csv", {}, extra);
    return 0;
}

int cmd_sobol(const frisk::RunConfig& cfg) {
    CommandRun run(cfg, "sobol");
    const frisk::FittedGp gp = ensure_gp(cfg);
    frisk::SobolResult result;
    switch (cfg.sobol_flavor) {
    case frisk::SobolFlavor::Aggregated:
        result = frisk::sobol_aggregated(gp, cfg.input, cfg.threshold, cfg.a_grid,
                                         cfg.sobol_options);
        break;
    case frisk::SobolFlavor::Pointwise:
        result = frisk::sobol_pointwise(gp, cfg.input, cfg.threshold, cfg.sobol_a,
                                        cfg.sobol_options);
        break;
    case frisk::SobolFlavor::Inverse:
        result = frisk::sobol_inverse(gp, cfg.input, cfg.threshold, cfg.sobol_p,
                                      cfg.sobol_options);
        break;
    }
    std::ostringstream os;
    frisk::write_sobol_csv(os, result);
    write_text(run.out("sobol.csv"), os.str());
    json raw = json::array();
    for (const auto& ix : result.inputs)
        raw.push_back(json{{"S", ix.S},
                           {"S_lo", ix.S_lo},
                           {"S_hi", ix.S_hi},
                           {"T", ix.T},
                           {"T_lo", ix.T_lo},
                           {"T_hi", ix.T_hi}});
    run.finish("sobol.csv", result.warnings, json{{"raw", raw}});
    return 0;
}

int cmd_pli(const frisk::RunConfig& cfg) {
    CommandRun run(cfg, "pli");
    const frisk::FittedGp gp = ensure_gp(cfg);
    const frisk::PliResult result =
        frisk::pli_grid(gp, cfg.input, cfg.threshold, cfg.pli_inputs, cfg.pli_deltas,
                        cfg.pli_kind, cfg.pli_a_grid, cfg.pli_options);
    std::ostringstream os;
    frisk::write_pli_csv(os, result);
    write_text(run.out("pli.csv"), os.str());
    run.finish("pli.csv", result.warnings);
    return 0;
}

int cmd_oracle(const frisk::RunConfig& cfg) {
    CommandRun run(cfg, "oracle");
    if (!cfg.model) throw frisk::ConfigError("oracle needs 'model' in the configuration");
    json records = json::array();
    for (Eigen::Index k = 0; k < cfg.a_grid.size(); ++k) {
        const double a = cfg.a_grid[k];
        records.push_back(json{{"quantity", "frc(a=" + std::to_string(a) + ")"},
                               {"value", frisk::oracle_frc(*cfg.model, cfg.input,
                                                           cfg.threshold, a)},
                               {"method", "closed-form"}});
    }
    const frisk::OracleSobol agg =
        frisk::oracle_sobol_aggregated(*cfg.model, cfg.input, cfg.threshold, cfg.a_grid);
    const frisk::OracleSobol inv = frisk::oracle_sobol_inverse(*cfg.model, cfg.input);
    for (int i = 0; i < cfg.input.dim(); ++i) {
        const std::string xi = "x" + std::to_string(i + 1);
        records.push_back(json{{"quantity", "sobol_aggregated_S[" + xi + "]"},
                               {"value", agg.first_order[i]},
                               {"method", "quadrature"}});
        records.push_back(json{{"quantity", "sobol_aggregated_T[" + xi + "]"},
                               {"value", agg.total[i]},
                               {"method", "quadrature"}});
        records.push_back(json{{"quantity", "sobol_inverse_S[" + xi + "]"},
                               {"value", inv.first_order[i]},
                               {"method", "closed-form"}});
    }
    write_json_file(run.out("oracle.json"), records);
    run.finish("oracle.json", {});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"functional risk curves with Gaussian-process metamodels"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides o;
    app.add_option("-c,--config", config_path, "run configuration (JSON)")->required();
    app.add_option("--seed", o.seed, "override the master seed");
    app.add_option("--threads", o.threads, "cap worker threads");
    app.add_option("--out", o.out_dir, "override the output directory");
    app.add_option("--dataset", o.dataset, "override the dataset path");
    app.add_option("--threshold", o.threshold, "override the detection threshold s");
    app.add_option("--n", o.n, "override frc.n");
    app.add_option("--m", o.m, "override frc.m");
    app.add_option("--n-clt", o.n_clt, "override frc.n_clt");
    app.add_option("--n-pf", o.n_pf, "override sobol.n_pf");
    app.add_option("--B", o.B, "override sobol.B");
    app.add_option("--flavor", o.flavor, "override sobol.flavor");
    app.add_option("--p", o.p, "override sobol.p");
    app.add_option("--a", o.a, "override sobol.a");

    const std::vector<std::string> commands = {"simulate-design", "fit-gp", "curve",
                                               "berens", "sobol", "pli", "oracle"};
    for (const auto& c : commands) app.add_subcommand(c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::ifstream f(config_path);
        if (!f) throw frisk::ConfigError("cannot open config file '" + config_path + "'");
        json raw;
        try {
            f >> raw;
        } catch (const json::exception& e) {
            throw frisk::ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        apply_overrides(raw, o);
        const frisk::RunConfig cfg = frisk::parse_config(raw);
        frisk::set_max_threads(cfg.threads);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "simulate-design") return cmd_simulate_design(cfg);
        if (cmd == "fit-gp") return cmd_fit_gp(cfg);
        if (cmd == "curve") return cmd_curve(cfg);
        if (cmd == "berens") return cmd_berens(cfg);
        if (cmd == "sobol") return cmd_sobol(cfg);
        if (cmd == "pli") return cmd_pli(cfg);
        if (cmd == "oracle") return cmd_oracle(cfg);
        throw frisk::ConfigError("unknown command " + cmd);
    } catch (const frisk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const frisk::DegenerateError& e) {
        std::cerr << "degenerate statistics: " << e.what() << "\n";
        return 4;
    } catch (const frisk::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
