#include "frisk/config.hpp"

#include <fstream>
#include <set>

#include "frisk/error.hpp"

namespace frisk {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& where,
                    const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

double require_number(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(where + " is missing '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return j.at(key).get<double>();
}

Eigen::VectorXd parse_a_grid(const json& j, const std::string& where, double a_min,
                             double a_max, json& resolved) {
    double lo = a_min, hi = a_max;
    int count = 21;
    if (j.is_array()) {
        std::vector<double> v = j.get<std::vector<double>>();
        if (v.size() < 1) throw ConfigError(where + ": explicit a_grid must be non-empty");
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1]))
                throw ConfigError(where + ": explicit a_grid must be strictly increasing");
        resolved = j;
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (!j.is_null()) {
        reject_unknown(j, where, {"min", "max", "count"});
        if (j.contains("min")) lo = j.at("min").get<double>();
        if (j.contains("max")) hi = j.at("max").get<double>();
        if (j.contains("count")) count = j.at("count").get<int>();
    }
    if (!(lo < hi)) throw ConfigError(where + ": a_grid needs min < max");
    if (count < 1) throw ConfigError(where + ": a_grid count must be >= 1");
    resolved = json{{"min", lo}, {"max", hi}, {"count", count}};
    Eigen::VectorXd grid(count);
    for (int k = 0; k < count; ++k)
        grid[k] = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (count - 1);
    return grid;
}

} // namespace

std::uint64_t RunConfig::stage_seed(const std::string& stage) const {
    return substream(seed, "stage:" + stage);
}

RunConfig parse_config(const json& j) {
    reject_unknown(j, "config",
                   {"seed", "threads", "out_dir", "inputs", "a_bounds", "threshold", "dataset",
                    "design", "model", "gp", "frc", "berens", "sobol", "pli"});
    RunConfig cfg;
    json res;

    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.threads = j.value("threads", 0);
    cfg.out_dir = j.value("out_dir", std::string("out"));
    res["seed"] = cfg.seed;
    res["threads"] = cfg.threads;
    res["out_dir"] = cfg.out_dir;

    // inputs + a_bounds
    if (!j.contains("inputs")) throw ConfigError("config is missing 'inputs'");
    if (!j.at("inputs").is_array() || j.at("inputs").empty())
        throw ConfigError("'inputs' must be a non-empty array");
    std::vector<ScalarDistribution> marginals;
    for (std::size_t i = 0; i < j.at("inputs").size(); ++i) {
        const json& in = j.at("inputs")[i];
        const std::string where = "inputs[" + std::to_string(i) + "]";
        reject_unknown(in, where, {"kind", "lo", "hi", "mu", "sigma"});
        const std::string kind = in.value("kind", "");
        if (kind == "uniform")
            marginals.push_back(ScalarDistribution::uniform(require_number(in, where, "lo"),
                                                            require_number(in, where, "hi")));
        else if (kind == "gaussian")
            marginals.push_back(ScalarDistribution::gaussian(require_number(in, where, "mu"),
                                                             require_number(in, where, "sigma")));
        else
            throw ConfigError(where + ".kind must be 'uniform' or 'gaussian'");
    }
    if (!j.contains("a_bounds") || !j.at("a_bounds").is_array() || j.at("a_bounds").size() != 2)
        throw ConfigError("config needs 'a_bounds': [a_min, a_max]");
    const double a_min = j.at("a_bounds")[0].get<double>();
    const double a_max = j.at("a_bounds")[1].get<double>();
    cfg.input = InputModel(marginals, a_min, a_max);
    res["inputs"] = j.at("inputs");
    res["a_bounds"] = j.at("a_bounds");

    if (!j.contains("threshold")) throw ConfigError("config is missing 'threshold'");
    cfg.threshold = j.at("threshold").get<double>();
    res["threshold"] = cfg.threshold;

    cfg.dataset = j.value("dataset", std::string(""));
    res["dataset"] = cfg.dataset;

    // design
    {
        const json d = j.value("design", json::object());
        reject_unknown(d, "design", {"n", "scheme"});
        cfg.design_n = d.value("n", 100);
        const std::string scheme = d.value("scheme", std::string("LHS"));
        if (scheme == "LHS")
            cfg.design_scheme = DesignScheme::LHS;
        else if (scheme == "MC")
            cfg.design_scheme = DesignScheme::MC;
        else
            throw ConfigError("design.scheme must be 'LHS' or 'MC'");
        res["design"] = {{"n", cfg.design_n}, {"scheme", scheme}};
    }

    // analytic model (optional)
    if (j.contains("model") && !j.at("model").is_null()) {
        const json m = j.at("model");
        reject_unknown(m, "model", {"b0", "b1", "c", "sine_amp"});
        AnalyticModel model;
        model.b0 = m.value("b0", 0.0);
        model.b1 = m.value("b1", 1.0);
        std::vector<double> c = m.value("c", std::vector<double>{});
        if (c.size() != static_cast<std::size_t>(cfg.input.dim()))
            throw ConfigError("model.c must list one coefficient per input");
        model.coeff = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
        std::vector<double> sa =
            m.value("sine_amp", std::vector<double>(c.size(), 0.0));
        if (sa.size() != c.size())
            throw ConfigError("model.sine_amp must match the length of model.c");
        model.sine_amp =
            Eigen::Map<const Eigen::VectorXd>(sa.data(), static_cast<Eigen::Index>(sa.size()));
        cfg.model = model;
        res["model"] = {{"b0", model.b0}, {"b1", model.b1}, {"c", c}, {"sine_amp", sa}};
    } else {
        res["model"] = nullptr;
    }

    // gp
    {
        const json g = j.value("gp", json::object());
        reject_unknown(g, "gp", {"nugget", "multistarts", "fitted", "trend"});
        cfg.gp_options.trend_on = g.value("trend", true);
        cfg.gp_options.multistarts = g.value("multistarts", 10);
        cfg.gp_options.seed = cfg.stage_seed("fit");
        json nug = g.value("nugget", json("adaptive"));
        if (nug.is_string()) {
            const std::string s = nug.get<std::string>();
            if (s == "adaptive")
                cfg.gp_options.nugget = NuggetPolicy::adaptive();
            else if (s == "none")
                cfg.gp_options.nugget = NuggetPolicy::none();
            else
                throw ConfigError("gp.nugget must be 'adaptive', 'none' or a number");
        } else if (nug.is_number()) {
            cfg.gp_options.nugget = NuggetPolicy::fixed(nug.get<double>());
        } else {
            throw ConfigError("gp.nugget must be 'adaptive', 'none' or a number");
        }
        cfg.gp_path = g.value("fitted", std::string("gp.json"));
        res["gp"] = {{"nugget", nug},
                     {"multistarts", cfg.gp_options.multistarts},
                     {"fitted", cfg.gp_path},
                     {"trend", cfg.gp_options.trend_on}};
    }

    // frc
    {
        const json f = j.value("frc", json::object());
        reject_unknown(f, "frc", {"a_grid", "n", "m", "n_clt", "levels", "sim_budget"});
        json grid_res;
        cfg.a_grid = parse_a_grid(f.value("a_grid", json()), "frc", a_min, a_max, grid_res);
        cfg.frc_options.n = f.value("n", 10000);
        cfg.frc_options.m = f.value("m", 3000);
        cfg.frc_options.n_clt = f.value("n_clt", 100000);
        cfg.frc_options.levels = f.value("levels", std::vector<double>{0.90});
        cfg.frc_options.sim_budget = f.value("sim_budget", 2000);
        cfg.frc_options.seed = cfg.stage_seed("curve");
        res["frc"] = {{"a_grid", grid_res},
                      {"n", cfg.frc_options.n},
                      {"m", cfg.frc_options.m},
                      {"n_clt", cfg.frc_options.n_clt},
                      {"levels", cfg.frc_options.levels},
                      {"sim_budget", cfg.frc_options.sim_budget}};
    }

    // berens
    {
        const json b = j.value("berens", json::object());
        reject_unknown(b, "berens", {"boxcox", "lambda"});
        cfg.berens_boxcox = b.value("boxcox", true);
        if (b.contains("lambda") && !b.at("lambda").is_null())
            cfg.berens_lambda = b.at("lambda").get<double>();
        res["berens"] = {{"boxcox", cfg.berens_boxcox},
                         {"lambda", cfg.berens_lambda ? json(*cfg.berens_lambda) : json()}};
    }

    // sobol
    {
        const json s = j.value("sobol", json::object());
        reject_unknown(s, "sobol", {"flavor", "n_pf", "B", "p", "a"});
        const std::string flavor = s.value("flavor", std::string("aggregated"));
        if (flavor == "aggregated")
            cfg.sobol_flavor = SobolFlavor::Aggregated;
        else if (flavor == "pointwise")
            cfg.sobol_flavor = SobolFlavor::Pointwise;
        else if (flavor == "inverse")
            cfg.sobol_flavor = SobolFlavor::Inverse;
        else
            throw ConfigError("sobol.flavor must be aggregated, pointwise or inverse");
        cfg.sobol_options.n_pf = s.value("n_pf", 10000);
        cfg.sobol_options.B = s.value("B", 200);
        cfg.sobol_options.seed = cfg.stage_seed("sobol");
        cfg.sobol_p = s.value("p", 0.90);
        cfg.sobol_a = s.value("a", 0.5 * (a_min + a_max));
        res["sobol"] = {{"flavor", flavor},
                        {"n_pf", cfg.sobol_options.n_pf},
                        {"B", cfg.sobol_options.B},
                        {"p", cfg.sobol_p},
                        {"a", cfg.sobol_a}};
    }

    // pli
    {
        const json p = j.value("pli", json::object());
        reject_unknown(p, "pli", {"inputs", "delta_grid", "constraint", "a", "a_grid", "n",
                                  "ci", "B"});
        if (p.contains("inputs"))
            cfg.pli_inputs = p.at("inputs").get<std::vector<int>>();
        else
            for (int i = 0; i < cfg.input.dim(); ++i) cfg.pli_inputs.push_back(i);
        const std::string constraint = p.value("constraint", std::string("mean"));
        if (constraint == "mean")
            cfg.pli_kind = MomentKind::Mean;
        else if (constraint == "variance")
            cfg.pli_kind = MomentKind::Variance;
        else
            throw ConfigError("pli.constraint must be 'mean' or 'variance'");
        if (p.contains("delta_grid")) {
            cfg.pli_deltas = p.at("delta_grid").get<std::vector<double>>();
        } else {
            if (cfg.pli_kind != MomentKind::Mean)
                throw ConfigError("pli.delta_grid is required for variance perturbations");
            for (const int i : cfg.pli_inputs) {
                if (i < 0 || i >= cfg.input.dim())
                    throw ConfigError("pli.inputs entry out of range");
                if (cfg.input.marginals[static_cast<std::size_t>(i)].kind != DistKind::Uniform)
                    throw ConfigError(
                        "pli.delta_grid is required when a perturbed input is not uniform");
            }
            // paper-style default for uniform inputs: means at fractions
            // 0.1..0.9 of the common range
            const auto& m0 = cfg.input.marginals[static_cast<std::size_t>(cfg.pli_inputs.at(0))];
            for (int k = 1; k <= 9; ++k)
                cfg.pli_deltas.push_back(m0.p1 + (m0.p2 - m0.p1) * 0.1 * k);
        }
        if (p.contains("a") && p.contains("a_grid"))
            throw ConfigError("pli: give either 'a' or 'a_grid', not both");
        if (p.contains("a")) {
            cfg.pli_a_grid.resize(1);
            cfg.pli_a_grid[0] = p.at("a").get<double>();
            res["pli"]["a"] = cfg.pli_a_grid[0];
        } else {
            json grid_res;
            cfg.pli_a_grid =
                parse_a_grid(p.value("a_grid", json()), "pli", a_min, a_max, grid_res);
            res["pli"]["a_grid"] = grid_res;
        }
        cfg.pli_options.n = p.value("n", 10000);
        cfg.pli_options.B = p.value("B", 500);
        cfg.pli_options.seed = cfg.stage_seed("pli");
        const std::string ci = p.value("ci", std::string("delta"));
        if (ci == "delta")
            cfg.pli_options.ci = PliOptions::Ci::Delta;
        else if (ci == "bootstrap")
            cfg.pli_options.ci = PliOptions::Ci::Bootstrap;
        else
            throw ConfigError("pli.ci must be 'delta' or 'bootstrap'");
        res["pli"]["inputs"] = cfg.pli_inputs;
        res["pli"]["delta_grid"] = cfg.pli_deltas;
        res["pli"]["constraint"] = constraint;
        res["pli"]["n"] = cfg.pli_options.n;
        res["pli"]["ci"] = ci;
        res["pli"]["B"] = cfg.pli_options.B;
    }

    cfg.resolved = res;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

} // namespace frisk
