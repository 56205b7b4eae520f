#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "frisk/distributions.hpp"
#include "frisk/frc.hpp"
#include "frisk/gp.hpp"
#include "frisk/pli.hpp"
#include "frisk/sobol.hpp"
#include "frisk/testbed.hpp"

namespace frisk {

// Fully validated and resolved run configuration. Unknown keys are rejected;
// every default is materialized into `resolved`, which is written next to the
// outputs so a run can be reproduced from its artifacts alone.
struct RunConfig {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_dir = "out";

    InputModel input;
    double threshold = 0.0;
    std::string dataset; // may be empty

    int design_n = 100;
    DesignScheme design_scheme = DesignScheme::LHS;

    std::optional<AnalyticModel> model;

    GpFitOptions gp_options;
    std::string gp_path = "gp.json";

    Eigen::VectorXd a_grid;
    FrcOptions frc_options;

    bool berens_boxcox = true;
    std::optional<double> berens_lambda;

    SobolFlavor sobol_flavor = SobolFlavor::Aggregated;
    SobolOptions sobol_options;
    double sobol_p = 0.90;
    double sobol_a = 0.0;

    std::vector<int> pli_inputs;
    std::vector<double> pli_deltas;
    MomentKind pli_kind = MomentKind::Mean;
    Eigen::VectorXd pli_a_grid;
    PliOptions pli_options;

    nlohmann::json resolved;

    // per-stage sub-seed (documented splitting rule: substream(seed, "stage:" + name))
    std::uint64_t stage_seed(const std::string& stage) const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

} // namespace frisk
