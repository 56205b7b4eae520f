#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frisk/distributions.hpp"

namespace frisk {

// Training/evaluation table: one row per run of the simulator, columns
// (a, x1..xd, y). y may be absent (size 0) for designs awaiting evaluation.
struct DesignMatrix {
    Eigen::VectorXd a;
    Eigen::MatrixXd x; // N x d
    Eigen::VectorXd y; // N or empty

    int n() const { return static_cast<int>(a.size()); }
    int dim() const { return static_cast<int>(x.cols()); }
    bool has_y() const { return y.size() == a.size() && a.size() > 0; }
    std::vector<std::string> column_names() const;
};

enum class DesignScheme { LHS, MC };

// Space-filling (LHS, one point per stratum per dimension) or i.i.d. design
// over (a, X); a is drawn uniformly over the input model's a-bounds.
DesignMatrix generate_design(const InputModel& model, int n, DesignScheme scheme,
                             std::uint64_t seed);

// CSV with header "a,x1,..,xd[,y]", 17 significant digits, LF line endings.
void save_csv(const std::string& path, const DesignMatrix& design);
DesignMatrix load_csv(const std::string& path);

} // namespace frisk
