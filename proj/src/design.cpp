#include "frisk/design.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "frisk/error.hpp"
#include "frisk/normal.hpp"

namespace frisk {
namespace {

// Map a uniform stratum draw through the marginal's inverse CDF.
double marginal_quantile(const ScalarDistribution& d, double p) {
    if (d.kind == DistKind::Uniform) return d.p1 + (d.p2 - d.p1) * p;
    return d.p1 + d.p2 * norm_quantile(p);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<std::string> DesignMatrix::column_names() const {
    std::vector<std::string> names{"a"};
    for (int j = 0; j < dim(); ++j) names.push_back("x" + std::to_string(j + 1));
    if (has_y()) names.push_back("y");
    return names;
}

DesignMatrix generate_design(const InputModel& model, int n, DesignScheme scheme,
                             std::uint64_t seed) {
    const int d = model.dim();
    if (n < d + 3)
        throw ConfigError("design size must be at least d+3 = " + std::to_string(d + 3));
    DesignMatrix out;
    out.a.resize(n);
    out.x.resize(n, d);

    if (scheme == DesignScheme::MC) {
        Rng rng(substream(seed, "design_mc"));
        for (int i = 0; i < n; ++i) {
            out.a[i] = model.a_min + (model.a_max - model.a_min) * rng.uniform01();
            for (int j = 0; j < d; ++j) out.x(i, j) = model.marginals[static_cast<std::size_t>(j)].sample_one(rng);
        }
        return out;
    }

    // LHS: per dimension, one jittered point in each of the n strata, shuffled;
    // maximin selection among a handful of candidates for space filling.
    auto lhs_once = [&](std::uint64_t cand_seed) {
        DesignMatrix cand;
        cand.a.resize(n);
        cand.x.resize(n, d);
        for (int j = 0; j <= d; ++j) {
            Rng rng(substream(cand_seed, "design_lhs", static_cast<std::uint64_t>(j)));
            const std::vector<int> perm = rng.permutation(n);
            for (int i = 0; i < n; ++i) {
                const double p = (perm[static_cast<std::size_t>(i)] + rng.uniform01()) / n;
                if (j == 0)
                    cand.a[i] = model.a_min + (model.a_max - model.a_min) * p;
                else
                    cand.x(i, j - 1) =
                        marginal_quantile(model.marginals[static_cast<std::size_t>(j - 1)], p);
            }
        }
        return cand;
    };
    auto min_dist = [](const DesignMatrix& dm) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dm.n(); ++i)
            for (int j = 0; j < i; ++j) {
                double s = (dm.a[i] - dm.a[j]) * (dm.a[i] - dm.a[j]);
                s += (dm.x.row(i) - dm.x.row(j)).squaredNorm();
                best = std::min(best, s);
            }
        return best;
    };

    const int candidates = n <= 2000 ? 10 : 1; // the O(n^2) criterion gets costly
    out = lhs_once(substream(seed, "design_lhs_cand", 0));
    double best = min_dist(out);
    for (int c = 1; c < candidates; ++c) {
        DesignMatrix cand = lhs_once(substream(seed, "design_lhs_cand", static_cast<std::uint64_t>(c)));
        const double dist = min_dist(cand);
        if (dist > best) {
            best = dist;
            out = std::move(cand);
        }
    }
    return out;
}

void save_csv(const std::string& path, const DesignMatrix& design) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "' for writing");
    f << "a";
    for (int j = 0; j < design.dim(); ++j) f << ",x" << (j + 1);
    if (design.has_y()) f << ",y";
    f << "\n";
    for (int i = 0; i < design.n(); ++i) {
        f << format_double(design.a[i]);
        for (int j = 0; j < design.dim(); ++j) f << "," << format_double(design.x(i, j));
        if (design.has_y()) f << "," << format_double(design.y[i]);
        f << "\n";
    }
    if (!f) throw ConfigError("failed while writing '" + path + "'");
}

DesignMatrix load_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "' for reading");

    std::string line;
    if (!std::getline(f, line)) throw ConfigError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header.push_back(tok);
    }
    if (header.empty() || header[0] != "a")
        throw ConfigError(path + ": first column must be 'a'");
    int d = 0;
    std::size_t col = 1;
    while (col < header.size() && header[col] == "x" + std::to_string(d + 1)) {
        ++d;
        ++col;
    }
    bool with_y = false;
    if (col < header.size()) {
        if (header[col] != "y")
            throw ConfigError(path + ": unexpected column '" + header[col] +
                              "' (want x" + std::to_string(d + 1) + " or y)");
        with_y = true;
        ++col;
    }
    if (col != header.size()) throw ConfigError(path + ": trailing columns after 'y'");
    if (d == 0) throw ConfigError(path + ": no x columns found");

    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": non-numeric cell '" + tok + "'");
            }
            if (used != tok.size())
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": non-numeric cell '" + tok + "'");
            row.push_back(v);
        }
        const std::size_t want = static_cast<std::size_t>(1 + d + (with_y ? 1 : 0));
        if (row.size() != want)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(want) + " cells, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }

    DesignMatrix out;
    const int n = static_cast<int>(rows.size());
    out.a.resize(n);
    out.x.resize(n, d);
    if (with_y) out.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        out.a[i] = row[0];
        for (int j = 0; j < d; ++j) out.x(i, j) = row[static_cast<std::size_t>(j + 1)];
        if (with_y) out.y[i] = row[static_cast<std::size_t>(d + 1)];
    }
    return out;
}

} // namespace frisk
