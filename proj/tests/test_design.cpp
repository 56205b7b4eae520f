#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "frisk/design.hpp"
#include "frisk/error.hpp"

using namespace frisk;

namespace {

InputModel unit_model(int d) {
    std::vector<ScalarDistribution> m(static_cast<std::size_t>(d),
                                      ScalarDistribution::uniform(0.0, 1.0));
    return InputModel(m, 0.0, 1.0);
}

double min_pairwise_distance(const DesignMatrix& d) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d.n(); ++i)
        for (int j = 0; j < i; ++j) {
            double s = (d.a[i] - d.a[j]) * (d.a[i] - d.a[j]);
            s += (d.x.row(i) - d.x.row(j)).squaredNorm();
            best = std::min(best, std::sqrt(s));
        }
    return best;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("LHS stratification: one point per stratum per dimension") {
    const DesignMatrix d = generate_design(unit_model(1), 10, DesignScheme::LHS, 3);
    REQUIRE(d.n() == 10);
    std::vector<int> strata_x(10, 0), strata_a(10, 0);
    for (int i = 0; i < 10; ++i) {
        ++strata_x[static_cast<std::size_t>(std::min(9, static_cast<int>(d.x(i, 0) * 10)))];
        ++strata_a[static_cast<std::size_t>(std::min(9, static_cast<int>(d.a[i] * 10)))];
    }
    for (int k = 0; k < 10; ++k) {
        CHECK(strata_x[static_cast<std::size_t>(k)] == 1);
        CHECK(strata_a[static_cast<std::size_t>(k)] == 1);
    }
}

TEST_CASE("LHS maps gaussian marginals through the inverse cdf") {
    InputModel model({ScalarDistribution::gaussian(2.0, 0.5)}, 0.0, 1.0);
    const DesignMatrix d = generate_design(model, 400, DesignScheme::LHS, 5);
    double mean = d.x.col(0).mean();
    CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("MC design moments") {
    const int n = 10000;
    const DesignMatrix d = generate_design(unit_model(2), n, DesignScheme::MC, 7);
    const double tol = 3.0 / std::sqrt(12.0 * n);
    CHECK(std::abs(d.x.col(0).mean() - 0.5) <= tol);
    CHECK(std::abs(d.x.col(1).mean() - 0.5) <= tol);
    CHECK(std::abs(d.a.mean() - 0.5) <= tol);
}

TEST_CASE("designs are deterministic by seed") {
    for (const DesignScheme scheme : {DesignScheme::LHS, DesignScheme::MC}) {
        const DesignMatrix d1 = generate_design(unit_model(3), 40, scheme, 11);
        const DesignMatrix d2 = generate_design(unit_model(3), 40, scheme, 11);
        const DesignMatrix d3 = generate_design(unit_model(3), 40, scheme, 12);
        CHECK(d1.a == d2.a);
        CHECK(d1.x == d2.x);
        CHECK(d1.a != d3.a);
    }
}

TEST_CASE("design size floor") {
    CHECK_THROWS_AS(generate_design(unit_model(3), 5, DesignScheme::LHS, 1), ConfigError);
}

TEST_CASE("LHS beats MC on max-min distance on average") {
    double lhs_sum = 0.0, mc_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        lhs_sum += min_pairwise_distance(generate_design(unit_model(3), 50, DesignScheme::LHS, seed));
        mc_sum += min_pairwise_distance(generate_design(unit_model(3), 50, DesignScheme::MC, seed));
    }
    CHECK(lhs_sum / 20.0 > mc_sum / 20.0);
}

TEST_CASE("csv round trip is lossless") {
    DesignMatrix d = generate_design(unit_model(2), 25, DesignScheme::MC, 17);
    d.y.resize(d.n());
    for (int i = 0; i < d.n(); ++i) d.y[i] = std::sin(17.0 * i) * 1e-7 + i;
    const auto path = temp_file("frisk_roundtrip.csv");
    save_csv(path.string(), d);
    const DesignMatrix r = load_csv(path.string());
    REQUIRE(r.n() == d.n());
    REQUIRE(r.dim() == d.dim());
    CHECK(r.a == d.a);
    CHECK(r.x == d.x);
    CHECK(r.y == d.y);
    std::filesystem::remove(path);
}

TEST_CASE("csv without a y column loads with empty responses") {
    const auto path = temp_file("frisk_noy.csv");
    {
        std::ofstream f(path);
        f << "a,x1\n0.1,0.2\n0.3,0.4\n";
    }
    const DesignMatrix d = load_csv(path.string());
    CHECK(d.n() == 2);
    CHECK_FALSE(d.has_y());
    std::filesystem::remove(path);
}

TEST_CASE("csv parse errors carry the line number") {
    const auto path = temp_file("frisk_bad.csv");
    {
        std::ofstream f(path);
        f << "a,x1,y\n0.1,0.2,0.3\n0.4,oops,0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(path.string()), doctest::Contains(":3"), ConfigError);
    {
        std::ofstream f(path);
        f << "a,x1,y\n0.1,0.2\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(path.string()), doctest::Contains(":2"), ConfigError);
    {
        std::ofstream f(path);
        f << "a,z1,y\n0.1,0.2,0.3\n";
    }
    CHECK_THROWS_AS(load_csv(path.string()), ConfigError);
    std::filesystem::remove(path);
}
