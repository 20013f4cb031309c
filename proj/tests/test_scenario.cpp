#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sqcav/error.hpp"
#include "sqcav/scenario.hpp"

using namespace sqcav;

namespace {

ErrorKind parse_error_kind(const std::string& text) {
    try {
        (void)parse_config_string(text);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Internal;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// File contents without the one timestamp line.
std::string without_timestamp(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("# generated:", 0) != 0) out += line + "\n";
    return out;
}

const char* kSmallConfig = R"(
scenario = custom
g0_over_kappa = 1
gamma_over_kappa = 1
delta_c_over_kappa = 0.5
r_values = 0.2, 0.4
atom_present = both
output_path = small.csv
)";

}  // namespace

TEST_CASE("config parsing and scenario defaults") {
    const auto c = parse_config_string(R"(
# comment line
scenario = fig5
delta_c_over_kappa = 2   # trailing comment
r_values = 0:0.3:0.1
fock_cutoff = 40
atom_present = false
)");
    CHECK(c.scenario == ScenarioKind::Fig5);
    CHECK(c.g0_values == std::vector<double>{5.0});
    CHECK(c.delta_c == 2.0);
    REQUIRE(c.r_values.size() == 4);
    CHECK(c.r_values[3] == 0.3);
    CHECK(c.fock_cutoff == 40);
    CHECK(c.atom == AtomSelection::Absent);

    const auto f6 = parse_config_string("scenario = fig6\n");
    CHECK(f6.g0_values == std::vector<double>{2.0, 5.0});
    CHECK(f6.report_frame == Frame::Lab);
    const auto f9 = parse_config_string("scenario = fig9\n");
    CHECK(f9.frame == Frame::Lab);
    CHECK(f9.wigner);
    CHECK(parse_config_string("fock_cutoff = auto\n").fock_cutoff == 0);
    CHECK(parse_config_string("frame = lab\n").report_frame == Frame::Lab);

    CHECK(scenario_catalog().size() == 8);
    for (const auto& info : scenario_catalog()) CHECK(scenario_from_string(to_string(info.kind)) == info.kind);
}

TEST_CASE("malformed configs are rejected") {
    CHECK(parse_error_kind("no_such_key = 1\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("delta_c_over_kappa = 1\ndelta_c_over_kappa = 2\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("delta_c_over_kappa = fast\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("r_values = -0.1\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("just some words\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("scenario = fig10\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("fock_cutoff = 1\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("frame = lab\nreport_frame = squeezed\n") == ErrorKind::InvalidConfig);
    CHECK_THROWS_AS(parse_config_file("/nonexistent/config.cfg"), Error);
}

TEST_CASE("config hash ignores output path and thread count") {
    auto a = parse_config_string(kSmallConfig);
    auto b = a;
    b.output_path = "elsewhere.csv";
    b.threads = 4;
    CHECK(config_hash(a) == config_hash(b));
    b.delta_c = 0.6;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(resolved_config_text(a) == resolved_config_text(parse_config_string(resolved_config_text(a))));
}

TEST_CASE("validate reports derived parameters") {
    auto c = parse_config_string("delta_c_over_kappa = 10\nr_values = 1\ng0_over_kappa = 5\n");
    auto d = validate_config(c);
    REQUIRE(d.points.size() == 1);
    CHECK(d.points[0].omega_p == doctest::Approx(9.6403).epsilon(1e-4));
    CHECK(d.points[0].omega_s == doctest::Approx(2.6580).epsilon(1e-4));
    CHECK(d.points[0].threshold_margin == doctest::Approx(10.0 - 9.6403).epsilon(1e-3));
    CHECK(d.points[0].estimated_cutoff > 20);
    CHECK(d.ok());

    c.r_values = {0.0};
    d = validate_config(c);
    CHECK(d.points[0].rwa_ratio == 0.0);

    c.r_values.clear();
    c.omega_p_values = {10.5};
    d = validate_config(c);
    CHECK_FALSE(d.ok());
    REQUIRE_FALSE(d.issues.empty());
    CHECK(d.issues[0].kind == ErrorKind::Threshold);
    CHECK(d.issues[0].message.find("10.5") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(exit_code(ErrorKind::InvalidConfig) == 2);
    CHECK(exit_code(ErrorKind::InvalidDims) == 2);
    CHECK(exit_code(ErrorKind::Threshold) == 3);
    CHECK(exit_code(ErrorKind::Truncation) == 4);
    CHECK(exit_code(ErrorKind::NonConvergence) == 5);
    CHECK(exit_code(ErrorKind::DegenerateSteadyState) == 5);
    CHECK(exit_code(ErrorKind::Internal) == 1);
}

TEST_CASE("adaptive cutoff flags convergence and refuses short cutoffs") {
    const auto p = ModelParams::from_squeezing(Frame::Squeezed, 0.5, 0.8, 0.0, 1.0, false);
    const auto sol = solve_adaptive(p);
    CHECK(sol.truncation_tail < kTruncationTailTol);
    CHECK(sol.cutoff_converged);
    try {
        (void)solve_adaptive(p, 4);
        FAIL("expected a truncation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Truncation);
    }
    const auto unchecked = solve_adaptive(p, 4, false);
    CHECK(unchecked.truncation_tail > kTruncationTailTol);
    CHECK_FALSE(unchecked.cutoff_converged);
}

TEST_CASE("records carry moments, flux and distributions") {
    const auto c = parse_config_string(kSmallConfig);
    const auto result = compute_scenario(c);
    REQUIRE(result.records.size() == 4);
    CHECK_FALSE(result.records[0].atom_present);
    CHECK(result.records[1].atom_present);
    for (const auto& rec : result.records) {
        CHECK(rec.solver_residual < 1e-10);
        CHECK(rec.cutoff_converged);
        CHECK(rec.mean_photon >= 0.0);
        CHECK(rec.output_flux > 0.0);
        double total = 0.0;
        for (double pn : rec.probs) total += pn;
        CHECK(total <= 1.0 + 1e-8);
    }
}

TEST_CASE("lab report frame fills the output flux") {
    auto c = parse_config_string(kSmallConfig);
    c.report_frame = Frame::Lab;
    c.atom = AtomSelection::Absent;
    c.r_values = {0.4};
    const auto rec = compute_scenario(c).records.at(0);
    CHECK(rec.report_frame == Frame::Lab);
    CHECK(rec.output_flux == doctest::Approx(rec.mean_photon));
    CHECK(rec.mean_photon > 0.0);
    // the flux is a lab quantity whichever frame the moment columns use
    c.report_frame = Frame::Squeezed;
    const auto sq = compute_scenario(c).records.at(0);
    CHECK(sq.output_flux == doctest::Approx(rec.output_flux).epsilon(1e-12));
    CHECK(sq.mean_photon != doctest::Approx(rec.mean_photon));
}

TEST_CASE("CSV output layout and determinism") {
    const auto dir = std::filesystem::temp_directory_path() / "sqcav_test_scenario";
    std::filesystem::create_directories(dir);
    auto c = parse_config_string(kSmallConfig);
    c.output_path = (dir / "a.csv").string();
    const auto first = run_scenario(c);
    c.threads = 3;
    c.output_path = (dir / "b.csv").string();
    const auto second = run_scenario(c);

    const std::string a = read_file(first.main);
    const std::string b = read_file(second.main);
    CHECK(a.rfind("# sqcav scenario output\n", 0) == 0);
    CHECK(a.find("# config_hash: fnv1a64:") != std::string::npos);
    CHECK(a.find("# generated: ") != std::string::npos);

    // Bodies agree apart from the output_path and threads lines.
    auto strip = [](const std::string& text) {
        std::istringstream in(without_timestamp(text));
        std::string line, out;
        while (std::getline(in, line)) {
            if (line.find("output_path") != std::string::npos || line.find("threads") != std::string::npos) continue;
            out += line + "\n";
        }
        return out;
    };
    CHECK(strip(a) == strip(b));

    std::istringstream in(a);
    std::string line;
    while (std::getline(in, line) && line.rfind('#', 0) == 0) {
    }
    std::string expected;
    for (const auto& col : record_columns()) expected += (expected.empty() ? "" : ",") + col;
    CHECK(line == expected);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fig2 curve") {
    auto c = default_config(ScenarioKind::Fig2);
    const auto result = compute_scenario(c);
    REQUIRE(result.curve.size() == 61);
    for (const auto& row : result.curve) {
        CHECK(row.relative_difference == doctest::Approx(std::exp(-2.0 * row.r) / (1.0 + std::exp(-2.0 * row.r))));
    }
    const std::string body = main_csv_body(c, result);
    CHECK(body.rfind("r,cosh_r,half_exp_r,relative_difference\n", 0) == 0);
}
