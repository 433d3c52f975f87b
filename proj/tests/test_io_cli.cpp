#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "w2chaos/io.hpp"

using namespace w2chaos;
using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(W2CHAOS_CLI_PATH) + " " + args + " 2>/dev/null";
    CliResult r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, got);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("float formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, -0.0, 2.5e-3}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("JSON coefficient files") {
    const std::string path = temp_path("w2chaos_coeffs.json");
    write_file(path, R"({"alphas":[0.6,0.8],"noise":"chi2_centered","convention":"unit"})");
    const ChaosCoefficients c = load_coefficients(path);
    CHECK(c.alphas == std::vector<double>{0.6, 0.8});
    CHECK(c.convention == Convention::unit);
    CHECK(c.noise.sampler == "chi2");

    write_file(path, R"({"alphas":[1.0],"noise":{"cumulants":[1.0,2.0,3.0]}})");
    const ChaosCoefficients cc = load_coefficients(path);
    CHECK(cc.noise.kind == BaseNoise::Kind::custom);
    CHECK(cc.noise.kappa(4) == doctest::Approx(3.0));

    write_file(path, R"({"alphas":[1.0],"noise":"chi2_centered_unitvar"})");
    CHECK(load_coefficients(path).noise.sampler == "chi2_unitvar");

    write_file(path, R"({"alphas":[0.6,0.8],"convention":"weird"})");
    CHECK_THROWS_AS(load_coefficients(path), std::invalid_argument);
    write_file(path, "{not json");
    CHECK_THROWS_AS(load_coefficients(path), std::invalid_argument);
}

TEST_CASE("plain text coefficient files") {
    const std::string path = temp_path("w2chaos_coeffs.txt");
    write_file(path, "# a comment\n0.5\n-0.5 # trailing note\n\n");
    const ChaosCoefficients c = load_coefficients(path);
    CHECK(c.alphas == std::vector<double>{0.5, -0.5});
    CHECK(c.convention == Convention::raw);
    CHECK(c.noise.kind == BaseNoise::Kind::chi2_centered);

    const TargetSpec t = load_target(path);
    CHECK(t.alphas_inf == std::vector<double>{0.5, -0.5});

    write_file(path, "abc\n");
    CHECK_THROWS_AS(load_coefficients(path), std::invalid_argument);
}

TEST_CASE("tabulated basis files") {
    const std::string path = temp_path("w2chaos_basis.csv");
    std::string content = "x,e_1,e_2\n";
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        content += format_double(x) + "," + format_double(std::sqrt(3.0) * x) + "," +
                   format_double((x * x - 0.75 * x) / std::sqrt(0.0125)) + "\n";
    }
    write_file(path, content);
    KernelSpec k;
    k.lambdas = {1.0, 0.5};
    load_tabulated_basis(path, k);
    k.validate();
    CHECK(k.eval(1, 0.5) == doctest::Approx(std::sqrt(3.0) * 0.5).epsilon(1e-9));
    CHECK(k.orthonormality_defect(4000) < 1e-3); // linear interpolation of a polynomial pair

    write_file(path, "bad header\n0,1,2\n");
    CHECK_THROWS_AS(load_tabulated_basis(path, k), std::invalid_argument);
}

TEST_CASE("rate table CSV carries the documented header") {
    RateTable t;
    t.family = "ustat";
    t.metric = "sqrt_delta";
    for (int i = 0; i < 4; ++i) {
        RateRow r;
        r.x = 10.0 * (i + 1);
        r.delta = 1.0 / (i + 1);
        r.sqrt_delta = std::sqrt(r.delta);
        t.rows.push_back(r);
    }
    t.slope = t.fit("sqrt_delta");
    const std::string csv = rate_table_csv(t);
    CHECK(csv.rfind("n,delta,sqrt_delta,certified_upper,cf_lower,w2_hat,w2_stderr\n", 0) == 0);
    CHECK(csv.find("# slope,") != std::string::npos);
}

TEST_CASE("cli theta golden") {
    const CliResult r = run_cli("theta --alphas 1");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.contains("theta"));
    const std::vector<double> th = j["theta"].get<std::vector<double>>();
    REQUIRE(th.size() == 3);
    CHECK(th[0] == doctest::Approx(1.0));
    CHECK(th[1] == doctest::Approx(-2.0));
    CHECK(th[2] == doctest::Approx(1.0));
}

TEST_CASE("cli delta on identical inputs") {
    const std::string cpath = temp_path("w2chaos_cli_c.json");
    const std::string tpath = temp_path("w2chaos_cli_t.json");
    write_file(cpath, R"({"alphas":[0.6,-0.8]})");
    write_file(tpath, R"({"alphas":[0.6,-0.8]})");
    const CliResult r = run_cli("delta --coeffs " + cpath + " --target " + tpath + " --route both");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["delta_roots"].get<double>() == doctest::Approx(0.0));
    CHECK(j["delta_cumulants"].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cli output is byte-identical across runs") {
    const std::string cpath = temp_path("w2chaos_cli_c2.json");
    const std::string tpath = temp_path("w2chaos_cli_t2.json");
    write_file(cpath, R"({"alphas":[0.6,0.64,0.48],"convention":"unit"})");
    write_file(tpath, R"({"alphas":[0.8,-0.6]})");
    const std::string args = "w2 --coeffs " + cpath + " --target " + tpath +
                             " --samples 20000 --seed 3 --rho 0.1 --threads 2";
    const CliResult r1 = run_cli(args);
    const CliResult r2 = run_cli(args);
    REQUIRE(r1.code == 0);
    CHECK(r1.out == r2.out);
    const json j = json::parse(r1.out);
    CHECK(j["cf_lower"].get<double>() <= j["w2_hat"].get<double>() +
                                             3.0 * j["w2_stderr"].get<double>());
    CHECK(j.contains("certified_upper"));
    CHECK(j.contains("coupled_upper"));
}

TEST_CASE("cli validation failures exit with code 2") {
    CHECK(run_cli("delta --coeffs /nonexistent.json --target /nonexistent.json").code == 2);
    CHECK(run_cli("theta --alphas 0").code == 2);
    CHECK(run_cli("vg --alphas 1").code == 2);
}

TEST_CASE("cli numeric-stability aborts exit with code 3") {
    // a near-degenerate coefficient makes the count enumeration blow its
    // certified budget
    const double tiny = 2e-4;
    const double big = std::sqrt(1.0 - tiny * tiny);
    const CliResult r =
        run_cli("constants --alphas " + format_double(tiny) + "," + format_double(big));
    CHECK(r.code == 3);
}

TEST_CASE("cli sweep emits the documented CSV") {
    const CliResult r = run_cli("sweep --family ustat --a 1 --n 10,32,100,316 --samples 0 --seed 7");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("n,delta,sqrt_delta,certified_upper,cf_lower,w2_hat,w2_stderr\n", 0) == 0);
    CHECK(r.out.find("# slope_metric,sqrt_delta") != std::string::npos);
}

TEST_CASE("cli t-grid anchors") {
    const std::string cpath = temp_path("w2chaos_cli_c3.json");
    const std::string tpath = temp_path("w2chaos_cli_t3.json");
    write_file(cpath, R"({"alphas":[0.70463624, 0.070710678]})"); // sqrt((1-a)/2), sqrt(a/2), a=0.01
    write_file(tpath, R"({"alphas":[0.7071067811865476]})");
    const CliResult r = run_cli("w2 --coeffs " + cpath + " --target " + tpath +
                                " --samples 0 --t-grid 0.01:100:50,10");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["cf_lower"].get<double>() > 0.0);
    CHECK_FALSE(j.contains("w2_hat")); // samples 0 disables the Monte Carlo block
}

TEST_CASE("cli constants") {
    const CliResult r = run_cli("constants --alphas 1");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["independent"].get<bool>());
    CHECK(j["C_x"].get<double>() == doctest::Approx((3.0 + 2.0 * std::sqrt(2.0)) * 2.0).epsilon(1e-6));
}
