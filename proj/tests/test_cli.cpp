#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "support.hpp"

using namespace oid;
using json = nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) lines.push_back(line);
    return lines;
}

std::filesystem::path temp_path(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("analyze complete-4: psi_nir = l_c / r_c") {
    const auto r = run({"analyze", test::fixture("complete4.json")});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["psi_nir"].get<double>() == doctest::Approx((4 * 1e-3 + 2e-3) / (4 * 0.01 + 0.5)).epsilon(1e-12));
    CHECK(j["regime"] == "lambda2");
    CHECK(j["assumption1"] == true);
    CHECK(j["mu"].get<double>() == 1.0);
}

TEST_CASE("analyze without outputs: psi_nir = l / r") {
    const auto r = run({"analyze", test::fixture("bare.json")});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["psi_nir"].get<double>() == doctest::Approx(1e-3 / 0.5).epsilon(1e-15));
}

TEST_CASE("analyze reduces load nodes away and honours overrides") {
    const auto r = run({"analyze", test::fixture("ieee13.json"), "--lo", "1e-3", "--omega", "100"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["reduced"] == true);
    CHECK(j["nodes"] == json::array({1, 3, 7}));
    CHECK(j["theta_nir"].get<double>() == doctest::Approx(std::atan(100 * j["psi_nir"].get<double>())));
    const auto csv = run({"--format", "csv", "analyze", test::fixture("bare.json")});
    CHECK(csv.code == 0);
    CHECK(csv_lines(csv.out).front() == "key,value");
}

TEST_CASE("input errors exit with 2 and an error: line") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"analyze", "missing.json"},
             {"analyze"},
             {"frobnicate", test::fixture("bare.json")},
             {"kron", test::fixture("path4.json"), "--sources", "1,99"},
             {"kron", test::fixture("path4.json"), "--sources", "x"},
             {"landscape", test::fixture("star.json"), "--budget", "-1"},
             {"optimize", test::fixture("star.json")},
             {"--format", "csv", "simulate", test::fixture("star.json")},
             {"--ro", "0.1", "kron", test::fixture("path4.json"), "--phasor"},
         }) {
        const auto r = run(args);
        CHECK(r.code == 2);
        CHECK(r.err.rfind("error:", 0) == 0);
    }
}

TEST_CASE("kron on IEEE-13 sources") {
    const auto r = run({"kron", test::fixture("ieee13.json"), "--sources", "1,3,7"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["kept"] == json::array({1, 3, 7}));
    CHECK(j["eliminated"].size() == 10);
    CHECK(j["lambda2"].get<double>() == doctest::Approx(3.1).epsilon(0.1 / 3.1));
    CHECK(j["laplacian"].size() == 3);
}

TEST_CASE("kron keeping every node warns") {
    const auto r = run({"kron", test::fixture("path4.json"), "--sources", "all"});
    CHECK(r.code == 0);
    CHECK(r.err.rfind("warning:", 0) == 0);
    CHECK(json::parse(r.out)["identity"] == true);
}

TEST_CASE("phasor angle table flags the virtual line") {
    const auto r = run({"kron", test::fixture("path4.json"), "--sources", "1,4", "--phasor", "--lo", "1e-3"});
    REQUIRE(r.code == 0);
    const auto lines = csv_lines(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "i,j,class,R_branch,X_branch,theta_rad,nonphysical");
    CHECK(lines[1].rfind("1,4,virtual,15,", 0) == 0);
}

TEST_CASE("simulate worst case gives a tight lower envelope") {
    const auto traj = temp_path("oid_cli_traj.csv");
    const auto r = run({"simulate", test::fixture("star.json"), "--worst-case", "--trajectory", traj.string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["lower_envelope_ok"] == true);
    CHECK(j["upper_envelope_ok"] == true);
    CHECK(std::abs(j["min_lower_slack"].get<double>()) <= 1e-6);
    std::ifstream f(traj);
    std::string header;
    std::getline(f, header);
    CHECK(header == "t,I_1,I_2,I_3,I_4,norm");
    std::filesystem::remove(traj);

    const auto rnd = run({"simulate", test::fixture("star.json"), "--seed", "3", "--points", "50"});
    REQUIRE(rnd.code == 0);
    CHECK(json::parse(rnd.out)["lower_envelope_ok"] == true);
}

TEST_CASE("optimize the star") {
    const auto r = run({"optimize", test::fixture("star.json"), "--budget", "5e-3"});
    REQUIRE(r.code == 0);
    const auto a = json::parse(r.out)["allocation"];
    CHECK(a[3].get<double>() <= 1e-12);
    CHECK(a[0].get<double>() == doctest::Approx(5e-3 * 9 / 21).epsilon(1e-6));
}

TEST_CASE("optimize in design mode reports both designs") {
    const auto r = run({"optimize", test::fixture("ieee13.json"), "--theta-increase", "0.1"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    const double target = j["target_theta_nir"].get<double>();
    CHECK(target == doctest::Approx(1.1 * std::atan(1.2 / 0.7)).epsilon(1e-12));
    CHECK(j["uniform"]["theta_nir"].get<double>() == doctest::Approx(target).epsilon(1e-9));
    CHECK(j["nonuniform"]["theta_nir"].get<double>() == doctest::Approx(target).epsilon(1e-9));
    CHECK(j["nonuniform"]["total"].get<double>() < j["uniform"]["total"].get<double>());
}

TEST_CASE("landscape CSV") {
    const auto r = run({"landscape", test::fixture("star.json"), "--budget", "5e-3", "--resolution", "40"});
    REQUIRE(r.code == 0);
    const auto lines = csv_lines(r.out);
    CHECK(lines[0] == "b_1,b_2,b_3,b_4,lambda2");
    CHECK(lines.size() == 1 + 12341);  // C(43, 3)
}

TEST_CASE("sweep CSV") {
    const auto r = run({"sweep", test::fixture("path4.json"), "--from", "5e-4", "--to", "5e-2", "--steps", "5"});
    REQUIRE(r.code == 0);
    const auto lines = csv_lines(r.out);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "l_o,theta_nir,theta_1_2,theta_1_3,theta_1_4,theta_2_3,theta_2_4,theta_3_4");
    CHECK(run({"sweep", test::fixture("path4.json"), "--steps", "1"}).code == 2);
}

TEST_CASE("output goes to --out and is byte-identical across runs") {
    const auto path = temp_path("oid_cli_out.json");
    const std::vector<std::string> args{"--out", path.string(), "optimize", test::fixture("star.json"), "--budget",
                                        "5e-3"};
    REQUIRE(run(args).code == 0);
    std::ifstream f1(path);
    const std::string first((std::istreambuf_iterator<char>(f1)), {});
    REQUIRE(run(args).code == 0);
    std::ifstream f2(path);
    const std::string second((std::istreambuf_iterator<char>(f2)), {});
    CHECK(!first.empty());
    CHECK(first == second);
    CHECK(run({"optimize", test::fixture("star.json"), "--budget", "5e-3"}).out == first);
    std::filesystem::remove(path);
}

TEST_CASE("help exits cleanly") {
    const auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("analyze") != std::string::npos);
}
