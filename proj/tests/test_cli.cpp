#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "liouville/io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args, bool keep_stderr = false) {
    const std::string cmd = std::string(LIOUVILLE_CLI_PATH) + " " + args +
                            (keep_stderr ? "" : " 2>/dev/null");
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult res;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, got);
    const int rc = pclose(pipe);
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("liouville_cli_" + std::to_string(getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch_dir() / name;
    std::ofstream(p) << text;
    return p;
}

/// Canonical re-rendering of parsed JSON with the library's number format;
/// emit -> parse -> emit must reproduce the original bytes.
std::string rerender(const ordered_json& j) {
    if (j.is_object()) {
        std::string out = "{";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ",";
            first = false;
            out += "\"" + liouville::io::json_escape(it.key()) + "\":" + rerender(it.value());
        }
        return out + "}";
    }
    if (j.is_array()) {
        std::string out = "[";
        for (size_t i = 0; i < j.size(); ++i) {
            if (i) out += ",";
            out += rerender(j[i]);
        }
        return out + "]";
    }
    if (j.is_string()) return "\"" + liouville::io::json_escape(j.get<std::string>()) + "\"";
    if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
    if (j.is_null()) return "null";
    if (j.is_number_float()) return liouville::io::format_double(j.get<double>());
    return j.dump(); // integers
}

void check_round_trip(const std::string& emitted) {
    const ordered_json parsed = ordered_json::parse(emitted);
    CHECK(rerender(parsed) + "\n" == emitted);
}

const double pi = std::numbers::pi;

} // namespace

TEST_CASE("degree subcommand prints exact integers") {
    CliResult r = run_cli("degree --chi 0 --N 3");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "1\n");

    CHECK(run_cli("degree --chi 2 --N 2").out == "0\n");
    CHECK(run_cli("degree --chi 2 --N 1").out == "-1\n");
    CHECK(run_cli("degree --chi -2 --N 2").out == "6\n");
    CHECK(run_cli("degree --genus 2 --N 1").out == "3\n");
    CHECK(run_cli("degree --holes 3 --N 2").out == "6\n");
}

TEST_CASE("classify reports walls as data and undefined degrees as failure") {
    const fs::path on_wall = write_file(
        "classify_wall.json",
        "{\"A\":{\"n\":1,\"a\":[[1]]},\"rho\":[" + liouville::io::format_double(8.0 * pi) + "]}");
    CliResult r = run_cli("classify -i " + on_wall.string());
    CHECK(r.exit_code == 0);
    ordered_json j = ordered_json::parse(r.out);
    CHECK(j.at("classification") == "OnGamma");
    CHECK(j.at("N") == 1);
    check_round_trip(r.out);

    const fs::path wall_degree = write_file(
        "classify_wall_degree.json",
        "{\"A\":{\"n\":1,\"a\":[[1]]},\"rho\":[" + liouville::io::format_double(8.0 * pi) +
            "],\"surface\":{\"genus\":1}}");
    r = run_cli("classify -i " + wall_degree.string());
    CHECK(r.exit_code == 1);
    CHECK(ordered_json::parse(r.out).at("degree") == "undefined");

    const fs::path interior = write_file(
        "classify_interior.json",
        "{\"A\":{\"n\":2,\"a\":[[0,1],[1,0]]},\"rho\":[" + liouville::io::format_double(pi) + "," +
            liouville::io::format_double(pi) + "],\"surface\":{\"genus\":1}}");
    r = run_cli("classify -i " + interior.string());
    CHECK(r.exit_code == 0);
    j = ordered_json::parse(r.out);
    CHECK(j.at("classification") == "InteriorO");
    CHECK(j.at("N") == 0);
    CHECK(j.at("degree") == 1);
    check_round_trip(r.out);
}

TEST_CASE("check-matrix emits a full hypothesis report") {
    const fs::path good = write_file("invo.json", "{\"n\":2,\"a\":[[0,1],[1,0]]}");
    CliResult r = run_cli("check-matrix -i " + good.string());
    CHECK(r.exit_code == 0);
    ordered_json j = ordered_json::parse(r.out);
    CHECK(j.at("h1_pass") == true);
    CHECK(j.at("h2_pass") == true);
    CHECK(j.at("domination_pass") == true);
    CHECK(j.at("irreducible") == true);
    CHECK(j.at("blocks") == ordered_json::parse("[[1,2]]"));
    CHECK(j.at("failures").empty());
    check_round_trip(r.out);

    const fs::path bad = write_file("h2fail.json", "{\"n\":2,\"a\":[[2,1],[1,2]]}");
    r = run_cli("check-matrix -i " + bad.string());
    CHECK(r.exit_code == 0); // failing hypotheses is data, not an error
    j = ordered_json::parse(r.out);
    CHECK(j.at("h1_pass") == true);
    CHECK(j.at("h2_pass") == false);
    CHECK_FALSE(j.at("failures").empty());
    check_round_trip(r.out);
}

TEST_CASE("e-point subcommand") {
    const fs::path in = write_file("epoint.json", "{\"A\":{\"n\":2,\"a\":[[0,1],[1,0]]}}");
    CliResult r = run_cli("e-point -i " + in.string());
    CHECK(r.exit_code == 0);
    ordered_json j = ordered_json::parse(r.out);
    CHECK(j.at("sigma")[0].get<double>() == Catch::Approx(4.0));
    CHECK(j.at("sigma")[1].get<double>() == Catch::Approx(4.0));
    CHECK(j.at("full_support") == true);
    CHECK(j.at("in_E") == true);
    check_round_trip(r.out);

    const fs::path bad = write_file("epoint_bad.json", "{\"A\":{\"n\":2,\"a\":[[2,1],[1,2]]}}");
    CHECK(run_cli("e-point -i " + bad.string()).exit_code == 1);
}

TEST_CASE("radial subcommand summarizes a converged run") {
    const fs::path in = write_file("radial1.json", "{\"A\":{\"n\":1,\"a\":[[1]]},\"alpha\":[0]}");
    CliResult r = run_cli("radial -i " + in.string());
    CHECK(r.exit_code == 0);
    ordered_json j = ordered_json::parse(r.out);
    CHECK(j.at("status") == "converged");
    CHECK(j.at("sigma")[0].get<double>() == Catch::Approx(4.0).margin(1e-4));
    check_round_trip(r.out);

    CliResult csv = run_cli("radial --format csv -i " + in.string());
    CHECK(csv.exit_code == 0);
    CHECK(csv.out.rfind("r,u_1,sigma_1,m_1\n", 0) == 0);
}

TEST_CASE("sweep emits the pinned CSV schema and is deterministic") {
    const fs::path in = write_file(
        "sweep1.json", "{\"A\":{\"n\":1,\"a\":[[1]]},\"alphas\":[[-1],[0],[1]]}");
    CliResult r1 = run_cli("sweep --format csv -i " + in.string());
    CliResult r2 = run_cli("sweep --format csv -i " + in.string());
    CHECK(r1.exit_code == 0);
    CHECK(r1.out == r2.out); // byte identical
    CHECK(r1.out.rfind("alpha_1,sigma_1,m_1,pohozaev_residual,status\n", 0) == 0);
    int lines = 0;
    for (char c : r1.out)
        if (c == '\n') ++lines;
    CHECK(lines == 4);
    CHECK(r1.out.find("converged") != std::string::npos);

    // n = 2 grid generator drops alpha_2 from the columns
    const fs::path in2 = write_file(
        "sweep2.json",
        "{\"A\":{\"n\":2,\"a\":[[1,2],[2,1]]},\"grid\":{\"lo\":[-0.2],\"hi\":[0.2],\"count\":[3]}}");
    CliResult r3 = run_cli("sweep --format csv -i " + in2.string());
    CHECK(r3.exit_code == 0);
    CHECK(r3.out.rfind("alpha_1,sigma_1,sigma_2,m_1,m_2,pohozaev_residual,status\n", 0) == 0);

    CliResult rj = run_cli("sweep -i " + in.string());
    CHECK(rj.exit_code == 0);
    check_round_trip(rj.out);
    const ordered_json j = ordered_json::parse(rj.out);
    REQUIRE(j.at("entries").size() == 3);
    CHECK(j.at("near_duplicates").size() == 3); // the n=1 family has one mass
}

TEST_CASE("seeded random sweeps are reproducible") {
    const fs::path in = write_file(
        "sweep_rand.json",
        "{\"A\":{\"n\":2,\"a\":[[1,2],[2,1]]},\"random\":{\"count\":3,\"lo\":-0.3,\"hi\":0.3}}");
    CliResult a = run_cli("sweep --seed 42 --format csv -i " + in.string());
    CliResult b = run_cli("sweep --seed 42 --format csv -i " + in.string());
    CliResult c = run_cli("sweep --seed 43 --format csv -i " + in.string());
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != c.out);
}

TEST_CASE("epsilon-family subcommand") {
    const fs::path in = write_file(
        "eps.json",
        "{\"A\":{\"n\":2,\"a\":[[1,2],[2,1]]},\"l\":1,\"alpha_head\":[0],\"eps\":0.001}");
    CliResult r = run_cli("epsilon-family -i " + in.string());
    CHECK(r.exit_code == 0);
    const ordered_json j = ordered_json::parse(r.out);
    CHECK(j.at("status") == "converged");
    CHECK(j.at("sigma")[1].get<double>() == Catch::Approx(1.33339257e-3).epsilon(1e-3));
}

TEST_CASE("mf-solve subcommand") {
    const fs::path in = write_file(
        "mf.json", "{\"A\":{\"n\":1,\"a\":[[1]]},\"rho\":[" + liouville::io::format_double(pi) +
                       "],\"K\":32,\"h\":[{\"const\":1.0}]}");
    CliResult r = run_cli("mf-solve -i " + in.string());
    CHECK(r.exit_code == 0);
    const ordered_json j = ordered_json::parse(r.out);
    CHECK(j.at("converged") == true);
    CHECK(j.at("residual_norm").get<double>() == 0.0);
    check_round_trip(r.out);

    CliResult csv = run_cli("mf-solve --format csv -i " + in.string());
    CHECK(csv.exit_code == 0);
    CHECK(csv.out.find("x,y,u_1\n") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli("no-such-subcommand").exit_code == 2);
    CHECK(run_cli("degree --chi 0").exit_code == 2); // missing required --N

    const fs::path garbage = write_file("garbage.json", "{не json");
    CHECK(run_cli("classify -i " + garbage.string()).exit_code == 2);

    const fs::path missing_field = write_file("missing.json", "{\"n\":2}");
    CHECK(run_cli("check-matrix -i " + missing_field.string()).exit_code == 2);

    CHECK(run_cli("radial -i /no/such/file.json").exit_code == 2);
}
