#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shockpanel/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Workdir {
    fs::path path;
    Workdir() {
        path = fs::temp_directory_path() / "shockpanel_cli_test";
        fs::remove_all(path);
        fs::create_directories(path);
    }
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(SHOCKPANEL_BIN) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json load_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

long count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    long n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("pipeline subcommands, outputs, and manifest completeness") {
    Workdir wd;
    const fs::path& d = wd.path;
    std::ofstream(d / "cfg.json") << R"({"n_units": 25, "n_years": 20, "seed": 5})";

    REQUIRE(run_cli("simulate --config " + (d / "cfg.json").string() + " --out " +
                    (d / "panel.csv").string() + " --calibration " + (d / "calib.json").string()) == 0);
    CHECK(fs::exists(d / "panel.csv"));
    CHECK(fs::exists(d / "panel.csv.truth.csv"));
    CHECK(fs::exists(d / "panel.csv.manifest.json"));

    REQUIRE(run_cli("smooth --in " + (d / "panel.csv").string() + " --out " +
                    (d / "smooth.csv").string()) == 0);
    CHECK(count_lines(d / "smooth.csv") == 25 * 20 + 1);

    REQUIRE(run_cli("classify --in " + (d / "panel.csv").string() + " --smooth " +
                    (d / "smooth.csv").string() + " --out " + (d / "classes.csv").string() +
                    " --descriptives " + (d / "desc.json").string()) == 0);
    auto desc = load_json(d / "desc.json");
    CHECK(desc["total"].get<long>() == 25 * 20);

    REQUIRE(run_cli("estimate --in " + (d / "panel.csv").string() +
                    " --outcome current_expenditures --no-unit-trends --out " +
                    (d / "est.json").string()) == 0);
    auto est = load_json(d / "est.json");
    CHECK(est["rows"].size() == 24);  // 8 taus x 3 regimes
    CHECK(est["clusters"].get<int>() == 25);

    REQUIRE(run_cli("report --est " + (d / "est.json").string() + " --out-dir " +
                    (d / "figs").string()) == 0);
    fs::path fig = d / "figs" / "fig_current_expenditures_baseline.csv";
    fs::path pvals = d / "figs" / "pvalues_current_expenditures_baseline.csv";
    CHECK(count_lines(fig) == 24 + 1);
    CHECK(count_lines(pvals) == 3 + 1);

    // manifest lists every output with a recomputable hash
    auto manifest = load_json(d / "figs" / "manifest.json");
    REQUIRE(manifest["outputs"].size() == 2);
    for (const auto& out : manifest["outputs"]) {
        fs::path p = out["path"].get<std::string>();
        CHECK(fs::exists(p));
        CHECK(shockpanel::cli::hash_file(p) == out["hash"].get<std::string>());
    }
}

TEST_CASE("pooled run reports a single regime and no p-value table") {
    Workdir wd;
    const fs::path& d = wd.path;
    std::ofstream(d / "cfg.json") << R"({"n_units": 20, "n_years": 18, "seed": 6})";
    REQUIRE(run_cli("simulate --config " + (d / "cfg.json").string() + " --out " +
                    (d / "panel.csv").string()) == 0);
    REQUIRE(run_cli("estimate --in " + (d / "panel.csv").string() +
                    " --outcome tax_receipts --no-interactions --no-unit-trends --out " +
                    (d / "pooled.json").string()) == 0);
    auto est = load_json(d / "pooled.json");
    CHECK(est["rows"].size() == 8);
    CHECK(est["pairwise"].empty());

    REQUIRE(run_cli("report --est " + (d / "pooled.json").string() + " --out-dir " +
                    (d / "figs").string()) == 0);
    CHECK(count_lines(d / "figs" / "fig_tax_receipts_baseline.csv") == 8 + 1);
    CHECK_FALSE(fs::exists(d / "figs" / "pvalues_tax_receipts_baseline.csv"));
}

TEST_CASE("exit codes") {
    Workdir wd;
    CHECK(run_cli("--definitely-not-a-flag") == 2);
    CHECK(run_cli("estimate") == 2);  // missing required options
    CHECK(run_cli("smooth --in " + (wd.path / "absent.csv").string() + " --out " +
                  (wd.path / "x.csv").string()) == 1);
    std::ofstream(wd.path / "broken.csv") << "unit,year,a\nu1,1990,1\nu1,1990,2\n";
    CHECK(run_cli("smooth --in " + (wd.path / "broken.csv").string() + " --out " +
                  (wd.path / "x.csv").string()) == 1);
}

TEST_CASE("reruns are byte-identical under a pinned epoch") {
    Workdir wd;
    const fs::path& d = wd.path;
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    std::ofstream(d / "cfg.json") << R"({"n_units": 15, "n_years": 16, "seed": 77})";

    auto run_once = [&]() {
        REQUIRE(run_cli("simulate --config " + (d / "cfg.json").string() + " --out " +
                        (d / "panel.csv").string()) == 0);
        REQUIRE(run_cli("estimate --in " + (d / "panel.csv").string() +
                        " --outcome current_expenditures --no-unit-trends --out " +
                        (d / "est.json").string()) == 0);
        return bytes(d / "panel.csv") + "|" + bytes(d / "est.json") + "|" +
               bytes(d / "est.json.manifest.json");
    };
    std::string a = run_once();
    setenv("SHOCKPANEL_THREADS", "1", 1);
    std::string b = run_once();
    unsetenv("SHOCKPANEL_THREADS");
    unsetenv("SOURCE_DATE_EPOCH");
    CHECK(a == b);
}
