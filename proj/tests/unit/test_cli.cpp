#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbc/config_io.hpp"
#include "cbc/imaging.hpp"
#include "cbc/png_io.hpp"
#include "cbc/rng.hpp"

using namespace cbc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "cbc_cli_test";

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Run cbclab(const std::string& args, const std::string& env = "") {
    fs::create_directories(kRoot);
    const fs::path out = kRoot / "stdout.txt";
    const fs::path err = kRoot / "stderr.txt";
    const std::string cmd = env + " " + CBCLAB_PATH + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string dir(const std::string& name) {
    const fs::path p = kRoot / name;
    fs::remove_all(p);
    return p.string();
}

// Seven fibres on a 512 grid: every subcommand finishes in seconds.
std::string small_config_file() {
    FibreArrayConfig c = default_config();
    c.rings = 1;
    c.grid.n = 512;
    const fs::path p = kRoot / "seven.txt";
    fs::create_directories(kRoot);
    save_config(c, p);
    return p.string();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("simulate: flat reference") {
    const std::string out = dir("flat");
    const Run r = cbclab("simulate --out " + out);
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const json meta = json::parse(slurp(fs::path(out) / "metadata.json"));
    const auto& item = meta["items"][0];
    CHECK(item["pib"].get<double>() == 100.0);
    CHECK(item["pib_image"].get<double>() == 100.0);
    for (double p : item["phases"]) CHECK(p == 0.0);
    CHECK(read_png_rgb(fs::path(out) / "intensity.png").width == 256);
    CHECK(read_png_rgb(fs::path(out) / "phase.png").width == 256);
    CHECK(fs::exists(fs::path(out) / "run_config.txt"));
    CHECK(load_config(fs::path(out) / "config.txt").fibre_count() == 19);
}

TEST_CASE("simulate: seeded pairs and galleries") {
    const std::string a = dir("seed_a");
    const std::string b = dir("seed_b");
    REQUIRE(cbclab("simulate --seed 5 --out " + a).code == 0);
    REQUIRE(cbclab("simulate --seed 5 --out " + b).code == 0);
    CHECK(slurp(fs::path(a) / "intensity.png") == slurp(fs::path(b) / "intensity.png"));
    CHECK(slurp(fs::path(a) / "phase.png") == slurp(fs::path(b) / "phase.png"));
    CHECK(slurp(fs::path(a) / "metadata.json") == slurp(fs::path(b) / "metadata.json"));

    const std::string g = dir("gallery");
    REQUIRE(cbclab("simulate --config " + small_config_file() + " --seed 3 --count 12 --out " + g).code == 0);
    const json meta = json::parse(slurp(fs::path(g) / "metadata.json"));
    CHECK(meta["items"].size() == 12);
    CHECK(fs::exists(fs::path(g) / "000011_x.png"));
    CHECK(fs::exists(fs::path(g) / "000011_y.png"));
    CHECK(meta["items"][4]["seed"].get<std::uint64_t>() == derive_seed(3, 4));
}

TEST_CASE("simulate: bad input is a user error") {
    const std::string out = dir("bad");
    fs::create_directories(kRoot);
    std::ofstream(kRoot / "garbage.json") << "[0, ";
    Run r = cbclab("simulate --phases " + (kRoot / "garbage.json").string() + " --out " + out);
    CHECK(r.code == 1);
    CHECK(r.err.find("error") != std::string::npos);

    std::ofstream(kRoot / "three.json") << "[0, 0.5, 1.0]";
    r = cbclab("simulate --phases " + (kRoot / "three.json").string() + " --out " + out);
    CHECK(r.code == 1);
    CHECK(r.err.find("19 fibres") != std::string::npos);

    CHECK(cbclab("simulate --phases " + (kRoot / "three.json").string() + " --seed 1 --out " + out).code == 1);
    CHECK(cbclab("simulate --phases /nonexistent.json --out " + out).code == 1);
    CHECK(cbclab("simulate").code == 1);
    CHECK(cbclab("").code == 1);
    CHECK(cbclab("frobnicate").code == 1);
    CHECK(cbclab("--help").code == 0);
}

TEST_CASE("unknown keys are rejected") {
    const std::string out = dir("unknown");
    std::ofstream(kRoot / "typo.txt") << "rings = 1\nwavelenght = 1e-6\n";
    Run r = cbclab("simulate --config " + (kRoot / "typo.txt").string() + " --out " + out);
    CHECK(r.code == 1);
    CHECK(r.err.find("wavelenght") != std::string::npos);
    CHECK(cbclab("simulate --colour red --out " + out).code == 1);
    std::ofstream(kRoot / "run.txt") << "simulate.bogus=1\n";
    CHECK(cbclab("--run-config " + (kRoot / "run.txt").string() + " simulate --out " + out).code == 1);
}

TEST_CASE("run_config snapshot replays the run") {
    const std::string first = dir("replay_a");
    REQUIRE(cbclab("simulate --config " + small_config_file() + " --seed 9 --count 2 --out " + first).code == 0);
    const std::string snapshot = slurp(fs::path(first) / "run_config.txt");
    CHECK(snapshot.find("simulate.seed=9") != std::string::npos);
    CHECK(snapshot.find("simulate.count=2") != std::string::npos);

    // the snapshot names the old output directory; --out on the command line wins
    const std::string second = dir("replay_b");
    REQUIRE(cbclab("--run-config " + first + "/run_config.txt simulate --out " + second).code == 0);
    CHECK(slurp(fs::path(first) / "metadata.json") == slurp(fs::path(second) / "metadata.json"));
    CHECK(slurp(fs::path(first) / "000001_x.png") == slurp(fs::path(second) / "000001_x.png"));
}

TEST_CASE("generate and verify") {
    const std::string ds = dir("dataset");
    Run r = cbclab("generate --config " + small_config_file() + " --count 6 --seed 2 --out " + ds);
    REQUIRE(r.code == 0);
    const json g = json::parse(r.out);
    CHECK(g["count"] == 6);
    CHECK(g["complete"] == true);

    r = cbclab("verify " + ds + " --resimulate 6");
    CHECK(r.code == 0);
    const json v = json::parse(r.out);
    CHECK(v["ok"] == true);
    CHECK(v["resimulated"] == 6);

    std::string bytes = slurp(fs::path(ds) / "pairs/000003_y.png");
    bytes[bytes.size() / 2] ^= 0x10;
    std::ofstream(fs::path(ds) / "pairs/000003_y.png", std::ios::binary) << bytes;
    r = cbclab("verify " + ds);
    CHECK(r.code == 1);
    CHECK(json::parse(r.out)["failures"][0]["id"] == 3);

    CHECK(cbclab("verify " + dir("nothing_here")).code == 1);
}

TEST_CASE("evaluate: oracle, CSV layout and worker invariance") {
    const std::string ds = dir("eval_ds");
    REQUIRE(cbclab("generate --config " + small_config_file() + " --count 20 --seed 4 --out " + ds).code == 0);

    const std::string out = dir("eval_oracle");
    const Run r = cbclab("evaluate --testset " + ds + " --count 20 --engine oracle --noise-units 0,1 --dataset-size 1500 --out " + out,
                         "CBC_WORKERS=1");
    REQUIRE(r.code == 0);
    const json summary = json::parse(r.out);
    CHECK(summary["levels"].size() == 2);
    CHECK(summary["failures"].empty());

    const auto rows = read_csv(fs::path(out) / "results.csv");
    REQUIRE(rows.size() == 41);
    CHECK(rows[0] == std::vector<std::string>{"case_id", "seed", "pib_before", "pib_after", "noise_units", "dataset_size"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 6);
        CHECK(std::stod(rows[i][3]) == doctest::Approx(100.0).epsilon(1e-6));
        CHECK(rows[i][5] == "1500");
    }
    const auto ccdf = read_csv(fs::path(out) / "ccdf.csv");
    CHECK(ccdf.size() == 102);
    CHECK(ccdf[0].size() == 4);
    CHECK(ccdf[1][0] == "0");

    const std::string again = dir("eval_oracle_w3");
    REQUIRE(cbclab("evaluate --testset " + ds + " --count 20 --engine oracle --noise-units 0,1 --dataset-size 1500 --out " + again,
                   "CBC_WORKERS=3")
                .code == 0);
    CHECK(slurp(fs::path(out) / "results.csv") == slurp(fs::path(again) / "results.csv"));

    CHECK(cbclab("evaluate --testset " + ds + " --config " + small_config_file() + " --out " + out).code == 1);
}

TEST_CASE("evaluate: identity engine leaves the distribution alone") {
    const std::string out = dir("eval_identity");
    const Run r = cbclab("evaluate --config " + small_config_file() + " --count 500 --engine identity --noise-units 0 --out " + out);
    REQUIRE(r.code == 0);
    const json level = json::parse(r.out)["levels"][0];
    CHECK(level["ks_before_after"].get<double>() <= 0.05);
    CHECK(level["mean_after"].get<double>() == doctest::Approx(level["mean_before"].get<double>()));
}

TEST_CASE("evaluate: GS engine under one unit of noise") {
    // measured once: 40 cases, seven fibres
    const std::string out = dir("eval_gs");
    const Run r = cbclab("evaluate --config " + small_config_file() + " --count 40 --engine gs --noise-units 0,1 --out " + out);
    REQUIRE(r.code == 0);
    const json levels = json::parse(r.out)["levels"];
    const double clean = levels[0]["mean_after"];
    const double noisy = levels[1]["mean_after"];
    MESSAGE("mean PIB after correction: " << clean << " clean, " << noisy << " at 1 unit; before "
                                           << levels[0]["mean_before"].get<double>());
    CHECK(clean - noisy < 5.0);
    CHECK(clean > levels[0]["mean_before"].get<double>());
}

TEST_CASE("evaluate: engine failures are recorded and the run continues") {
    const std::string out = dir("eval_fail");
    const Run r = cbclab("evaluate --config " + small_config_file() + " --count 3 --engine neural --model fail --neural-cmd " +
                         FAKE_NEURAL_PATH + " --noise-units 0 --out " + out);
    REQUIRE(r.code == 0);
    const json s = json::parse(r.out);
    CHECK(s["failures"].size() == 3);
    CHECK(s["levels"][0]["failures"] == 3);
    const auto rows = read_csv(fs::path(out) / "results.csv");
    CHECK(rows[1][3] == "nan");

    CHECK(cbclab("evaluate --config " + small_config_file() + " --engine neural --out " + out).code == 1);
}

TEST_CASE("feasibility: report, diff image and exit codes") {
    const std::string cfg = small_config_file();
    const std::string ds = dir("feas_ds");
    REQUIRE(cbclab("generate --config " + cfg + " --count 12 --seed 6 --out " + ds).code == 0);

    const std::string out = dir("feas");
    Run r = cbclab("feasibility --testset " + ds + " --calibrate 10 --rotate 0,30,60 --out " + out);
    REQUIRE(r.code == 0);
    const json rep = json::parse(slurp(fs::path(out) / "report.json"));
    CHECK(json::parse(r.out) == rep);
    CHECK(rep["calibration"]["images"] == 10);
    CHECK(rep["calibration"]["direct"]["residuals"].size() == 10);
    REQUIRE(rep["reports"].size() == 3);
    for (const auto& item : rep["reports"]) {
        CHECK(item["ok"] == true);
        CHECK(item["feasible"] == (item["residual"].get<double>() <= item["threshold"].get<double>()));
    }
    CHECK(rep["reports"][0]["feasible"] == true);
    CHECK(rep["reports"][1]["feasible"] == false);
    CHECK(fs::exists(fs::path(out) / "target.png"));
    std::size_t diffs = 0;
    for (const auto& e : fs::directory_iterator(out)) diffs += e.path().filename().string().find("diff") != std::string::npos;
    CHECK(diffs == 3);

    // a fixed threshold and an explicit target
    const std::string flat = dir("feas_flat");
    REQUIRE(cbclab("simulate --config " + cfg + " --out " + flat).code == 0);
    const std::string out2 = dir("feas_fixed");
    r = cbclab("feasibility --config " + cfg + " --target " + flat + "/intensity.png --threshold 0.05 --out " + out2);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["reports"][0]["feasible"] == true);

    CHECK(cbclab("feasibility --config " + cfg + " --out " + out2).code == 1);
    CHECK(cbclab("feasibility --config " + cfg + " --target " + flat + "/intensity.png --out " + out2).code == 1);
    // the engine breaks while calibrating: not the user's fault
    r = cbclab("feasibility --testset " + ds + " --calibrate 4 --engine neural --model fail --neural-cmd " +
               std::string(FAKE_NEURAL_PATH) + " --out " + out2);
    CHECK(r.code == 2);
    CHECK(r.err.find("internal error") != std::string::npos);
}
