// End-to-end tests of the funcdiff command line tool. The binary under test
// is passed through the FUNCDIFF_CLI_BIN environment variable.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "funcdiff/data.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
    const char* bin = std::getenv("FUNCDIFF_CLI_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "FUNCDIFF_CLI_BIN must point at the funcdiff binary");
    REQUIRE(fs::exists(bin));
    return bin;
}

// Runs `<env> <bin> <args>` through the shell and returns the exit code.
int run_cli(const std::string& args, const std::string& env_prefix = "") {
    std::string cmd;
    if (!env_prefix.empty()) cmd += env_prefix + " ";
    cmd += "'" + cli_bin() + "' " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("funcdiff_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file: " << path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

// Parses a two-or-more-column numeric CSV, skipping the header.
std::vector<std::vector<double>> read_table(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            const std::size_t comma = line.find(',', start);
            const std::string field =
                line.substr(start, comma == std::string::npos ? std::string::npos
                                                              : comma - start);
            row.push_back(std::stod(field));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

TEST_CASE("gen writes the dataset, a sidecar, and honors the row count") {
    TempDir dir;
    const std::string out = dir.file("data.csv");
    CHECK(run_cli("gen --dataset linear --n 7 --grid 9 --seed 3 --out " + out) == 0);

    const std::string text = slurp(out);
    CHECK(count_lines(text) == 1 + 7 * 9);
    CHECK(text.rfind("function_id,x,y\n", 0) == 0);

    const funcdiff::FunctionalDataset data = funcdiff::load_csv(out);
    CHECK(data.size() == 7);
    CHECK(data.common_grid().size() == 9);

    const nlohmann::json side = nlohmann::json::parse(slurp(out + ".run.json"));
    CHECK(side["subcommand"] == "gen");
    CHECK(side["seed"] == 3);
    CHECK(side["params"]["dataset"] == "linear");
    CHECK(side["params"]["n"] == 7);
}

TEST_CASE("gen is reproducible by seed, including through the environment") {
    TempDir dir;
    const std::string a = dir.file("a.csv");
    const std::string b = dir.file("b.csv");
    const std::string c = dir.file("c.csv");
    const std::string d = dir.file("d.csv");
    CHECK(run_cli("gen --dataset mogp --n 5 --grid 8 --seed 42 --out " + a) == 0);
    CHECK(run_cli("gen --dataset mogp --n 5 --grid 8 --seed 42 --out " + b) == 0);
    CHECK(run_cli("gen --dataset mogp --n 5 --grid 8 --seed 43 --out " + c) == 0);
    CHECK(run_cli("gen --dataset mogp --n 5 --grid 8 --out " + d, "FUNCDIFF_SEED=42") == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
    CHECK(slurp(a) == slurp(d));
}

TEST_CASE("config files supply option values and explicit flags override them") {
    TempDir dir;
    {
        std::ofstream cfg(dir.file("cfg.json"));
        cfg << R"({"n": 4, "grid": 6, "dataset": "linear"})";
    }
    const std::string a = dir.file("a.csv");
    CHECK(run_cli("gen --config " + dir.file("cfg.json") + " --seed 1 --out " + a) == 0);
    CHECK(count_lines(slurp(a)) == 1 + 4 * 6);

    const std::string b = dir.file("b.csv");
    CHECK(run_cli("gen --config " + dir.file("cfg.json") + " --n 3 --seed 1 --out " + b) == 0);
    CHECK(count_lines(slurp(b)) == 1 + 3 * 6);
}

TEST_CASE("train, sample, and sample-cond chain together") {
    TempDir dir;
    const std::string data = dir.file("train.csv");
    REQUIRE(run_cli("gen --dataset linear --n 6 --grid 8 --seed 5 --out " + data) == 0);

    const std::string ckpt = dir.file("model.json");
    REQUIRE(run_cli("train --data " + data +
                    " --space l2 --T 8 --beta1 0.001 --betaT 0.2 --epochs 2 --lr 0.002"
                    " --batch 4 --layers 2 --width 6 --radius 0.3 --embed 4 --seed 7 --out " +
                    ckpt) == 0);
    CHECK(fs::exists(ckpt));
    const std::string loss = slurp(ckpt + ".loss.csv");
    CHECK(loss.rfind("step,loss\n", 0) == 0);
    // per-batch history: 6 curves in batches of 4 is 2 batches, times 2 epochs
    CHECK(count_lines(loss) == 1 + 4);
    for (const auto& row : read_table(ckpt + ".loss.csv")) {
        CHECK(std::isfinite(row.at(1)));
    }

    const std::string samples = dir.file("samples.csv");
    REQUIRE(run_cli("sample --model " + ckpt + " --n 3 --grid 10 --seed 9 --out " + samples) ==
            0);
    const funcdiff::FunctionalDataset s = funcdiff::load_csv(samples);
    CHECK(s.size() == 3);
    CHECK(s.common_grid().size() == 10);
    for (const auto& f : s.functions) {
        CHECK(f.values.allFinite());
    }

    {
        std::ofstream cond(dir.file("cond.csv"));
        cond << "x,y\n0.5,0.25\n";
    }
    const std::string cond_out = dir.file("cond_samples.csv");
    REQUIRE(run_cli("sample-cond --model " + ckpt + " --cond-file " + dir.file("cond.csv") +
                    " --n-free 2 --n 2 --grid 10 --seed 11 --out " + cond_out) == 0);
    const funcdiff::FunctionalDataset cs = funcdiff::load_csv(cond_out);
    CHECK(cs.size() == 2);
    // samples live on the union of the query grid and the conditioning point
    CHECK(cs.common_grid().size() == 11);
}

TEST_CASE("eval reports statistics and reference discrepancies") {
    TempDir dir;
    const std::string a = dir.file("a.csv");
    const std::string b = dir.file("b.csv");
    REQUIRE(run_cli("gen --dataset mogp --n 20 --grid 16 --seed 1 --out " + a) == 0);
    REQUIRE(run_cli("gen --dataset mogp --n 20 --grid 16 --seed 2 --out " + b) == 0);

    const std::string prefix = dir.file("report");
    CHECK(run_cli("eval --data " + a + " --ref " + b + " --max-lag 4 --out " + prefix) == 0);

    CHECK(slurp(prefix + ".meanvar.csv").rfind("x,mean,var\n", 0) == 0);
    CHECK(count_lines(slurp(prefix + ".meanvar.csv")) == 1 + 16);
    CHECK(count_lines(slurp(prefix + ".autocorr.csv")) == 1 + 5);

    const auto ac = read_table(prefix + ".autocorr.csv");
    CHECK(ac.at(0).at(1) == 1.0);

    const std::string summary = slurp(prefix + ".summary.csv");
    CHECK(summary.find("smoothness,") != std::string::npos);
    CHECK(summary.find("mse_mean,") != std::string::npos);
    CHECK(summary.find("mse_var,") != std::string::npos);
    CHECK(summary.find("mse_autocorr,") != std::string::npos);
}

TEST_CASE("eval rejects a reference on a different grid without writing outputs") {
    TempDir dir;
    const std::string a = dir.file("a.csv");
    const std::string b = dir.file("b.csv");
    REQUIRE(run_cli("gen --dataset mogp --n 10 --grid 16 --seed 1 --out " + a) == 0);
    REQUIRE(run_cli("gen --dataset mogp --n 10 --grid 24 --seed 1 --out " + b) == 0);

    const std::string prefix = dir.file("bad");
    CHECK(run_cli("eval --data " + a + " --ref " + b + " --max-lag 4 --out " + prefix) == 2);
    CHECK(!std::filesystem::exists(prefix + ".summary.csv"));
    CHECK(!std::filesystem::exists(prefix + ".meanvar.csv"));
}

TEST_CASE("kl-study reports refinement growth and truncation convergence") {
    TempDir dir;
    const std::string out = dir.file("study.csv");
    CHECK(run_cli("kl-study --kernel matern12 --lengthscale 0.1 --variance 1.0"
                  " --grids 8,16,32 --spectral-grid 16 --out " +
                  out) == 0);

    const auto study = read_table(out);
    REQUIRE(study.size() == 3);
    CHECK(study[0].at(0) == 8.0);
    CHECK(study[1].at(1) > study[0].at(1));
    CHECK(study[2].at(1) > study[1].at(1));

    const auto spectral = read_table(out + ".spectral.csv");
    REQUIRE(spectral.size() == 16);
    const double full = spectral.back().at(2);
    CHECK(std::abs(spectral.back().at(1) - full) <= 1e-8 * std::abs(full));
    CHECK(spectral.front().at(1) <= full + 1e-10);
}

TEST_CASE("fpca fits a baseline and samples from it") {
    TempDir dir;
    const std::string data = dir.file("data.csv");
    REQUIRE(run_cli("gen --dataset linear --n 10 --grid 8 --seed 4 --out " + data) == 0);
    const std::string out = dir.file("fpca.csv");
    CHECK(run_cli("fpca --data " + data + " --components 2 --n 5 --seed 6 --out " + out) == 0);
    const funcdiff::FunctionalDataset s = funcdiff::load_csv(out);
    CHECK(s.size() == 5);
    CHECK(s.common_grid().size() == 8);
}

TEST_CASE("oracle-sample with a point mass reproduces the target curve") {
    TempDir dir;
    const std::string out = dir.file("oracle.csv");
    CHECK(run_cli("oracle-sample --dataset pointmass --kernel matern32 --lengthscale 0.15"
                  " --variance 1.0 --T 30 --beta1 0.001 --betaT 0.1 --n 3 --grid 12"
                  " --seed 8 --out " +
                  out) == 0);
    const funcdiff::FunctionalDataset s = funcdiff::load_csv(out);
    REQUIRE(s.size() == 3);
    const Eigen::VectorXd& grid = s.common_grid();
    for (const auto& f : s.functions) {
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const double target = std::sin(2.0 * std::numbers::pi * grid(i));
            CHECK(std::abs(f.values(i) - target) <= 1e-6);
        }
    }
}

TEST_CASE("plot flag renders an SVG next to the CSV") {
    TempDir dir;
    const std::string out = dir.file("data.csv");
    CHECK(run_cli("gen --dataset linear --n 3 --grid 8 --seed 2 --plot --out " + out) == 0);
    const std::string svg = slurp(out + ".svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("usage errors exit with 1 and runtime errors with 2") {
    TempDir dir;
    CHECK(run_cli("gen --dataset linear --n 5 --grid 8") == 1);  // missing --out
    CHECK(run_cli("gen --dataset cubic --n 5 --grid 8 --out " + dir.file("x.csv")) == 1);
    CHECK(run_cli("nonsense") == 1);
    CHECK(run_cli("train --data " + dir.file("missing.csv") + " --out " + dir.file("m.json")) ==
          2);
    CHECK(run_cli("sample --model " + dir.file("missing.json") + " --out " +
                  dir.file("s.csv")) == 2);
    // invalid schedule: beta1 > betaT
    CHECK(run_cli("oracle-sample --dataset pointmass --T 10 --beta1 0.5 --betaT 0.1 --n 1"
                  " --grid 8 --out " +
                  dir.file("o.csv")) == 2);
}
