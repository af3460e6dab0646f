// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "freeinit/tensor_io.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

const char* const kBinary = FREEINIT_CLI_PATH;

int run(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string(kBinary) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int count_lines(const fs::path& p)
{
    std::istringstream in(slurp(p));
    std::string line;
    int n = 0;
    while (std::getline(in, line))
        ++n;
    return n;
}

// Small enough that training takes a few seconds.
const char* const kTinyConfig = R"({
  "dataset": {"frames": 4, "height": 16, "width": 16, "n_videos": 16},
  "model": {"hidden": 8, "time_embed_dim": 8, "res_blocks": 1,
            "training": {"epochs": 1, "batch_size": 4}},
  "sampler": {"ddim_steps": 6, "iterations": 2},
  "analysis": {"snr_videos": 4, "snr_ts": [1, 500, 1000],
               "ablate": {"families": ["gaussian", "ideal"], "iterations": [1, 2],
                          "noise_reinit": [true], "classes": [0, 1]}}
})";

struct Workspace {
    fs::path dir;
    fs::path config;
    fs::path out;
};

// Trains once and shares the weights between test cases.
const Workspace& workspace()
{
    static const Workspace ws = [] {
        Workspace w;
        w.dir = testing::scratch_dir("cli");
        w.config = w.dir / "cfg.json";
        w.out = w.dir / "out";
        std::ofstream(w.config) << kTinyConfig;
        const int rc = run("train -c " + w.config.string() + " -o " + w.out.string(), w.dir / "train.log");
        REQUIRE_MESSAGE(rc == 0, slurp(w.dir / "train.log"));
        return w;
    }();
    return ws;
}

std::string base(const Workspace& w, const fs::path& out)
{
    return " -c " + w.config.string() + " -o " + out.string();
}

} // namespace

TEST_CASE("cli: usage and config errors exit with 2")
{
    const fs::path dir = testing::scratch_dir("cli_errors");
    CHECK(run("", dir / "log") != 0);
    CHECK(run("train -c " + (dir / "missing.json").string(), dir / "log") == 2);
    std::ofstream(dir / "bad.json") << R"({"sampler": {"bogus": 1}})";
    CHECK(run("sample -c " + (dir / "bad.json").string(), dir / "log") == 2);
    CHECK(slurp(dir / "log").find("bogus") != std::string::npos);
    CHECK(run("freeinit --iters -3 -o " + dir.string(), dir / "log") == 2);
}

TEST_CASE("cli: sampling without weights exits with 4")
{
    const fs::path dir = testing::scratch_dir("cli_noweights");
    CHECK(run("sample -o " + (dir / "empty").string(), dir / "log") == 4);
}

TEST_CASE("cli: train writes weights and reports")
{
    const Workspace& w = workspace();
    for (const char* f : {"model.fin", "model.json", "train_report.json", "train_losses.csv",
                          "train_config.json"})
        CHECK_MESSAGE(fs::exists(w.out / f), f);
    CHECK(count_lines(w.out / "train_losses.csv") == 2);
}

TEST_CASE("cli: freeinit is reproducible and N = 0 equals plain sampling")
{
    const Workspace& w = workspace();
    const fs::path a = w.dir / "fi_a", b = w.dir / "fi_b";
    for (const fs::path& o : {a, b}) {
        fs::copy(w.out, o, fs::copy_options::recursive);
        REQUIRE(run("freeinit --dump-iters" + base(w, o), o / "log") == 0);
    }
    for (const char* f : {"freeinit_z0.fin", "freeinit_scores.csv", "freeinit.json", "iter_00_z0.fin",
                          "iter_02_z0.fin"})
        CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    CHECK(count_lines(a / "freeinit_scores.csv") == 1 + 3);

    const fs::path z = w.dir / "fi_zero";
    fs::copy(w.out, z, fs::copy_options::recursive);
    REQUIRE(run("freeinit --iters 0" + base(w, z), z / "log") == 0);
    REQUIRE(run("sample" + base(w, z), z / "log") == 0);
    CHECK(slurp(z / "freeinit_z0.fin") == slurp(z / "sample_z0.fin"));
    CHECK(slurp(a / "iter_00_z0.fin") == slurp(z / "sample_z0.fin"));
}

TEST_CASE("cli: freeinit variants")
{
    const Workspace& w = workspace();
    const fs::path o = w.dir / "fi_variants";
    fs::copy(w.out, o, fs::copy_options::recursive);

    REQUIRE(run("freeinit --coarse-to-fine --iters 4 --steps 50" + base(w, o), o / "log") == 0);
    CHECK(slurp(o / "log").find("coarse-to-fine steps: [13,25,38,50]") != std::string::npos);
    const auto summary = nlohmann::json::parse(slurp(o / "freeinit.json"));
    CHECK(summary.at("steps_per_pass") == nlohmann::json({50, 13, 25, 38, 50}));

    REQUIRE(run("freeinit --no-reinit" + base(w, o), o / "log") == 0);
    const std::string no_reinit = slurp(o / "freeinit_z0.fin");
    REQUIRE(run("freeinit" + base(w, o), o / "log") == 0);
    CHECK(no_reinit != slurp(o / "freeinit_z0.fin"));

    REQUIRE(run("freeinit --filter butterworth --d0 0.4 --class -1" + base(w, o), o / "log") == 0);
    CHECK(run("freeinit --filter bandpass" + base(w, o), o / "log") == 2);
}

TEST_CASE("cli: analysis commands")
{
    const Workspace& w = workspace();
    const fs::path o = w.dir / "analysis";
    fs::copy(w.out, o, fs::copy_options::recursive);

    REQUIRE(run("mix" + base(w, o), o / "log") == 0);
    CHECK(count_lines(o / "mix.csv") == 1 + 5);
    CHECK(fs::exists(o / "mix_00_z0.fin"));

    REQUIRE(run("ablate --runs 3" + base(w, o), o / "log") == 0);
    CHECK(count_lines(o / "ablation.csv") == 1 + 4 * 3);

    REQUIRE(run("snr" + base(w, o), o / "log") == 0);
    CHECK(count_lines(o / "snr.csv") == 1 + 3 * 4);

    // A static video: every frame equal, so consistency is 1.
    freeinit::VideoTensor still({4, 1, 16, 16});
    const freeinit::VideoTensor frame = testing::random_tensor({1, 1, 16, 16}, 3);
    for (int f = 0; f < 4; ++f)
        still.values().segment(f * 256, 256) = frame.values();
    freeinit::save_tensor(still, o / "still.fin");
    REQUIRE(run("snr --input " + (o / "still.fin").string() + base(w, o), o / "log") == 0);
    REQUIRE(run("metrics --input " + (o / "still.fin").string() + " --input " +
                    (o / "mix_00_z0.fin").string() + base(w, o),
                o / "log") == 0);
    const std::string metrics = slurp(o / "metrics.csv");
    CHECK(count_lines(o / "metrics.csv") == 3);
    const auto at = metrics.find("still.fin,4,");
    REQUIRE(at != std::string::npos);
    CHECK(std::stod(metrics.substr(at + 12)) == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(run("metrics --input " + (o / "nope.fin").string() + base(w, o), o / "log") == 4);
}
