// End-to-end checks driving the installed binary through the documented
// pipeline: synth -> convert -> split -> train -> eval -> quantize -> pack
// -> inspect -> bench -> infer. The binary path arrives in $SLR_CLI.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
    const char* cli = std::getenv("SLR_CLI");
    REQUIRE_MESSAGE(cli != nullptr, "SLR_CLI must point at the slr binary");
    const std::string command = std::string(cli) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult result;
    char buffer[4096];
    std::size_t n = 0;
    while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
        result.output.append(buffer, n);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

// One shared workspace: the pipeline artifacts build on each other.
struct Workspace {
    fs::path dir;
    fs::path csv;
    fs::path model;
    fs::path quant_model;

    Workspace() {
        dir = fs::temp_directory_path() /
              ("slr_cli_test_" + std::to_string(getpid()));
        fs::create_directories(dir);
        csv = dir / "data.csv";
    }
};

Workspace& workspace() {
    static Workspace ws;
    return ws;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("synth and convert") {
    Workspace& ws = workspace();
    const auto synth = run_cli("synth --out " + q(ws.csv) +
                               " --count 1200 --seed 7");
    REQUIRE(synth.exit_code == 0);
    CHECK(synth.output.find("1200") != std::string::npos);

    const auto convert = run_cli("convert --csv " + q(ws.csv) + " --out-dir " +
                                 q(ws.dir / "png"));
    REQUIRE(convert.exit_code == 0);
    CHECK(convert.output.find("1200 images, 24 classes") != std::string::npos);
    CHECK(fs::exists(ws.dir / "png" / "0_A.png"));

    SUBCASE("missing file is a usage error") {
        const auto missing = run_cli("convert --csv " + q(ws.dir / "no.csv") +
                                     " --out-dir " + q(ws.dir / "x"));
        CHECK(missing.exit_code == 2);
        CHECK(missing.output.find("no.csv") != std::string::npos);
    }
    SUBCASE("empty-but-headered csv is a usage error") {
        const fs::path empty = ws.dir / "empty.csv";
        {
            std::ofstream out(empty);
            out << "label";
            for (int i = 1; i <= 784; ++i) out << ",pixel" << i;
            out << "\n";
        }
        const auto r = run_cli("convert --csv " + q(empty) + " --out-dir " +
                               q(ws.dir / "y"));
        CHECK(r.exit_code == 2);
    }
    SUBCASE("json output parses") {
        const auto r = run_cli("--json convert --csv " + q(ws.csv) +
                               " --out-dir " + q(ws.dir / "png2"));
        REQUIRE(r.exit_code == 0);
        const json doc = json::parse(r.output);
        CHECK(doc["images"] == 1200);
        CHECK(doc["classes"] == 24);
    }
}

TEST_CASE("split manifest determinism") {
    Workspace& ws = workspace();
    const fs::path a = ws.dir / "split_a.txt";
    const fs::path b = ws.dir / "split_b.txt";
    const auto r1 = run_cli("--seed 5 split --csv " + q(ws.csv) + " --out " +
                            q(a));
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.output.find("train=960") != std::string::npos);
    CHECK(r1.output.find("val=120") != std::string::npos);
    const auto r2 = run_cli("--seed 5 split --csv " + q(ws.csv) + " --out " +
                            q(b));
    REQUIRE(r2.exit_code == 0);
    CHECK(read_file(a) == read_file(b));
}

TEST_CASE("train is reproducible and writes its artifacts") {
    Workspace& ws = workspace();
    ws.model = ws.dir / "model.slrm";
    const std::string common =
        "--seed 7 train --csv " + q(ws.csv) +
        " --backbone flatten --steps 60 --batch-size 100"
        " --cache-dir " + q(ws.dir / "cache") +
        " --metrics " + q(ws.dir / "metrics.csv") +
        " --report " + q(ws.dir / "report.json") +
        " --out " + q(ws.model);

    const auto first = run_cli(common);
    REQUIRE_MESSAGE(first.exit_code == 0, first.output);
    CHECK(first.output.find("training accuracy:") != std::string::npos);
    CHECK(first.output.find("validation accuracy:") != std::string::npos);
    REQUIRE(fs::exists(ws.model));
    const std::string model_bytes = read_file(ws.model);
    const std::string metrics_bytes = read_file(ws.dir / "metrics.csv");

    const auto second = run_cli(common);
    REQUIRE(second.exit_code == 0);
    CHECK(second.output == first.output);
    CHECK(read_file(ws.model) == model_bytes);  // byte-stable artifact
    CHECK(read_file(ws.dir / "metrics.csv") == metrics_bytes);

    const json report = json::parse(read_file(ws.dir / "report.json"));
    CHECK(report["summary"]["parameters"] ==
          24 + 784 * 24);  // flatten backbone carries no weights
    CHECK(report["metrics"].size() == 60 / 10 + 1);

    SUBCASE("steps=0 prints the zero-head baseline") {
        const auto r = run_cli(
            "--seed 7 --json train --csv " + q(ws.csv) +
            " --backbone flatten --steps 0"
            " --cache-dir " + q(ws.dir / "cache") +
            " --metrics " + q(ws.dir / "m0.csv") +
            " --report " + q(ws.dir / "r0.json") +
            " --out " + q(ws.dir / "zero.slrm"));
        REQUIRE_MESSAGE(r.exit_code == 0, r.output);
        const json doc = json::parse(r.output);
        // ties resolve to class 0, so accuracy equals the class-0 share
        const double acc = doc["validation_accuracy"].get<double>();
        CHECK(acc > 0.0);
        CHECK(acc < 0.15);
        CHECK(doc["validation_xent"].get<double>() ==
              doctest::Approx(std::log(24.0)).epsilon(1e-9));
    }
}

TEST_CASE("eval reports a section") {
    Workspace& ws = workspace();
    const auto r = run_cli("--seed 7 --json eval --model " + q(ws.model) +
                           " --csv " + q(ws.csv) +
                           " --section test --cache-dir " +
                           q(ws.dir / "cache"));
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    const json doc = json::parse(r.output);
    CHECK(doc["section"] == "test");
    CHECK(doc["count"] == 120);
    CHECK(doc["accuracy"].get<double>() >= 0.0);
    CHECK(doc["accuracy"].get<double>() <= 1.0);
}

TEST_CASE("quantize reports the 75 percent payload cut") {
    Workspace& ws = workspace();
    ws.quant_model = ws.dir / "model_q8.slrm";
    const auto r = run_cli("quantize --model " + q(ws.model) + " --out " +
                           q(ws.quant_model));
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(r.output.find("75.0%") != std::string::npos);
    CHECK(fs::exists(ws.quant_model));
    CHECK(fs::file_size(ws.quant_model) < fs::file_size(ws.model));
}

TEST_CASE("pack and inspect") {
    Workspace& ws = workspace();
    const fs::path repacked = ws.dir / "repacked.slrm";
    const auto pack = run_cli("pack --head-from " + q(ws.model) +
                              " --quantize-head --out " + q(repacked));
    REQUIRE_MESSAGE(pack.exit_code == 0, pack.output);

    const auto inspect = run_cli("inspect --model " + q(repacked));
    REQUIRE(inspect.exit_code == 0);
    CHECK(inspect.output.find("FAIL") == std::string::npos);
    CHECK(inspect.output.find("head.weights") != std::string::npos);

    const auto as_json = run_cli("--json inspect --model " + q(repacked));
    REQUIRE(as_json.exit_code == 0);
    const json doc = json::parse(as_json.output);
    CHECK(doc["ok"] == true);

    SUBCASE("corrupt container fails inspect and infer") {
        const fs::path broken = ws.dir / "broken.slrm";
        std::string bytes = read_file(repacked);
        bytes[bytes.size() / 2] ^= 0x01;
        std::ofstream(broken, std::ios::binary) << bytes;
        const auto bad = run_cli("inspect --model " + q(broken));
        CHECK(bad.exit_code == 2);
        CHECK(bad.output.find("FAIL") != std::string::npos);
        const auto infer = run_cli("infer --model " + q(broken) + " --csv " +
                                   q(ws.csv) + " --row 0");
        CHECK(infer.exit_code == 2);
    }
}

TEST_CASE("bench extrapolates fps") {
    Workspace& ws = workspace();
    const auto exact = run_cli("bench --device-gflops 10 --model-gflops 5");
    REQUIRE(exact.exit_code == 0);
    CHECK(exact.output.find("2.00 fps") != std::string::npos);

    const auto measured = run_cli("--json bench --model " + q(ws.model) +
                                  " --csv " + q(ws.csv) +
                                  " --warmup 2 --samples 5 --report " +
                                  q(ws.dir / "bench.json"));
    REQUIRE_MESSAGE(measured.exit_code == 0, measured.output);
    const json doc = json::parse(measured.output);
    CHECK(doc["latency"]["samples"] == 5);
    CHECK(doc["latency"]["mean_ms"].get<double>() > 0.0);
    CHECK(doc["load_ms"]["mapped"].get<double>() > 0.0);
    CHECK(doc["fps_at_device_gflops"].get<double>() > 0.0);
}

TEST_CASE("infer prints top-k lines and latency") {
    Workspace& ws = workspace();
    const std::string base = "infer --model " + q(ws.model) + " --csv " +
                             q(ws.csv) + " --row 0";

    const auto r = run_cli(base + " -k 3");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    const auto lines = lines_of(r.output);
    REQUIRE(lines.size() == 4);  // 3 class lines + latency
    CHECK(lines[3].rfind("latency_ms=", 0) == 0);
    for (int i = 0; i < 3; ++i) {
        std::istringstream line(lines[i]);
        std::string letter;
        double p = -1.0;
        line >> letter >> p;
        CHECK(letter.size() == 1);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }

    SUBCASE("same container and image give identical class lines") {
        const auto again = run_cli(base + " -k 3");
        REQUIRE(again.exit_code == 0);
        const auto lines2 = lines_of(again.output);
        REQUIRE(lines2.size() == 4);
        for (int i = 0; i < 3; ++i) CHECK(lines2[i] == lines[i]);
    }
    SUBCASE("k=24 printed probabilities sum to one") {
        // a cleanly separable corpus and a hot run, so the distribution is
        // sharp enough that 4-decimal printing keeps the total within the
        // contract
        const fs::path easy_csv = ws.dir / "easy.csv";
        const auto synth = run_cli("synth --out " + q(easy_csv) +
                                   " --count 1200 --seed 7 --noise 60");
        REQUIRE(synth.exit_code == 0);
        const fs::path confident = ws.dir / "confident.slrm";
        const auto trained = run_cli(
            "--seed 7 train --csv " + q(easy_csv) +
            " --backbone flatten --steps 400 --lr 5 --batch-size 100"
            " --cache-dir " + q(ws.dir / "cache_easy") +
            " --metrics " + q(ws.dir / "mconf.csv") +
            " --report " + q(ws.dir / "rconf.json") +
            " --out " + q(confident));
        REQUIRE_MESSAGE(trained.exit_code == 0, trained.output);
        const auto full = run_cli("infer --model " + q(confident) + " --csv " +
                                  q(easy_csv) + " --row 0 -k 24");
        REQUIRE(full.exit_code == 0);
        const auto rows = lines_of(full.output);
        REQUIRE(rows.size() == 25);
        double sum = 0.0;
        for (int i = 0; i < 24; ++i) {
            std::istringstream line(rows[i]);
            std::string letter;
            double p = 0.0;
            line >> letter >> p;
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-4);
    }
    SUBCASE("png input works") {
        const auto png = run_cli("infer --model " + q(ws.model) + " --image " +
                                 q(ws.dir / "png" / "0_A.png") + " -k 3");
        REQUIRE_MESSAGE(png.exit_code == 0, png.output);
        CHECK(lines_of(png.output).size() == 4);
    }
    SUBCASE("json output parses") {
        const auto j = run_cli("--json " + base);
        REQUIRE(j.exit_code == 0);
        const json doc = json::parse(j.output);
        CHECK(doc["topk"].size() == 3);
        CHECK(doc["latency_ms"].get<double>() > 0.0);
    }
    SUBCASE("quantized model also serves predictions") {
        const auto qr = run_cli("infer --model " + q(ws.quant_model) +
                                " --csv " + q(ws.csv) + " --row 1 -k 3");
        REQUIRE_MESSAGE(qr.exit_code == 0, qr.output);
        CHECK(lines_of(qr.output).size() == 4);
    }
}

TEST_CASE("usage errors exit with code 2") {
    Workspace& ws = workspace();
    CHECK(run_cli("wobble").exit_code == 2);
    CHECK(run_cli("train").exit_code == 2);  // missing required --csv
    CHECK(run_cli("infer --model " + q(ws.dir / "missing.slrm") + " --csv " +
                  q(ws.csv) + " --row 0")
              .exit_code == 2);
    CHECK(run_cli("infer --model " + q(ws.model) + " --csv " + q(ws.csv) +
                  " --row 999999")
              .exit_code == 2);
    CHECK(run_cli("infer --model " + q(ws.model))
              .exit_code == 2);  // neither --image nor --row
}

TEST_CASE("SLR_CACHE_DIR steers the bottleneck cache") {
    Workspace& ws = workspace();
    const fs::path env_cache = ws.dir / "env_cache";
    const char* cli = std::getenv("SLR_CLI");
    REQUIRE(cli != nullptr);
    const std::string command =
        "SLR_CACHE_DIR=" + q(env_cache) + " " + cli + " --seed 7 train --csv " +
        q(ws.csv) + " --backbone flatten --steps 1" + " --metrics " +
        q(ws.dir / "me.csv") + " --report " + q(ws.dir / "re.json") +
        " --out " + q(ws.dir / "env_model.slrm") + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buffer[4096];
    while (fread(buffer, 1, sizeof(buffer), pipe) > 0) {
    }
    REQUIRE(pclose(pipe) == 0);
    CHECK(fs::exists(env_cache));
    bool has_cache_file = false;
    for (const auto& entry : fs::directory_iterator(env_cache)) {
        if (entry.path().extension() == ".bnck") has_cache_file = true;
    }
    CHECK(has_cache_file);
}

TEST_CASE("json output for the remaining commands") {
    Workspace& ws = workspace();
    const auto split_json = run_cli("--json --seed 5 split --csv " +
                                    q(ws.csv));
    REQUIRE(split_json.exit_code == 0);
    const json s = json::parse(split_json.output);
    CHECK(s["train"] == 960);

    const auto quant_json = run_cli("--json quantize --model " + q(ws.model) +
                                    " --out " + q(ws.dir / "q2.slrm"));
    REQUIRE(quant_json.exit_code == 0);
    const json qj = json::parse(quant_json.output);
    CHECK(qj["reduction_percent"].get<double>() == 75.0);

    const auto pack_json = run_cli("--json pack --head-from " + q(ws.model) +
                                   " --out " + q(ws.dir / "p2.slrm"));
    REQUIRE(pack_json.exit_code == 0);
    CHECK(json::parse(pack_json.output)["bytes_written"].get<std::uint64_t>() >
          0);

    const auto synth_json = run_cli("--json synth --out " +
                                    q(ws.dir / "tiny.csv") + " --count 24");
    REQUIRE(synth_json.exit_code == 0);
    CHECK(json::parse(synth_json.output)["images"] == 24);
}

TEST_CASE("desk backbone end-to-end on a full-size corpus") {
    // the whole pipeline at the published corpus scale with the small
    // convolutional backbone: bottlenecks, training, quantization,
    // packing, inspection and inference all on one model
    Workspace& ws = workspace();
    const fs::path csv = ws.dir / "full.csv";
    const auto synth = run_cli("synth --out " + q(csv) +
                               " --count 27455 --seed 11");
    REQUIRE(synth.exit_code == 0);

    const fs::path model = ws.dir / "desk.slrm";
    const auto train = run_cli(
        "--seed 11 train --csv " + q(csv) + " --backbone desk"
        " --threads 0 --cache-dir " + q(ws.dir / "cache_desk") +
        " --metrics " + q(ws.dir / "desk_metrics.csv") +
        " --report " + q(ws.dir / "desk_report.json") +
        " --out " + q(model));
    REQUIRE_MESSAGE(train.exit_code == 0, train.output);
    CHECK(train.output.find("training accuracy:") != std::string::npos);
    REQUIRE(fs::exists(model));
    REQUIRE(fs::exists(ws.dir / "desk_metrics.csv"));
    const json report = json::parse(read_file(ws.dir / "desk_report.json"));
    CHECK(report["metrics"].size() == 5000 / 10 + 1);

    const fs::path quant = ws.dir / "desk_q8.slrm";
    REQUIRE(run_cli("quantize --model " + q(model) + " --out " + q(quant))
                .exit_code == 0);
    REQUIRE(run_cli("inspect --model " + q(quant)).exit_code == 0);
    const auto infer = run_cli("infer --model " + q(quant) + " --csv " +
                               q(csv) + " --row 42 -k 3");
    REQUIRE_MESSAGE(infer.exit_code == 0, infer.output);
    CHECK(lines_of(infer.output).size() == 4);
}

TEST_CASE("config file sits between defaults and flags") {
    Workspace& ws = workspace();
    const fs::path config = ws.dir / "config.json";
    std::ofstream(config) << R"({"steps": 5, "seed": 9})";

    const auto r = run_cli("--json --config " + q(config) + " train --csv " +
                           q(ws.csv) + " --backbone flatten" +
                           " --cache-dir " + q(ws.dir / "cache") +
                           " --metrics " + q(ws.dir / "mc.csv") +
                           " --report " + q(ws.dir / "rc.json") +
                           " --out " + q(ws.dir / "config_model.slrm"));
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    const json doc = json::parse(r.output);
    CHECK(doc["steps"] == 5);   // from the config file
    CHECK(doc["seed"] == 9);    // from the config file

    const auto flag_wins = run_cli(
        "--json --config " + q(config) + " --seed 3 train --csv " + q(ws.csv) +
        " --backbone flatten --steps 2" + " --cache-dir " +
        q(ws.dir / "cache") + " --metrics " + q(ws.dir / "mc2.csv") +
        " --report " + q(ws.dir / "rc2.json") + " --out " +
        q(ws.dir / "config_model2.slrm"));
    REQUIRE(flag_wins.exit_code == 0);
    const json doc2 = json::parse(flag_wins.output);
    CHECK(doc2["steps"] == 2);  // flag beats config
    CHECK(doc2["seed"] == 3);
}
