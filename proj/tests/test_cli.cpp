#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "cqasum/error.hpp"
#include "cqasum/io.hpp"

using namespace cqasum;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CQASUM_FIXTURES;

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cqasum_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string corpus() { return (kFixtures / "corpus").string(); }

} // namespace

TEST_CASE("version and help") {
    const auto v = run_cli({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out == std::string(kFormatVersion) + "\n");

    // Every subcommand with every flag it consumes.
    const std::map<std::string, std::vector<std::string>> documented = {
        {"ingest", {"--qa-pairs", "--summaries", "--out"}},
        {"stats", {"--corpus", "--out"}},
        {"filter", {"--corpus", "--out", "--min-tokens", "--max-tokens", "--pronoun-lexicon"}},
        {"sample-seeds", {"--corpus", "--out", "--k", "--seed"}},
        {"score-rewrites", {"--corpus", "--rewrites", "--out"}},
        {"enrich", {"--corpus", "--out", "--threshold"}},
        {"summarize", {"--corpus", "--method", "--out", "--budget", "--granularity", "--split"}},
        {"oracle-labels", {"--corpus", "--out", "--max-select"}},
        {"train", {"--corpus", "--config", "--out", "--split", "--seed"}},
        {"generate", {"--corpus", "--checkpoint", "--out", "--split"}},
        {"evaluate", {"--corpus", "--summaries", "--out", "--split"}},
        {"bws", {"--judgments", "--out"}},
        {"experiment", {"--config", "--corpus", "--out", "--seed"}},
        {"learning-curve", {"--config", "--corpus", "--out", "--seed", "--fractions"}},
        {"cross-category", {"--config", "--corpus", "--out", "--seed", "--categories"}},
    };
    const auto h = run_cli({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out == cli::full_help());
    for (const auto& [sub, flags] : documented) {
        const auto pos = h.out.find("\n" + sub);
        REQUIRE_MESSAGE(pos != std::string::npos, sub);
        const auto sub_help = run_cli({sub, "--help"});
        CHECK(sub_help.code == 0);
        for (const auto& f : flags) {
            CHECK_MESSAGE(sub_help.out.find(f) != std::string::npos, sub << " " << f);
            CHECK_MESSAGE(h.out.find(f, pos) != std::string::npos, sub << " " << f);
        }
    }
}

TEST_CASE("usage errors exit 1 with a hint") {
    auto r = run_cli({"stats", "--corpus", corpus(), "--out", "/tmp/x", "--bogus"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--help") != std::string::npos);
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"nonsense"}).code == 1);
    CHECK(run_cli({"sample-seeds", "--corpus", corpus(), "--out", "/tmp/x"}).code == 1);  // --seed is required
    CHECK(run_cli({"summarize", "--corpus", corpus(), "--method", "bart", "--out", "/tmp/x"}).code == 1);
}

TEST_CASE("data errors exit 2 and name file and line") {
    const auto dir = scratch("bad");
    std::ofstream(dir / "qa_pairs.jsonl") << "{\"id\":\"a\"}\n";
    const auto r = run_cli({"stats", "--corpus", dir.string(), "--out", (dir / "out").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("qa_pairs.jsonl:1") != std::string::npos);
}

TEST_CASE("stats on the fixture corpus") {
    const auto out = scratch("stats");
    REQUIRE(run_cli({"stats", "--corpus", corpus(), "--out", out.string()}).code == 0);
    const Json j = read_json_file(out / "report.json");
    CHECK(j["overall"]["compression_ratio_pct"].is_number());
    CHECK(fs::exists(out / "report.md"));
}

TEST_CASE("lexrank without budget or references names the budget rule") {
    const auto dir = scratch("norefs");
    fs::copy_file(kFixtures / "corpus" / "qa_pairs.jsonl", dir / "qa_pairs.jsonl");
    const auto r = run_cli({"summarize", "--corpus", dir.string(), "--method", "lexrank", "--out",
                        (dir / "s.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("budget") != std::string::npos);
    CHECK(r.err.find("mean reference") != std::string::npos);
    CHECK(run_cli({"summarize", "--corpus", dir.string(), "--method", "lexrank", "--budget", "20", "--out",
               (dir / "s.jsonl").string()})
              .code == 0);
}

TEST_CASE("evaluate with references as system output gives 100") {
    const auto dir = scratch("perfect");
    std::ofstream sys(dir / "sys.jsonl");
    std::ifstream refs(kFixtures / "corpus" / "summaries.jsonl");
    for (std::string line; std::getline(refs, line);) {
        const Json r = Json::parse(line);
        Json j;
        j["entity_id"] = r["entity_id"];
        j["system"] = "oracle";
        j["summary"] = r["reference_summary"];
        sys << j.dump() << "\n";
    }
    sys.close();
    REQUIRE(run_cli({"evaluate", "--corpus", corpus(), "--summaries", (dir / "sys.jsonl").string(), "--out",
                 (dir / "eval").string()})
                .code == 0);
    const Json j = read_json_file(dir / "eval" / "report.json");
    for (const auto& [k, v] : j["oracle"].items()) CHECK(v.get<double>() == 100.0);
    CHECK(read_text_file(dir / "eval" / "report.md").find("100.00") != std::string::npos);
}

TEST_CASE("seed sampling is reproducible from the seed") {
    const auto dir = scratch("seeds");
    auto run = [&](const std::string& seed, const std::string& name) {
        REQUIRE(run_cli({"sample-seeds", "--corpus", corpus(), "--seed", seed, "--out", (dir / name).string()}).code == 0);
        return read_text_file(dir / name / "selection.jsonl");
    };
    CHECK(run("5", "a") == run("5", "b"));
    CHECK(run("5", "a") != run("6", "c"));
}

TEST_CASE("auxiliary subcommands") {
    const auto dir = scratch("aux");
    CHECK(run_cli({"filter", "--corpus", corpus(), "--out", (dir / "f").string()}).code == 0);
    CHECK(read_text_file(dir / "f" / "filter_report.jsonl").find("pronoun") != std::string::npos);
    CHECK(run_cli({"enrich", "--corpus", corpus(), "--out", (dir / "e").string()}).code == 0);
    CHECK(run_cli({"score-rewrites", "--corpus", corpus(), "--rewrites", (kFixtures / "rewrites.jsonl").string(),
               "--out", (dir / "r").string()})
              .code == 0);
    CHECK(fs::exists(dir / "r" / "raw_summaries.jsonl"));
    CHECK(run_cli({"oracle-labels", "--corpus", corpus(), "--out", (dir / "labels.jsonl").string()}).code == 0);
    const auto bws = run_cli({"bws", "--judgments", (kFixtures / "judgments.jsonl").string(), "--out", (dir / "b").string()});
    CHECK(bws.code == 0);
    CHECK(bws.out.find("+60.00") != std::string::npos);
    CHECK(run_cli({"cross-category", "--config", (kFixtures / "experiment.json").string(), "--seed", "1", "--out",
               (dir / "cc").string()})
              .code == 2);  // three entities per category
}

TEST_CASE("experiment, train and generate") {
    const auto dir = scratch("exp");
    const std::string cfg = (kFixtures / "experiment.json").string();
    REQUIRE(run_cli({"experiment", "--config", cfg, "--seed", "3", "--out", (dir / "a").string()}).code == 0);
    REQUIRE(run_cli({"experiment", "--config", cfg, "--seed", "3", "--out", (dir / "b").string()}).code == 0);
    for (const char* f : {"report.json", "report.md", "split.json", "system_summaries.jsonl"})
        CHECK(read_text_file(dir / "a" / f) == read_text_file(dir / "b" / f));
    CHECK(fs::exists(dir / "a" / "timestamps.json"));

    std::ofstream(dir / "train.json")
        << R"({"model":{"d_model":8,"n_heads":1,"d_ff":16,"max_tgt_len":16},"optimizer":{"epochs":2}})";
    REQUIRE(run_cli({"train", "--corpus", corpus(), "--config", (dir / "train.json").string(), "--seed", "1", "--out",
                 (dir / "m").string()})
                .code == 0);
    const std::string csv = read_text_file(dir / "m" / "loss_history.csv");
    CHECK(csv.rfind("epoch,steps,total_loss,gen_loss,cls_loss,val_rouge1_f1\n", 0) == 0);
    REQUIRE(run_cli({"generate", "--corpus", corpus(), "--checkpoint", (dir / "m" / "checkpoint.json").string(),
                 "--split", (dir / "m" / "split.json").string(), "--out", (dir / "gen.jsonl").string()})
                .code == 0);
    CHECK(fs::exists(dir / "gen.jsonl"));
}
