// End-to-end tests of the ingtag binary. CTest provides INGTAG_BIN; when it is
// missing (bare test binary run) these tests are skipped.

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "ingtag/corpus.hpp"
#include "support/fixtures.hpp"
#include "support/synth.hpp"

using namespace ingtag;
using nlohmann::json;
using test_support::TempDir;
using test_support::write_file;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    const char* bin = std::getenv("INGTAG_BIN");
    REQUIRE(bin != nullptr);
    CliResult r;
    const std::string cmd = env_prefix + std::string(bin) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf;
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

bool cli_available() { return std::getenv("INGTAG_BIN") != nullptr; }

const char* kToyTsv =
    "1\t_\tQUANTITY\n"
    "garlic\t_\tNAME\n"
    "clove\t_\tNAME\n"
    ",\t_\tOTHERS\n"
    "crushed\t_\tSTATE\n"
    "\n";

/// Minimal embedding file: one unrelated row, so every phrase token takes the
/// trainable OOV path.
std::string tiny_embeddings(std::size_t dim) {
    std::string line = "the";
    for (std::size_t i = 0; i < dim; ++i) line += " 0.01";
    return line + "\n";
}

/// Train a deterministic toy checkpoint that overfits the single toy phrase.
std::string make_toy_checkpoint(const TempDir& dir) {
    write_file(dir.file("toy.tsv"), kToyTsv);
    write_file(dir.file("vecs.txt"), tiny_embeddings(16));
    auto r = run_cli("train --data " + dir.file("toy.tsv") + " --embeddings " +
                     dir.file("vecs.txt") + " --out " + dir.file("toy.ckpt") +
                     " --dim 16 --n-layers 1 --lr 0.01 --dropout 0 --epochs 150" +
                     " --dev-fraction 0 --seed 13");
    REQUIRE(r.exit_code == 0);
    return dir.file("toy.ckpt");
}

}  // namespace

TEST_CASE("cli: convert reports phrase and token counts") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    write_file(dir.file("in.tsv"), kToyTsv);
    auto r = run_cli("convert " + dir.file("in.tsv") + " " + dir.file("out.tsv"));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("1 phrases") != std::string::npos);
    CHECK(r.output.find("5 tokens") != std::string::npos);

    // cross-check: loading the converted file gives the same counts
    auto phrases = load_corpus(dir.file("out.tsv"));
    CHECK(phrases.size() == 1);
    CHECK(phrases[0].size() == 5);
}

TEST_CASE("cli: convert token-label dialect and empty input") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    write_file(dir.file("two.txt"), "2\tQTY\ncups\tUNIT\n\n");
    auto r = run_cli("convert --dialect token-label " + dir.file("two.txt") + " " +
                     dir.file("out.tsv"));
    CHECK(r.exit_code == 0);
    auto phrases = load_corpus(dir.file("out.tsv"));
    REQUIRE(phrases.size() == 1);
    CHECK((*phrases[0].gold)[0] == Label::Quantity);
    CHECK(phrases[0].tokens[0].pos == "CD");  // computed

    write_file(dir.file("empty.tsv"), "");
    auto r2 = run_cli("convert " + dir.file("empty.tsv") + " " + dir.file("eout.tsv"));
    CHECK(r2.exit_code == 0);
    CHECK(r2.output.find("0 phrases") != std::string::npos);
}

TEST_CASE("cli: unknown dialect lists the supported ones, exit 2") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    write_file(dir.file("in.tsv"), kToyTsv);
    auto r = run_cli("convert --dialect csv " + dir.file("in.tsv") + " " + dir.file("o.tsv"));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("tsv") != std::string::npos);
    CHECK(r.output.find("token-label") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 2") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    write_file(dir.file("in.tsv"), kToyTsv);
    write_file(dir.file("v.txt"), tiny_embeddings(16));
    auto r = run_cli("train --data " + dir.file("in.tsv") + " --embeddings " + dir.file("v.txt") +
                     " --n-layers 0");
    CHECK(r.exit_code == 2);
    auto r2 = run_cli("nonsense-subcommand");
    CHECK(r2.exit_code == 2);
}

TEST_CASE("cli: data errors exit 3, checkpoint errors exit 4") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    write_file(dir.file("bad.tsv"), "garlic\tNN\n");  // 2 columns
    auto r = run_cli("convert " + dir.file("bad.tsv") + " " + dir.file("o.tsv"));
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("line 1") != std::string::npos);

    write_file(dir.file("fake.ckpt"), "NOTMAGIC--------");
    auto r2 = run_cli("parse --checkpoint " + dir.file("fake.ckpt") + " 'salt'");
    CHECK(r2.exit_code == 4);
}

TEST_CASE("cli: train twice with the same seed is byte-identical") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    test_support::SynthOptions opt;
    opt.dim = 12;
    opt.n_train = 12;
    auto data = test_support::make_synth(opt);
    save_corpus(data.train, dir.file("train.tsv"));
    write_file(dir.file("vecs.txt"), data.embeddings_text);

    // identical config including output paths: run from two scratch dirs
    std::filesystem::create_directory(dir.path() / "a");
    std::filesystem::create_directory(dir.path() / "b");
    const std::string common = "train --data " + dir.file("train.tsv") + " --embeddings " +
                               dir.file("vecs.txt") + " --dim 12 --n-layers 1 --epochs 2" +
                               " --lr 0.005 --seed 13 --out model.ckpt --log train.log";
    auto r1 = run_cli(common, "cd " + (dir.path() / "a").string() + " && ");
    auto r2 = run_cli(common, "cd " + (dir.path() / "b").string() + " && ");
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    CHECK(test_support::read_file(dir.file("a/train.log")) ==
          test_support::read_file(dir.file("b/train.log")));
    CHECK(test_support::read_file(dir.file("a/model.ckpt")) ==
          test_support::read_file(dir.file("b/model.ckpt")));
    CHECK(!test_support::read_file(dir.file("a/train.log")).empty());
}

TEST_CASE("cli: training log echoes the config") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    std::string ckpt = make_toy_checkpoint(dir);
    write_file(dir.file("t.tsv"), kToyTsv);
    auto r = run_cli("train --data " + dir.file("t.tsv") + " --embeddings " + dir.file("vecs.txt") +
                     " --out " + dir.file("x.ckpt") + " --log " + dir.file("x.log") +
                     " --dim 16 --n-layers 2 --epochs 1 --dev-fraction 0 --seed 21");
    REQUIRE(r.exit_code == 0);
    const std::string log = test_support::read_file(dir.file("x.log"));
    CHECK(log.find("config ") != std::string::npos);
    CHECK(log.find("n_layers=2") != std::string::npos);
    CHECK(log.find("seed=21") != std::string::npos);
    CHECK(log.find("learning_rate=5.0000000000000002e-05") != std::string::npos);
    CHECK(log.find("epoch 1 loss=") != std::string::npos);
}

TEST_CASE("cli: eval prints the 8 fixed entity rows and micro summary") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    std::string ckpt = make_toy_checkpoint(dir);
    auto r = run_cli("eval --checkpoint " + ckpt + " --data " + dir.file("toy.tsv") + " --kv -");
    REQUIRE(r.exit_code == 0);
    std::size_t pos = 0;
    for (const char* row : {"Name", "State", "Unit", "Quantity", "Size", "Temperature",
                            "Dry/Fresh", "Others", "micro", "macro"}) {
        auto found = r.output.find(row, pos);
        REQUIRE(found != std::string::npos);
        pos = found;
    }
    // the toy model overfits its own training phrase
    CHECK(r.output.find("micro.f1=100.00") != std::string::npos);
}

TEST_CASE("cli: eval rejects unlabeled test data") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    std::string ckpt = make_toy_checkpoint(dir);
    write_file(dir.file("unlabeled.tsv"), "salt\t_\t_\n\n");
    auto r = run_cli("eval --checkpoint " + ckpt + " --data " + dir.file("unlabeled.tsv"));
    CHECK(r.exit_code == 3);
}

TEST_CASE("cli: parse emits the documented JSON schema") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    std::string ckpt = make_toy_checkpoint(dir);
    auto r = run_cli("parse --checkpoint " + ckpt + " --json '1 garlic clove, crushed'");
    REQUIRE(r.exit_code == 0);

    json doc = json::parse(r.output);
    CHECK(doc.at("phrase") == "1 garlic clove, crushed");
    REQUIRE(doc.at("tokens").size() == 5);
    CHECK(doc["tokens"][0]["surface"] == "1");
    CHECK(doc["tokens"][0].contains("label"));
    CHECK(doc["tokens"][0].contains("confidence"));

    // all seven attribute keys present; the overfit model reproduces the
    // grouping of the gold labels
    for (const char* key :
         {"name", "quantity", "unit", "state", "size", "temperature", "dry_fresh"}) {
        CHECK(doc.at("attributes").contains(key));
    }
    CHECK(doc["attributes"]["quantity"] == json::array({"1"}));
    CHECK(doc["attributes"]["name"] == json::array({"garlic clove"}));
    CHECK(doc["attributes"]["state"] == json::array({"crushed"}));
    CHECK(doc["attributes"]["unit"] == json::array());
}

TEST_CASE("cli: parse handles empty phrases and files in order") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    std::string ckpt = make_toy_checkpoint(dir);

    auto r = run_cli("parse --checkpoint " + ckpt + " --json ''");
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(r.output);
    CHECK(doc["tokens"].empty());
    for (auto& [k, v] : doc["attributes"].items()) CHECK(v.empty());

    write_file(dir.file("phrases.txt"), "1 garlic clove\nsalt\n2 cups flour\n");
    auto r2 = run_cli("parse --checkpoint " + ckpt + " --json --file " + dir.file("phrases.txt"));
    REQUIRE(r2.exit_code == 0);
    std::vector<std::string> lines;
    std::istringstream ss(r2.output);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(json::parse(lines[0]).at("phrase") == "1 garlic clove");
    CHECK(json::parse(lines[1]).at("phrase") == "salt");
    CHECK(json::parse(lines[2]).at("phrase") == "2 cups flour");
}

TEST_CASE("cli: INGTAG_DATA_DIR resolves relative corpus paths") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    write_file(dir.file("in.tsv"), kToyTsv);
    auto r = run_cli("convert in.tsv " + dir.file("out.tsv"),
                     "INGTAG_DATA_DIR=" + dir.path().string() + " ");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("1 phrases") != std::string::npos);
}

TEST_CASE("cli: help documents the defaults the way the run uses them") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    auto r = run_cli("train --help");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("default 4") != std::string::npos);     // layers
    CHECK(r.output.find("default 5e-5") != std::string::npos);  // lr
    CHECK(r.output.find("default 1") != std::string::npos);     // batch size
}

TEST_CASE("cli: grid eval produces a 3x3 table") {
    if (!cli_available()) SKIP("INGTAG_BIN not set");
    TempDir dir;
    test_support::SynthOptions opt;
    opt.dim = 12;
    opt.n_train = 15;
    opt.n_test = 6;
    auto data = test_support::make_synth(opt);
    write_file(dir.file("vecs.txt"), data.embeddings_text);

    // three tiny training sets and test sets
    std::array<std::string, 3> names = {"seta", "setb", "setc"};
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<Phrase> tr(data.train.begin() + 5 * i, data.train.begin() + 5 * (i + 1));
        std::vector<Phrase> te(data.test.begin() + 2 * i, data.test.begin() + 2 * (i + 1));
        save_corpus(tr, dir.file(names[i] + ".tsv"));
        save_corpus(te, dir.file(names[i] + "_test.tsv"));
        auto r = run_cli("train --data " + dir.file(names[i] + ".tsv") + " --embeddings " +
                         dir.file("vecs.txt") + " --out " + dir.file(names[i] + ".ckpt") +
                         " --dim 12 --n-layers 1 --epochs 2 --dev-fraction 0 --seed 3");
        REQUIRE(r.exit_code == 0);
    }
    std::string args = "eval --grid";
    for (const auto& n : names) args += " --checkpoint " + dir.file(n + ".ckpt");
    for (const auto& n : names) args += " --data " + dir.file(n + "_test.tsv");
    args += " --embeddings " + dir.file("vecs.txt");
    auto r = run_cli(args);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("Testing \\ Training") != std::string::npos);
    CHECK(r.output.find("seta_test") != std::string::npos);
    // 3 header cells + 3 rows x 3 cells of percentages
    std::size_t dots = 0;
    for (char c : r.output)
        if (c == '.') ++dots;
    CHECK(dots >= 9);
}
