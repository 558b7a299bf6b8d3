#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <regex>
#include <sys/wait.h>

#include "testutil.hpp"

using namespace tspm;
using testutil::TempDir;
using testutil::slurp;
using Catch::Matchers::ContainsSubstring;

namespace {

struct CliRun {
    int code;
    std::string output;
};

CliRun run_cli(const std::string& args, const std::filesystem::path& scratch) {
    const auto log = scratch / "cli_log.txt";
    const std::string cmd =
        std::string(TSPM_CLI_PATH) + " " + args + " >'" + log.string() + "' 2>&1";
    const int raw = std::system(cmd.c_str());
    int code = raw;
    if (WIFEXITED(raw)) code = WEXITSTATUS(raw);
    return {code, slurp(log)};
}

std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& body) {
    const auto path = dir / "experiment.cfg";
    std::ofstream out(path, std::ios::binary);
    out << body;
    return path;
}

// Two classes distinguished by when channel 0 goes high.
std::string base_config(const std::filesystem::path& out_dir) {
    return "version=1\n"
           "dataset.source=synthetic\n"
           "synth.num_classes=2\n"
           "synth.instances_per_class=8\n"
           "synth.num_channels=2\n"
           "synth.num_frames=16\n"
           "synth.noise_amplitude=0.05\n"
           "synth.seed=11\n"
           "synth.plant=0,0,high,2,3,3,4\n"
           "synth.plant=1,0,high,9,10,3,4\n"
           "preprocess.target_frames=16\n"
           "mine.alphabet_size=3\n"
           "mine.window=4\n"
           "mine.min_support=3\n"
           "mine.max_pattern_length=2\n"
           "mine.max_patterns=12\n"
           "train.kind=svm\n"
           "train.max_iters=300\n"
           "split.fraction=0.7\n"
           "split.seed=5\n"
           "features.mode=SPM\n"
           "output.dir=" + out_dir.string() + "\n";
}

std::vector<std::string> body_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

std::vector<std::string> audit_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] == '#') out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("synth writes a loadable dataset with a hashed manifest", "[cli]") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path(), base_config(tmp.path() / "out"));
    const auto run = run_cli("synth --config " + cfg.string(), tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);

    const auto dir = tmp.path() / "out" / "dataset";
    const auto ds = load_dataset(dir, dir / "schema.tsv");
    CHECK(ds.instances().size() == 16);
    CHECK(ds.labels() == std::vector<std::string>{"class0", "class1"});
    CHECK(ds.schema().num_channels() == 2);

    const auto manifest = slurp(dir / "manifest.txt");
    CHECK_THAT(manifest, ContainsSubstring("# config_version=1"));
    CHECK_THAT(manifest, ContainsSubstring("# synth.seed=11"));
    CHECK_THAT(manifest, ContainsSubstring("# synth.plant=0,0,high,2,3,3,4"));
    CHECK_THAT(manifest, ContainsSubstring("files=17"));  // 16 instances + schema
    const std::regex hash_line("# input_hash=[0-9a-f]{16}\n");
    CHECK(std::regex_search(manifest, hash_line));
    const std::regex file_line("file=class0\\.0\\.tsv\t[0-9a-f]{16}\n");
    CHECK(std::regex_search(manifest, file_line));
}

TEST_CASE("rerunning synth reproduces every output byte", "[cli]") {
    TempDir tmp;
    const auto cfg_a = write_config(tmp.path(), base_config(tmp.path() / "a"));
    REQUIRE(run_cli("synth --config " + cfg_a.string(), tmp.path()).code == 0);
    const auto cfg_b = tmp.path() / "second.cfg";
    std::ofstream(cfg_b) << base_config(tmp.path() / "b");
    REQUIRE(run_cli("synth --config " + cfg_b.string(), tmp.path()).code == 0);

    std::size_t compared = 0;
    for (const auto& entry : std::filesystem::directory_iterator(tmp.path() / "a" / "dataset")) {
        const auto name = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(tmp.path() / "b" / "dataset" / name));
        ++compared;
    }
    CHECK(compared == 18);  // schema + 16 instances + manifest
}

TEST_CASE("eval emits metrics and a confusion matrix", "[cli]") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path(), base_config(tmp.path() / "out"));
    const auto run = run_cli("eval --config " + cfg.string(), tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);

    const auto metrics = slurp(tmp.path() / "out" / "metrics.txt");
    const auto lines = body_lines(metrics);
    REQUIRE(lines.size() == 5);
    const char* keys[] = {"precision", "recall", "f1", "training_error", "testing_error"};
    const std::regex value("[a-z0-9_]+=[01]\\.[0-9]{6}");
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(lines[i].rfind(std::string(keys[i]) + "=", 0) == 0);
        CHECK(std::regex_match(lines[i], value));
    }
    CHECK_THAT(metrics, ContainsSubstring("# features.mode=SPM"));
    CHECK_THAT(metrics, ContainsSubstring("# train.kind=svm"));

    const auto confusion = body_lines(slurp(tmp.path() / "out" / "confusion.csv"));
    REQUIRE(confusion.size() == 3);
    CHECK(confusion[0] == "label,class0,class1");
    // 8 per class at fraction 0.7 leaves 2 test instances per class.
    std::size_t total = 0;
    for (std::size_t r = 1; r <= 2; ++r) {
        const auto cells = confusion[r];
        std::size_t pos = cells.find(',');
        std::size_t a = 0, b = 0;
        REQUIRE(pos != std::string::npos);
        const auto rest = cells.substr(pos + 1);
        REQUIRE(std::sscanf(rest.c_str(), "%zu,%zu", &a, &b) == 2);
        total += a + b;
    }
    CHECK(total == 4);
}

TEST_CASE("identical configs give byte-identical reports", "[cli]") {
    TempDir tmp;
    const auto cfg_a = write_config(tmp.path(), base_config(tmp.path() / "a"));
    const auto cfg_b = tmp.path() / "again.cfg";
    std::ofstream(cfg_b) << base_config(tmp.path() / "b");
    REQUIRE(run_cli("eval --config " + cfg_a.string(), tmp.path()).code == 0);
    REQUIRE(run_cli("eval --config " + cfg_b.string(), tmp.path()).code == 0);
    CHECK(slurp(tmp.path() / "a" / "metrics.txt") == slurp(tmp.path() / "b" / "metrics.txt"));
    CHECK(slurp(tmp.path() / "a" / "confusion.csv") == slurp(tmp.path() / "b" / "confusion.csv"));
}

TEST_CASE("--out overrides the configured output directory", "[cli]") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path(), base_config(tmp.path() / "ignored"));
    const auto run =
        run_cli("eval --config " + cfg.string() + " --out " + (tmp.path() / "chosen").string(),
                tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);
    CHECK(std::filesystem::exists(tmp.path() / "chosen" / "metrics.txt"));
    CHECK_FALSE(std::filesystem::exists(tmp.path() / "ignored" / "metrics.txt"));
}

TEST_CASE("mine writes a pattern file that reloads", "[cli]") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path(), base_config(tmp.path() / "out"));
    const auto run = run_cli("mine --config " + cfg.string(), tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);

    const auto ranked = read_pattern_file(tmp.path() / "out" / "patterns.tsv");
    CHECK(ranked.config.alphabet_size == 3);
    CHECK(ranked.config.window == 4);
    CHECK(!ranked.patterns.empty());
    CHECK(ranked.patterns.size() <= 12);
    CHECK_THAT(slurp(tmp.path() / "out" / "patterns.tsv"),
               ContainsSubstring("# input_hash="));
}

TEST_CASE("train writes a model file that reloads", "[cli]") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path(), base_config(tmp.path() / "out"));
    const auto run = run_cli("train --config " + cfg.string(), tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);

    const auto model = read_model_file(tmp.path() / "out" / "model.tsv");
    REQUIRE(model.classes.size() == 2);
    CHECK(model.classes[0].label == "class0");
    CHECK(model.classes[1].label == "class1");
    CHECK(model.kind == ModelKind::HINGE);
}

TEST_CASE("preprocess emits normalized instance files", "[cli]") {
    TempDir tmp;
    auto body = base_config(tmp.path() / "out");
    body += "preprocess.use_derivative=0\n";
    const auto cfg = write_config(tmp.path(), body);
    const auto run = run_cli("preprocess --config " + cfg.string(), tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);

    const auto dir = tmp.path() / "out" / "preprocessed";
    const auto ds = load_dataset(dir, dir / "schema.tsv");
    REQUIRE(ds.instances().size() == 16);
    for (const auto& inst : ds.instances()) {
        CHECK(inst.num_frames() == 16);
        for (double v : inst.values()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    CHECK(std::filesystem::exists(dir / "manifest.txt"));
}

TEST_CASE("pca emits one projected row per instance", "[cli]") {
    TempDir tmp;
    auto body = base_config(tmp.path() / "out");
    body += "features.mode=FLAT\npca.components=2\n";
    const auto cfg = write_config(tmp.path(), body);
    const auto run = run_cli("pca --config " + cfg.string(), tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);

    const auto text = slurp(tmp.path() / "out" / "pca.csv");
    CHECK_THAT(text, ContainsSubstring("# explained_variance="));
    const auto lines = body_lines(text);
    REQUIRE(lines.size() == 17);  // header + 16 rows
    CHECK(lines[0] == "x,y,label");
    const std::regex row("-?[0-9]+\\.[0-9]{6},-?[0-9]+\\.[0-9]{6},class[01]");
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(std::regex_match(lines[i], row));
}

TEST_CASE("ablate emits the baseline row and one row per removal", "[cli]") {
    TempDir tmp;
    auto body = base_config(tmp.path() / "out");
    body += "ablate.remove=ch1\n";
    const auto cfg = write_config(tmp.path(), body);
    const auto run = run_cli("ablate --config " + cfg.string(), tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);

    const auto lines = body_lines(slurp(tmp.path() / "out" / "ablation.csv"));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "removed_groups,test_error");
    CHECK(lines[1].rfind("none,", 0) == 0);
    CHECK(lines[2].rfind("ch1,", 0) == 0);
    const std::regex row("[^,]+,[01]\\.[0-9]{6}");
    CHECK(std::regex_match(lines[1], row));
    CHECK(std::regex_match(lines[2], row));
}

TEST_CASE("sweep traces every evaluation and reports the winner", "[cli]") {
    TempDir tmp;
    auto body = base_config(tmp.path() / "out");
    body += "sweep.window=3,4\n"
            "sweep.min_support=3\n"
            "sweep.max_pattern_length=1,2\n"
            "sweep.max_patterns=8\n"
            "sweep.alphabet_size=3\n"
            "sweep.use_derivative=0\n"
            "sweep.passes=1\n"
            "sweep.seed=9\n";
    const auto cfg = write_config(tmp.path(), body);
    const auto run = run_cli("sweep --config " + cfg.string(), tmp.path());
    INFO(run.output);
    REQUIRE(run.code == 0);

    const auto trace = body_lines(slurp(tmp.path() / "out" / "sweep_trace.csv"));
    REQUIRE(trace.size() == 9);  // header + 2+1+2+1+1+1 evaluations
    CHECK(trace[0] ==
          "window,min_support,max_pattern_length,max_patterns,alphabet_size,use_derivative,"
          "accuracy");

    const auto best = body_lines(slurp(tmp.path() / "out" / "sweep_best.txt"));
    REQUIRE(best.size() == 7);
    CHECK((best[0] == "window=3" || best[0] == "window=4"));
    CHECK(best[1] == "min_support=3");
    CHECK(best[4] == "alphabet_size=3");
    CHECK(best[5] == "use_derivative=0");
    CHECK(best[6].rfind("accuracy=", 0) == 0);
}

TEST_CASE("missing keys for a subcommand are reported by name", "[cli]") {
    TempDir tmp;
    std::string body = base_config(tmp.path() / "out");
    const auto cut = body.find("mine.min_support=3\n");
    REQUIRE(cut != std::string::npos);
    body.erase(cut, std::string("mine.min_support=3\n").size());
    const auto cfg = write_config(tmp.path(), body);
    const auto run = run_cli("mine --config " + cfg.string(), tmp.path());
    CHECK(run.code == 1);
    CHECK_THAT(run.output, ContainsSubstring("mine.min_support"));
}

TEST_CASE("unknown keys are rejected with file and line", "[cli]") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path(), "version=1\nmine.bogus=3\n");
    const auto run = run_cli("mine --config " + cfg.string(), tmp.path());
    CHECK(run.code == 1);
    CHECK_THAT(run.output, ContainsSubstring(cfg.string() + ":2"));
    CHECK_THAT(run.output, ContainsSubstring("mine.bogus"));
}

TEST_CASE("config version and dataset location problems are reported", "[cli]") {
    TempDir tmp;
    SECTION("unsupported version") {
        std::string body = base_config(tmp.path() / "out");
        body.replace(body.find("version=1"), 9, "version=2");
        const auto cfg = write_config(tmp.path(), body);
        const auto run = run_cli("synth --config " + cfg.string(), tmp.path());
        CHECK(run.code == 1);
        CHECK_THAT(run.output, ContainsSubstring("version 2"));
    }
    SECTION("missing dataset directory") {
        const auto schema = tmp.path() / "schema.tsv";
        std::ofstream(schema) << "ch0\tPOS\n";
        const auto cfg = write_config(tmp.path(),
                                      "version=1\n"
                                      "dataset.source=path\n"
                                      "dataset.path=" + (tmp.path() / "nowhere").string() + "\n"
                                      "dataset.schema=" + schema.string() + "\n"
                                      "output.dir=" + (tmp.path() / "out").string() + "\n");
        const auto run = run_cli("eval --config " + cfg.string(), tmp.path());
        CHECK(run.code == 1);
        CHECK_THAT(run.output, ContainsSubstring("nowhere"));
    }
    SECTION("synth demands a synthetic source") {
        const auto schema = tmp.path() / "schema.tsv";
        std::ofstream(schema) << "ch0\tPOS\n";
        const auto data = tmp.path() / "data";
        std::filesystem::create_directories(data);
        const auto cfg = write_config(tmp.path(),
                                      "version=1\n"
                                      "dataset.source=path\n"
                                      "dataset.path=" + data.string() + "\n"
                                      "dataset.schema=" + schema.string() + "\n"
                                      "output.dir=" + (tmp.path() / "out").string() + "\n");
        const auto run = run_cli("synth --config " + cfg.string(), tmp.path());
        CHECK(run.code == 1);
        CHECK_THAT(run.output, ContainsSubstring("dataset.source=synthetic"));
    }
    SECTION("unknown subcommand is rejected by the parser") {
        const auto cfg = write_config(tmp.path(), base_config(tmp.path() / "out"));
        const auto run = run_cli("explode --config " + cfg.string(), tmp.path());
        CHECK(run.code != 0);
    }
}

TEST_CASE("every report repeats the full resolved config", "[cli]") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path(), base_config(tmp.path() / "out"));
    REQUIRE(run_cli("eval --config " + cfg.string(), tmp.path()).code == 0);
    const auto audit = audit_of(slurp(tmp.path() / "out" / "metrics.txt"));
    REQUIRE(audit.size() >= 3);
    CHECK(audit[0] == "# config_version=1");
    CHECK(audit[1].rfind("# input_hash=", 0) == 0);
    const char* expected[] = {"# dataset.source=synthetic", "# synth.num_classes=2",
                              "# mine.window=4",            "# train.kind=svm",
                              "# split.fraction=0.69999999999999996",
                              "# features.mode=SPM"};
    for (const char* line : expected)
        CHECK(std::find(audit.begin(), audit.end(), line) != audit.end());

    // The confusion matrix carries the identical trail.
    CHECK(audit_of(slurp(tmp.path() / "out" / "confusion.csv")) == audit);
}
