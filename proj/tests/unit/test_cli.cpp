#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "fldcrf/commands.hpp"
#include "fldcrf/error.hpp"
#include "synthetic.hpp"

using namespace fldcrf;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("fldcrf_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

Workspace& workspace() {
    static Workspace w;
    return w;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Separable binary task written as CSV, n sequences s0..s{n-1}.
std::string write_separable(const std::string& name, std::uint64_t seed, std::size_t n, std::size_t len,
                            double margin = 0.2) {
    const auto seqs = testing::separable_task(seed, n, len, margin);
    Dataset data;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        LabeledSequence seq;
        seq.id = "s" + std::to_string(s);
        seq.x = seqs[s].x;
        seq.labels.resize(1);
        for (std::size_t t = 0; t < seq.x.rows(); ++t) {
            seq.time.push_back(static_cast<long long>(t));
            seq.labels[0].push_back(seqs[s].y[0][t] ? "up" : "down");
        }
        data.push_back(std::move(seq));
    }
    const std::string path = workspace().path(name);
    write_sequences(path, data, CsvSchema::standard(2, {"y"}));
    return path;
}

ExperimentConfig config_for(const std::string& data, const std::string& model_json, const std::string& extra = "") {
    std::string text = R"({"data":")" + data + R"(","schema":{"feature_dim":2,"label_columns":["y"]},"model":)" +
                       model_json + R"(,"train":{"seed":7,"max_iterations":200})" + extra + "}";
    return ExperimentConfig::from_json_text(text);
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FLDCRF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> column_of(const std::string& csv_text, const std::string& name) {
    std::istringstream in(csv_text);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
    const auto idx = static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    std::vector<std::string> out;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::vector<std::string> cells;
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        out.push_back(cells.at(idx));
    }
    return out;
}

}  // namespace

TEST_CASE("grid setting notation") {
    CHECK(parse_setting("2/3", ModelKind::fldcrf_s).layers == 2);
    CHECK(parse_setting("2/3", ModelKind::fldcrf_s).states == std::vector<std::size_t>{3});
    CHECK(parse_setting(" 4 ", ModelKind::ldcrf).states == std::vector<std::size_t>{4});
    CHECK(parse_setting("{1,4}", ModelKind::fldcrf_m2).states == std::vector<std::size_t>{1, 4});
    CHECK(parse_setting("1/1", ModelKind::crf).states == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(parse_setting("2/2", ModelKind::crf), InvalidSpec);
    CHECK_THROWS_AS(parse_setting("2/1", ModelKind::ldcrf), InvalidSpec);
    CHECK_THROWS_AS(parse_setting("{1,4}", ModelKind::fldcrf_s), InvalidSpec);
    CHECK_THROWS_AS(parse_setting("0/1", ModelKind::fldcrf_s), ParseError);
    CHECK_THROWS_AS(parse_setting("{1,", ModelKind::fldcrf_m1), ParseError);
    CHECK_THROWS_AS(parse_setting("a/b", ModelKind::fldcrf_s), ParseError);
}

TEST_CASE("config documents") {
    const ExperimentConfig c = config_for("x.csv", R"({"kind":"fldcrf-s","grid":["1/1","2/2"]})",
                                          R"(,"metrics":{"y":"f1:up"},"jobs":3)");
    CHECK(c.kind == ModelKind::fldcrf_s);
    CHECK(c.grid.size() == 2);
    CHECK(c.metrics[0].to_string() == "f1:up");
    CHECK(c.jobs == 3);
    CHECK(c.train.rng_seed == 7);
    CHECK(c.schema.feature_columns == std::vector<std::string>{"f0", "f1"});
    CHECK_THROWS_AS(config_for("x.csv", R"({"kind":"crf","grid":[]})"), InvalidSpec);
    CHECK_THROWS_AS(config_for("x.csv", R"({"kind":"crf"})", R"(,"bogus":1)"), ParseError);
    CHECK_THROWS_AS(config_for("x.csv", R"({"kind":"crf"})", R"(,"metrics":{"z":"micro_f1"})"), SchemaError);
    CHECK_THROWS_AS(config_for("x.csv", R"({"kind":"crf"})", R"(,"metrics":{"y":"nope"})"), ParseError);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text("{"), ParseError);
}

TEST_CASE("cv is deterministic and never reads test sequences early") {
    const std::string data = write_separable("cv.csv", 21, 6, 30);
    ExperimentConfig c = config_for(data, R"({"kind":"fldcrf-s","grid":["1/1","2/2"]})",
                                    R"(,"folds":{"groups":[["s0","s1"],["s2","s3"],["s4","s5"]]})");
    const PreparedData prepared = prepare_data(c);
    const CvOutcome a = run_cv(c, prepared);
    c.jobs = 4;
    const CvOutcome b = run_cv(c, prepared);
    CHECK(a.table.same_values(b.table));
    CHECK(a.table.rows.size() == 3 * 2 + 3);
    for (const auto& row : a.table.rows) {
        CHECK(row.status == "ok");
        CHECK(std::isfinite(row.value));
    }

    const FoldPlan plan = plan_for(c, prepared);
    CHECK(leakage_violations(a, plan) == 0);
    std::map<std::string, std::size_t> roles;
    for (const auto& access : a.accesses) ++roles[access.role];
    CHECK(roles["fit"] == 3 * 2 * 2);
    CHECK(roles["validate"] == 3 * 2 * 2);
    CHECK(roles["refit"] == 3);
    CHECK(roles["test"] == 3);

    // a planted leak is caught
    CvOutcome leaky = a;
    leaky.accesses.push_back({0, "fit", plan.outer[0].test});
    CHECK(leakage_violations(leaky, plan) == 2);
}

TEST_CASE("cv on separable data scores highly") {
    // With features scaled to [0,1] the label offset is partly learned on the "previous label"
    // side of the transition weights, which filtered inference never sees. The decision
    // threshold then lands about 0.3 (raw units) off zero, so a 0.2 margin costs a few percent.
    const std::string wide = write_separable("sep.csv", 5, 5, 100, 0.4);
    const ExperimentConfig c = config_for(wide, R"({"kind":"crf","grid":["1/1"]})");
    const CvOutcome out = run_cv(c, prepare_data(c));
    REQUIRE(out.selections.size() == 5);
    for (const auto& s : out.selections) {
        CHECK(s.ok);
        CHECK(s.test_value >= 0.99);
    }

    const std::string narrow = write_separable("sep_narrow.csv", 5, 5, 100, 0.2);
    const ExperimentConfig n = config_for(narrow, R"({"kind":"crf","grid":["1/1"]})");
    double pooled = 0.0;
    for (const auto& s : run_cv(n, prepare_data(n)).selections) pooled += s.test_value / 5.0;
    MESSAGE("separable data with margin 0.2: mean test micro F1 " << pooled);
    CHECK(pooled >= 0.9);
}

TEST_CASE("two groups with one setting") {
    const std::string data = write_separable("two.csv", 8, 2, 30);
    const ExperimentConfig c = config_for(data, R"({"kind":"crf","grid":["1/1"]})");
    const CvOutcome out = run_cv(c, prepare_data(c));
    std::size_t test_rows = 0;
    for (const auto& r : out.table.rows) test_rows += r.role == "test";
    CHECK(test_rows == 2);
    REQUIRE(out.selections.size() == 2);
    CHECK(out.selections[0].setting == "1/1");
    CHECK(out.selections[1].setting == "1/1");
}

TEST_CASE("selection ties go to the earliest grid entry") {
    const std::string data = write_separable("tie.csv", 9, 3, 30);
    // "1/1" and "1" describe the same model, so their validation scores tie exactly
    for (const auto& [grid, first] : {std::pair{R"(["1/1","1"])", "1/1"}, std::pair{R"(["1","1/1"])", "1"}}) {
        const ExperimentConfig c = config_for(data, std::string(R"({"kind":"ldcrf","grid":)") + grid + "}");
        const CvOutcome out = run_cv(c, prepare_data(c));
        for (const auto& s : out.selections) CHECK(s.setting == first);
    }
}

TEST_CASE("a failing setting is recorded, not dropped") {
    const std::string data = write_separable("fail.csv", 10, 3, 20);
    // one mask fits the one-layer setting only
    const ExperimentConfig c =
        config_for(data, R"({"kind":"fldcrf-s","grid":["2/1","1/1"],"feature_masks":[[0]]})");
    const CvOutcome out = run_cv(c, prepare_data(c));
    bool saw_failure = false;
    for (const auto& r : out.table.rows)
        if (r.setting == "2/1") saw_failure = saw_failure || r.status.rfind("failed", 0) == 0;
    CHECK(saw_failure);
    for (const auto& s : out.selections) CHECK(s.setting == "1/1");
}

TEST_CASE("single split protocol") {
    const std::string data = write_separable("split.csv", 12, 2, 50);
    ExperimentConfig c = config_for(data, R"({"kind":"crf","grid":["1/1"]})",
                                    R"(,"single_split":{"train_ids":["s0"],"test_ids":["s1"],"train_percent":70})");
    const CvOutcome out = run_cv(c, prepare_data(c));
    REQUIRE(out.selections.size() == 1);
    CHECK(out.selections[0].fold == "split");
    CHECK(out.selections[0].test_value >= 0.9);
    for (const auto& a : out.accesses) {
        if (a.role == "fit") CHECK(a.ids == std::vector<std::string>{"s0#fit"});
        if (a.role == "validate") CHECK(a.ids == std::vector<std::string>{"s0#validate"});
    }
}

TEST_CASE("train writes byte-identical models") {
    const std::string data = write_separable("train.csv", 3, 3, 25);
    const ExperimentConfig c = config_for(data, R"({"kind":"fldcrf-s","grid":["2/2"]})");
    cmd_train(c, workspace().path("m1.json"));
    cmd_train(c, workspace().path("m2.json"));
    const std::string a = read_file(workspace().path("m1.json"));
    CHECK(!a.empty());
    CHECK(a == read_file(workspace().path("m2.json")));

    const ModelDocument doc = load_model(workspace().path("m1.json"));
    CHECK(doc.setting == "2/2");
    CHECK(doc.spec.num_layers() == 2);
    std::stringstream again;
    write_model(again, doc);
    CHECK(again.str() == a);
}

TEST_CASE("single-class data trains to a near-zero model") {
    Dataset d(2);
    for (std::size_t s = 0; s < 2; ++s) {
        d[s].id = "q" + std::to_string(s);
        d[s].x = Matrix(0, 2);
        d[s].labels.resize(1);
        for (int t = 0; t < 5; ++t) {
            d[s].time.push_back(t);
            d[s].x.append_row(std::vector<double>{double(t), double(s)});
            d[s].labels[0].push_back("only");
        }
    }
    const std::string path = workspace().path("single.csv");
    write_sequences(path, d, CsvSchema::standard(2, {"y"}));
    const ExperimentConfig c = config_for(path, R"({"kind":"ldcrf","grid":["2"]})");
    const FittedModel m = cmd_train(c, workspace().path("single.json"));
    for (double v : m.model.theta) CHECK(std::abs(v) < 1e-3);
}

TEST_CASE("predict replays in-process predictions") {
    const std::string data = write_separable("replay.csv", 4, 3, 30);
    const ExperimentConfig c = config_for(data, R"({"kind":"fldcrf-s","grid":["2/2"]})");
    const FittedModel m = cmd_train(c, workspace().path("replay.json"));
    const Evaluation eval = evaluate_model(m.model, prepare_data(c).data);

    std::stringstream out;
    const std::string post = workspace().path("post.csv");
    cmd_predict(workspace().path("replay.json"), data, out, post);
    std::vector<std::string> expected;
    for (const auto& p : eval.predictions) expected.insert(expected.end(), p[0].begin(), p[0].end());
    CHECK(column_of(out.str(), "pred_y") == expected);

    const std::string posterior = read_file(post);
    CHECK(posterior.rfind("seq_id,t,y:down,y:up\n", 0) == 0);
    const auto down = column_of(posterior, "y:down");
    const auto up = column_of(posterior, "y:up");
    REQUIRE(down.size() == expected.size());
    for (std::size_t k = 0; k < down.size(); ++k) {
        const double a = std::stod(down[k]), b = std::stod(up[k]);
        CHECK(a + b == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(expected[k] == (b > a ? "up" : "down"));
    }
}

TEST_CASE("predictions are causal in the input") {
    const std::string data = write_separable("causal.csv", 6, 2, 40);
    const ExperimentConfig c = config_for(data, R"({"kind":"fldcrf-s","grid":["2/2"]})");
    const FittedModel m = cmd_train(c, workspace().path("causal.json"));
    const Dataset d = prepare_data(c).data;
    for (const auto& seq : d) {
        const auto full = predict_sequence(m.model, seq.x);
        for (std::size_t k : {1u, 7u, 23u, 40u}) {
            Matrix prefix(0, seq.x.cols());
            for (std::size_t t = 0; t < k; ++t) prefix.append_row(seq.x.row(t));
            const auto part = predict_sequence(m.model, prefix);
            CHECK(std::equal(part[0].begin(), part[0].end(), full[0].begin()));
        }
    }
}

TEST_CASE("zero-weight model predicts one label everywhere") {
    const std::string data = write_separable("zero.csv", 13, 2, 20);
    const ExperimentConfig c = config_for(data, R"({"kind":"ldcrf","grid":["2"]})");
    FittedModel m = cmd_train(c, workspace().path("zero_src.json"));
    std::fill(m.model.theta.begin(), m.model.theta.end(), 0.0);
    save_model(workspace().path("zero.json"), m.model);
    std::stringstream out;
    cmd_predict(workspace().path("zero.json"), data, out);
    for (const auto& v : column_of(out.str(), "pred_y")) CHECK(v == "down");
}

TEST_CASE("empty input gives a header-only output") {
    const std::string data = write_separable("empty_src.csv", 2, 2, 20);
    const ExperimentConfig c = config_for(data, R"({"kind":"crf"})");
    cmd_train(c, workspace().path("empty.json"));
    const std::string empty = workspace().path("empty.csv");
    std::ofstream(empty) << "seq_id,t,f0,f1\n";
    std::stringstream out;
    cmd_predict(workspace().path("empty.json"), empty, out);
    CHECK(out.str() == "seq_id,t,f0,f1,pred_y\n");
}

TEST_CASE("evaluate reports") {
    const std::string truth = workspace().path("truth.csv");
    std::ofstream(truth) << "seq_id,t,y\na,0,p\na,1,q\na,2,q\nb,0,p\nb,1,p\n";
    const ExperimentConfig c = ExperimentConfig::from_json_text(
        R"({"data":"unused.csv","schema":{"feature_dim":0,"label_columns":["y"]},"model":{"kind":"crf"}})");

    SUBCASE("perfect predictions") {
        const std::string pred = workspace().path("pred_ok.csv");
        std::ofstream(pred) << "seq_id,t,pred_y\na,0,p\na,1,q\na,2,q\nb,0,p\nb,1,p\n";
        std::stringstream out;
        cmd_evaluate(c, pred, truth, out);
        for (const auto& v : column_of(out.str(), "value")) CHECK(std::stod(v) == 1.0);
    }
    SUBCASE("known confusion table") {
        // p: TP 2 FP 1 FN 1; q: TP 1 FP 1 FN 1
        const std::string pred = workspace().path("pred_mixed.csv");
        std::ofstream(pred) << "seq_id,t,pred_y\na,0,p\na,1,p\na,2,q\nb,0,q\nb,1,p\n";
        std::stringstream out;
        cmd_evaluate(c, pred, truth, out);
        const auto metrics = column_of(out.str(), "metric");
        const auto values = column_of(out.str(), "value");
        std::map<std::string, double> by;
        for (std::size_t k = 0; k < metrics.size(); ++k) by[metrics[k]] = std::stod(values[k]);
        CHECK(by["f1:p"] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(by["f1:q"] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(by["accuracy"] == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(by["micro_f1"] == doctest::Approx(0.6).epsilon(1e-15));
    }
    SUBCASE("disjoint ids") {
        const std::string pred = workspace().path("pred_bad.csv");
        std::ofstream(pred) << "seq_id,t,pred_y\nx,0,p\nx,1,q\nx,2,q\ny,0,p\ny,1,p\n";
        std::stringstream out;
        CHECK_THROWS_AS(cmd_evaluate(c, pred, truth, out), AlignmentError);
    }
}

TEST_CASE("bench has one row per setting") {
    const std::string data = write_separable("bench.csv", 14, 2, 30);
    const ExperimentConfig c = config_for(data, R"({"kind":"fldcrf-s","grid":["1/1","1/2","2/2"]})");
    const auto rows = run_bench(c, prepare_data(c));
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.status == "ok");
        CHECK(r.frames == 60);
        CHECK(r.infer_seconds_per_frame > 0.0);
        CHECK(std::isfinite(r.infer_seconds_per_frame));
    }
}

TEST_CASE("command-line exit statuses") {
    const std::string data = write_separable("exit.csv", 15, 3, 20);
    const std::string good = workspace().path("good.json");
    std::ofstream(good) << R"({"data":")" << data
                        << R"(","schema":{"feature_dim":2,"label_columns":["y"]},"model":{"kind":"crf"},"train":{"max_iterations":50}})";
    const std::string missing = workspace().path("missing_label.json");
    std::ofstream(missing) << R"({"data":")" << data
                           << R"(","schema":{"feature_dim":2,"label_columns":["phase"]},"model":{"kind":"crf"}})";
    const std::string model = workspace().path("exit_model.json");

    CHECK(run_cli("train --config " + good + " -o " + model) == 0);
    CHECK(run_cli("train --config " + missing + " -o " + model) == 2);
    CHECK(run_cli("predict --model " + model + " --input " + data + " -o " + workspace().path("p.csv")) == 0);
    CHECK(run_cli("predict --model " + workspace().path("nope.json") + " --input " + data) == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("cv") == 2);

    std::string text = read_file(model);
    text.replace(text.find("\"version\": 1"), 12, "\"version\": 9");
    std::ofstream(workspace().path("v9.json")) << text;
    CHECK_THROWS_AS(load_model(workspace().path("v9.json")), VersionMismatch);
    CHECK(run_cli("predict --model " + workspace().path("v9.json") + " --input " + data) == 2);
}
