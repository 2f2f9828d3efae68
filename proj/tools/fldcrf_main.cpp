#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "fldcrf/commands.hpp"
#include "fldcrf/error.hpp"

using namespace fldcrf;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<double> single_split;
    bool no_retrain = false;
    bool verbose = false;
    std::string model;
    std::string input;
    std::string output;
    std::string posteriors;
    std::string predictions;
    std::string truth;
    std::optional<std::string> setting;
};

ExperimentConfig load_config(const Options& o) {
    ExperimentConfig c = ExperimentConfig::load(o.config);
    if (o.seed) c.train.rng_seed = *o.seed;
    if (o.jobs) c.jobs = *o.jobs;
    if (o.no_retrain) c.retrain = false;
    if (o.single_split) {
        if (!c.single_split) throw SchemaError("--single-split needs a single_split section naming train and test ids");
        c.single_split->train_percent = *o.single_split;
    }
    c.validate();
    return c;
}

// Output stream: the named file, or stdout when the name is empty or "-".
struct Sink {
    std::ofstream file;
    std::ostream* out = &std::cout;
    explicit Sink(const std::string& path) {
        if (path.empty() || path == "-") return;
        file.open(path);
        if (!file) throw ParseError("cannot write '" + path + "'");
        out = &file;
    }
};

std::string in_output_dir(const ExperimentConfig& c, const std::string& explicit_path, const std::string& name) {
    if (!explicit_path.empty()) return explicit_path;
    if (c.output_dir.empty()) return {};
    std::filesystem::create_directories(c.output_dir);
    return (std::filesystem::path(c.output_dir) / name).string();
}

int run(const std::string& command, const Options& o) {
    if (command == "train") {
        const ExperimentConfig c = load_config(o);
        std::string path = in_output_dir(c, o.output, "model.json");
        if (path.empty()) throw SchemaError("train needs --output or an output_dir in the config");
        ExperimentConfig logged = c;
        if (o.verbose) logged.train.log = &std::cerr;
        const FittedModel m = cmd_train(logged, path, o.setting);
        std::cerr << "trained " << m.model.setting << " in " << m.report.iterations << " iterations ("
                  << to_string(m.report.reason) << "), objective " << m.report.final_objective << '\n';
    } else if (command == "predict") {
        Sink sink(o.output);
        cmd_predict(o.model, o.input, *sink.out, o.posteriors);
    } else if (command == "evaluate") {
        const ExperimentConfig c = load_config(o);
        Sink sink(o.output);
        cmd_evaluate(c, o.predictions, o.truth, *sink.out);
    } else if (command == "cv") {
        ExperimentConfig c = load_config(o);
        if (o.verbose) c.train.log = &std::cerr;
        const PreparedData data = prepare_data(c);
        const CvOutcome outcome = run_cv(c, data, o.verbose ? &std::cerr : nullptr);
        Sink sink(in_output_dir(c, o.output, "results.csv"));
        outcome.table.write(*sink.out);
        std::cerr << "fold,selected_setting,test_selection_metric\n";
        for (const auto& s : outcome.selections) std::cerr << s.fold << ',' << s.setting << ',' << s.test_value << '\n';
        for (const auto& s : outcome.selections)
            if (!s.ok) return kRuntimeFailure;
    } else if (command == "bench") {
        const ExperimentConfig c = load_config(o);
        const PreparedData data = prepare_data(c);
        Sink sink(in_output_dir(c, o.output, "bench.csv"));
        write_bench(*sink.out, run_bench(c, data));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Factored latent-dynamic CRF toolkit"};
    app.require_subcommand(1);
    Options o;

    auto* train = app.add_subcommand("train", "Train one model and write the model document");
    train->add_option("--config", o.config, "Experiment config (JSON)")->required();
    train->add_option("--setting", o.setting, "Grid setting to train, e.g. 2/3");
    train->add_option("--output,-o", o.output, "Model file (default: <output_dir>/model.json)");

    auto* predict = app.add_subcommand("predict", "Online predictions for a CSV file");
    predict->add_option("--model", o.model, "Model document")->required();
    predict->add_option("--input", o.input, "Input CSV")->required();
    predict->add_option("--output,-o", o.output, "Predictions CSV (default: stdout)");
    predict->add_option("--posteriors", o.posteriors, "Also write filtered label marginals here");

    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
    evaluate->add_option("--config", o.config, "Experiment config naming label columns and metrics")->required();
    evaluate->add_option("--predictions", o.predictions, "Predictions CSV")->required();
    evaluate->add_option("--truth", o.truth, "Ground-truth CSV")->required();
    evaluate->add_option("--output,-o", o.output, "Report file (default: stdout)");

    auto* cv = app.add_subcommand("cv", "Nested cross-validation over the grid");
    cv->add_option("--config", o.config, "Experiment config (JSON)")->required();
    cv->add_option("--output,-o", o.output, "Results table (default: <output_dir>/results.csv or stdout)");
    cv->add_option("--single-split", o.single_split, "Train share in percent for the single-split protocol");
    cv->add_flag("--no-retrain", o.no_retrain, "Test the best inner-fold model instead of retraining");

    auto* bench = app.add_subcommand("bench", "Training and per-frame inference times per grid setting");
    bench->add_option("--config", o.config, "Experiment config (JSON)")->required();
    bench->add_option("--output,-o", o.output, "Report file (default: <output_dir>/bench.csv or stdout)");

    for (auto* sub : {train, cv, bench, evaluate}) {
        sub->add_option("--seed", o.seed, "Override the training seed");
        sub->add_option("--jobs", o.jobs, "Concurrent training runs")->check(CLI::PositiveNumber);
    }
    for (auto* sub : {train, predict, evaluate, cv, bench}) sub->add_flag("--verbose,-v", o.verbose, "Progress on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), o);
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return kUsageError;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kUsageError;
    } catch (const VersionMismatch& e) {
        std::cerr << "version mismatch: " << e.what() << '\n';
        return kUsageError;
    } catch (const AlignmentError& e) {
        std::cerr << "alignment error: " << e.what() << '\n';
        return kUsageError;
    } catch (const InvalidSpec& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kUsageError;
    } catch (const InvalidLabel& e) {
        std::cerr << "invalid label: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}
