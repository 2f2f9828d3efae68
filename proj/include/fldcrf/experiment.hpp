#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fldcrf/dataset.hpp"
#include "fldcrf/folds.hpp"
#include "fldcrf/metrics.hpp"
#include "fldcrf/model_io.hpp"
#include "fldcrf/training.hpp"

namespace fldcrf {

/// One hyperparameter setting of the grid.
///   "N_h/N_s"   layers / states per label ("2/3"); crf, fcrf, ccrf only take "1/1"
///   "N_s"       one layer ("3")
///   "{a,b}"     states per category for fldcrf-m1/m2 ("{1,4}")
struct GridSetting {
    std::string text;
    std::size_t layers = 1;
    std::vector<std::size_t> states = {1};
};

/// Throws ParseError on bad syntax and InvalidSpec when the kind cannot take the setting.
GridSetting parse_setting(std::string_view text, ModelKind kind);

struct SingleSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    /// Leading share of every training sequence used for fitting during selection;
    /// the remaining frames validate.
    double train_percent = 70.0;
};

/// Experiment description, read from a JSON document (see docs/config.md).
struct ExperimentConfig {
    std::string data_path;
    CsvSchema schema;
    /// Per label column alphabet; inferred as sorted distinct values when absent.
    std::vector<LabelTrack> alphabets;
    ModelKind kind = ModelKind::crf;
    std::vector<std::string> grid = {"1/1"};
    std::vector<std::vector<std::size_t>> feature_masks;
    TrainConfig train;
    /// Cross-validation units; empty means one group per sequence in file order.
    std::vector<std::vector<std::string>> groups;
    /// One metric per label column; micro_f1 by default.
    std::vector<MetricSpec> metrics;
    /// "overall_micro_f1" or a label column name; defaults to the only column, or pooled F1.
    std::string selection_metric;
    /// Training ids for `train` and `bench`; empty means every sequence.
    std::vector<std::string> train_ids;
    std::optional<SingleSplit> single_split;
    bool retrain = true;
    std::size_t jobs = 1;
    std::string output_dir;

    /// Relative paths resolve against `base_dir`. Throws ParseError / SchemaError.
    static ExperimentConfig from_json_text(std::string_view text, const std::string& base_dir = ".");
    static ExperimentConfig load(const std::string& path);

    /// Grid nonempty and parseable, metric count matches the label columns, selection metric known.
    void validate() const;
};

/// Loaded, imputed data with the label alphabets fixed.
struct PreparedData {
    Dataset data;
    std::vector<LabelTrack> tracks;
};

/// Loads the CSV named by the config (closed alphabets when configured) and imputes missing cells.
PreparedData prepare_data(const ExperimentConfig& config);

ModelSpec spec_for_setting(const ExperimentConfig& config, const std::vector<LabelTrack>& tracks,
                           const GridSetting& setting);

struct FittedModel {
    ModelDocument model;
    TrainReport report;
    double train_seconds = 0.0;
};

/// Fits min/max on `ids`, trains one model on them.
FittedModel fit_model(const ExperimentConfig& config, const PreparedData& prepared, std::span<const std::string> ids,
                      const GridSetting& setting);

/// Predicted label strings per label column, [column][t].
std::vector<std::vector<std::string>> predict_sequence(const ModelDocument& model, const Matrix& raw_x);

struct Evaluation {
    std::vector<ConfusionCounts> per_column;
    std::size_t frames = 0;
    double infer_seconds = 0.0;
    /// Predictions in the order of the evaluated sequences.
    std::vector<std::vector<std::vector<std::string>>> predictions;
};

Evaluation evaluate_model(const ModelDocument& model, const Dataset& data);

/// Metric name/value pairs: one per label column ("<column>:<metric>"), then
/// "overall_micro_f1" when there are several columns.
std::vector<std::pair<std::string, double>> metric_values(const ExperimentConfig& config, const Evaluation& eval);
/// The value selection maximizes.
double selection_value(const ExperimentConfig& config, const Evaluation& eval);

struct ResultRow {
    std::string fold;
    std::string role;  ///< "validation" (mean over inner folds) or "test"
    std::string setting;
    std::string metric;
    double value = 0.0;
    double best = 0.0;
    double worst = 0.0;
    double stddev = 0.0;
    double train_seconds = 0.0;
    double infer_seconds_per_frame = 0.0;
    std::string status = "ok";
};

struct ResultsTable {
    std::vector<ResultRow> rows;
    /// Header plus one line per row; failed rows leave the numeric cells empty.
    void write(std::ostream& out) const;
    /// True when fold/role/setting/metric/value/best/worst/std/status agree (timings ignored).
    bool same_values(const ResultsTable& other) const;
};

/// One read of sequence data during cross-validation, for leakage auditing.
struct DataAccess {
    std::size_t outer = 0;
    /// "fit" (normalization and training), "validate", "refit" (retraining) or "test".
    std::string role;
    std::vector<std::string> ids;
};

struct Selection {
    std::string fold;
    std::string setting;
    double test_value = 0.0;
    bool ok = true;
};

struct CvOutcome {
    ResultsTable table;
    std::vector<Selection> selections;
    std::vector<DataAccess> accesses;
    /// Final models of each outer fold, empty when retraining was skipped or failed.
    std::vector<std::optional<ModelDocument>> models;
};

/// Nested cross-validation, or the single-split protocol when configured.
CvOutcome run_cv(const ExperimentConfig& config, const PreparedData& prepared, std::ostream* log = nullptr);

/// Accesses other than "test" that touch an outer fold's test ids.
std::size_t leakage_violations(const CvOutcome& outcome, const FoldPlan& plan);

/// The plan run_cv uses for the config's groups.
FoldPlan plan_for(const ExperimentConfig& config, const PreparedData& prepared);

struct BenchRow {
    std::string setting;
    double train_seconds = 0.0;
    std::size_t iterations = 0;
    std::size_t frames = 0;
    double infer_seconds_per_frame = 0.0;
    std::string status = "ok";
};

std::vector<BenchRow> run_bench(const ExperimentConfig& config, const PreparedData& prepared);
void write_bench(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace fldcrf
