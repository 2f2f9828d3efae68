#include "fldcrf/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "fldcrf/error.hpp"
#include "fldcrf/inference.hpp"
#include "fldcrf/parallel.hpp"
#include "json.hpp"

namespace fldcrf {

using Json = nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::size_t parse_count(std::string_view text, std::string_view whole) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || v == 0)
        throw ParseError("bad grid setting '" + std::string(whole) + "'");
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_time(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    return out + '"';
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

GridSetting parse_setting(std::string_view text, ModelKind kind) {
    const std::string_view s = trim(text);
    GridSetting g;
    g.text = std::string(s);
    if (s.empty()) throw ParseError("empty grid setting");
    if (s.front() == '{') {
        if (s.back() != '}') throw ParseError("bad grid setting '" + g.text + "'");
        std::string_view body = s.substr(1, s.size() - 2);
        g.states.clear();
        while (true) {
            const std::size_t comma = body.find(',');
            g.states.push_back(parse_count(trim(body.substr(0, comma)), s));
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
        if (kind != ModelKind::fldcrf_m1 && kind != ModelKind::fldcrf_m2 && g.states.size() != 1)
            throw InvalidSpec("setting '" + g.text + "' needs a multi-label kind");
        return g;
    }
    const std::size_t slash = s.find('/');
    if (slash == std::string_view::npos) {
        g.states = {parse_count(s, s)};
    } else {
        g.layers = parse_count(trim(s.substr(0, slash)), s);
        g.states = {parse_count(trim(s.substr(slash + 1)), s)};
    }
    switch (kind) {
    case ModelKind::crf:
    case ModelKind::fcrf:
    case ModelKind::ccrf:
        if (g.layers != 1 || g.states[0] != 1)
            throw InvalidSpec(std::string(to_string(kind)) + " only takes the setting 1/1");
        break;
    case ModelKind::ldcrf:
    case ModelKind::fldcrf_m1:
    case ModelKind::fldcrf_m2:
        if (g.layers != 1) throw InvalidSpec(std::string(to_string(kind)) + " has one layer per category");
        break;
    case ModelKind::fldcrf_s:
        break;
    case ModelKind::custom:
        throw InvalidSpec("custom models cannot be trained from a grid");
    }
    return g;
}

ExperimentConfig ExperimentConfig::from_json_text(std::string_view text, const std::string& base_dir) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    const auto resolve = [&](const std::string& p) {
        if (p.empty()) return p;
        const std::filesystem::path path(p);
        return path.is_absolute() ? p : (std::filesystem::path(base_dir) / path).lexically_normal().string();
    };

    ExperimentConfig c;
    try {
        if (!j.is_object()) throw ParseError("config must be a JSON object");
        static const std::set<std::string> known = {"data", "schema", "model", "train", "folds", "metrics",
                                                    "selection_metric", "train_ids", "single_split", "retrain",
                                                    "jobs", "output_dir"};
        for (const auto& [key, _] : j.items())
            if (!known.contains(key)) throw ParseError("unknown config key '" + key + "'");

        c.data_path = resolve(j.at("data").get<std::string>());

        const Json& s = j.at("schema");
        c.schema.id_column = get_or<std::string>(s, "id_column", "seq_id");
        c.schema.time_column = get_or<std::string>(s, "time_column", "t");
        if (s.contains("feature_columns")) {
            c.schema.feature_columns = s.at("feature_columns").get<std::vector<std::string>>();
        } else {
            const auto dim = s.at("feature_dim").get<std::size_t>();
            c.schema.feature_columns = CsvSchema::standard(dim, {}).feature_columns;
        }
        c.schema.label_columns = s.at("label_columns").get<std::vector<std::string>>();
        if (s.contains("alphabets")) {
            const Json& a = s.at("alphabets");
            for (const auto& col : c.schema.label_columns) {
                if (!a.contains(col)) throw SchemaError("no alphabet for label column '" + col + "'");
                c.alphabets.push_back({col, a.at(col).get<std::vector<std::string>>()});
            }
        }

        const Json& m = j.at("model");
        c.kind = parse_model_kind(m.at("kind").get<std::string>());
        if (m.contains("grid")) c.grid = m.at("grid").get<std::vector<std::string>>();
        if (m.contains("feature_masks")) c.feature_masks = m.at("feature_masks").get<std::vector<std::vector<std::size_t>>>();

        if (j.contains("train")) {
            const Json& t = j.at("train");
            c.train.regularizer_sigma2 = get_or(t, "sigma2", c.train.regularizer_sigma2);
            c.train.max_iterations = get_or(t, "max_iterations", c.train.max_iterations);
            c.train.objective_rel_tol = get_or(t, "objective_rel_tol", c.train.objective_rel_tol);
            c.train.gradient_inf_norm_tol = get_or(t, "gradient_inf_norm_tol", c.train.gradient_inf_norm_tol);
            c.train.init_scale = get_or(t, "init_scale", c.train.init_scale);
            c.train.rng_seed = get_or(t, "seed", c.train.rng_seed);
            c.train.threads = get_or(t, "threads", c.train.threads);
        }
        if (j.contains("folds")) {
            const Json& f = j.at("folds");
            if (f.contains("groups")) c.groups = f.at("groups").get<std::vector<std::vector<std::string>>>();
        }
        if (j.contains("metrics")) {
            const Json& mm = j.at("metrics");
            for (const auto& col : c.schema.label_columns)
                c.metrics.push_back(MetricSpec::parse(mm.contains(col) ? mm.at(col).get<std::string>() : "micro_f1"));
            for (const auto& [key, _] : mm.items())
                if (std::find(c.schema.label_columns.begin(), c.schema.label_columns.end(), key) ==
                    c.schema.label_columns.end())
                    throw SchemaError("metric given for unknown label column '" + key + "'");
        }
        c.selection_metric = get_or<std::string>(j, "selection_metric", "");
        c.train_ids = get_or(j, "train_ids", std::vector<std::string>{});
        if (j.contains("single_split")) {
            const Json& ss = j.at("single_split");
            SingleSplit split;
            split.train_ids = ss.at("train_ids").get<std::vector<std::string>>();
            split.test_ids = ss.at("test_ids").get<std::vector<std::string>>();
            split.train_percent = get_or(ss, "train_percent", split.train_percent);
            c.single_split = split;
        }
        c.retrain = get_or(j, "retrain", true);
        c.jobs = get_or<std::size_t>(j, "jobs", 1);
        c.output_dir = resolve(get_or<std::string>(j, "output_dir", ""));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed config: ") + e.what());
    }
    if (c.metrics.empty())
        c.metrics.assign(c.schema.label_columns.size(), MetricSpec::parse("micro_f1"));
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str(), std::filesystem::path(path).parent_path().string());
}

void ExperimentConfig::validate() const {
    if (schema.label_columns.empty()) throw SchemaError("config names no label columns");
    if (grid.empty()) throw InvalidSpec("hyperparameter grid is empty");
    for (const auto& g : grid) parse_setting(g, kind);
    if (metrics.size() != schema.label_columns.size()) throw SchemaError("one metric per label column is required");
    if (!selection_metric.empty() && selection_metric != "overall_micro_f1" &&
        std::find(schema.label_columns.begin(), schema.label_columns.end(), selection_metric) ==
            schema.label_columns.end())
        throw SchemaError("unknown selection metric '" + selection_metric + "'");
    if (jobs == 0) throw InvalidSpec("jobs must be at least 1");
    if (single_split) {
        if (single_split->train_ids.empty() || single_split->test_ids.empty())
            throw InvalidSpec("single split needs train and test ids");
        if (!(single_split->train_percent > 0.0 && single_split->train_percent < 100.0))
            throw InvalidSpec("single split train percent must lie in (0, 100)");
    }
    train.validate();
}

PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData p;
    p.data = impute_missing(load_sequences(config.data_path, config.schema, config.alphabets));
    p.tracks = config.alphabets.empty() ? infer_alphabets(p.data, config.schema) : config.alphabets;
    for (const auto& t : p.tracks)
        if (t.alphabet.empty()) throw SchemaError("label column '" + t.name + "' has no values");
    return p;
}

ModelSpec spec_for_setting(const ExperimentConfig& config, const std::vector<LabelTrack>& tracks,
                           const GridSetting& setting) {
    SpecConfig sc;
    sc.kind = config.kind;
    sc.tracks = tracks;
    sc.feature_dim = config.schema.feature_columns.size();
    sc.num_layers = setting.layers;
    sc.states = setting.states;
    sc.feature_masks = config.feature_masks;
    return build_spec(sc);
}

FittedModel fit_model(const ExperimentConfig& config, const PreparedData& prepared, std::span<const std::string> ids,
                      const GridSetting& setting) {
    const auto start = std::chrono::steady_clock::now();
    const ModelSpec spec = spec_for_setting(config, prepared.tracks, setting);
    Normalized norm = normalize_minmax(select(prepared.data, ids), ids);
    const std::vector<Sequence> train_data = to_model_sequences(norm.data, spec);
    TrainResult result = train(spec, train_data, config.train);
    FittedModel out{{spec, std::move(result.theta), std::move(norm.record), config.schema, setting.text},
                    std::move(result.report), 0.0};
    out.train_seconds = seconds_since(start);
    return out;
}

std::vector<std::vector<std::string>> predict_sequence(const ModelDocument& model, const Matrix& raw_x) {
    Matrix x = raw_x;
    // carry-forward, then the stored affine map
    for (std::size_t d = 0; d < x.cols(); ++d) {
        double last = 0.0;
        for (std::size_t t = 0; t < x.rows(); ++t) {
            if (std::isnan(x(t, d)))
                x(t, d) = last;
            else
                last = x(t, d);
        }
    }
    model.normalization.apply(x);
    const LabelTracks per_track = decode_tracks(model.spec, predict_online(model.spec, model.theta, x));
    std::vector<std::vector<std::string>> out(per_track.size());
    for (std::size_t k = 0; k < per_track.size(); ++k)
        for (std::size_t label : per_track[k]) out[k].push_back(model.spec.tracks()[k].alphabet[label]);
    return out;
}

Evaluation evaluate_model(const ModelDocument& model, const Dataset& data) {
    Evaluation eval;
    const auto& tracks = model.spec.tracks();
    eval.per_column.resize(tracks.size());
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        eval.per_column[k].classes = tracks[k].alphabet;
        eval.per_column[k].per_class.resize(tracks[k].alphabet.size());
    }
    for (const auto& seq : data) {
        const auto start = std::chrono::steady_clock::now();
        auto predicted = predict_sequence(model, seq.x);
        eval.infer_seconds += seconds_since(start);
        eval.frames += seq.x.rows();
        for (std::size_t k = 0; k < tracks.size(); ++k)
            merge(eval.per_column[k], confusion(predicted[k], seq.labels[k], tracks[k].alphabet));
        eval.predictions.push_back(std::move(predicted));
    }
    return eval;
}

std::vector<std::pair<std::string, double>> metric_values(const ExperimentConfig& config, const Evaluation& eval) {
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t k = 0; k < eval.per_column.size(); ++k)
        out.emplace_back(config.schema.label_columns[k] + ":" + config.metrics[k].to_string(),
                         config.metrics[k].evaluate(eval.per_column[k]));
    if (eval.per_column.size() > 1) out.emplace_back("overall_micro_f1", overall_micro_f1(eval.per_column));
    return out;
}

double selection_value(const ExperimentConfig& config, const Evaluation& eval) {
    const auto& cols = config.schema.label_columns;
    std::string which = config.selection_metric;
    if (which.empty()) which = cols.size() == 1 ? cols[0] : "overall_micro_f1";
    if (which == "overall_micro_f1") return overall_micro_f1(eval.per_column);
    const std::size_t k = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), which) - cols.begin());
    return config.metrics.at(k).evaluate(eval.per_column.at(k));
}

void ResultsTable::write(std::ostream& out) const {
    out << "fold,role,setting,metric,value,best,worst,std,train_seconds,infer_seconds_per_frame,status\n";
    for (const auto& r : rows) {
        const bool ok = r.status == "ok";
        out << csv_cell(r.fold) << ',' << r.role << ',' << csv_cell(r.setting) << ',' << csv_cell(r.metric) << ',';
        if (ok)
            out << format_number(r.value) << ',' << format_number(r.best) << ',' << format_number(r.worst) << ','
                << format_number(r.stddev) << ',' << format_time(r.train_seconds) << ','
                << format_time(r.infer_seconds_per_frame);
        else
            out << ",,,,,";
        out << ',' << csv_cell(r.status) << '\n';
    }
}

bool ResultsTable::same_values(const ResultsTable& other) const {
    if (rows.size() != other.rows.size()) return false;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& a = rows[k];
        const auto& b = other.rows[k];
        if (a.fold != b.fold || a.role != b.role || a.setting != b.setting || a.metric != b.metric ||
            a.status != b.status)
            return false;
        if (a.status == "ok" && (a.value != b.value || a.best != b.best || a.worst != b.worst || a.stddev != b.stddev))
            return false;
    }
    return true;
}

FoldPlan plan_for(const ExperimentConfig& config, const PreparedData& prepared) {
    if (!config.groups.empty()) return plan_nested_cv(config.groups);
    std::vector<std::vector<std::string>> groups;
    for (const auto& seq : prepared.data) groups.push_back({seq.id});
    return plan_nested_cv(groups);
}

namespace {

// Outcome of one training + scoring run.
struct RunResult {
    std::string status = "ok";
    std::vector<std::pair<std::string, double>> metrics;
    double selection = 0.0;
    double train_seconds = 0.0;
    double infer_per_frame = 0.0;
    std::optional<ModelDocument> model;
};

RunResult train_and_score(const ExperimentConfig& config, const PreparedData& prepared,
                          std::span<const std::string> fit_ids, std::span<const std::string> score_ids,
                          const GridSetting& setting, bool keep_model) {
    RunResult r;
    try {
        FittedModel fitted = fit_model(config, prepared, fit_ids, setting);
        const Evaluation eval = evaluate_model(fitted.model, select(prepared.data, score_ids));
        r.metrics = metric_values(config, eval);
        r.selection = selection_value(config, eval);
        r.train_seconds = fitted.train_seconds;
        r.infer_per_frame = eval.frames ? eval.infer_seconds / static_cast<double>(eval.frames) : 0.0;
        if (keep_model) r.model = std::move(fitted.model);
    } catch (const Error& e) {
        r.status = std::string("failed: ") + e.what();
    }
    return r;
}

// Splits each training sequence into a leading fit part and a trailing validation part.
PreparedData frame_split(const PreparedData& prepared, const SingleSplit& split, std::vector<std::string>& fit_ids,
                         std::vector<std::string>& val_ids) {
    PreparedData out;
    out.tracks = prepared.tracks;
    out.data = prepared.data;
    for (const auto& seq : select(prepared.data, split.train_ids)) {
        const std::size_t n = seq.x.rows();
        const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(n) * split.train_percent / 100.0));
        if (cut == 0 || cut >= n) throw InvalidSpec("sequence '" + seq.id + "' is too short for the single split");
        for (int part = 0; part < 2; ++part) {
            const std::size_t lo = part == 0 ? 0 : cut;
            const std::size_t hi = part == 0 ? cut : n;
            LabeledSequence piece;
            piece.id = seq.id + (part == 0 ? "#fit" : "#validate");
            piece.x = Matrix(0, seq.x.cols());
            piece.labels.resize(seq.labels.size());
            for (std::size_t t = lo; t < hi; ++t) {
                piece.time.push_back(seq.time[t]);
                piece.x.append_row(seq.x.row(t));
                for (std::size_t k = 0; k < seq.labels.size(); ++k) piece.labels[k].push_back(seq.labels[k][t]);
            }
            (part == 0 ? fit_ids : val_ids).push_back(piece.id);
            out.data.push_back(std::move(piece));
        }
    }
    return out;
}

struct Stats {
    double mean = 0, best = 0, worst = 0, stddev = 0;
};

Stats stats_of(const std::vector<double>& v) {
    Stats s;
    s.best = *std::max_element(v.begin(), v.end());
    s.worst = *std::min_element(v.begin(), v.end());
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
    return s;
}

}  // namespace

CvOutcome run_cv(const ExperimentConfig& config, const PreparedData& input, std::ostream* log) {
    config.validate();
    std::vector<GridSetting> grid;
    for (const auto& g : config.grid) grid.push_back(parse_setting(g, config.kind));

    // Every outer fold is described by its inner (fit, validate) pairs, the refit ids and the test ids.
    struct Outer {
        std::string name;
        std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> inner;
        std::vector<std::string> refit;
        std::vector<std::string> test;
    };
    std::vector<Outer> outers;
    PreparedData prepared;
    if (config.single_split) {
        Outer o;
        o.name = "split";
        std::vector<std::string> fit_ids, val_ids;
        prepared = frame_split(input, *config.single_split, fit_ids, val_ids);
        o.inner.emplace_back(fit_ids, val_ids);
        o.refit = config.single_split->train_ids;
        o.test = config.single_split->test_ids;
        outers.push_back(std::move(o));
    } else {
        prepared = input;
        const FoldPlan plan = plan_for(config, prepared);
        for (std::size_t k = 0; k < plan.outer.size(); ++k) {
            Outer o;
            o.name = "outer" + std::to_string(k);
            for (const auto& in : plan.outer[k].inner) o.inner.emplace_back(in.train, in.validation);
            o.refit = non_test_ids(plan, k);
            o.test = plan.outer[k].test;
            outers.push_back(std::move(o));
        }
    }

    struct Task {
        std::size_t outer, inner, setting;
    };
    std::vector<Task> tasks;
    for (std::size_t o = 0; o < outers.size(); ++o)
        for (std::size_t i = 0; i < outers[o].inner.size(); ++i)
            for (std::size_t s = 0; s < grid.size(); ++s) tasks.push_back({o, i, s});

    std::vector<RunResult> inner_results(tasks.size());
    std::vector<std::vector<DataAccess>> task_access(tasks.size());
    const bool keep_inner = !config.retrain;
    parallel_for(tasks.size(), config.jobs, [&](std::size_t k) {
        const Task& t = tasks[k];
        const auto& [fit_ids, val_ids] = outers[t.outer].inner[t.inner];
        if (fit_ids.empty()) {
            inner_results[k].status = "skipped: empty inner training set";
            return;
        }
        task_access[k].push_back({t.outer, "fit", fit_ids});
        task_access[k].push_back({t.outer, "validate", val_ids});
        inner_results[k] = train_and_score(config, prepared, fit_ids, val_ids, grid[t.setting], keep_inner);
    });

    CvOutcome out;
    for (auto& a : task_access)
        for (auto& x : a) out.accesses.push_back(std::move(x));

    // selection per outer fold
    std::vector<std::size_t> chosen(outers.size(), 0);
    std::vector<std::optional<std::size_t>> chosen_task(outers.size());
    std::size_t k = 0;
    for (std::size_t o = 0; o < outers.size(); ++o) {
        std::optional<double> best;
        for (std::size_t s = 0; s < grid.size(); ++s) {
            std::vector<std::size_t> ids;
            for (std::size_t i = 0; i < outers[o].inner.size(); ++i) {
                const std::size_t idx = (k + i * grid.size()) + s;
                ids.push_back(idx);
            }
            std::string status = "ok";
            std::vector<std::size_t> used;
            for (std::size_t idx : ids) {
                const auto& r = inner_results[idx];
                if (r.status.rfind("failed", 0) == 0) status = r.status;
                if (r.status == "ok") used.push_back(idx);
            }
            if (status == "ok" && used.empty()) status = inner_results[ids.front()].status;

            std::vector<std::string> metric_names;
            if (status == "ok")
                for (const auto& [name, _] : inner_results[used.front()].metrics) metric_names.push_back(name);
            else
                metric_names.push_back("selection");
            for (std::size_t m = 0; m < metric_names.size(); ++m) {
                ResultRow row{outers[o].name, "validation", grid[s].text, metric_names[m]};
                row.status = status;
                if (status == "ok") {
                    std::vector<double> vals;
                    double train_s = 0, infer_s = 0;
                    for (std::size_t idx : used) {
                        vals.push_back(inner_results[idx].metrics[m].second);
                        train_s += inner_results[idx].train_seconds;
                        infer_s += inner_results[idx].infer_per_frame;
                    }
                    const Stats st = stats_of(vals);
                    row.value = st.mean;
                    row.best = st.best;
                    row.worst = st.worst;
                    row.stddev = st.stddev;
                    row.train_seconds = train_s / static_cast<double>(used.size());
                    row.infer_seconds_per_frame = infer_s / static_cast<double>(used.size());
                }
                out.table.rows.push_back(std::move(row));
            }
            if (status == "ok") {
                double mean = 0;
                std::size_t top = used.front();
                for (std::size_t idx : used) {
                    mean += inner_results[idx].selection;
                    if (inner_results[idx].selection > inner_results[top].selection) top = idx;
                }
                mean /= static_cast<double>(used.size());
                if (!best || mean > *best) {  // ties keep the earlier setting
                    best = mean;
                    chosen[o] = s;
                    chosen_task[o] = top;
                }
            }
        }
        if (log) *log << outers[o].name << ": selected " << grid[chosen[o]].text << '\n';
        k += outers[o].inner.size() * grid.size();
    }

    // final model per outer fold, then test scoring
    std::vector<RunResult> finals(outers.size());
    std::vector<std::vector<DataAccess>> final_access(outers.size());
    parallel_for(outers.size(), config.jobs, [&](std::size_t o) {
        const GridSetting& g = grid[chosen[o]];
        RunResult& r = finals[o];
        if (!config.retrain && chosen_task[o]) {
            RunResult& source = inner_results[*chosen_task[o]];
            r.model = std::move(source.model);
            r.train_seconds = source.train_seconds;
        } else {
            final_access[o].push_back({o, "refit", outers[o].refit});
            try {
                FittedModel fitted = fit_model(config, prepared, outers[o].refit, g);
                r.train_seconds = fitted.train_seconds;
                r.model = std::move(fitted.model);
            } catch (const Error& e) {
                r.status = std::string("failed: ") + e.what();
                return;
            }
        }
        final_access[o].push_back({o, "test", outers[o].test});
        try {
            const Evaluation eval = evaluate_model(*r.model, select(prepared.data, outers[o].test));
            r.metrics = metric_values(config, eval);
            r.selection = selection_value(config, eval);
            r.infer_per_frame = eval.frames ? eval.infer_seconds / static_cast<double>(eval.frames) : 0.0;
        } catch (const Error& e) {
            r.status = std::string("failed: ") + e.what();
        }
    });
    for (auto& a : final_access)
        for (auto& x : a) out.accesses.push_back(std::move(x));

    for (std::size_t o = 0; o < outers.size(); ++o) {
        const RunResult& r = finals[o];
        const std::string& setting = grid[chosen[o]].text;
        if (r.status != "ok") {
            ResultRow row{outers[o].name, "test", setting, "selection"};
            row.status = r.status;
            out.table.rows.push_back(std::move(row));
        }
        for (const auto& [name, value] : r.metrics) {
            ResultRow row{outers[o].name, "test", setting, name, value, value, value, 0.0, r.train_seconds,
                          r.infer_per_frame};
            out.table.rows.push_back(std::move(row));
        }
        out.selections.push_back({outers[o].name, setting, r.selection, r.status == "ok"});
        out.models.push_back(r.model);
    }
    return out;
}

std::size_t leakage_violations(const CvOutcome& outcome, const FoldPlan& plan) {
    std::size_t violations = 0;
    for (const auto& a : outcome.accesses) {
        if (a.role == "test" || a.outer >= plan.outer.size()) continue;
        const auto& test = plan.outer[a.outer].test;
        for (const auto& id : a.ids)
            if (std::find(test.begin(), test.end(), id) != test.end()) ++violations;
    }
    return violations;
}

std::vector<BenchRow> run_bench(const ExperimentConfig& config, const PreparedData& prepared) {
    config.validate();
    std::vector<std::string> ids = config.train_ids;
    if (ids.empty())
        for (const auto& seq : prepared.data) ids.push_back(seq.id);
    const Dataset data = select(prepared.data, ids);

    std::vector<BenchRow> rows(config.grid.size());
    // sequential on purpose: concurrent runs would distort the timings
    for (std::size_t s = 0; s < config.grid.size(); ++s) {
        BenchRow& row = rows[s];
        row.setting = config.grid[s];
        try {
            const FittedModel fitted = fit_model(config, prepared, ids, parse_setting(config.grid[s], config.kind));
            row.train_seconds = fitted.train_seconds;
            row.iterations = fitted.report.iterations;
            const Evaluation eval = evaluate_model(fitted.model, data);
            row.frames = eval.frames;
            row.infer_seconds_per_frame = eval.frames ? eval.infer_seconds / static_cast<double>(eval.frames) : 0.0;
        } catch (const Error& e) {
            row.status = std::string("failed: ") + e.what();
        }
    }
    return rows;
}

void write_bench(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "setting,train_seconds,iterations,frames,infer_seconds_per_frame,status\n";
    char buf[64];
    for (const auto& r : rows) {
        out << csv_cell(r.setting) << ',' << format_time(r.train_seconds) << ',' << r.iterations << ',' << r.frames
            << ',';
        std::snprintf(buf, sizeof buf, "%.6g", r.infer_seconds_per_frame);
        out << buf << ',' << csv_cell(r.status) << '\n';
    }
}

}  // namespace fldcrf
