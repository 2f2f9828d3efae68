#include "fldcrf/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "fldcrf/error.hpp"
#include "fldcrf/inference.hpp"

namespace fldcrf {

std::string prediction_column(const std::string& label_column) { return "pred_" + label_column; }

FittedModel cmd_train(const ExperimentConfig& config, const std::string& model_path,
                      const std::optional<std::string>& setting) {
    config.validate();
    std::string chosen;
    if (setting) {
        chosen = *setting;
    } else {
        if (config.grid.size() != 1) throw SchemaError("the grid has several settings; pick one with --setting");
        chosen = config.grid.front();
    }
    const PreparedData prepared = prepare_data(config);
    std::vector<std::string> ids = config.train_ids;
    if (ids.empty())
        for (const auto& seq : prepared.data) ids.push_back(seq.id);
    if (ids.empty()) throw SchemaError("no training sequences");
    FittedModel fitted = fit_model(config, prepared, ids, parse_setting(chosen, config.kind));
    save_model(model_path, fitted.model);
    return fitted;
}

void cmd_predict(const std::string& model_path, const std::string& input_path, std::ostream& out,
                 const std::string& posteriors_path) {
    const ModelDocument model = load_model(model_path);
    const std::vector<std::string> header = read_header(input_path);
    const auto has = [&](const std::string& name) { return std::find(header.begin(), header.end(), name) != header.end(); };

    CsvSchema in_schema = model.schema;
    in_schema.label_columns.clear();
    for (const auto& col : model.schema.label_columns)
        if (has(col)) in_schema.label_columns.push_back(col);
    const Dataset data = load_sequences(input_path, in_schema);

    CsvSchema out_schema = in_schema;
    for (const auto& col : model.schema.label_columns) out_schema.label_columns.push_back(prediction_column(col));
    Dataset annotated = data;
    for (auto& seq : annotated) {
        auto predicted = predict_sequence(model, seq.x);
        for (auto& p : predicted) seq.labels.push_back(std::move(p));
    }
    write_sequences(out, annotated, out_schema);

    if (posteriors_path.empty()) return;
    std::ofstream post(posteriors_path);
    if (!post) throw ParseError("cannot write '" + posteriors_path + "'");
    const ModelSpec& spec = model.spec;
    std::vector<std::string> category_names;
    if (spec.encoding() == CategoryEncoding::cross_product) {
        std::vector<std::string> names;
        for (const auto& t : spec.tracks()) names.push_back(t.name);
        category_names.push_back(joint_label_name(names));
    } else {
        for (const auto& t : spec.tracks()) category_names.push_back(t.name);
    }
    post << model.schema.id_column << ',' << model.schema.time_column;
    for (std::size_t c = 0; c < spec.num_categories(); ++c)
        for (const auto& label : spec.alphabet(c)) post << ',' << category_names[c] << ':' << label;
    post << '\n';
    char buf[32];
    for (const auto& seq : data) {
        Matrix x = impute_missing(Dataset{seq}).front().x;
        model.normalization.apply(x);
        const PosteriorSeries filtered = filtered_label_marginals(spec, model.theta, x);
        for (std::size_t t = 0; t < x.rows(); ++t) {
            post << seq.id << ',' << seq.time[t];
            for (const auto& m : filtered.probabilities) {
                for (std::size_t l = 0; l < m.cols(); ++l) {
                    std::snprintf(buf, sizeof buf, "%.17g", m(t, l));
                    post << ',' << buf;
                }
            }
            post << '\n';
        }
    }
}

void cmd_evaluate(const ExperimentConfig& config, const std::string& predictions_path, const std::string& truth_path,
                  std::ostream& out) {
    CsvSchema truth_schema = config.schema;
    truth_schema.feature_columns.clear();
    CsvSchema pred_schema = truth_schema;
    for (auto& col : pred_schema.label_columns) col = prediction_column(col);
    const Dataset truth = load_sequences(truth_path, truth_schema);
    const Dataset pred = load_sequences(predictions_path, pred_schema);

    std::map<std::string, const LabeledSequence*> by_id;
    for (const auto& seq : pred) by_id.emplace(seq.id, &seq);
    if (pred.size() != truth.size())
        throw AlignmentError(std::to_string(pred.size()) + " predicted sequences for " + std::to_string(truth.size()) +
                             " reference sequences");
    const std::size_t columns = config.schema.label_columns.size();
    std::vector<std::set<std::string>> seen(columns);
    for (const auto* d : {&truth, &pred})
        for (const auto& seq : *d)
            for (std::size_t k = 0; k < columns; ++k) seen[k].insert(seq.labels[k].begin(), seq.labels[k].end());
    std::vector<std::vector<std::string>> classes(columns);
    for (std::size_t k = 0; k < columns; ++k) {
        if (k < config.alphabets.size()) {
            classes[k] = config.alphabets[k].alphabet;
        } else {
            classes[k].assign(seen[k].begin(), seen[k].end());
        }
    }

    std::vector<ConfusionCounts> counts(columns);
    for (std::size_t k = 0; k < columns; ++k) {
        counts[k].classes = classes[k];
        counts[k].per_class.resize(classes[k].size());
    }
    for (const auto& ref : truth) {
        const auto it = by_id.find(ref.id);
        if (it == by_id.end()) throw AlignmentError("no predictions for sequence '" + ref.id + "'");
        const LabeledSequence& p = *it->second;
        if (p.time != ref.time) throw AlignmentError("time steps of sequence '" + ref.id + "' do not line up");
        for (std::size_t k = 0; k < columns; ++k) merge(counts[k], confusion(p.labels[k], ref.labels[k], classes[k]));
    }

    char buf[32];
    const auto row = [&](const std::string& category, const std::string& metric, double value) {
        std::snprintf(buf, sizeof buf, "%.17g", value);
        out << category << ',' << metric << ',' << buf << '\n';
    };
    out << "category,metric,value\n";
    for (std::size_t k = 0; k < columns; ++k) {
        const std::string& col = config.schema.label_columns[k];
        std::vector<std::string> done;
        const auto once = [&](const std::string& metric, double value) {
            if (std::find(done.begin(), done.end(), metric) != done.end()) return;
            done.push_back(metric);
            row(col, metric, value);
        };
        once(config.metrics[k].to_string(), config.metrics[k].evaluate(counts[k]));
        once("micro_f1", micro_f1(counts[k]));
        once("accuracy", counts[k].tokens ? double(counts[k].correct) / double(counts[k].tokens) : 0.0);
        for (std::size_t c = 0; c < classes[k].size(); ++c) once("f1:" + classes[k][c], f1_binary(counts[k].per_class[c]));
    }
    row("overall", "micro_f1", overall_micro_f1(counts));
}

}  // namespace fldcrf
