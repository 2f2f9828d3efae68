#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "fldcrf/experiment.hpp"

namespace fldcrf {

/// Trains one model on the config's train_ids (all sequences when empty) and writes the model document.
/// `setting` picks a grid entry; it may be omitted when the grid has a single entry.
FittedModel cmd_train(const ExperimentConfig& config, const std::string& model_path,
                      const std::optional<std::string>& setting = std::nullopt);

/// Writes the input rows (id, time, features and any label columns present) with one
/// `pred_<column>` column per label column. With `posteriors_path`, also writes the
/// filtered label marginals: seq_id,t,<category>:<label>,...
void cmd_predict(const std::string& model_path, const std::string& input_path, std::ostream& out,
                 const std::string& posteriors_path = {});

/// Compares `pred_<column>` cells of a predictions file with the label columns of a
/// ground-truth file. Report rows: category,metric,value. Throws AlignmentError when ids or times differ.
void cmd_evaluate(const ExperimentConfig& config, const std::string& predictions_path, const std::string& truth_path,
                  std::ostream& out);

/// Name of the predicted-label column for a label column.
std::string prediction_column(const std::string& label_column);

}  // namespace fldcrf
