#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fldcrf {

struct ClassCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// Per-class counts of one label category, classes in alphabet order.
struct ConfusionCounts {
    std::vector<std::string> classes;
    std::vector<ClassCounts> per_class;
    std::size_t tokens = 0;
    std::size_t correct = 0;

    const ClassCounts& of(std::string_view label) const;
};

/// Tallies one category's token predictions. Throws AlignmentError on length mismatch
/// and InvalidLabel for values outside `classes`.
ConfusionCounts confusion(std::span<const std::string> predicted, std::span<const std::string> truth,
                          std::span<const std::string> classes);

/// Adds b into a; the class lists must match.
void merge(ConfusionCounts& a, const ConfusionCounts& b);

/// 2PR/(P+R), 0 when P+R = 0.
double f1_score(double precision, double recall);

double f1_binary(const ClassCounts& positive);
double micro_f1(std::span<const ClassCounts> counts);
double micro_f1(const ConfusionCounts& counts);

/// F1 on P = (TP_e + TP_r) / (TP_e + TP_r + FP_e), R = (TP_e + TP_r) / (TP_e + TP_r + FN_e).
double hl_f1(const ClassCounts& early, const ClassCounts& relax);

/// Pools every class of every category, then micro F1.
double overall_micro_f1(std::span<const ConfusionCounts> categories);

/// Metric applied to one category.
///   "micro_f1"             pooled over the category's classes
///   "f1:<label>"           binary F1 of the named positive class
///   "hl_f1:<early>,<relax>"
///   "accuracy"
struct MetricSpec {
    enum class Kind { micro_f1, f1, hl_f1, accuracy };
    Kind kind = Kind::micro_f1;
    std::vector<std::string> classes;

    /// Throws ParseError on unknown names or wrong argument counts.
    static MetricSpec parse(std::string_view text);
    std::string to_string() const;
    /// Throws InvalidLabel when a named class is not in the category.
    double evaluate(const ConfusionCounts& counts) const;
};

}  // namespace fldcrf
