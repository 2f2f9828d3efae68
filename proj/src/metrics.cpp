#include "fldcrf/metrics.hpp"

#include <algorithm>
#include <map>

#include "fldcrf/error.hpp"

namespace fldcrf {

const ClassCounts& ConfusionCounts::of(std::string_view label) const {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw InvalidLabel("class '" + std::string(label) + "' is not in the category");
    return per_class[static_cast<std::size_t>(it - classes.begin())];
}

ConfusionCounts confusion(std::span<const std::string> predicted, std::span<const std::string> truth,
                          std::span<const std::string> classes) {
    if (predicted.size() != truth.size())
        throw AlignmentError(std::to_string(predicted.size()) + " predictions for " + std::to_string(truth.size()) +
                             " reference tokens");
    std::map<std::string_view, std::size_t> index;
    for (std::size_t k = 0; k < classes.size(); ++k) index.emplace(classes[k], k);
    const auto lookup = [&](const std::string& label) {
        const auto it = index.find(label);
        if (it == index.end()) throw InvalidLabel("label '" + label + "' is not in the category");
        return it->second;
    };
    ConfusionCounts out;
    out.classes.assign(classes.begin(), classes.end());
    out.per_class.resize(classes.size());
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const std::size_t p = lookup(predicted[t]);
        const std::size_t g = lookup(truth[t]);
        ++out.tokens;
        if (p == g) {
            ++out.per_class[g].tp;
            ++out.correct;
        } else {
            ++out.per_class[p].fp;
            ++out.per_class[g].fn;
        }
    }
    return out;
}

void merge(ConfusionCounts& a, const ConfusionCounts& b) {
    if (a.classes.empty() && a.tokens == 0) {
        a = b;
        return;
    }
    if (a.classes != b.classes) throw SchemaError("cannot merge confusion counts of different categories");
    for (std::size_t k = 0; k < a.per_class.size(); ++k) {
        a.per_class[k].tp += b.per_class[k].tp;
        a.per_class[k].fp += b.per_class[k].fp;
        a.per_class[k].fn += b.per_class[k].fn;
    }
    a.tokens += b.tokens;
    a.correct += b.correct;
}

namespace {

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

ClassCounts pooled(std::span<const ClassCounts> counts) {
    ClassCounts sum;
    for (const auto& c : counts) {
        sum.tp += c.tp;
        sum.fp += c.fp;
        sum.fn += c.fn;
    }
    return sum;
}

}  // namespace

double f1_score(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double f1_binary(const ClassCounts& c) { return f1_score(ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn)); }

double micro_f1(std::span<const ClassCounts> counts) { return f1_binary(pooled(counts)); }

double micro_f1(const ConfusionCounts& counts) { return micro_f1(counts.per_class); }

double hl_f1(const ClassCounts& early, const ClassCounts& relax) {
    const std::size_t tp = early.tp + relax.tp;
    return f1_score(ratio(tp, tp + early.fp), ratio(tp, tp + early.fn));
}

double overall_micro_f1(std::span<const ConfusionCounts> categories) {
    std::vector<ClassCounts> all;
    for (const auto& c : categories) all.insert(all.end(), c.per_class.begin(), c.per_class.end());
    return micro_f1(all);
}

MetricSpec MetricSpec::parse(std::string_view text) {
    const std::size_t colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    std::vector<std::string> args;
    if (colon != std::string_view::npos) {
        std::string_view rest = text.substr(colon + 1);
        while (true) {
            const std::size_t comma = rest.find(',');
            args.emplace_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
    }
    MetricSpec m;
    std::size_t want = 0;
    if (name == "micro_f1") {
        m.kind = Kind::micro_f1;
    } else if (name == "accuracy") {
        m.kind = Kind::accuracy;
    } else if (name == "f1") {
        m.kind = Kind::f1;
        want = 1;
    } else if (name == "hl_f1") {
        m.kind = Kind::hl_f1;
        want = 2;
    } else {
        throw ParseError("unknown metric '" + std::string(text) + "'");
    }
    if (args.size() != want) throw ParseError("metric '" + std::string(text) + "' takes " + std::to_string(want) + " class name(s)");
    for (const auto& a : args)
        if (a.empty()) throw ParseError("empty class name in metric '" + std::string(text) + "'");
    m.classes = std::move(args);
    return m;
}

std::string MetricSpec::to_string() const {
    switch (kind) {
        case Kind::micro_f1: return "micro_f1";
        case Kind::accuracy: return "accuracy";
        case Kind::f1: return "f1:" + classes.at(0);
        case Kind::hl_f1: return "hl_f1:" + classes.at(0) + "," + classes.at(1);
    }
    return {};
}

double MetricSpec::evaluate(const ConfusionCounts& counts) const {
    switch (kind) {
        case Kind::micro_f1: return micro_f1(counts);
        case Kind::accuracy: return ratio(counts.correct, counts.tokens);
        case Kind::f1: return f1_binary(counts.of(classes.at(0)));
        case Kind::hl_f1: return hl_f1(counts.of(classes.at(0)), counts.of(classes.at(1)));
    }
    return 0.0;
}

}  // namespace fldcrf
