#include "fldcrf/folds.hpp"

#include <algorithm>
#include <set>

#include "fldcrf/error.hpp"

namespace fldcrf {

FoldPlan plan_nested_cv(std::span<const std::vector<std::string>> groups) {
    if (groups.size() < 2) throw InvalidSpec("nested cross-validation needs at least 2 groups");
    std::set<std::string> seen;
    for (const auto& g : groups) {
        if (g.empty()) throw InvalidSpec("cross-validation group is empty");
        for (const auto& id : g)
            if (!seen.insert(id).second) throw InvalidSpec("sequence id '" + id + "' appears in two groups");
    }

    FoldPlan plan;
    for (std::size_t test = 0; test < groups.size(); ++test) {
        OuterFold outer;
        outer.test = groups[test];
        for (std::size_t val = 0; val < groups.size(); ++val) {
            if (val == test) continue;
            InnerFold inner;
            inner.validation = groups[val];
            for (std::size_t g = 0; g < groups.size(); ++g)
                if (g != test && g != val) inner.train.insert(inner.train.end(), groups[g].begin(), groups[g].end());
            outer.inner.push_back(std::move(inner));
        }
        plan.outer.push_back(std::move(outer));
    }
    return plan;
}

std::vector<std::string> non_test_ids(const FoldPlan& plan, std::size_t outer) {
    const OuterFold& fold = plan.outer.at(outer);
    // the validation sets partition the non-test ids
    std::vector<std::string> ids;
    for (const auto& inner : fold.inner) {
        for (const auto& id : inner.validation) ids.push_back(id);
    }
    return ids;
}

void verify_plan(const FoldPlan& plan, std::span<const std::vector<std::string>> groups) {
    std::multiset<std::string> tested;
    std::set<std::string> all;
    for (const auto& g : groups) all.insert(g.begin(), g.end());
    for (std::size_t o = 0; o < plan.outer.size(); ++o) {
        const OuterFold& fold = plan.outer[o];
        const std::set<std::string> test(fold.test.begin(), fold.test.end());
        tested.insert(fold.test.begin(), fold.test.end());
        std::multiset<std::string> validated;
        for (const auto& inner : fold.inner) {
            for (const auto& id : inner.train)
                if (test.contains(id)) throw InvalidSpec("outer fold " + std::to_string(o) + " trains on a test id");
            for (const auto& id : inner.validation)
                if (test.contains(id)) throw InvalidSpec("outer fold " + std::to_string(o) + " validates on a test id");
            std::set<std::string> both(inner.train.begin(), inner.train.end());
            both.insert(inner.validation.begin(), inner.validation.end());
            if (both.size() + test.size() != all.size())
                throw InvalidSpec("inner fold of outer fold " + std::to_string(o) + " does not cover the non-test ids");
            validated.insert(inner.validation.begin(), inner.validation.end());
        }
        for (const auto& id : all) {
            if (test.contains(id)) continue;
            if (validated.count(id) != 1)
                throw InvalidSpec("outer fold " + std::to_string(o) + " does not validate every id exactly once");
        }
    }
    for (const auto& id : all)
        if (tested.count(id) != 1) throw InvalidSpec("id '" + id + "' is not tested exactly once");
}

}  // namespace fldcrf
