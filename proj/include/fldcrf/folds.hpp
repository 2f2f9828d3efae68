#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fldcrf {

struct InnerFold {
    std::vector<std::string> train;
    std::vector<std::string> validation;
};

struct OuterFold {
    std::vector<std::string> test;
    std::vector<InnerFold> inner;
};

/// Nested cross-validation plan. Each outer fold holds out one group for testing;
/// its inner folds run leave-one-group-out over the remaining groups.
struct FoldPlan {
    std::vector<OuterFold> outer;
};

/// Sequence ids grouped into units; group order and id order are kept.
/// Throws InvalidSpec for fewer than 2 groups, empty groups or repeated ids.
FoldPlan plan_nested_cv(std::span<const std::vector<std::string>> groups);

/// Every id of an outer fold that is not in its test set.
std::vector<std::string> non_test_ids(const FoldPlan& plan, std::size_t outer);

/// Checks the plan's partition and disjointness properties; throws InvalidSpec naming the first violation.
void verify_plan(const FoldPlan& plan, std::span<const std::vector<std::string>> groups);

}  // namespace fldcrf
