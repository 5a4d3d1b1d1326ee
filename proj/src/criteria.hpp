#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmm.hpp"

namespace etsim {

enum class CriterionKind {
    AnyUncorrected,  // at least one p <= alpha
    Bonferroni,      // at least one p <= alpha/m
    Holm,            // step-down alpha/(m-i+1)
    KOfM,            // at least k of m with p <= alpha
    AllUncorrected,  // all m with p <= alpha
    AllBonferroni,   // all m with p <= alpha/m
};

struct CriterionSpec {
    CriterionKind kind = CriterionKind::AnyUncorrected;
    double alpha = 0.05;
    int k = 2;  // used by KOfM
    int m = 4;  // family size
    bool require_correct_direction = false;
    Sign true_direction = Sign::Positive;

    void validate() const;  // throws std::invalid_argument
};

struct Decision {
    bool detected = false;
    std::vector<int> qualifying;  // measure indices, ascending
};

// Maps per-measure test results to a reject/accept decision. A measure
// qualifies when its p-value passes the criterion's threshold rule and,
// if a direction is required, its sign matches the true direction.
Decision decide(std::span<const MeasureTest> tests, const CriterionSpec& spec);

// CLI tokens: one, two, bonferroni, holm, all, all-bonferroni.
CriterionKind criterion_from_token(std::string_view token);  // throws on unknown token
const char* criterion_token(CriterionKind kind);
std::vector<std::string> default_criterion_tokens();

}  // namespace etsim
