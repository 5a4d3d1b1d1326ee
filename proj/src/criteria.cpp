#include "criteria.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace etsim {

void CriterionSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("CriterionSpec: alpha must lie in (0, 1)");
    }
    if (m < 1) throw std::invalid_argument("CriterionSpec: m must be >= 1");
    if (kind == CriterionKind::KOfM && (k < 1 || k > m)) {
        throw std::invalid_argument("CriterionSpec: k must lie in [1, m]");
    }
}

Decision decide(std::span<const MeasureTest> tests, const CriterionSpec& spec) {
    spec.validate();
    const int m = spec.m;
    if (static_cast<int>(tests.size()) != m) {
        throw std::invalid_argument("decide: number of tests does not match spec.m");
    }

    // Significance per measure under the criterion's threshold rule.
    std::vector<bool> significant(m, false);
    switch (spec.kind) {
        case CriterionKind::AnyUncorrected:
        case CriterionKind::KOfM:
        case CriterionKind::AllUncorrected:
            for (int i = 0; i < m; ++i) significant[i] = tests[i].p_value <= spec.alpha;
            break;
        case CriterionKind::Bonferroni:
        case CriterionKind::AllBonferroni:
            for (int i = 0; i < m; ++i) significant[i] = tests[i].p_value <= spec.alpha / m;
            break;
        case CriterionKind::Holm: {
            std::vector<int> order(m);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                return tests[a].p_value < tests[b].p_value;
            });
            for (int rank = 0; rank < m; ++rank) {
                if (tests[order[rank]].p_value <= spec.alpha / (m - rank)) {
                    significant[order[rank]] = true;
                } else {
                    break;
                }
            }
            break;
        }
    }

    Decision d;
    for (int i = 0; i < m; ++i) {
        if (!significant[i]) continue;
        if (spec.require_correct_direction && tests[i].sign != spec.true_direction) continue;
        d.qualifying.push_back(i);
    }
    const int needed = [&] {
        switch (spec.kind) {
            case CriterionKind::KOfM: return spec.k;
            case CriterionKind::AllUncorrected:
            case CriterionKind::AllBonferroni: return m;
            default: return 1;
        }
    }();
    d.detected = static_cast<int>(d.qualifying.size()) >= needed;
    return d;
}

CriterionKind criterion_from_token(std::string_view token) {
    if (token == "one") return CriterionKind::AnyUncorrected;
    if (token == "two") return CriterionKind::KOfM;
    if (token == "bonferroni") return CriterionKind::Bonferroni;
    if (token == "holm") return CriterionKind::Holm;
    if (token == "all") return CriterionKind::AllUncorrected;
    if (token == "all-bonferroni") return CriterionKind::AllBonferroni;
    throw std::invalid_argument("unknown criterion token: " + std::string(token));
}

const char* criterion_token(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::AnyUncorrected: return "one";
        case CriterionKind::KOfM: return "two";
        case CriterionKind::Bonferroni: return "bonferroni";
        case CriterionKind::Holm: return "holm";
        case CriterionKind::AllUncorrected: return "all";
        default: return "all-bonferroni";
    }
}

std::vector<std::string> default_criterion_tokens() {
    return {"one", "two", "bonferroni", "holm", "all", "all-bonferroni"};
}

}  // namespace etsim
