#pragma once

#include <functional>
#include <string>
#include <vector>

namespace lmc {

struct CriterionResult {
    int id = 0;
    bool pass = false;
    std::string summary;
    std::vector<std::string> details;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    unsigned threads = 0;
    /// Criteria to run (1..9); empty runs all of them.
    std::vector<int> criteria;
};

/// Runs the acceptance suite; `on_result` fires as each criterion finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// One line per criterion: "criterion N PASS|FAIL (seconds): summary".
std::string format_result(const CriterionResult& r);

}  // namespace lmc
