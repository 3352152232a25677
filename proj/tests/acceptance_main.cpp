#include "lmc/acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

// Usage: lmc_acceptance [criterion ...]
int main(int argc, char** argv) {
    lmc::AcceptanceOptions opts;
    for (int i = 1; i < argc; ++i) opts.criteria.push_back(std::atoi(argv[i]));
    bool ok = true;
    lmc::run_acceptance(opts, [&](const lmc::CriterionResult& r) {
        std::cout << lmc::format_result(r) << std::endl;
        for (const auto& d : r.details) std::cout << "    " << d << "\n";
        ok = ok && r.pass;
    });
    return ok ? 0 : 1;
}
