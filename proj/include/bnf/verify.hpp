#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "bnf/config.hpp"

namespace bnf {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;      // the measured quantity
    double threshold = 0.0;  // what it was compared against
    std::string detail;
};

/// Invariant suite on the configured model: bracket algebra, homological
/// exactness, normal form commutation and reality, flows, near identity
/// scaling, divisor positivity and (on S^1) Taylor quadrature.
std::vector<CheckResult> run_verify(const RunConfig& cfg);

nlohmann::json to_json(const std::vector<CheckResult>& checks);

}  // namespace bnf
