#pragma once

#include <functional>
#include <string>
#include <vector>

#include "advfront/io.hpp"

namespace advfront {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  /// Measured values behind the verdict.
  std::string detail;
  /// Supplementary measurements that do not affect the verdict.
  std::vector<std::string> notes;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  /// Criteria to run (empty: all of 1..9).
  std::vector<int> only;
  /// Called after each criterion completes.
  std::function<void(const CriterionResult&)> on_result;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {});

Json to_json(const CriterionResult& r);

/// One line per criterion: "criterion N: PASS|FAIL  title  detail".
std::string format_line(const CriterionResult& r);

}  // namespace advfront
