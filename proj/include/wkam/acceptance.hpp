#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace wkam {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  std::vector<std::pair<std::string, double>> metrics;
  std::string note;

  void metric(std::string name, double value) { metrics.emplace_back(std::move(name), value); }
};

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds, 0 for none; counts towards the verdict
  std::function<void(CriterionResult&)> body;
};

const std::vector<Criterion>& acceptance_criteria();

// Runs one criterion; numerical exceptions are reported as a failure with the message as note.
CriterionResult run_criterion(int id);

}  // namespace wkam
