// Prints one PASS/FAIL line per acceptance criterion; exit status 0 iff all
// requested criteria pass. Usage: acceptance [id ...]
#include "wkam/acceptance.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (const auto& c : wkam::acceptance_criteria()) ids.push_back(c.id);
  bool all = true;
  for (int id : ids) {
    auto r = wkam::run_criterion(id);
    all &= r.pass;
    std::string detail;
    for (const auto& [k, v] : r.metrics) detail += fmt::format(" {}={:.6g}", k, v);
    fmt::print("{} [{}] {} ({:.1f}s){}\n", r.pass ? "PASS" : "FAIL", r.id, r.title, r.seconds, detail);
    if (!r.note.empty()) fmt::print("     note: {}\n", r.note);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
