#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ciest {

struct CriterionResult {
  std::string id;
  std::string name;
  double measured = 0.0;
  std::string tolerance;  // human-readable pass condition
  bool pass = false;
  std::string detail;
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  bool pass() const;
};

struct AcceptOptions {
  int workers = 0;
  std::ostream* log = nullptr;  // progress messages
};

// Runs every criterion listed in <suite_dir>/criteria.json. Scenario runs are
// shared between criteria; a criterion asking for R replications uses the
// first R. An empty or missing suite directory is an InputError; a missing
// scenario file fails only the criteria that need it.
AcceptanceReport accept(const std::filesystem::path& suite_dir, const AcceptOptions& options = {});

// "[PASS] 3 consensus_rate measured=-0.71 require <= -0.6 (...)"
std::string format_result(const CriterionResult& result);

// Built-in numerical oracle checks (finite differences, closed forms,
// spectra, projections, running mean). Returns the failures; empty on
// success.
std::vector<std::string> unit_oracle_failures();

}  // namespace ciest
