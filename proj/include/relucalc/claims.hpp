#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relucalc/numeric.hpp"

namespace relucalc {

// Executable acceptance criteria. Claim numbers match the acceptance list.

struct ClaimOptions {
  std::vector<size_t> n;              // empty: the claim's own parameter set
  std::string f;                      // function filter (super convergence)
  size_t grid = 0;                    // 0: the claim's own resolution
  std::optional<double> tolerance;    // additive slack on every bound; claim default when unset
  std::optional<Mode> mode;           // evaluation arithmetic where a claim offers a choice
  uint64_t seed = 1;
};

struct ClaimLine {
  std::string label;
  std::string measured;
  std::string contract;
  bool pass = false;
};

struct ClaimReport {
  int number = 0;
  std::string id;
  std::string title;
  std::vector<ClaimLine> lines;
  bool pass = false;
  std::string note;
  double seconds = 0;
  double tolerance = 0;
};

struct Claim {
  int number;
  std::string id;
  std::string title;
  double default_tolerance;
  std::function<void(const ClaimOptions&, ClaimReport&)> body;
};

const std::vector<Claim>& claims();
// by id or by number ("7"); nullptr when unknown
const Claim* find_claim(const std::string& key);
// sets pass, seconds and tolerance; exceptions become a failing line
ClaimReport run_claim(const Claim& claim, const ClaimOptions& opts);
// independent tasks on up to `jobs` threads; result ordered by claim number
std::vector<ClaimReport> run_claims(const std::vector<const Claim*>& which, const ClaimOptions& opts, size_t jobs = 0);

std::string report_json(const std::vector<ClaimReport>& reports);
// one PASS/FAIL line per claim followed by indented detail lines
std::string report_text(const ClaimReport& report, bool details);

// "3", "1..8" or "4,6,8"
std::vector<size_t> parse_index_list(const std::string& text);

}  // namespace relucalc
