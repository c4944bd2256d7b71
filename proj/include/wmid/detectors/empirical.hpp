#pragma once

#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wmid/error.hpp"

namespace wmid {

// Histogram of restricted-task outcomes. total counts valid outcomes only;
// it may be zero when every reply failed to parse.
struct EmpiricalDistribution {
  std::map<long long, std::size_t> counts;
  std::size_t total = 0;
  std::size_t invalid_count = 0;

  void add(long long outcome);
  void add_invalid() { ++invalid_count; }
  std::size_t attempts() const { return total + invalid_count; }
  double frequency(long long outcome) const;
  // sqrt(p(1-p)/N) with N = total.
  double standard_error(long long outcome) const;
  std::vector<double> expand() const;
  void merge(const EmpiricalDistribution& other);

  nlohmann::json to_json() const;
  static EmpiricalDistribution from_json(const nlohmann::json& j);
};

// Client failure during a probe; carries what was collected so far.
class ProbeError : public Error {
 public:
  ProbeError(const std::string& what, EmpiricalDistribution partial)
      : Error(what), partial_(std::move(partial)) {}
  const EmpiricalDistribution& partial() const { return partial_; }

 private:
  EmpiricalDistribution partial_;
};

// First maximal run of ASCII digits. Runs too long for a 64-bit value are
// reported as LLONG_MAX so range checks reject them.
std::optional<long long> first_digit_run(std::string_view text);

// First '0' or '1' character, ignoring leading whitespace; anything else
// is unparseable.
std::optional<int> parse_bit(std::string_view text);

}  // namespace wmid
