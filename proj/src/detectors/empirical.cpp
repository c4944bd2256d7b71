#include "wmid/detectors/empirical.hpp"

#include <cctype>
#include <climits>
#include <cmath>

namespace wmid {

void EmpiricalDistribution::add(long long outcome) {
  ++counts[outcome];
  ++total;
}

double EmpiricalDistribution::frequency(long long outcome) const {
  if (total == 0) return 0.0;
  auto it = counts.find(outcome);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

double EmpiricalDistribution::standard_error(long long outcome) const {
  if (total == 0) return 0.0;
  double p = frequency(outcome);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(total));
}

std::vector<double> EmpiricalDistribution::expand() const {
  std::vector<double> out;
  out.reserve(total);
  for (const auto& [v, c] : counts) out.insert(out.end(), c, static_cast<double>(v));
  return out;
}

void EmpiricalDistribution::merge(const EmpiricalDistribution& other) {
  for (const auto& [v, c] : other.counts) counts[v] += c;
  total += other.total;
  invalid_count += other.invalid_count;
}

nlohmann::json EmpiricalDistribution::to_json() const {
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [v, n] : counts) c[std::to_string(v)] = n;
  return {{"counts", c}, {"total", total}, {"invalid_count", invalid_count}};
}

EmpiricalDistribution EmpiricalDistribution::from_json(const nlohmann::json& j) {
  EmpiricalDistribution d;
  try {
    for (const auto& [k, v] : j.at("counts").items()) d.counts[std::stoll(k)] = v.get<std::size_t>();
    d.total = j.at("total").get<std::size_t>();
    d.invalid_count = j.value("invalid_count", std::size_t{0});
  } catch (const std::exception& e) {
    throw ArgumentError(std::string("malformed distribution: ") + e.what());
  }
  std::size_t sum = 0;
  for (const auto& [v, c] : d.counts) sum += c;
  if (sum != d.total) throw ArgumentError("distribution counts do not sum to total");
  return d;
}

std::optional<long long> first_digit_run(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && !std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == text.size()) return std::nullopt;
  long long v = 0;
  bool overflow = false;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    int d = text[i] - '0';
    if (v > (LLONG_MAX - d) / 10) overflow = true;
    if (!overflow) v = v * 10 + d;
  }
  return overflow ? LLONG_MAX : v;
}

std::optional<int> parse_bit(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i == text.size()) return std::nullopt;
  if (text[i] == '0') return 0;
  if (text[i] == '1') return 1;
  return std::nullopt;
}

}  // namespace wmid
