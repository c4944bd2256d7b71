#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace wmid {

struct DipStatistic {
  double dip = 0.0;
  double modal_lo = 0.0;
  double modal_hi = 0.0;
};

struct DipResult {
  double dip = 0.0;
  double p_value = 1.0;
  double modal_lo = 0.0;
  double modal_hi = 0.0;
};

inline constexpr std::size_t kDefaultBootstrap = 2000;
inline constexpr std::uint64_t kDefaultDipSeed = 0xD1B7E57ULL;

// Hartigan & Hartigan dip of the empirical distribution. Samples with
// n < 4 or a single distinct value give 1/(2n).
DipStatistic dip_statistic(std::span<const double> sample);

// Fraction of bootstrap_B uniform[0,1] samples of size n with dip at least
// `dip`. The null table is computed once per (n, B, seed) and cached;
// replicate r uses a seed derived from (seed, r) so the table does not
// depend on the worker count.
double dip_p_value(double dip, std::size_t n, std::size_t bootstrap_B = kDefaultBootstrap,
                   std::uint64_t seed = kDefaultDipSeed);

DipResult dip_test(std::span<const double> sample, std::size_t bootstrap_B = kDefaultBootstrap,
                   std::uint64_t seed = kDefaultDipSeed);

// Sorted ascending.
std::shared_ptr<const std::vector<double>> uniform_null_dips(std::size_t n, std::size_t B,
                                                             std::uint64_t seed);

}  // namespace wmid
