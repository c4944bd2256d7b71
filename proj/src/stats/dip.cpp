#include "wmid/stats/dip.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "wmid/core/prf.hpp"
#include "wmid/error.hpp"

namespace wmid {

namespace {

// Port of the classical GCM/LCM cycling (AS 217 as revised by Maechler).
// x is sorted, 1-based (x[0] unused). Returns the dip in units of 1/(2n)
// together with the final modal indices.
struct RawDip {
  double dip2n;
  std::size_t low, high;
};

RawDip dip_sorted(const std::vector<double>& x, std::size_t n) {
  std::size_t low = 1, high = n;
  double dip = 1.0;
  if (n < 2 || x[n] == x[1]) return {dip, low, high};

  std::vector<std::size_t> mn(n + 1), mj(n + 1), gcm(n + 2), lcm(n + 2);
  mn[1] = 1;
  for (std::size_t j = 2; j <= n; ++j) {
    mn[j] = j - 1;
    for (;;) {
      std::size_t mnj = mn[j], mnmnj = mn[mnj];
      if (mnj == 1 || (x[j] - x[mnj]) * static_cast<double>(mnj - mnmnj) <
                          (x[mnj] - x[mnmnj]) * static_cast<double>(j - mnj))
        break;
      mn[j] = mnmnj;
    }
  }
  mj[n] = n;
  for (std::size_t k = n - 1; k >= 1; --k) {
    mj[k] = k + 1;
    for (;;) {
      std::size_t mjk = mj[k], mjmjk = mj[mjk];
      // Signed arithmetic: (k - mjk) is negative.
      if (mjk == n || (x[k] - x[mjk]) * (static_cast<double>(mjk) - static_cast<double>(mjmjk)) <
                          (x[mjk] - x[mjmjk]) * (static_cast<double>(k) - static_cast<double>(mjk)))
        break;
      mj[k] = mjmjk;
    }
  }

  for (;;) {
    gcm[1] = high;
    std::size_t i = 1;
    for (; gcm[i] > low; ++i) gcm[i + 1] = mn[gcm[i]];
    const std::size_t l_gcm = i;
    std::size_t ig = l_gcm, ix = ig - 1;

    lcm[1] = low;
    i = 1;
    for (; lcm[i] < high; ++i) lcm[i + 1] = mj[lcm[i]];
    const std::size_t l_lcm = i;
    std::size_t ih = l_lcm, iv = 2;

    double d = 0.0;
    if (l_gcm != 2 || l_lcm != 2) {
      do {
        std::size_t gcmix = gcm[ix], lcmiv = lcm[iv];
        if (gcmix > lcmiv) {
          std::size_t gcmi1 = gcm[ix + 1];
          double dx = (static_cast<double>(lcmiv) - static_cast<double>(gcmi1) + 1.0) -
                      (x[lcmiv] - x[gcmi1]) * static_cast<double>(gcmix - gcmi1) /
                          (x[gcmix] - x[gcmi1]);
          ++iv;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv - 1;
          }
        } else {
          std::size_t lcmiv1 = lcm[iv - 1];
          double dx = (x[gcmix] - x[lcmiv1]) * static_cast<double>(lcmiv - lcmiv1) /
                          (x[lcmiv] - x[lcmiv1]) -
                      (static_cast<double>(gcmix) - static_cast<double>(lcmiv1) - 1.0);
          --ix;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv;
          }
        }
        if (ix < 1) ix = 1;
        if (iv > l_lcm) iv = l_lcm;
      } while (gcm[ix] != lcm[iv]);
    } else {
      d = 1.0;
    }
    if (d < dip) break;

    double dip_l = 0.0;
    for (std::size_t j = ig; j < l_gcm; ++j) {
      double max_t = 1.0;
      std::size_t jb = gcm[j + 1], je = gcm[j];
      if (je - jb > 1 && x[je] != x[jb]) {
        double c = static_cast<double>(je - jb) / (x[je] - x[jb]);
        for (std::size_t jj = jb; jj <= je; ++jj) {
          double t = static_cast<double>(jj - jb + 1) - (x[jj] - x[jb]) * c;
          if (max_t < t) max_t = t;
        }
      }
      dip_l = std::max(dip_l, max_t);
    }
    double dip_u = 0.0;
    for (std::size_t j = ih; j < l_lcm; ++j) {
      double max_t = 1.0;
      std::size_t jb = lcm[j], je = lcm[j + 1];
      if (je - jb > 1 && x[je] != x[jb]) {
        double c = static_cast<double>(je - jb) / (x[je] - x[jb]);
        for (std::size_t jj = jb; jj <= je; ++jj) {
          double t = (x[jj] - x[jb]) * c - (static_cast<double>(jj) - static_cast<double>(jb) - 1.0);
          if (max_t < t) max_t = t;
        }
      }
      dip_u = std::max(dip_u, max_t);
    }
    dip = std::max(dip, std::max(dip_l, dip_u));

    if (low == gcm[ig] && high == lcm[ih]) break;
    low = gcm[ig];
    high = lcm[ih];
  }
  return {dip, low, high};
}

DipStatistic dip_of_sorted(const std::vector<double>& one_based, std::size_t n) {
  DipStatistic s;
  if (n < 4) {
    s.dip = 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(n, 1)));
    if (n > 0) {
      s.modal_lo = one_based[1];
      s.modal_hi = one_based[n];
    }
    return s;
  }
  RawDip r = dip_sorted(one_based, n);
  s.dip = std::min(r.dip2n / (2.0 * static_cast<double>(n)), 0.25);
  s.modal_lo = one_based[r.low];
  s.modal_hi = one_based[r.high];
  return s;
}

}  // namespace

DipStatistic dip_statistic(std::span<const double> sample) {
  std::vector<double> x(sample.size() + 1, 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (!std::isfinite(sample[i])) throw ArgumentError("dip sample contains a non-finite value");
    x[i + 1] = sample[i];
  }
  std::sort(x.begin() + 1, x.end());
  return dip_of_sorted(x, sample.size());
}

std::shared_ptr<const std::vector<double>> uniform_null_dips(std::size_t n, std::size_t B,
                                                             std::uint64_t seed) {
  using Key = std::tuple<std::size_t, std::size_t, std::uint64_t>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const std::vector<double>>> cache;
  const Key key{n, B, seed};
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<std::vector<double>>(B);
  auto work = [&](std::size_t begin, std::size_t step) {
    std::vector<double> x(n + 1, 0.0);
    for (std::size_t r = begin; r < B; r += step) {
      SplitMix rng(mix_seed(seed, r));
      for (std::size_t i = 1; i <= n; ++i) x[i] = rng.uniform();
      std::sort(x.begin() + 1, x.end());
      (*table)[r] = dip_of_sorted(x, n).dip;
    }
  };
  std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  if (workers == 1 || B < 64) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  std::sort(table->begin(), table->end());
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.emplace(key, std::move(table));
  return it->second;
}

double dip_p_value(double dip, std::size_t n, std::size_t bootstrap_B, std::uint64_t seed) {
  if (bootstrap_B < 1000) throw ArgumentError("bootstrap_B must be at least 1000");
  if (!(dip >= 0.0) || !std::isfinite(dip)) throw ArgumentError("dip must be finite and >= 0");
  if (dip == 0.0) return 1.0;
  if (n < 4) return 1.0;
  auto table = uniform_null_dips(n, bootstrap_B, seed);
  // Relative slack so a replicate equal to the observed dip up to rounding counts.
  double thresh = dip * (1.0 - 1e-12);
  auto it = std::lower_bound(table->begin(), table->end(), thresh);
  return static_cast<double>(table->end() - it) / static_cast<double>(table->size());
}

DipResult dip_test(std::span<const double> sample, std::size_t bootstrap_B, std::uint64_t seed) {
  auto s = dip_statistic(sample);
  DipResult r;
  r.dip = s.dip;
  r.modal_lo = s.modal_lo;
  r.modal_hi = s.modal_hi;
  bool degenerate = sample.size() < 4 || s.modal_lo == s.modal_hi;
  r.p_value = degenerate ? 1.0 : dip_p_value(s.dip, sample.size(), bootstrap_B, seed);
  return r;
}

}  // namespace wmid
