#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace dgt::test {

// Straightforward corpus BLEU: clipped n-gram counts per segment, exponential
// smoothing of zero-match orders, brevity penalty; 0 when an order has no n-grams.
inline double oracle_bleu(const std::vector<std::vector<std::string>>& cand,
                          const std::vector<std::vector<std::string>>& ref) {
  double match[4] = {0, 0, 0, 0};
  double total[4] = {0, 0, 0, 0};
  double c_len = 0;
  double r_len = 0;
  for (std::size_t s = 0; s < cand.size(); ++s) {
    c_len += static_cast<double>(cand[s].size());
    r_len += static_cast<double>(ref[s].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, int> c_counts;
      std::map<std::vector<std::string>, int> r_counts;
      for (std::size_t i = 0; i + n <= cand[s].size(); ++i) {
        ++c_counts[std::vector<std::string>(cand[s].begin() + i, cand[s].begin() + i + n)];
      }
      for (std::size_t i = 0; i + n <= ref[s].size(); ++i) {
        ++r_counts[std::vector<std::string>(ref[s].begin() + i, ref[s].begin() + i + n)];
      }
      for (const auto& [gram, k] : c_counts) {
        total[n - 1] += k;
        auto it = r_counts.find(gram);
        if (it != r_counts.end()) match[n - 1] += std::min(k, it->second);
      }
    }
  }
  double log_p = 0;
  double divisor = 1;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) return 0.0;
    double p;
    if (match[n] == 0) {
      divisor *= 2;
      p = 1.0 / (divisor * total[n]);
    } else {
      p = match[n] / total[n];
    }
    log_p += std::log(p);
  }
  const double bp = c_len == 0 ? 0.0 : (c_len < r_len ? std::exp(1.0 - r_len / c_len) : 1.0);
  return 100.0 * bp * std::exp(log_p / 4.0);
}

}  // namespace dgt::test
