// SPDX-License-Identifier: Apache-2.0
#include "hybeam/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hybeam/errors.hpp"

namespace hybeam::selection {

std::uint64_t subset_count(int n_total, int n_sel) {
  if (n_sel <= 0 || n_sel > n_total) {
    throw contract_error("subset_count: need 0 < n_sel <= n_total");
  }
  const std::uint64_t k = std::min<std::uint64_t>(n_sel, n_total - n_sel);
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // c * num / i is an exact integer at every step; cancel gcd(num, i) first
    // so the check only rejects results that genuinely overflow 64 bits.
    std::uint64_t num = n_total - k + i;
    std::uint64_t den = i;
    const std::uint64_t g = std::gcd(num, den);
    num /= g;
    den /= g;
    c /= den;  // den divides c exactly after the gcd cancellation
    if (c > UINT64_MAX / num) {
      throw budget_error("subset_count: C(" + std::to_string(n_total) + "," +
                             std::to_string(n_sel) + ") overflows 64 bits",
                         UINT64_MAX);
    }
    c *= num;
  }
  return c;
}

AntennaSubset subset_from_class(std::uint64_t class_index, int n_total, int n_sel) {
  const std::uint64_t total = subset_count(n_total, n_sel);
  if (class_index >= total) {
    throw contract_error("subset_from_class: class index " +
                         std::to_string(class_index) + " out of range");
  }
  AntennaSubset out;
  out.class_index = class_index;
  out.indices.reserve(n_sel);
  std::uint64_t rank = class_index;
  int next = 0;
  for (int slot = 0; slot < n_sel; ++slot) {
    for (int cand = next;; ++cand) {
      const int remaining = n_sel - slot - 1;
      const std::uint64_t with_cand =
          remaining == 0 ? 1 : subset_count(n_total - cand - 1, remaining);
      if (rank < with_cand) {
        out.indices.push_back(cand);
        next = cand + 1;
        break;
      }
      rank -= with_cand;
    }
  }
  return out;
}

std::uint64_t class_from_subset(const std::vector<int>& indices, int n_total) {
  const int n_sel = static_cast<int>(indices.size());
  if (n_sel == 0) throw contract_error("class_from_subset: empty subset");
  for (int i = 0; i < n_sel; ++i) {
    if (indices[i] < 0 || indices[i] >= n_total ||
        (i > 0 && indices[i] <= indices[i - 1])) {
      throw contract_error("class_from_subset: indices not strictly increasing in range");
    }
  }
  std::uint64_t rank = 0;
  int prev = -1;
  for (int slot = 0; slot < n_sel; ++slot) {
    for (int cand = prev + 1; cand < indices[slot]; ++cand) {
      const int remaining = n_sel - slot - 1;
      rank += remaining == 0 ? 1 : subset_count(n_total - cand - 1, remaining);
    }
    prev = indices[slot];
  }
  return rank;
}

CMatrix build_selection_matrix(const AntennaSubset& subset, int n_total) {
  CMatrix q = CMatrix::Zero(subset.indices.size(), n_total);
  for (std::size_t r = 0; r < subset.indices.size(); ++r) {
    if (subset.indices[r] < 0 || subset.indices[r] >= n_total) {
      throw contract_error("build_selection_matrix: index out of range");
    }
    q(r, subset.indices[r]) = 1.0;
  }
  return q;
}

CMatrix apply_selection(const CMatrix& h, const AntennaSubset& subset) {
  CMatrix out(subset.indices.size(), h.cols());
  for (std::size_t r = 0; r < subset.indices.size(); ++r) {
    const int idx = subset.indices[r];
    if (idx < 0 || idx >= h.rows()) {
      throw contract_error("apply_selection: antenna index out of range");
    }
    out.row(r) = h.row(idx);
  }
  return out;
}

double subset_rate(const CMatrix& h_sel, double snr, int n_s) {
  const auto dec = linalg::svd(h_sel);
  const int top = std::min<int>(n_s, static_cast<int>(dec.s.size()));
  double rate = 0.0;
  for (int i = 0; i < top; ++i) {
    rate += std::log2(1.0 + (snr / n_s) * dec.s(i) * dec.s(i));
  }
  return rate;
}

BestSubsetResult exhaustive_best_subset(const CMatrix& h, int n_sel, double snr,
                                        int n_s, std::uint64_t max_subsets) {
  const int n_total = static_cast<int>(h.rows());
  const std::uint64_t total = subset_count(n_total, n_sel);
  if (total > max_subsets) {
    throw budget_error("exhaustive_best_subset: " + std::to_string(total) +
                           " subsets exceed budget " + std::to_string(max_subsets),
                       total);
  }
  BestSubsetResult best;
  best.rate = -1.0;
  // Ascending class order so the first strict improvement wins ties by
  // smallest class index.
  AntennaSubset cur = subset_from_class(0, n_total, n_sel);
  for (std::uint64_t c = 0; c < total; ++c) {
    const double rate = subset_rate(apply_selection(h, cur), snr, n_s);
    if (rate > best.rate) {
      best.subset = cur;
      best.rate = rate;
    }
    // Advance to the lexicographic successor in place.
    if (c + 1 < total) {
      int i = n_sel - 1;
      while (cur.indices[i] == n_total - n_sel + i) --i;
      ++cur.indices[i];
      for (int j = i + 1; j < n_sel; ++j) cur.indices[j] = cur.indices[j - 1] + 1;
      ++cur.class_index;
    }
  }
  return best;
}

AntennaSubset random_subset(int n_total, int n_sel, Rng& rng) {
  const std::uint64_t total = subset_count(n_total, n_sel);
  return subset_from_class(rng.uniform_int(total), n_total, n_sel);
}

}  // namespace hybeam::selection
