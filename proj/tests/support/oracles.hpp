// Brute-force reference implementations used to cross-check the library.
// Everything here favors obviousness over speed: O(n^2) rank counting,
// full DP tables, ternary search instead of closed forms.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracles {

// Average (fractional) rank of each element, 1-based, computed by counting.
inline std::vector<double> ranks_by_counting(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++smaller;
      if (v[j] == v[i]) ++equal;
    }
    // ranks smaller+1 .. smaller+equal share this value; take the mean.
    r[i] = static_cast<double>(smaller) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  return r;
}

struct SpearmanRef {
  double rho = 0;
  bool defined = false;
};

inline SpearmanRef spearman_ref(const std::vector<double>& xs,
                                const std::vector<double>& ys) {
  SpearmanRef out;
  const auto rx = ranks_by_counting(xs);
  const auto ry = ranks_by_counting(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (double v : rx) mx += v;
  for (double v : ry) my += v;
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return out;
  out.rho = sxy / std::sqrt(sxx * syy);
  out.defined = true;
  return out;
}

// Quantile edges: e_j = sorted[ceil(j*n/k) - 1] for j = 1..k-1 (ties-lower).
inline std::vector<double> quantile_edges_ref(std::vector<double> v, int k) {
  std::sort(v.begin(), v.end());
  std::vector<double> edges;
  const double n = static_cast<double>(v.size());
  for (int j = 1; j < k; ++j) {
    const auto idx = static_cast<std::size_t>(
        std::ceil(static_cast<double>(j) * n / static_cast<double>(k)) - 1.0);
    edges.push_back(v[idx]);
  }
  return edges;
}

inline int bucket_of_ref(double value, const std::vector<double>& edges) {
  int b = 0;
  for (double e : edges) {
    if (e < value) ++b;
  }
  return b;
}

struct BucketRef {
  double c_lo = 0, c_hi = 0;
  std::int64_t n = 0;
  double mean_advantage = 0;
  double win_rate = 0;
};

inline std::vector<BucketRef> quantile_buckets_ref(
    const std::vector<double>& costs, const std::vector<double>& adv, int k) {
  const auto edges = quantile_edges_ref(costs, k);
  std::vector<BucketRef> out(static_cast<std::size_t>(k));
  const double lo = *std::min_element(costs.begin(), costs.end());
  const double hi = *std::max_element(costs.begin(), costs.end());
  for (int b = 0; b < k; ++b) {
    out[static_cast<std::size_t>(b)].c_lo =
        (b == 0) ? lo : edges[static_cast<std::size_t>(b - 1)];
    out[static_cast<std::size_t>(b)].c_hi =
        (b == k - 1) ? hi : edges[static_cast<std::size_t>(b)];
  }
  for (std::size_t i = 0; i < costs.size(); ++i) {
    auto& bk = out[static_cast<std::size_t>(bucket_of_ref(costs[i], edges))];
    bk.n += 1;
    bk.mean_advantage += adv[i];
    if (adv[i] > 0) bk.win_rate += 1;
  }
  for (auto& bk : out) {
    if (bk.n > 0) {
      bk.mean_advantage /= static_cast<double>(bk.n);
      bk.win_rate /= static_cast<double>(bk.n);
    }
  }
  return out;
}

struct GridCellRef {
  std::int64_t n = 0;
  double mean_advantage = 0;
};

inline std::vector<GridCellRef> joint_grid_ref(const std::vector<double>& vcr,
                                               const std::vector<double>& cost,
                                               const std::vector<double>& adv) {
  const auto ev = quantile_edges_ref(vcr, 3);
  const auto ec = quantile_edges_ref(cost, 3);
  std::vector<GridCellRef> cells(9);
  for (std::size_t i = 0; i < vcr.size(); ++i) {
    const int r = bucket_of_ref(vcr[i], ev);
    const int c = bucket_of_ref(cost[i], ec);
    auto& cell = cells[static_cast<std::size_t>(r) * 3 +
                       static_cast<std::size_t>(c)];
    cell.n += 1;
    cell.mean_advantage += adv[i];
  }
  for (auto& cell : cells) {
    if (cell.n > 0) cell.mean_advantage /= static_cast<double>(cell.n);
  }
  return cells;
}

// Full-table longest common subsequence over token sequences.
inline std::size_t lcs_ref(const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> dp(a.size() + 1,
                                           std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      dp[i][j] = (a[i - 1] == b[j - 1])
                     ? dp[i - 1][j - 1] + 1
                     : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  return dp[a.size()][b.size()];
}

// No-intercept least squares slope located by ternary search on the convex
// residual sum, instead of the closed form.
inline double fit_slope_ref(const std::vector<double>& xs,
                            const std::vector<double>& gs) {
  auto ss_res = [&](double v) {
    double s = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = gs[i] - v * xs[i];
      s += r * r;
    }
    return s;
  };
  double lo = -100.0, hi = 100.0;
  for (int iter = 0; iter < 300; ++iter) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (ss_res(m1) < ss_res(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return (lo + hi) / 2.0;
}

// Best rational approximation p/q of target with 0 <= p <= q <= max_den.
struct Rational {
  long long num = 0, den = 1;
  double value() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

inline Rational best_rational(double target, long long max_den) {
  Rational best{0, 1};
  double best_err = std::abs(target);
  for (long long q = 1; q <= max_den; ++q) {
    long long p = std::llround(target * static_cast<double>(q));
    if (p < 0) p = 0;
    if (p > q) p = q;
    const double err =
        std::abs(static_cast<double>(p) / static_cast<double>(q) - target);
    if (err < best_err) {
      best_err = err;
      best = Rational{p, q};
    }
  }
  return best;
}

// Independent restatement of the approximate tokenizer: one token per
// punctuation codepoint, ceil(len/4) per maximal word run, whitespace and
// control characters free.
inline std::int64_t approx_tokens_ref(const std::u32string& text) {
  auto is_space = [](char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
           c == U'\v';
  };
  auto is_ctl = [](char32_t c) { return c < 0x20 || c == 0x7f; };
  auto is_word = [](char32_t c) {
    return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') ||
           (c >= U'A' && c <= U'Z') || c >= 0x80;
  };
  std::int64_t n = 0;
  std::size_t run = 0;
  auto flush = [&] {
    if (run > 0) {
      n += static_cast<std::int64_t>((run + 3) / 4);
      run = 0;
    }
  };
  for (char32_t c : text) {
    if (is_word(c)) {
      ++run;
      continue;
    }
    flush();
    if (!is_space(c) && !is_ctl(c)) ++n;
  }
  flush();
  return n;
}

// Axis-aligned rectangle overlap test used to re-derive char-to-cell
// membership independently of the alignment builder.
inline bool rect_hits_cell(double x0, double y0, double x1, double y1, int col,
                           int row, double cell) {
  const double cx0 = col * cell, cy0 = row * cell;
  const double cx1 = cx0 + cell, cy1 = cy0 + cell;
  return x0 < cx1 && x1 > cx0 && y0 < cy1 && y1 > cy0;
}

}  // namespace oracles
