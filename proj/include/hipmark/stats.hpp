#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hipmark {

namespace detail {

// Continued-fraction regularized incomplete beta, the standard route to the
// Student-t tail.
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p-value of a Student-t statistic with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw std::invalid_argument("student_t: df must be > 0");
  if (!std::isfinite(t)) return 0.0;
  return detail::incbeta(df / 2.0, 0.5, df / (df + t * t));
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson: need two sequences of equal length >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  bool identical = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
    identical = identical && a[i] == b[i];
  }
  if (saa <= 0.0 || sbb <= 0.0) return identical ? 1.0 : 0.0;
  return sab / std::sqrt(saa * sbb);
}

// ICC(2,1): two-way random effects, absolute agreement, single measurement.
// rows = targets, cols = raters.
inline double icc21(const std::vector<std::vector<double>>& table) {
  const std::size_t n = table.size();
  if (n < 2) throw std::invalid_argument("icc21: need at least 2 targets");
  const std::size_t k = table[0].size();
  if (k < 2) throw std::invalid_argument("icc21: need at least 2 raters");
  for (const auto& row : table)
    if (row.size() != k) throw std::invalid_argument("icc21: ragged table");

  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  double grand = 0.0;
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += table[i][j];
      col_mean[j] += table[i][j];
      grand += table[i][j];
    }
  for (auto& v : row_mean) v /= kd;
  for (auto& v : col_mean) v /= nd;
  grand /= nd * kd;

  double ss_rows = 0.0, ss_cols = 0.0, ss_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  ss_rows *= kd;
  for (std::size_t j = 0; j < k; ++j) ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  ss_cols *= nd;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) ss_total += (table[i][j] - grand) * (table[i][j] - grand);
  const double ss_err = ss_total - ss_rows - ss_cols;

  const double bms = ss_rows / (nd - 1.0);
  const double jms = ss_cols / (kd - 1.0);
  const double ems = ss_err / ((nd - 1.0) * (kd - 1.0));
  const double denom = bms + (kd - 1.0) * ems + kd * (jms - ems) / nd;
  if (denom == 0.0) return 1.0;  // all values identical
  return (bms - ems) / denom;
}

struct PairedTTest {
  double t = 0.0;
  double p = 1.0;
};

// Paired two-sided t-test; all-zero differences pin t = 0, p = 1.
inline PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("paired_t_test: need equal lengths >= 2");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double var = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= n - 1.0;
  PairedTTest r;
  if (var <= 0.0) {
    if (mean == 0.0) return r;  // t = 0, p = 1
    r.t = std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = mean / std::sqrt(var / n);
  r.p = student_t_two_sided_p(r.t, n - 1.0);
  return r;
}

}  // namespace hipmark
