#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "chunkbench/error.h"
#include "chunkbench/evalstat.h"
#include "chunkbench/hashing.h"

namespace chunkbench {

namespace {

constexpr double kGammaEps = 1e-15;
constexpr int kGammaMaxIter = 100000;

// Average ranks (1-based) of one row; returns the tie term sum(t^3 - t).
double rank_row(std::span<const double> row, std::vector<double>& ranks) {
  const std::size_t m = row.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return row[a] < row[b]; });
  ranks.assign(m, 0.0);
  double ties = 0.0;
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j + 1 < m && row[idx[j + 1]] == row[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  return ties;
}

double gamma_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < kGammaMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kGammaEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail by Lentz's continued fraction.
double gamma_continued_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kGammaEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kGammaMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kGammaEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

std::uint64_t draw_seed(std::uint64_t seed, std::uint64_t draw) {
  return splitmix64(seed ^ splitmix64(draw + 0x632BE59BD9B4E019ULL));
}

}  // namespace

FriedmanResult friedman_test(const EvalMatrix& matrix) {
  const std::size_t n = matrix.rows();
  const std::size_t m = matrix.cols();
  if (n < 2 || m < 3) {
    throw DataError("Friedman test needs at least 2 rows and 3 methods (got " +
                    std::to_string(n) + " x " + std::to_string(m) + ")");
  }
  std::vector<double> rank_sums(m, 0.0);
  std::vector<double> ranks;
  double ties = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    ties += rank_row(std::span<const double>(matrix.values.data() + q * m, m), ranks);
    for (std::size_t j = 0; j < m; ++j) rank_sums[j] += ranks[j];
  }

  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  FriedmanResult r;
  r.df = m - 1;
  for (double s : rank_sums) r.mean_ranks.push_back(s / nd);

  const double center = nd * (md + 1.0) / 2.0;
  double ss = 0.0;
  for (double s : rank_sums) ss += (s - center) * (s - center);
  const double correction = 1.0 - ties / (nd * (md * md * md - md));
  if (correction <= 0.0) return r;  // every row constant
  r.statistic = 12.0 * ss / (nd * md * (md + 1.0)) / correction;
  r.p_value = chi_square_upper_tail(r.statistic, static_cast<double>(r.df));
  return r;
}

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw DataError("regularized gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw DataError("regularized gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double chi_square_upper_tail(double x, double df) {
  if (x <= 0.0) return 1.0;
  return std::clamp(regularized_gamma_q(df / 2.0, x / 2.0), 0.0, 1.0);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DataError("normal quantile needs 0 < p < 1");
  // Acklam's rational approximation, then one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

PermutationResult paired_permutation_test(std::span<const double> a, std::span<const double> b,
                                          std::size_t draws, std::uint64_t seed,
                                          std::size_t exhaustive_limit) {
  if (a.size() != b.size()) {
    throw DataError("paired test needs equal lengths (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DataError("paired test needs at least one pair");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  double observed = 0.0;
  double magnitude = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    observed += d[i];
    magnitude += std::abs(d[i]);
  }
  PermutationResult r;
  r.observed = observed / static_cast<double>(n);
  // Sums are compared, not means; the slack absorbs rounding so that
  // permutations tying the observed statistic count as extreme.
  const double threshold = std::abs(observed) - 1e-9 * magnitude;

  if (n <= exhaustive_limit && n < 63) {
    // Gray-code walk: each step flips one sign.
    const std::uint64_t total = std::uint64_t{1} << n;
    std::vector<double> sign(n, 1.0);
    double sum = observed;
    std::uint64_t count = std::abs(sum) >= threshold ? 1 : 0;
    for (std::uint64_t k = 1; k < total; ++k) {
      const auto i = static_cast<std::size_t>(std::countr_zero(k));
      sign[i] = -sign[i];
      sum += 2.0 * sign[i] * d[i];
      if (std::abs(sum) >= threshold) ++count;
    }
    r.exhaustive = true;
    r.permutations = total;
    r.p_value = static_cast<double>(count) / static_cast<double>(total);
    return r;
  }

  if (draws == 0) throw DataError("permutation test needs at least one draw");
  std::uint64_t count = 0;
  for (std::size_t draw = 0; draw < draws; ++draw) {
    SplitMix64 rng(draw_seed(seed, draw));
    double sum = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = rng();
      sum += (bits & 1) ? -d[i] : d[i];
      bits >>= 1;
    }
    if (std::abs(sum) >= threshold) ++count;
  }
  r.permutations = draws;
  r.p_value = static_cast<double>(count + 1) / static_cast<double>(draws + 1);
  return r;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](auto x, auto y) { return p_values[x] < p_values[y]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    running = std::max(running, static_cast<double>(m - j) * p_values[idx[j]]);
    out[idx[j]] = std::min(1.0, running);
  }
  return out;
}

Interval paired_bootstrap_ci(std::span<const double> diffs, std::size_t draws,
                             std::uint64_t seed, double level) {
  const std::size_t n = diffs.size();
  if (n < 2) throw DataError("bootstrap needs at least two differences");
  if (draws == 0) throw DataError("bootstrap needs at least one draw");
  if (!(level > 0.0 && level < 1.0)) throw DataError("confidence level must be in (0, 1)");
  std::vector<double> means(draws);
  for (std::size_t draw = 0; draw < draws; ++draw) {
    SplitMix64 rng(draw_seed(seed, draw));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += diffs[uniform_index(rng, n)];
    means[draw] = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double h = static_cast<double>(draws - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, draws - 1);
    return means[lo] + (h - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  return {quantile((1.0 - level) / 2.0), quantile((1.0 + level) / 2.0)};
}

Interval normal_ci(std::span<const double> values, double level) {
  const double mu = mean(values);
  if (values.size() < 2) return {mu, mu};
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  const double half = normal_quantile((1.0 + level) / 2.0) * sd /
                      std::sqrt(static_cast<double>(values.size()));
  return {mu - half, mu + half};
}

StatsReport compare_methods(const EvalMatrix& matrix, const StatsConfig& config,
                            std::string metric) {
  StatsReport report;
  report.metric = std::move(metric);
  if (matrix.rows() >= 2 && matrix.cols() >= 3) report.friedman = friedman_test(matrix);

  const std::size_t base = matrix.method_index(config.baseline);
  const auto base_col = matrix.column(base);
  std::vector<double> raw;
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    if (j == base) continue;
    const auto col = matrix.column(j);
    const std::string stage = report.metric + "/" + matrix.method_tags[j];
    auto perm = paired_permutation_test(col, base_col, config.permutation_draws,
                                        derive_seed(config.seed, "permutation/" + stage));
    std::vector<double> diffs(col.size());
    for (std::size_t q = 0; q < col.size(); ++q) diffs[q] = col[q] - base_col[q];

    Comparison c;
    c.method = matrix.method_tags[j];
    c.baseline = config.baseline;
    c.mean_difference = perm.observed;
    c.p_raw = perm.p_value;
    c.exhaustive = perm.exhaustive;
    if (diffs.size() >= 2) {
      c.bootstrap_ci = paired_bootstrap_ci(diffs, config.bootstrap_draws,
                                           derive_seed(config.seed, "bootstrap/" + stage),
                                           config.level);
    } else {
      c.bootstrap_ci = {perm.observed, perm.observed};
    }
    raw.push_back(c.p_raw);
    report.comparisons.push_back(std::move(c));
  }
  const auto adjusted = holm_adjust(raw);
  for (std::size_t i = 0; i < adjusted.size(); ++i) report.comparisons[i].p_holm = adjusted[i];
  return report;
}

nlohmann::ordered_json to_json(const StatsReport& report) {
  nlohmann::ordered_json j;
  j["metric"] = report.metric;
  if (report.friedman) {
    j["friedman"] = {{"statistic", report.friedman->statistic},
                     {"df", report.friedman->df},
                     {"p_value", report.friedman->p_value},
                     {"mean_ranks", report.friedman->mean_ranks}};
  } else {
    j["friedman"] = nullptr;
  }
  j["comparisons"] = nlohmann::ordered_json::array();
  for (const auto& c : report.comparisons) {
    j["comparisons"].push_back({{"method", c.method},
                                {"baseline", c.baseline},
                                {"mean_difference", c.mean_difference},
                                {"p_raw", c.p_raw},
                                {"p_holm", c.p_holm},
                                {"exhaustive", c.exhaustive},
                                {"bootstrap_ci", {c.bootstrap_ci.low, c.bootstrap_ci.high}}});
  }
  return j;
}

}  // namespace chunkbench
