#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specrank/condition.hpp"
#include "specrank/error.hpp"
#include "specrank/parallel.hpp"
#include "specrank/rank_engine.hpp"
#include "specrank/rng.hpp"

namespace specrank::stats {

enum class ModelKind { Ols, Logistic };

/// Coefficients with normal-approximation inference. `r_squared` is only
/// meaningful for OLS, `log_likelihood` and `ll_history` only for logistic.
struct RegressionFit {
  ModelKind kind = ModelKind::Ols;
  std::vector<std::string> coefficient_names;
  std::vector<double> beta;
  std::vector<double> std_err;
  std::vector<double> z;
  std::vector<double> p_values;
  double r_squared = 0.0;
  double log_likelihood = 0.0;
  std::size_t n_obs = 0;
  bool converged = true;
  int iterations = 0;
  std::vector<double> ll_history;
  /// Hash of the response vector; lets delta_r2 check both fits share y.
  std::uint64_t response_fingerprint = 0;

  /// Index of a named coefficient; throws IndexError.
  std::size_t index_of(const std::string& name) const;
};

/// Least squares via column-pivoted QR. The design must already contain an
/// intercept column if one is wanted. Throws SingularDesign when rank < p and
/// DegenerateInput when n <= p.
RegressionFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                      std::vector<std::string> names = {});

/// full.r_squared - reduced.r_squared. Throws NotNested unless the reduced
/// predictors are a subset of the full ones fitted to the same response.
double delta_r2(const RegressionFit& reduced, const RegressionFit& full);

struct LogisticOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  double separation_norm = 50.0;
};

/// Maximum likelihood by IRLS with step-halving. Throws SeparationDetected
/// when ||beta|| exceeds `separation_norm` while the likelihood is still rising
/// and SingularDesign when the information matrix cannot be inverted.
RegressionFit logistic_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                           std::vector<std::string> names = {},
                           const LogisticOptions& options = {});

/// Two-sided p-value of a z statistic under N(0, 1).
double normal_two_sided_p(double z);

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;
};

/// Pearson r with a two-sided p-value from the t transform on n - 2 degrees of
/// freedom. Throws DegenerateInput on zero variance, EmptyInput when n < 3.
Correlation pearson_r(std::span<const double> x, std::span<const double> y);

/// Spearman rho: Pearson r of mid-ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Linear-interpolation quantile (R type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

struct BootstrapCI {
  std::string statistic_name;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::size_t n_resamples = 2000;
  std::uint64_t seed = 0;

  friend bool operator==(const BootstrapCI&, const BootstrapCI&) = default;
};

struct BootstrapOptions {
  std::size_t n_resamples = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string statistic_name = "statistic";
};

/// Percentile bootstrap. Resample r draws its indices from
/// SplitMix64::substream(seed, r), so the interval depends only on the seed.
template <typename T, typename Statistic>
BootstrapCI bootstrap_ci(std::span<const T> samples, Statistic&& statistic,
                         const BootstrapOptions& options = {});

double mean(std::span<const double> values);

/// Pointwise summary of one length bin for one condition.
struct LengthBin {
  double bin_center = 0.0;
  double mean_rank = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;

  friend bool operator==(const LengthBin&, const LengthBin&) = default;
};

struct BinningOptions {
  std::size_t bin_width_chars = 10;
  std::size_t min_bin_count = 10;
  /// Length percentiles (0-100) kept per condition.
  std::pair<double, double> trim{2.5, 97.5};
  BootstrapOptions bootstrap;
};

/// Buckets ranks by floor(char_length / bin_width) within each condition after
/// trimming lengths to the given percentile range. Bins below
/// `min_bin_count` are dropped. Throws EmptyInput when nothing survives.
std::map<Condition, std::vector<LengthBin>> length_binned_means(
    std::span<const RankResult> results, const BinningOptions& options = {});

// ---------------------------------------------------------------------------

template <typename T, typename Statistic>
BootstrapCI bootstrap_ci(std::span<const T> samples, Statistic&& statistic,
                         const BootstrapOptions& options) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "bootstrap_ci: no samples");
  if (samples.size() < 2) throw Error(ErrorKind::EmptyInput, "bootstrap_ci: need n >= 2");
  if (!(options.level > 0.0 && options.level < 1.0))
    throw Error(ErrorKind::ValidationError, "bootstrap_ci: level must be in (0, 1)");
  if (options.n_resamples == 0)
    throw Error(ErrorKind::ValidationError, "bootstrap_ci: n_resamples must be positive");

  const std::size_t n = samples.size();
  const auto resamples = static_cast<std::ptrdiff_t>(options.n_resamples);
  std::vector<double> stats(options.n_resamples);

#pragma omp parallel num_threads(resolve_threads(options.threads))
  {
    std::vector<T> draw(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < resamples; ++r) {
      auto gen = SplitMix64::substream(options.seed, static_cast<std::uint64_t>(r));
      for (std::size_t i = 0; i < n; ++i) draw[i] = samples[gen.below(n)];
      stats[static_cast<std::size_t>(r)] = statistic(std::span<const T>(draw));
    }
  }

  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - options.level;
  BootstrapCI ci;
  ci.statistic_name = options.statistic_name;
  ci.point = statistic(samples);
  ci.lower = quantile_sorted(stats, alpha / 2.0);
  ci.upper = quantile_sorted(stats, 1.0 - alpha / 2.0);
  ci.level = options.level;
  ci.n_resamples = options.n_resamples;
  ci.seed = options.seed;
  return ci;
}

}  // namespace specrank::stats
