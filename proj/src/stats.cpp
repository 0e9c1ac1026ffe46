#include "specrank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

#include "specrank/hash.hpp"

namespace specrank::stats {

namespace {

std::uint64_t fingerprint(const Eigen::VectorXd& y) {
  return fnv1a64({reinterpret_cast<const char*>(y.data()),
                  static_cast<std::size_t>(y.size()) * sizeof(double)});
}

std::vector<std::string> default_names(std::vector<std::string> names, Eigen::Index p) {
  if (names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names.size()) != p) {
    throw Error(ErrorKind::DimMismatch, "coefficient names do not match design columns");
  }
  return names;
}

void check_shape(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw Error(ErrorKind::DimMismatch, "design rows != response length");
  if (x.cols() == 0) throw Error(ErrorKind::ValidationError, "design has no columns");
  if (x.rows() <= x.cols()) {
    throw Error(ErrorKind::DegenerateInput, "need more observations than predictors");
  }
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorKind::DegenerateInput, "non-finite input");
}

void fill_inference(RegressionFit& fit, const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov) {
  const auto p = beta.size();
  fit.beta.resize(p);
  fit.std_err.resize(p);
  fit.z.resize(p);
  fit.p_values.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    fit.beta[j] = beta[j];
    fit.std_err[j] = std::sqrt(std::max(cov(j, j), 0.0));
    fit.z[j] = beta[j] / fit.std_err[j];
    fit.p_values[j] = normal_two_sided_p(fit.z[j]);
  }
}

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) computed without overflow
    const double softplus = std::max(eta[i], 0.0) + std::log1p(std::exp(-std::abs(eta[i])));
    ll += y[i] * eta[i] - softplus;
  }
  return ll;
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& eta) {
  return eta.unaryExpr([](double v) {
    return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  });
}

}  // namespace

std::size_t RegressionFit::index_of(const std::string& name) const {
  auto it = std::find(coefficient_names.begin(), coefficient_names.end(), name);
  if (it == coefficient_names.end()) throw Error(ErrorKind::IndexError, "no coefficient '" + name + "'");
  return static_cast<std::size_t>(it - coefficient_names.begin());
}

double normal_two_sided_p(double z) {
  if (std::isnan(z)) return 1.0;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

RegressionFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                      std::vector<std::string> names) {
  check_shape(design, y);
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p) {
    throw Error(ErrorKind::SingularDesign, "design has rank " + std::to_string(qr.rank()) +
                                               " < " + std::to_string(p) + " columns");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - design * beta;
  const double rss = resid.squaredNorm();
  const double tss = (y.array() - y.mean()).matrix().squaredNorm();

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = perm * (r_inv * r_inv.transpose()) * perm.transpose();
  const double sigma2 = rss / static_cast<double>(n - p);

  RegressionFit fit;
  fit.kind = ModelKind::Ols;
  fit.coefficient_names = default_names(std::move(names), p);
  fill_inference(fit, beta, sigma2 * xtx_inv);
  fit.r_squared = tss > 0.0 ? std::clamp(1.0 - rss / tss, 0.0, 1.0) : 0.0;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.converged = true;
  fit.response_fingerprint = fingerprint(y);
  return fit;
}

double delta_r2(const RegressionFit& reduced, const RegressionFit& full) {
  if (reduced.kind != ModelKind::Ols || full.kind != ModelKind::Ols) {
    throw Error(ErrorKind::NotNested, "delta_r2 needs two OLS fits");
  }
  if (reduced.n_obs != full.n_obs || reduced.response_fingerprint != full.response_fingerprint) {
    throw Error(ErrorKind::NotNested, "fits do not share a response");
  }
  const std::unordered_set<std::string> full_names(full.coefficient_names.begin(),
                                                   full.coefficient_names.end());
  if (reduced.coefficient_names.size() >= full.coefficient_names.size()) {
    throw Error(ErrorKind::NotNested, "reduced model is not smaller than the full model");
  }
  for (const auto& name : reduced.coefficient_names) {
    if (!full_names.contains(name)) {
      throw Error(ErrorKind::NotNested, "predictor '" + name + "' missing from full model");
    }
  }
  return std::max(0.0, full.r_squared - reduced.r_squared);
}

RegressionFit logistic_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                           std::vector<std::string> names, const LogisticOptions& options) {
  check_shape(design, y);
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  bool has_zero = false, has_one = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] == 0.0) has_zero = true;
    else if (y[i] == 1.0) has_one = true;
    else throw Error(ErrorKind::ValidationError, "logistic response must be 0 or 1");
  }
  if (!has_zero || !has_one) throw Error(ErrorKind::DegenerateInput, "response has a single class");

  RegressionFit fit;
  fit.kind = ModelKind::Logistic;
  fit.coefficient_names = default_names(std::move(names), p);
  fit.n_obs = static_cast<std::size_t>(n);
  fit.response_fingerprint = fingerprint(y);
  fit.converged = false;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = design * beta;
  double ll = log_likelihood(eta, y);
  fit.ll_history.push_back(ll);
  Eigen::MatrixXd information(p, p);

  const auto information_at = [&](const Eigen::VectorXd& mu) {
    const Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
    return Eigen::MatrixXd(design.transpose() * w.asDiagonal() * design);
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd mu = sigmoid(eta);
    const Eigen::VectorXd grad = design.transpose() * (y - mu);
    information = information_at(mu);
    if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      if (beta.norm() > options.separation_norm / 2.0) {
        throw Error(ErrorKind::SeparationDetected, "fitted probabilities collapsed to 0/1");
      }
      throw Error(ErrorKind::SingularDesign, "information matrix is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);

    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    Eigen::VectorXd candidate_eta = design * candidate;
    double candidate_ll = log_likelihood(candidate_eta, y);
    for (int halving = 0; halving < 40 && candidate_ll < ll; ++halving) {
      t /= 2.0;
      candidate = beta + t * step;
      candidate_eta = design * candidate;
      candidate_ll = log_likelihood(candidate_eta, y);
    }
    if (candidate_ll < ll) break;  // no ascent possible; leave converged = false

    const bool rising = candidate_ll > ll;
    beta = std::move(candidate);
    eta = std::move(candidate_eta);
    ll = candidate_ll;
    fit.ll_history.push_back(ll);
    fit.iterations = iter + 1;
    if (beta.norm() > options.separation_norm && rising) {
      throw Error(ErrorKind::SeparationDetected,
                  "coefficients diverge (||beta|| = " + std::to_string(beta.norm()) + ")");
    }
  }
  // A perfect fit means the classes are separable even if the gradient
  // flattened out before the coefficient norm crossed the threshold.
  if (ll > -1e-9 * static_cast<double>(n)) {
    throw Error(ErrorKind::SeparationDetected, "model predicts every observation perfectly");
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(information);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularDesign, "information matrix is singular");
  fill_inference(fit, beta, lu.inverse());
  fit.log_likelihood = ll;
  return fit;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "mean of nothing");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimMismatch, "pearson_r: length mismatch");
  if (x.size() < 3) throw Error(ErrorKind::EmptyInput, "pearson_r needs n >= 3");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorKind::DegenerateInput, "zero variance");
  Correlation c;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(x.size()) - 2.0;
  if (std::abs(c.r) >= 1.0) {
    c.p_value = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    const boost::math::students_t dist(df);
    c.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return c;
}

namespace {
std::vector<double> mid_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  return pearson_r(rx, ry).r;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::EmptyInput, "quantile of nothing");
  q = std::clamp(q, 0.0, 1.0);
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::map<Condition, std::vector<LengthBin>> length_binned_means(
    std::span<const RankResult> results, const BinningOptions& options) {
  if (options.bin_width_chars < 1) throw Error(ErrorKind::ValidationError, "bin width must be >= 1");
  const auto [trim_lo, trim_hi] = options.trim;
  if (!(trim_lo >= 0.0 && trim_lo <= trim_hi && trim_hi <= 100.0)) {
    throw Error(ErrorKind::ValidationError, "trim percentiles must satisfy 0 <= lo <= hi <= 100");
  }

  std::map<Condition, std::vector<const RankResult*>> by_condition;
  for (const auto& r : results) by_condition[r.condition].push_back(&r);

  std::map<Condition, std::vector<LengthBin>> out;
  std::size_t kept_total = 0;
  for (const auto& [condition, rows] : by_condition) {
    std::vector<double> lengths;
    lengths.reserve(rows.size());
    for (const auto* r : rows) lengths.push_back(static_cast<double>(r->char_length));
    std::sort(lengths.begin(), lengths.end());
    const double lo = quantile_sorted(lengths, trim_lo / 100.0);
    const double hi = quantile_sorted(lengths, trim_hi / 100.0);

    std::map<std::size_t, std::vector<double>> bins;
    for (const auto* r : rows) {
      const auto len = static_cast<double>(r->char_length);
      if (len < lo || len > hi) continue;
      bins[r->char_length / options.bin_width_chars].push_back(r->target_rank);
      ++kept_total;
    }

    auto& summary = out[condition];
    for (auto& [bin, ranks] : bins) {
      if (ranks.size() < options.min_bin_count) continue;
      // Canonical order so the summary is independent of record order.
      std::sort(ranks.begin(), ranks.end());
      LengthBin b;
      b.bin_center = (static_cast<double>(bin) + 0.5) * static_cast<double>(options.bin_width_chars);
      b.mean_rank = mean(ranks);
      b.n = ranks.size();
      if (ranks.size() >= 2) {
        BootstrapOptions boot = options.bootstrap;
        boot.seed = SplitMix64::substream(options.bootstrap.seed,
                                          fnv1a64(condition.name()) ^ bin)();
        boot.statistic_name = "mean_rank";
        const auto ci = bootstrap_ci<double>(ranks, [](std::span<const double> s) { return mean(s); },
                                             boot);
        b.ci_low = ci.lower;
        b.ci_high = ci.upper;
      } else {
        b.ci_low = b.ci_high = b.mean_rank;
      }
      summary.push_back(b);
    }
  }
  if (kept_total == 0) throw Error(ErrorKind::EmptyInput, "no results left after trimming");
  return out;
}

}  // namespace specrank::stats
