#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "specrank/analysis.hpp"
#include "specrank/rank_engine.hpp"
#include "specrank/stats.hpp"

namespace specrank::report {

/// Identifies how an artifact was produced.
struct Provenance {
  std::string config_checksum;
  std::map<std::string, std::uint64_t> seeds;

  /// "config=<hex> seed.rank=<n> ..." in key order.
  std::string describe() const;
};

/// Leading "# specrank <provenance>" comment line for CSV outputs.
void write_csv_provenance(std::ostream& out, const Provenance& p);

/// Shortest round-trip decimal form.
std::string format_number(double v);

/// coefficient,beta,se,z,p
void write_coefficients_csv(std::ostream& out, const stats::RegressionFit& fit);

/// rank,cum_prop
void write_cdf_csv(std::ostream& out, std::span<const CdfPoint> cdf);

/// condition,bin_center,mean_rank,ci_low,ci_high,n
void write_binned_csv(std::ostream& out,
                      const std::map<Condition, std::vector<stats::LengthBin>>& bins);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_low;   // optional ribbon
  std::vector<double> y_high;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool step = false;     // draw as a right-continuous step function
  bool log_x = false;
  int width = 640;
  int height = 420;
};

/// Minimal static SVG line chart with a legend.
std::string render_line_chart(const ChartSpec& spec, std::span<const Series> series,
                              const Provenance& provenance);

struct Bar {
  std::string label;
  double value = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Horizontal bar chart with error bars, values in [0, 1].
std::string render_bar_chart(const ChartSpec& spec, std::span<const Bar> bars,
                             const Provenance& provenance);

}  // namespace specrank::report
