#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradshare/harness/metrics.hpp"

namespace gradshare::harness {

struct RunSeries {
  std::string id;
  std::vector<MetricsRecord> records;
};

struct Curve {
  std::string label;
  std::vector<std::uint32_t> epochs;
  std::vector<double> values;
};

struct Metric {
  std::string name;  // e.g. "val_accuracy"
  std::string split;
  std::optional<double> (*pick)(const MetricsRecord&);
};

/// val_accuracy, val_loss, train_accuracy, train_loss, sigma_m_mean, sigma_lambda_mean.
const std::vector<Metric>& plotted_metrics();

/// One column per run over the union of epochs; missing cells are left empty.
std::string render_csv(const std::vector<Curve>& curves);
/// Standalone SVG line chart.
std::string render_svg(const std::string& title, const std::vector<Curve>& curves);

struct PlotReport {
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

/// Writes <metric>.csv and <metric>.svg for every metric with data.
PlotReport emit_plots(std::span<const RunSeries> runs, const std::string& out_dir);

}  // namespace gradshare::harness
