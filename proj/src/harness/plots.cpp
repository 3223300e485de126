#include "gradshare/harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gradshare::harness {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

const std::vector<Metric>& plotted_metrics() {
  static const std::vector<Metric> metrics = {
      {"val_accuracy", std::string(kValSplit), [](const MetricsRecord& r) { return r.accuracy_mean; }},
      {"val_loss", std::string(kValSplit), [](const MetricsRecord& r) { return std::optional<double>(r.loss_mean); }},
      {"train_accuracy", std::string(kTrainSplit), [](const MetricsRecord& r) { return r.accuracy_mean; }},
      {"train_loss", std::string(kTrainSplit),
       [](const MetricsRecord& r) { return std::optional<double>(r.loss_mean); }},
      {"sigma_m_mean", std::string(kValSplit),
       [](const MetricsRecord& r) { return std::optional<double>(r.sigma_m_mean); }},
      {"sigma_lambda_mean", std::string(kValSplit),
       [](const MetricsRecord& r) { return std::optional<double>(r.sigma_lambda_mean); }},
  };
  return metrics;
}

std::string render_csv(const std::vector<Curve>& curves) {
  std::set<std::uint32_t> epochs;
  std::vector<std::map<std::uint32_t, double>> lookup;
  for (const auto& c : curves) {
    epochs.insert(c.epochs.begin(), c.epochs.end());
    std::map<std::uint32_t, double> m;
    for (std::size_t i = 0; i < c.epochs.size(); ++i) m[c.epochs[i]] = c.values[i];
    lookup.push_back(std::move(m));
  }
  std::ostringstream out;
  out << "epoch";
  for (const auto& c : curves) out << ',' << c.label;
  out << '\n';
  for (auto e : epochs) {
    out << e;
    for (const auto& m : lookup) {
      out << ',';
      if (auto it = m.find(e); it != m.end()) out << num(it->second);
    }
    out << '\n';
  }
  return out.str();
}

std::string render_svg(const std::string& title, const std::vector<Curve>& curves) {
  const double width = 720, height = 420, left = 70, right = 180, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      if (!std::isfinite(c.values[i])) continue;
      x0 = std::min(x0, double(c.epochs[i]));
      x1 = std::max(x1, double(c.epochs[i]));
      y0 = std::min(y0, c.values[i]);
      y1 = std::max(y1, c.values[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double yv = y0 + (y1 - y0) * i / 5.0, xv = x0 + (x1 - x0) * i / 5.0;
    out << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << sy(yv) << "\" y2=\"" << sy(yv)
        << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << num(std::round(yv * 1e4) / 1e4)
        << "</text>\n";
    out << "<text x=\"" << sx(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << num(std::round(xv * 10) / 10) << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">epoch</text>\n";

  for (std::size_t s = 0; s < curves.size(); ++s) {
    const auto& c = curves[s];
    const char* color = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      if (!std::isfinite(c.values[i])) continue;
      out << sx(c.epochs[i]) << ',' << sy(c.values[i]) << ' ';
    }
    out << "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 32 << "\" y1=\"" << ly << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">" << escape(c.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

PlotReport emit_plots(std::span<const RunSeries> runs, const std::string& out_dir) {
  if (runs.empty()) throw std::invalid_argument("plot needs at least one run");
  PlotReport report;
  std::filesystem::create_directories(out_dir);

  std::set<std::uint32_t> reference;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::set<std::uint32_t> epochs;
    for (const auto& r : runs[i].records)
      if (r.split == kValSplit) epochs.insert(r.epoch);
    if (i == 0) {
      reference = epochs;
    } else if (epochs != reference) {
      report.warnings.push_back("run '" + runs[i].id + "' covers different epochs than '" + runs[0].id +
                                "'; using the union of epochs");
    }
  }

  for (const auto& metric : plotted_metrics()) {
    std::vector<Curve> curves;
    bool any = false;
    for (const auto& run : runs) {
      Curve c{run.id, {}, {}};
      for (const auto& r : run.records) {
        if (r.split != metric.split) continue;
        if (auto v = metric.pick(r)) {
          c.epochs.push_back(r.epoch);
          c.values.push_back(*v);
        }
      }
      any = any || !c.values.empty();
      curves.push_back(std::move(c));
    }
    if (!any) continue;
    const auto base = out_dir + "/" + metric.name;
    std::ofstream(base + ".csv", std::ios::binary) << render_csv(curves);
    std::ofstream(base + ".svg", std::ios::binary) << render_svg(metric.name, curves);
    report.files.push_back(base + ".csv");
    report.files.push_back(base + ".svg");
  }
  return report;
}

}  // namespace gradshare::harness
