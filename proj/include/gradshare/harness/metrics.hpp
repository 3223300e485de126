#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gradshare/meta/train.hpp"

namespace gradshare::harness {

inline constexpr int kMetricsSchema = 1;

inline constexpr std::string_view kTrainSplit = "meta-train";
inline constexpr std::string_view kValSplit = "meta-val";

struct MetricsRecord {
  std::uint32_t epoch = 0;
  std::string split;
  double loss_mean = 0.0;
  double loss_ci95 = 0.0;
  std::optional<double> accuracy_mean;  // absent for regression
  std::optional<double> accuracy_ci95;
  double sigma_m_mean = 0.5;
  double sigma_lambda_mean = 0.5;

  bool operator==(const MetricsRecord&) const = default;
};

/// The meta-train and meta-val records of one epoch.
std::vector<MetricsRecord> records_for_epoch(const meta::EpochRecord& e);

/// One JSON object per line, with "schema" and "record" fields.
std::string format_record(const MetricsRecord& r);
std::string format_abort(const meta::AbortDiagnostic& d);

struct MetricsLog {
  std::vector<MetricsRecord> records;
  std::optional<meta::AbortDiagnostic> abort;
  bool truncated = false;  // an incomplete last line was dropped

  std::vector<MetricsRecord> split(std::string_view name) const;
};

/// Accepts a partially written final line; any other malformed line throws
/// std::runtime_error naming the line number.
MetricsLog parse_metrics(std::string_view text);
MetricsLog read_metrics(const std::string& path);

// Append-only line writer; each record is flushed as soon as it is written.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const MetricsRecord& r);
  void write_abort(const meta::AbortDiagnostic& d);
  void write_line(const std::string& line);

 private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace gradshare::harness
