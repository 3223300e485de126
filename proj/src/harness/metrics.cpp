#include "gradshare/harness/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gradshare::harness {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

double number_or_nan(const json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? std::nan("") : v.get<double>();
}

}  // namespace

std::vector<MetricsRecord> records_for_epoch(const meta::EpochRecord& e) {
  MetricsRecord train;
  train.epoch = e.epoch;
  train.split = kTrainSplit;
  train.loss_mean = e.train.loss_mean;
  train.loss_ci95 = e.train.loss_ci95;
  if (e.val.classification) {
    train.accuracy_mean = e.train.accuracy_mean;
    train.accuracy_ci95 = e.train.accuracy_ci95;
  }
  train.sigma_m_mean = e.sigma_momentum_mean;
  train.sigma_lambda_mean = e.sigma_gate_mean;

  MetricsRecord val = train;
  val.split = kValSplit;
  val.loss_mean = e.val.loss.mean;
  val.loss_ci95 = e.val.loss.half_width;
  if (e.val.classification) {
    val.accuracy_mean = e.val.accuracy.mean;
    val.accuracy_ci95 = e.val.accuracy.half_width;
  }
  return {train, val};
}

std::string format_record(const MetricsRecord& r) {
  json j;
  j["schema"] = kMetricsSchema;
  j["record"] = "epoch";
  j["epoch"] = r.epoch;
  j["split"] = r.split;
  j["loss_mean"] = r.loss_mean;
  j["loss_ci95"] = r.loss_ci95;
  j["accuracy_mean"] = optional_number(r.accuracy_mean);
  j["accuracy_ci95"] = optional_number(r.accuracy_ci95);
  j["sigma_m_mean"] = r.sigma_m_mean;
  j["sigma_lambda_mean"] = r.sigma_lambda_mean;
  return j.dump();
}

std::string format_abort(const meta::AbortDiagnostic& d) {
  json j;
  j["schema"] = kMetricsSchema;
  j["record"] = "abort";
  j["epoch"] = d.epoch;
  j["iteration"] = d.iteration;
  j["quantity"] = d.quantity;
  j["message"] = d.message;
  j["theta_norm"] = d.theta_norm;
  j["inner_lr_norm"] = d.inner_lr_norm;
  j["momentum_norm"] = d.momentum_norm;
  j["gate_norm"] = d.gate_norm;
  return j.dump();
}

std::vector<MetricsRecord> MetricsLog::split(std::string_view name) const {
  std::vector<MetricsRecord> out;
  for (const auto& r : records)
    if (r.split == name) out.push_back(r);
  return out;
}

MetricsLog parse_metrics(std::string_view text) {
  MetricsLog log;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const bool complete = end != std::string_view::npos;
    const auto line = text.substr(pos, complete ? end - pos : std::string_view::npos);
    pos = complete ? end + 1 : text.size();
    ++line_no;
    if (line.empty()) continue;

    json j;
    try {
      j = json::parse(line);
      if (j.at("schema").get<int>() != kMetricsSchema) {
        throw std::runtime_error("unsupported schema " + j.at("schema").dump());
      }
      const auto kind = j.at("record").get<std::string>();
      if (kind == "epoch") {
        MetricsRecord r;
        r.epoch = j.at("epoch").get<std::uint32_t>();
        r.split = j.at("split").get<std::string>();
        r.loss_mean = j.at("loss_mean").get<double>();
        r.loss_ci95 = j.at("loss_ci95").get<double>();
        r.accuracy_mean = read_optional(j, "accuracy_mean");
        r.accuracy_ci95 = read_optional(j, "accuracy_ci95");
        r.sigma_m_mean = j.at("sigma_m_mean").get<double>();
        r.sigma_lambda_mean = j.at("sigma_lambda_mean").get<double>();
        log.records.push_back(std::move(r));
      } else if (kind == "abort") {
        meta::AbortDiagnostic d;
        d.epoch = j.at("epoch").get<std::uint32_t>();
        d.iteration = j.at("iteration").get<std::uint64_t>();
        d.quantity = j.at("quantity").get<std::string>();
        d.message = j.at("message").get<std::string>();
        d.theta_norm = number_or_nan(j, "theta_norm");
        d.inner_lr_norm = number_or_nan(j, "inner_lr_norm");
        d.momentum_norm = number_or_nan(j, "momentum_norm");
        d.gate_norm = number_or_nan(j, "gate_norm");
        log.abort = std::move(d);
      } else {
        throw std::runtime_error("unknown record kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      if (!complete) {
        log.truncated = true;
        break;
      }
      throw std::runtime_error("metrics line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

MetricsLog read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open metrics file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_metrics(text.str());
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::app), path_(path) {
  if (!out_) throw std::runtime_error("cannot open metrics file '" + path + "' for writing");
}

void MetricsWriter::write(const MetricsRecord& r) { write_line(format_record(r)); }

void MetricsWriter::write_abort(const meta::AbortDiagnostic& d) { write_line(format_abort(d)); }

void MetricsWriter::write_line(const std::string& line) {
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write to '" + path_ + "' failed");
}

}  // namespace gradshare::harness
