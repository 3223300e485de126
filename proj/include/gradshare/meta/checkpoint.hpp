#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gradshare/meta/evaluate.hpp"

namespace gradshare::meta {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  MetaConfig config;
  models::Backbone backbone;
  models::ParamSet theta;
  std::vector<double> inner_lr;  // Meta-SGD only
  GradShareState state;          // holds m, lambda and the running means
  std::uint32_t epoch = 0;
  double val_score = 0.0;        // meta-val accuracy (negative loss for regression)

  std::uint64_t config_digest() const { return fnv1a64(describe_model(config, backbone)); }
  MetaParams meta_params() const;
  ModelSpec model() const { return ModelSpec::from(backbone); }

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(const MetaLearner& learner, std::uint32_t epoch, double val_score);

// Layout (little-endian): "GSCK", u16 version, u64 config digest, u32 length +
// model description text, u32 K, u32 block count, blocks of (u32 name length,
// name, u32 rows, u32 cols, f64 data), K f64 m, K f64 lambda, u32 dim, K x
// (u8 seeded flag, dim f64 running mean), u32 epoch, f64 meta-val score.
// Meta-SGD learning rates are stored as blocks named "inner_lr/<param>".
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint read_checkpoint(const std::string& path);

/// Adapts to every task with the stored running means; reports mean and 95% CI.
EvalSummary meta_test(const Checkpoint& c, std::span<const tasks::Task> tasks);

}  // namespace gradshare::meta
