#include "gradshare/meta/checkpoint.hpp"

#include "gradshare/util/binary_io.hpp"

namespace gradshare::meta {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'C', 'K'};
constexpr std::string_view kInnerLrPrefix = "inner_lr/";

void write_block(util::ByteWriter& w, const std::string& name, std::size_t rows, std::size_t cols,
                 std::span<const double> data) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  w.u32(static_cast<std::uint32_t>(rows));
  w.u32(static_cast<std::uint32_t>(cols));
  w.f64s(data);
}

}  // namespace

MetaParams Checkpoint::meta_params() const {
  MetaParams p;
  p.theta = theta.flatten();
  p.inner_lr = inner_lr;
  p.momentum = state.momentum;
  p.gate = state.gate;
  return p;
}

Checkpoint make_checkpoint(const MetaLearner& learner, std::uint32_t epoch, double val_score) {
  Checkpoint c;
  c.config = learner.config();
  c.backbone = learner.model().backbone;
  c.theta = models::ParamSet(learner.model().layout, learner.params().theta);
  c.inner_lr = learner.params().inner_lr;
  c.state = learner.state();
  c.epoch = epoch;
  c.val_score = val_score;
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  util::ByteWriter w;
  const auto text = describe_model(c.config, c.backbone);
  w.bytes(std::string_view(kMagic, 4));
  w.u16(kCheckpointVersion);
  w.u64(fnv1a64(text));
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  const auto steps = c.state.steps();
  w.u32(static_cast<std::uint32_t>(steps));

  const auto& entries = c.theta.layout().entries();
  const bool has_lr = !c.inner_lr.empty();
  w.u32(static_cast<std::uint32_t>(entries.size() * (has_lr ? 2 : 1)));
  for (const auto& e : entries) write_block(w, e.name, e.rows, e.cols, c.theta.values(e.name));
  if (has_lr) {
    for (const auto& e : entries) {
      write_block(w, std::string(kInnerLrPrefix) + e.name, e.rows, e.cols,
                  std::span<const double>(c.inner_lr).subspan(e.offset, e.size()));
    }
  }
  w.f64s(c.state.momentum);
  w.f64s(c.state.gate);
  w.u32(static_cast<std::uint32_t>(c.state.dim()));
  for (std::size_t k = 0; k < steps; ++k) {
    w.u8(c.state.step_initialized[k]);
    w.f64s(c.state.running_mean[k]);
  }
  w.u32(c.epoch);
  w.f64(c.val_score);
  return w.buffer();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  util::ByteReader r(bytes);
  if (r.bytes(4, "magic") != std::string_view(kMagic, 4)) throw util::FormatError("bad checkpoint magic", 0);
  const auto version_at = r.offset();
  if (const auto v = r.u16("version"); v != kCheckpointVersion) {
    throw util::FormatError("unsupported checkpoint version " + std::to_string(v), version_at);
  }
  const auto digest = r.u64("config digest");
  const auto text_at = r.offset();
  const auto text = r.bytes(r.u32("description length"), "model description");
  if (fnv1a64(text) != digest) throw util::FormatError("config digest does not match description", text_at);

  Checkpoint c;
  try {
    auto kv = util::KeyValueFile::parse(text, "<checkpoint>");
    c.config = read_meta_config(kv);
    c.backbone = read_backbone(kv, models::Backbone{});
    kv.reject_unknown();
    c.backbone.validate();
  } catch (const std::invalid_argument& e) {
    throw util::FormatError(std::string("invalid model description: ") + e.what(), text_at);
  }
  const auto layout = models::ParamLayout::for_backbone(c.backbone);

  const auto k_at = r.offset();
  const std::size_t steps = r.u32("K");
  if (steps != c.config.inner_steps) throw util::FormatError("K disagrees with the model description", k_at);

  const auto blocks_at = r.offset();
  const std::size_t blocks = r.u32("block count");
  const bool has_lr = c.config.learner == Learner::MetaSgd;
  if (blocks != layout.entries().size() * (has_lr ? 2 : 1)) {
    throw util::FormatError("parameter block count " + std::to_string(blocks) + " does not match the backbone",
                            blocks_at);
  }
  std::vector<double> theta(layout.total_dim()), lr(has_lr ? layout.total_dim() : 0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto block_at = r.offset();
    auto name = r.bytes(r.u32("block name length"), "block name");
    const std::size_t rows = r.u32("block rows");
    const std::size_t cols = r.u32("block cols");
    auto data = r.f64s(rows * cols, "block data");
    const bool is_lr = name.starts_with(kInnerLrPrefix);
    if (is_lr) name = name.substr(kInnerLrPrefix.size());
    const models::ParamEntry* entry = nullptr;
    for (const auto& e : layout.entries()) {
      if (e.name == name) entry = &e;
    }
    if (!entry || entry->rows != rows || entry->cols != cols || (is_lr && !has_lr)) {
      throw util::FormatError("unexpected parameter block '" + name + "'", block_at);
    }
    std::copy(data.begin(), data.end(), (is_lr ? lr : theta).begin() + static_cast<std::ptrdiff_t>(entry->offset));
  }
  c.theta = models::ParamSet(layout, std::move(theta));
  c.inner_lr = std::move(lr);

  c.state.momentum = r.f64s(steps, "momentum");
  c.state.gate = r.f64s(steps, "gate");
  const auto dim_at = r.offset();
  const std::size_t dim = r.u32("running mean dimension");
  if (dim != layout.total_dim()) throw util::FormatError("running mean dimension mismatch", dim_at);
  for (std::size_t k = 0; k < steps; ++k) {
    c.state.step_initialized.push_back(r.u8("seeded flag"));
    c.state.running_mean.push_back(r.f64s(dim, "running mean"));
  }
  c.epoch = r.u32("epoch");
  c.val_score = r.f64("meta-val score");
  if (r.remaining() != 0) throw util::FormatError("trailing bytes after checkpoint", r.offset());
  return c;
}

void write_checkpoint(const std::string& path, const Checkpoint& c) { util::write_file(path, encode_checkpoint(c)); }

Checkpoint read_checkpoint(const std::string& path) { return decode_checkpoint(util::read_file(path)); }

EvalSummary meta_test(const Checkpoint& c, std::span<const tasks::Task> tasks) {
  return evaluate(c.model(), c.config, c.meta_params(), c.state, tasks);
}

}  // namespace gradshare::meta
