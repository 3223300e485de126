#include "gradshare/tasks/episodes.hpp"

#include <limits>

namespace gradshare::tasks {

namespace {

constexpr char kMagic[4] = {'E', 'P', 'I', 'S'};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument(std::string("episode encoding: ") + what + " exceeds u32 range");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_episodes(std::span<const Task> tasks) {
  util::ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u16(kEpisodeVersion);
  w.u32(checked_u32(tasks.size(), "task count"));
  for (const auto& t : tasks) {
    const auto input_dim = t.support.inputs.cols();
    const auto target_dim = t.support.targets.cols();
    if (t.query.inputs.cols() != input_dim || t.query.targets.cols() != target_dim ||
        t.support.targets.rows() != t.support.inputs.rows() || t.query.targets.rows() != t.query.inputs.rows()) {
      throw std::invalid_argument("episode encoding: inconsistent shapes in task " + std::to_string(t.task_id));
    }
    w.u8(static_cast<std::uint8_t>(t.loss));
    w.u16(t.way);
    w.u64(t.task_id);
    w.u32(checked_u32(input_dim, "input dim"));
    w.u32(checked_u32(target_dim, "target dim"));
    w.u32(checked_u32(t.support.size(), "support rows"));
    w.u32(checked_u32(t.query.size(), "query rows"));
    w.f64s(t.support.inputs.span());
    w.f64s(t.support.targets.span());
    w.f64s(t.query.inputs.span());
    w.f64s(t.query.targets.span());
  }
  return w.buffer();
}

std::vector<Task> decode_episodes(std::span<const std::uint8_t> bytes) {
  util::ByteReader r(bytes);
  if (r.bytes(4, "magic") != std::string_view(kMagic, 4)) throw util::FormatError("bad episode file magic", 0);
  const auto version_at = r.offset();
  const auto version = r.u16("version");
  if (version != kEpisodeVersion) {
    throw util::FormatError("unsupported episode file version " + std::to_string(version), version_at);
  }
  const auto count = r.u32("task count");
  std::vector<Task> tasks;
  for (std::uint32_t i = 0; i < count; ++i) {
    Task t;
    const auto kind_at = r.offset();
    const auto kind = r.u8("loss kind");
    if (kind > static_cast<std::uint8_t>(LossKind::CrossEntropy)) {
      throw util::FormatError("invalid loss kind " + std::to_string(kind), kind_at);
    }
    t.loss = static_cast<LossKind>(kind);
    t.way = r.u16("way");
    t.task_id = r.u64("task id");
    const std::size_t input_dim = r.u32("input dim");
    const std::size_t target_dim = r.u32("target dim");
    const std::size_t ns = r.u32("support rows");
    const std::size_t nq = r.u32("query rows");
    auto block = [&](std::size_t rows, std::size_t cols, const char* what) {
      return ad::Tensor(rows, cols, r.f64s(rows * cols, what));
    };
    t.support.inputs = block(ns, input_dim, "support inputs");
    t.support.targets = block(ns, target_dim, "support targets");
    t.query.inputs = block(nq, input_dim, "query inputs");
    t.query.targets = block(nq, target_dim, "query targets");
    tasks.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw util::FormatError("trailing bytes after last task", r.offset());
  return tasks;
}

void write_episodes(const std::string& path, std::span<const Task> tasks) {
  util::write_file(path, encode_episodes(tasks));
}

std::vector<Task> read_episodes(const std::string& path) { return decode_episodes(util::read_file(path)); }

}  // namespace gradshare::tasks
