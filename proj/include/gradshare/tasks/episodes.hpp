#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gradshare/tasks/task.hpp"
#include "gradshare/util/binary_io.hpp"

namespace gradshare::tasks {

inline constexpr std::uint16_t kEpisodeVersion = 1;

// Layout (little-endian): "EPIS", u16 version, u32 task count, then per task
// u8 loss kind, u16 way, u64 task id, u32 input dim, u32 target dim,
// u32 support rows, u32 query rows, then f64 row-major support inputs,
// support targets, query inputs, query targets.
std::vector<std::uint8_t> encode_episodes(std::span<const Task> tasks);
/// Throws util::FormatError with the failing byte offset; never returns a partial list.
std::vector<Task> decode_episodes(std::span<const std::uint8_t> bytes);

void write_episodes(const std::string& path, std::span<const Task> tasks);
std::vector<Task> read_episodes(const std::string& path);

}  // namespace gradshare::tasks
