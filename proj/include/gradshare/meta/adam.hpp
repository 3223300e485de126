#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gradshare/meta/config.hpp"

namespace gradshare::meta {

struct AdamParam {
  std::string name;
  std::span<double> values;
  std::span<const double> grad;
};

// Bias-corrected Adam. Moment buffers are keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamSettings settings = {}) : settings_(settings) {}

  /// One optimizer step over all groups; the step counter advances once.
  void step(const std::vector<AdamParam>& params);

  std::size_t steps_taken() const noexcept { return t_; }
  const AdamSettings& settings() const noexcept { return settings_; }

 private:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  AdamSettings settings_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace gradshare::meta
