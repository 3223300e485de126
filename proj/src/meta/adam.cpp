#include "gradshare/meta/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gradshare::meta {

void Adam::step(const std::vector<AdamParam>& params) {
  ++t_;
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (const auto& p : params) {
    if (p.values.size() != p.grad.size()) {
      throw std::invalid_argument("adam: gradient of '" + p.name + "' has the wrong length");
    }
    auto& m = moments_[p.name];
    if (m.first.empty()) {
      m.first.assign(p.values.size(), 0.0);
      m.second.assign(p.values.size(), 0.0);
    } else if (m.first.size() != p.values.size()) {
      throw std::invalid_argument("adam: parameter '" + p.name + "' changed size");
    }
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double g = p.grad[i];
      m.first[i] = b1 * m.first[i] + (1.0 - b1) * g;
      m.second[i] = b2 * m.second[i] + (1.0 - b2) * g * g;
      const double mhat = m.first[i] / c1;
      const double vhat = m.second[i] / c2;
      p.values[i] -= settings_.lr * mhat / (std::sqrt(vhat) + settings_.eps);
    }
  }
}

}  // namespace gradshare::meta
