#include "gradshare/oracle/ema.hpp"

#include <cmath>
#include <stdexcept>

namespace gradshare::oracle {

std::vector<std::vector<double>> ema_closed_form(std::span<const std::vector<double>> seq, double m_logit) {
  if (seq.empty()) throw std::invalid_argument("ema_closed_form: empty sequence");
  const double s = 1.0 / (1.0 + std::exp(-m_logit));
  const std::size_t dim = seq.front().size();
  std::vector<std::vector<double>> out;
  for (std::size_t n = 1; n <= seq.size(); ++n) {
    std::vector<double> g(dim, 0.0);
    const double w1 = std::pow(1.0 - s, static_cast<double>(n - 1));
    for (std::size_t i = 0; i < dim; ++i) g[i] = w1 * seq[0][i];
    for (std::size_t j = 2; j <= n; ++j) {
      const double w = s * std::pow(1.0 - s, static_cast<double>(n - j));
      for (std::size_t i = 0; i < dim; ++i) g[i] += w * seq[j - 1][i];
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace gradshare::oracle
