#pragma once

#include <span>
#include <vector>

namespace gradshare::oracle {

/// Running means written out directly instead of iterated:
///   ghat^n = (1 - s)^(n-1) g^1 + sum_{j=2..n} s (1 - s)^(n-j) g^j,  s = sigmoid(m_logit).
/// Returns ghat^1 .. ghat^n.
std::vector<std::vector<double>> ema_closed_form(std::span<const std::vector<double>> sequence, double m_logit);

}  // namespace gradshare::oracle
