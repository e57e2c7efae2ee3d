#include "dire/dropout.hpp"

#include <stdexcept>
#include <string>

namespace dire {

DropoutResult apply_dropout(const Vec& x, double p, Rng& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("apply_dropout: probability " + std::to_string(p) +
                                " outside [0,1)");
  }
  if (!training || p == 0.0) return {x, Vec(x.dim(), 1.0)};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  DropoutResult out{Vec(x.dim()), Vec(x.dim())};
  for (std::size_t i = 0; i < x.dim(); ++i) {
    out.mask[i] = unit(rng) < p ? 0.0 : keep_scale;
    out.output[i] = x[i] * out.mask[i];
  }
  return out;
}

}  // namespace dire
