#pragma once

#include "dire/numerics.hpp"
#include "dire/rng.hpp"

namespace dire {

struct DropoutResult {
  Vec output;
  Vec mask;  // per-component multiplier: 0 or 1/(1-p)
};

// Inverted dropout. In evaluation mode (training == false) the input passes
// through untouched and the mask is all ones.
DropoutResult apply_dropout(const Vec& x, double p, Rng& rng, bool training = true);

}  // namespace dire
