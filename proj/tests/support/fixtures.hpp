#pragma once

#include <memory>

#include "datamarket/market.hpp"

// Shared parameter fixtures. The baseline market: sigma_high = 50, prior 0.6
// on the low type, lambda = 0.007, costs Uniform[0.5, 2.0], up to 5 free
// samples. Tests vary the ratio and seller count from here.

namespace fixtures {

inline datamarket::MarketParams baseline(double ratio = 2.0,
                                         int num_sellers = 5) {
  datamarket::MarketParams p;
  p.sigma_high = 50.0;
  p.sigma_low = 50.0 / ratio;
  p.mu = 0.6;
  p.lambda = 0.007;
  p.num_sellers = num_sellers;
  p.max_free_samples = 5;
  p.cost_model = std::make_shared<datamarket::UniformCostModel>(0.5, 2.0);
  return p;
}

}  // namespace fixtures
