#pragma once

#include "pclab/types.hpp"

namespace pclab {

// Independent re-evaluation of the chain loss, written scalar-by-scalar with
// plain loops. Shares only the data types with chain-core — no Eigen products
// and no VJP code — so it can serve as the oracle for every gradient engine.
double scalar_loss_eval(const ChainSpec& spec, const Parameters& params,
                        const Vec& input, const Vec& target);

// Central differences (E(theta+eps) - E(theta-eps)) / (2 eps) per parameter
// entry, routed through scalar_loss_eval.
GradientSet finite_difference_grad(const ChainSpec& spec, const Parameters& params,
                                   const Vec& input, const Vec& target,
                                   double eps);

}  // namespace pclab
