#pragma once

#include "pclab/rng.hpp"
#include "pclab/types.hpp"

namespace pclab {

// One seeded problem instance: a chain, its parameters, and an input/target
// pair. Used by the check suite and by the randomized tests.
struct ChainInstance {
    ChainSpec spec;
    Parameters params;
    Vec input;
    Vec target;
};

struct InstanceOptions {
    int min_depth = 2;
    int max_depth = 6;
    int min_width = 1;
    int max_width = 16;
    bool biases = false;       // equivalence checks default to the bias-free form
    bool mixed_losses = true;  // alternate squared-Euclidean / cross-entropy
    bool tanh_only = false;    // skip relu when a smooth chain is required
};

ChainInstance make_random_instance(Rng& rng, const InstanceOptions& options);

}  // namespace pclab
