#include "pclab/instances.hpp"

namespace pclab {

ChainInstance make_random_instance(Rng& rng, const InstanceOptions& options) {
    ChainInstance inst;

    const int depth = options.min_depth + rng.below(options.max_depth - options.min_depth + 1);
    const bool cross_entropy = options.mixed_losses && rng.below(2) == 1;

    inst.spec.loss = cross_entropy ? LossKind::SoftmaxCrossEntropy
                                   : LossKind::SquaredEuclidean;
    inst.spec.has_bias = options.biases;
    for (int l = 0; l <= depth; ++l) {
        int width = options.min_width + rng.below(options.max_width - options.min_width + 1);
        if (cross_entropy && l == depth) width = std::max(width, 2);
        inst.spec.layer_dims.push_back(width);
    }
    for (int l = 0; l < depth; ++l) {
        const int kind = options.tanh_only ? rng.below(2) : rng.below(3);
        inst.spec.activations.push_back(kind == 0   ? Activation::Tanh
                                        : kind == 1 ? Activation::Identity
                                                    : Activation::Relu);
    }

    inst.params = init_parameters(inst.spec, rng.bits());
    if (options.biases)
        for (auto& b : inst.params.biases)
            for (int i = 0; i < b.size(); ++i) b[i] = rng.uniform(-0.3, 0.3);

    inst.input = Vec(inst.spec.input_dim());
    for (int i = 0; i < inst.input.size(); ++i) inst.input[i] = rng.uniform(-1.0, 1.0);

    inst.target = Vec::Zero(inst.spec.output_dim());
    if (cross_entropy) {
        inst.target[rng.below(inst.spec.output_dim())] = 1.0;
    } else {
        for (int i = 0; i < inst.target.size(); ++i) inst.target[i] = rng.normal();
    }
    return inst;
}

}  // namespace pclab
