#include "pclab/types.hpp"

#include <cmath>
#include <sstream>

#include "pclab/errors.hpp"

namespace pclab {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
    }
    return "?";
}

const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::SquaredEuclidean: return "squared-euclidean";
        case LossKind::SoftmaxCrossEntropy: return "softmax-cross-entropy";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    throw DimensionError("unknown activation kind: " + s);
}

LossKind loss_from_string(const std::string& s) {
    if (s == "squared-euclidean") return LossKind::SquaredEuclidean;
    if (s == "softmax-cross-entropy") return LossKind::SoftmaxCrossEntropy;
    throw DimensionError("unknown loss kind: " + s);
}

void ChainSpec::validate() const {
    if (layer_dims.size() < 2)
        throw DimensionError("chain needs at least one parameterised layer");
    if (activations.size() + 1 != layer_dims.size()) {
        std::ostringstream os;
        os << "activation count " << activations.size()
           << " does not match layer count " << layer_dims.size() - 1;
        throw DimensionError(os.str());
    }
    for (std::size_t i = 0; i < layer_dims.size(); ++i) {
        if (layer_dims[i] < 1) {
            std::ostringstream os;
            os << "layer_dims[" << i << "] = " << layer_dims[i] << " must be >= 1";
            throw DimensionError(os.str());
        }
    }
}

void Parameters::validate_against(const ChainSpec& spec) const {
    spec.validate();
    const int L = spec.depth();
    if (static_cast<int>(weights.size()) != L)
        throw DimensionError("weight count does not match chain depth");
    if (spec.has_bias && static_cast<int>(biases.size()) != L)
        throw DimensionError("bias count does not match chain depth");
    if (!spec.has_bias && !biases.empty())
        throw DimensionError("spec has no biases but parameters carry them");
    for (int l = 0; l < L; ++l) {
        if (weights[l].rows() != spec.layer_dims[l + 1] ||
            weights[l].cols() != spec.layer_dims[l]) {
            std::ostringstream os;
            os << "weights[" << l << "] has shape " << weights[l].rows() << "x"
               << weights[l].cols() << ", expected " << spec.layer_dims[l + 1]
               << "x" << spec.layer_dims[l];
            throw DimensionError(os.str());
        }
        if (spec.has_bias && biases[l].size() != spec.layer_dims[l + 1])
            throw DimensionError("bias length mismatch at layer " + std::to_string(l));
        if (!weights[l].allFinite() ||
            (spec.has_bias && !biases[l].allFinite()))
            throw DimensionError("non-finite parameter entry at layer " + std::to_string(l));
    }
}

Parameters init_parameters(const ChainSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    Parameters p;
    const int L = spec.depth();
    p.weights.reserve(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        const int rows = spec.layer_dims[l + 1];
        const int cols = spec.layer_dims[l];
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        Mat w(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        if (spec.has_bias) p.biases.push_back(Vec::Zero(rows));
    }
    return p;
}

GradientSet GradientSet::zeros_like(const ChainSpec& spec) {
    GradientSet g;
    const int L = spec.depth();
    for (int l = 0; l < L; ++l) {
        g.weights.push_back(Mat::Zero(spec.layer_dims[l + 1], spec.layer_dims[l]));
        if (spec.has_bias) g.biases.push_back(Vec::Zero(spec.layer_dims[l + 1]));
    }
    return g;
}

void axpy(GradientSet& a, const GradientSet& b, double scale) {
    for (std::size_t l = 0; l < a.weights.size(); ++l) a.weights[l] += scale * b.weights[l];
    for (std::size_t l = 0; l < a.biases.size(); ++l) a.biases[l] += scale * b.biases[l];
}

void scale(GradientSet& g, double s) {
    for (auto& w : g.weights) w *= s;
    for (auto& b : g.biases) b *= s;
}

double max_abs_diff(const GradientSet& a, const GradientSet& b) {
    if (a.weights.size() != b.weights.size() || a.biases.size() != b.biases.size())
        throw DimensionError("gradient sets have different block counts");
    double m = 0.0;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        if (a.weights[l].rows() != b.weights[l].rows() ||
            a.weights[l].cols() != b.weights[l].cols())
            throw DimensionError("gradient block shape mismatch");
        m = std::max(m, (a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff());
    }
    for (std::size_t l = 0; l < a.biases.size(); ++l)
        m = std::max(m, (a.biases[l] - b.biases[l]).cwiseAbs().maxCoeff());
    return m;
}

}  // namespace pclab
