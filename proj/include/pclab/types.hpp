#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "pclab/rng.hpp"

namespace pclab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Activation { Identity, Tanh, Relu };
enum class LossKind { SquaredEuclidean, SoftmaxCrossEntropy };

const char* to_string(Activation a);
const char* to_string(LossKind k);
Activation activation_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);

// A chain network: L parameterised layers f_0..f_{L-1} mapping
// x_0 -> mu_1 -> ... -> mu_L, followed by a parameter-free scalar loss
// comparing mu_L against the target x_L.
//
// Indexing convention used throughout: layer_dims holds d_0..d_L
// (L+1 entries), activations holds one kind per parameterised layer
// (L entries), and weight matrix l has shape d_{l+1} x d_l.
struct ChainSpec {
    std::vector<int> layer_dims;
    std::vector<Activation> activations;
    LossKind loss = LossKind::SquaredEuclidean;
    bool has_bias = true;

    int depth() const { return static_cast<int>(activations.size()); }
    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }

    // Throws DimensionError if the dims/activations are inconsistent.
    void validate() const;
};

struct Parameters {
    std::vector<Mat> weights;  // weights[l] is d_{l+1} x d_l
    std::vector<Vec> biases;   // empty when the spec has no biases

    void validate_against(const ChainSpec& spec) const;
};

// Per-layer uniform init in +/- sqrt(6 / (d_in + d_out)); biases start at zero.
Parameters init_parameters(const ChainSpec& spec, std::uint64_t seed);

// Parameter-shaped gradient blocks, the common output of every engine.
struct GradientSet {
    std::vector<Mat> weights;
    std::vector<Vec> biases;

    static GradientSet zeros_like(const ChainSpec& spec);
};

// Elementwise a += b, a *= s; shapes must already agree.
void axpy(GradientSet& a, const GradientSet& b, double scale = 1.0);
void scale(GradientSet& g, double s);

// Largest absolute difference over all blocks of two gradient sets.
double max_abs_diff(const GradientSet& a, const GradientSet& b);

// Rows of `inputs` and `targets` are aligned samples.
struct Batch {
    Mat inputs;   // B x d_0
    Mat targets;  // B x d_L
    int size() const { return static_cast<int>(inputs.rows()); }
};

}  // namespace pclab
