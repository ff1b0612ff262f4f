#include "pclab/fd_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pclab {
namespace {

double activate_scalar(Activation a, double z) {
    switch (a) {
        case Activation::Identity: return z;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

}  // namespace

double scalar_loss_eval(const ChainSpec& spec, const Parameters& params,
                        const Vec& input, const Vec& target) {
    const int L = spec.depth();
    std::vector<double> v(input.data(), input.data() + input.size());

    for (int l = 0; l < L; ++l) {
        const int rows = spec.layer_dims[l + 1];
        const int cols = spec.layer_dims[l];
        std::vector<double> next(static_cast<std::size_t>(rows));
        for (int r = 0; r < rows; ++r) {
            double z = spec.has_bias ? params.biases[l][r] : 0.0;
            for (int c = 0; c < cols; ++c) z += params.weights[l](r, c) * v[c];
            next[r] = activate_scalar(spec.activations[l], z);
        }
        v = std::move(next);
    }

    if (spec.loss == LossKind::SquaredEuclidean) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = v[i] - target[static_cast<int>(i)];
            s += d * d;
        }
        return 0.5 * s;
    }

    // Softmax cross-entropy with a max shift for stability.
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double sum_exp = 0.0;
    for (double x : v) sum_exp += std::exp(x - m);
    const double lse = m + std::log(sum_exp);
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        s -= target[static_cast<int>(i)] * (v[i] - lse);
    return s;
}

GradientSet finite_difference_grad(const ChainSpec& spec, const Parameters& params,
                                   const Vec& input, const Vec& target,
                                   double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("finite-difference eps must be > 0");

    GradientSet grads = GradientSet::zeros_like(spec);
    Parameters probe = params;

    for (int l = 0; l < spec.depth(); ++l) {
        Mat& w = probe.weights[l];
        for (int r = 0; r < w.rows(); ++r) {
            for (int c = 0; c < w.cols(); ++c) {
                const double keep = w(r, c);
                w(r, c) = keep + eps;
                const double up = scalar_loss_eval(spec, probe, input, target);
                w(r, c) = keep - eps;
                const double down = scalar_loss_eval(spec, probe, input, target);
                w(r, c) = keep;
                grads.weights[l](r, c) = (up - down) / (2.0 * eps);
            }
        }
        if (spec.has_bias) {
            Vec& b = probe.biases[l];
            for (int r = 0; r < b.size(); ++r) {
                const double keep = b[r];
                b[r] = keep + eps;
                const double up = scalar_loss_eval(spec, probe, input, target);
                b[r] = keep - eps;
                const double down = scalar_loss_eval(spec, probe, input, target);
                b[r] = keep;
                grads.biases[l][r] = (up - down) / (2.0 * eps);
            }
        }
    }
    return grads;
}

}  // namespace pclab
