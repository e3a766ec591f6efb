#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace pqm::model {

/// Collects softmax attention maps from every attention layer it is attached
/// to. Only used by diagnostics; a null probe costs nothing.
struct AttentionProbe {
    std::vector<torch::Tensor> maps;
    void clear() { maps.clear(); }
};

/// LayerNorm over the channel axis of an NCHW tensor.
class LayerNorm2dImpl : public torch::nn::Module {
public:
    explicit LayerNorm2dImpl(int64_t channels, double eps = 1e-6);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::Tensor weight_, bias_;
    double eps_;
};
TORCH_MODULE(LayerNorm2d);

/// Plain multi-layer perceptron with ReLU between layers.
class MlpImpl : public torch::nn::Module {
public:
    MlpImpl(int64_t in, int64_t hidden, int64_t out, int layers);
    torch::Tensor forward(torch::Tensor x);

private:
    std::vector<torch::nn::Linear> layers_;
};
TORCH_MODULE(Mlp);

/// Truncated normal (sigma 0.02, cut at two sigma) for every linear and
/// convolution weight, zero biases, unit LayerNorm scale. Draws from `gen`.
void initialize_parameters(torch::nn::Module& root, torch::Generator& gen);

void trunc_normal_(torch::Tensor& t, double std, torch::Generator& gen);

}  // namespace pqm::model
