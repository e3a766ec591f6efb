#include "pqm/model/layers.hpp"

#include <cmath>

namespace pqm::model {

LayerNorm2dImpl::LayerNorm2dImpl(int64_t channels, double eps) : eps_(eps) {
    weight_ = register_parameter("weight", torch::ones({channels}));
    bias_ = register_parameter("bias", torch::zeros({channels}));
}

torch::Tensor LayerNorm2dImpl::forward(const torch::Tensor& x) {
    const auto mean = x.mean(1, /*keepdim=*/true);
    const auto var = (x - mean).pow(2).mean(1, true);
    const auto y = (x - mean) / torch::sqrt(var + eps_);
    return weight_.view({1, -1, 1, 1}) * y + bias_.view({1, -1, 1, 1});
}

MlpImpl::MlpImpl(int64_t in, int64_t hidden, int64_t out, int layers) {
    TORCH_CHECK(layers >= 1, "Mlp needs at least one layer");
    for (int i = 0; i < layers; ++i) {
        const int64_t a = i == 0 ? in : hidden;
        const int64_t b = i == layers - 1 ? out : hidden;
        layers_.push_back(register_module("fc" + std::to_string(i), torch::nn::Linear(a, b)));
    }
}

torch::Tensor MlpImpl::forward(torch::Tensor x) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i]->forward(x);
        if (i + 1 < layers_.size()) x = torch::relu(x);
    }
    return x;
}

void trunc_normal_(torch::Tensor& t, double std, torch::Generator& gen) {
    torch::NoGradGuard no_grad;
    // Inverse-CDF sampling restricted to [-2 sigma, 2 sigma].
    const double lo = 0.5 * (1.0 + std::erf(-2.0 / std::sqrt(2.0)));
    const double hi = 0.5 * (1.0 + std::erf(2.0 / std::sqrt(2.0)));
    t.uniform_(2 * lo - 1, 2 * hi - 1, gen);
    t.erfinv_();
    t.mul_(std * std::sqrt(2.0));
    t.clamp_(-2 * std, 2 * std);
}

void initialize_parameters(torch::nn::Module& root, torch::Generator& gen) {
    torch::NoGradGuard no_grad;
    for (auto& item : root.named_parameters(/*recurse=*/true)) {
        const std::string& name = item.key();
        torch::Tensor p = item.value();
        const bool is_bias = name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0;
        const bool is_norm = name.find("norm") != std::string::npos;
        if (is_bias) {
            p.zero_();
        } else if (is_norm && p.dim() == 1) {
            p.fill_(1.0);
        } else if (p.dim() >= 2) {
            trunc_normal_(p, 0.02, gen);
        }
    }
}

}  // namespace pqm::model
