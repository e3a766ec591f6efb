#include "pqm/model/config.hpp"

#include <sstream>
#include <stdexcept>

namespace pqm::model {

void ModelConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelConfig: " + msg); };
    if (patch_size != 16) fail("patch_size must be 16");
    if (image_size < 16 || image_size % 16 != 0) fail("image_size must be a positive multiple of 16");
    if (d_im < 1 || d_pr < 1) fail("d_im and d_pr must be positive");
    if (num_heads < 1 || d_pr % num_heads != 0) fail("d_pr must be divisible by num_heads");
    if (encoder_heads < 1 || d_im % encoder_heads != 0) fail("d_im must be divisible by encoder_heads");
    for (int d : stage_depths)
        if (d < 1) fail("every stage depth must be positive");
    if (mlp_ratio < 1 || decoder_mlp_dim < 1) fail("MLP widths must be positive");
    if (nonlocal_subsample < 1 || image_size % nonlocal_subsample != 0)
        fail("nonlocal_subsample must divide image_size");
    for (double s : pixel_std)
        if (!(s > 0.0)) fail("pixel_std entries must be positive");
}

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::base_preset(int image_size) {
    ModelConfig c;
    c.image_size = image_size;
    c.d_im = 768;
    c.d_pr = 256;
    c.stage_depths = {2, 5, 8, 11};
    c.num_heads = 8;
    c.encoder_heads = 12;
    c.decoder_mlp_dim = 2048;
    return c;
}

std::string describe(const ModelConfig& c) {
    std::ostringstream os;
    os << "image=" << c.image_size << " d_im=" << c.d_im << " d_pr=" << c.d_pr << " depths=(" << c.stage_depths[0]
       << "," << c.stage_depths[1] << "," << c.stage_depths[2] << "," << c.stage_depths[3] << ") heads=" << c.num_heads
       << "/" << c.encoder_heads;
    return os.str();
}

}  // namespace pqm::model
