#include "fixtures.hpp"

#include "eradate/config.hpp"

namespace fixture {

eradate::PipelineConfig tiny_pipeline() {
  return eradate::PipelineConfig::from_config(eradate::Config::parse(R"(
features = ifv_sift, rcc, dunnet
sift_step = 16
sift_scales = 2
gmm_components = 4
gmm_max_descriptors = 5000
gmm_max_iter = 20
color_codes = 16
color_pixel_budget = 200000
net_input = 16
net_channels = 2, 2, 3, 3, 4, 4
net_fc1 = 8
net_fc2 = 8
lr0 = 0.001
iterations = 20
batch = 4
augment_angles = -5, 0, 5
crop_scales = 0.8, 1.0
crops_per_scale = 3
)"));
}

eradate::NetConfig reduced_net(int classes) {
  eradate::NetConfig c;
  c.input_side = 8;
  c.conv_channels = {2, 2, 3, 3, 4, 4};
  c.fc1 = 5;
  c.fc2 = 6;
  c.classes = classes;
  c.seed = 11;
  return c;
}

}  // namespace fixture
