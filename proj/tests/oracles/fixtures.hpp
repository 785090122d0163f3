#pragma once

#include "eradate/dunnet.hpp"
#include "eradate/pipeline.hpp"

namespace fixture {

// Small pipeline settings that keep end-to-end runs to a few seconds.
eradate::PipelineConfig tiny_pipeline();

// Reduced network used for gradient checks: 8x8 input, two to four
// channels per convolution and narrow hidden layers.
eradate::NetConfig reduced_net(int classes = 3);

}  // namespace fixture
