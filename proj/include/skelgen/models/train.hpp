// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "skelgen/autodiff/adam.hpp"
#include "skelgen/models/model.hpp"

namespace skelgen::models {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::size_t max_steps = 0;  // 0 = no cap
  std::uint64_t seed = 1;     // batch shuffling
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t steps = 0;                // cumulative optimizer steps
  double loss = 0.0;                    // mean training objective over the epoch's batches
  double story_loss = 0.0;              // L1
  std::optional<double> skeleton_loss;  // L2 (MTG)
};

using EpochCallback = std::function<void(const EpochLog&)>;

std::vector<EpochLog> train(const ModelConfig& cfg, const TrainConfig& tc, ad::ParamStore& params,
                            const std::vector<corpus::EncodedStory>& data,
                            const EpochCallback& on_epoch = {});

// Mean losses over `data` without updating anything.
EpochLog evaluate_loss(const ModelConfig& cfg, const ad::ParamStore& params,
                       const std::vector<corpus::EncodedStory>& data, std::size_t batch_size);

}  // namespace skelgen::models
