// SPDX-License-Identifier: Apache-2.0
#include "skelgen/models/train.hpp"

#include "skelgen/error.hpp"

namespace skelgen::models {

namespace {

struct Totals {
  double loss = 0, story = 0, skeleton = 0;
  std::size_t batches = 0;
  bool has_skeleton = false;

  void add(const ForwardResult& f) {
    loss += f.loss.value().item();
    story += f.story_loss.value().item();
    if (f.skeleton_loss) {
      skeleton += f.skeleton_loss->value().item();
      has_skeleton = true;
    }
    ++batches;
  }
  EpochLog log(std::size_t epoch, std::size_t steps) const {
    const double n = static_cast<double>(std::max<std::size_t>(batches, 1));
    EpochLog l{epoch, steps, loss / n, story / n, std::nullopt};
    if (has_skeleton) l.skeleton_loss = skeleton / n;
    return l;
  }
};

}  // namespace

std::vector<EpochLog> train(const ModelConfig& cfg, const TrainConfig& tc, ad::ParamStore& params,
                            const std::vector<corpus::EncodedStory>& data,
                            const EpochCallback& on_epoch) {
  if (data.empty()) throw ValidationError("training data is empty");
  if (tc.batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(tc.lr > 0.0)) throw ValidationError("learning rate must be positive");
  ad::AdamConfig ac;
  ac.lr = tc.lr;
  ad::Adam opt(ac);
  std::vector<EpochLog> logs;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    Totals totals;
    for (const auto& batch : corpus::make_batches(data, tc.batch_size, tc.seed, epoch)) {
      if (tc.max_steps && opt.steps() >= tc.max_steps) break;
      params.zero_grad();
      ad::Tape tape;
      ParamBinding p(tape, params);
      const ForwardResult f = forward(p, cfg, batch);
      tape.backward(f.loss);
      opt.step(params);
      totals.add(f);
    }
    if (totals.batches == 0) break;
    logs.push_back(totals.log(epoch + 1, opt.steps()));
    if (on_epoch) on_epoch(logs.back());
  }
  return logs;
}

EpochLog evaluate_loss(const ModelConfig& cfg, const ad::ParamStore& params,
                       const std::vector<corpus::EncodedStory>& data, std::size_t batch_size) {
  if (data.empty()) throw ValidationError("evaluation data is empty");
  Totals totals;
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < data.size(); ++i) {
    members.push_back(i);
    if (members.size() == batch_size || i + 1 == data.size()) {
      ad::Tape tape;
      ParamBinding p(tape, params);
      totals.add(forward(p, cfg, corpus::make_batch(data, members)));
      members.clear();
    }
  }
  return totals.log(0, 0);
}

}  // namespace skelgen::models
