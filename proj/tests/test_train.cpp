#include <doctest.h>

#include "afe/errors.hpp"
#include "model_fixtures.hpp"

using namespace afe;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.hidden = 16;
  c.blocks = 1;
  c.time_embed_dim = 8;
  c.sync_hidden_mult = 2;
  return c;
}

const TrainingSet& shared_set() {
  static const TrainingSet set = afe_test::scene_training_set(8, 21);
  return set;
}

}  // namespace

TEST_CASE("schedule arithmetic") {
  TrainSchedule s;
  s.total_steps = 1000;
  s.freeze_fraction = 0.5;
  CHECK(s.unfreeze_step() == 500);
  s.total_steps = 7;
  CHECK(s.unfreeze_step() == 4);
  s.freeze_fraction = 0.0;
  CHECK(s.unfreeze_step() == 0);
  s.freeze_fraction = 1.0;
  CHECK(s.unfreeze_step() == 7);
  s.total_steps = 100;
  CHECK(s.lr_at(0) == doctest::Approx(s.learning_rate));
  CHECK(s.lr_at(99) == doctest::Approx(s.learning_rate * s.final_lr_fraction));
  CHECK(s.lr_at(50) < s.lr_at(10));
  s.freeze_fraction = 1.5;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
}

TEST_CASE("training set material") {
  const TrainingSet& set = shared_set();
  REQUIRE(set.size() == 8);
  CHECK(set.latents[0].channels() == 40);
  CHECK(set.latents[0].frames() == 250);
  CHECK(set.hierarchies[0].frames() == 500);
  CHECK(set.conditions[3].prompt.class_id == 3);
  // Standardized latents: per-channel mean ~0 across the set.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(40);
  for (const auto& z : set.latents) mean += z.values.rowwise().mean() / 8.0;
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("modulation parameters first change exactly at the unfreeze step") {
  for (auto opt : {OptimizerKind::Momentum, OptimizerKind::Adam}) {
    VelocityModel model(small_config(), 2);
    TrainSchedule s;
    s.total_steps = 10;
    s.batch_size = 2;
    s.freeze_fraction = 0.5;
    s.optimizer = opt;
    s.learning_rate = opt == OptimizerKind::Adam ? 1e-3 : 0.02;
    std::vector<std::vector<float>> mod_history, trunk_history;
    auto hook = [&](int, const VelocityModel& m) {
      mod_history.push_back(m.group_values(ParamGroup::Modulation));
      trunk_history.push_back(m.group_values(ParamGroup::Trunk));
    };
    s.checkpoint_every = 1;
    const auto before_mod = model.group_values(ParamGroup::Modulation);
    const auto before_trunk = model.group_values(ParamGroup::Trunk);
    const TrainResult r = train(model, shared_set(), s, AugmentPolicy{}, 1, hook);
    CHECK(r.first_modulation_update == 5);
    REQUIRE(mod_history.size() == 10);
    // hook after step k sees the parameters produced by steps 0..k.
    for (int k = 0; k < 5; ++k) CHECK(mod_history[static_cast<std::size_t>(k)] == before_mod);
    CHECK(mod_history[5] != before_mod);
    CHECK(trunk_history[0] != before_trunk);
    CHECK(trunk_history[1] != trunk_history[0]);
  }
}

TEST_CASE("freeze_fraction 1 keeps modulation parameters bit-identical") {
  VelocityModel model(small_config(), 3);
  TrainSchedule s;
  s.total_steps = 6;
  s.batch_size = 2;
  s.freeze_fraction = 1.0;
  const auto before = model.group_values(ParamGroup::Modulation);
  const TrainResult r = train(model, shared_set(), s, AugmentPolicy{});
  CHECK(r.first_modulation_update == -1);
  CHECK(model.group_values(ParamGroup::Modulation) == before);
  CHECK(r.loss_trace.size() == 6);
}

TEST_CASE("training is reproducible and job-count independent") {
  TrainSchedule s;
  s.total_steps = 4;
  s.batch_size = 3;
  s.freeze_fraction = 0.25;
  VelocityModel a(small_config(), 4), b(small_config(), 4);
  const auto ra = train(a, shared_set(), s, AugmentPolicy{}, 1);
  const auto rb = train(b, shared_set(), s, AugmentPolicy{}, 2);
  CHECK(ra.loss_trace == rb.loss_trace);
  CHECK(a.params() == b.params());
}

TEST_CASE("loss decreases on a small set") {
  VelocityModel model(small_config(), 5);
  TrainSchedule s;
  s.total_steps = 150;
  s.batch_size = 4;
  const TrainResult r = train(model, shared_set(), s, AugmentPolicy{});
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 20; ++i) {
    head += r.loss_trace[static_cast<std::size_t>(i)];
    tail += r.loss_trace[r.loss_trace.size() - 1 - static_cast<std::size_t>(i)];
  }
  CHECK(tail < 0.7 * head);
}

TEST_CASE("divergence is reported") {
  VelocityModel model(small_config(), 6);
  TrainSchedule s;
  s.total_steps = 50;
  s.batch_size = 2;
  s.learning_rate = 1e12;
  s.grad_clip = 0.0;
  s.momentum = 0.0;
  CHECK_THROWS_AS(train(model, shared_set(), s, AugmentPolicy{}), DivergenceError);
}

TEST_CASE("policy and model must agree on the level count") {
  VelocityModel model(small_config(), 7);
  TrainSchedule s;
  s.total_steps = 1;
  CHECK_THROWS_AS(train(model, shared_set(), s, AugmentPolicy::identity(2)), InvalidInput);
}
