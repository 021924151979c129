#include "model_fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace afe_test {

afe::TrainingSet scene_training_set(int n, std::uint64_t seed, int max_level) {
  std::vector<afe::CorpusItem> items;
  for (int i = 0; i < n; ++i) {
    const auto spec = afe::random_scene_spec(i % afe::kNumClasses, afe::derive_seed(seed, static_cast<std::uint64_t>(i)));
    const afe::Scene s = afe::synth_scene(spec);
    afe::CorpusItem item;
    item.entry.class_id = spec.class_id;
    item.audio = s.audio;
    item.control = s.control;
    items.push_back(std::move(item));
  }
  return afe::build_training_set(items, afe::MelCodec{}, max_level);
}

double gradient_check_error(std::uint64_t seed) {
  const afe::ModelConfig cfg = tiny_config();
  afe::VelocityNet<double> net(cfg, seed);
  afe::Rng rng(afe::derive_seed(seed, "gradcheck"));
  randomize(net, rng, 0.3);
  std::vector<afe::FlowExample> batch{random_example(cfg, rng, static_cast<int>(seed % 8)), random_example(cfg, rng, -1)};
  const auto draws = afe::draw_flow(batch, rng);

  afe::VelocityNet<double>::Buffer grad;
  net.loss_and_gradient(batch, draws, grad);
  double worst = 0.0;
  const double h = 1e-5;
  for (const auto& b : net.layout()) {
    if (b.group == afe::ParamGroup::Buffer) continue;
    for (std::size_t i = 0; i < b.size(); ++i) {
      double& p = net.params()[b.offset + i];
      const double keep = p;
      p = keep + h;
      const double up = afe::fm_loss_at(net, batch, draws);
      p = keep - h;
      const double down = afe::fm_loss_at(net, batch, draws);
      p = keep;
      const double fd = (up - down) / (2 * h);
      const double g = grad[b.offset + i];
      const double denom = std::max({std::abs(fd), std::abs(g), 1e-6});
      worst = std::max(worst, std::abs(fd - g) / denom);
    }
  }
  return worst;
}

}  // namespace afe_test
