#include "cli/pipeline.hpp"

#include <cmath>
#include <cstdio>

#include "hamembed/errors.hpp"
#include "hamembed/hamsys.hpp"

namespace hamembed::cli {

namespace {

std::string ic_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%03zu", prefix, i);
  return buf;
}

DatasetEntry integrate_entry(const hamsys::CanonicalSystem& sys, const Vec& x0, const Vec& grid, Split split,
                             int train_points, std::string id, double max_step) {
  DatasetEntry e;
  e.traj = integrate::integrate_trajectory(sys, x0, grid, {}, max_step);
  e.traj.ic_id = std::move(id);
  e.split = split;
  e.train_points = train_points;
  return e;
}

}  // namespace

Dataset generate_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  const DataProtocol& d = cfg.data;
  const auto sys = hamsys::make_system(cfg.system, cfg.is_pde() ? d.grid_points : 256);
  Dataset data;
  data.system = cfg.system;
  data.n = sys.n();
  data.seed = cfg.seed;
  data.grid_points = cfg.is_pde() ? d.grid_points : 0;
  if (cfg.system == "nls") {
    const Vec grid = integrate::uniform_grid(0.0, d.t1, d.points);
    const int train = static_cast<int>(std::lround(d.train_fraction * d.points));
    data.entries.push_back(
        integrate_entry(sys, hamsys::nls_initial_state(sys), grid, Split::Mixed, train, "nls-000", cfg.max_step));
  } else if (cfg.system == "wave") {
    const Vec grid = integrate::uniform_grid(0.0, d.t1, d.points);
    auto add = [&](const std::vector<double>& mus, Split split, const char* prefix) {
      for (std::size_t i = 0; i < mus.size(); ++i) {
        auto e = integrate_entry(sys, hamsys::wave_initial_state(sys, mus[i]), grid, split,
                                 split == Split::Train ? d.points : 0, ic_name(prefix, i), cfg.max_step);
        e.mu = mus[i];
        data.entries.push_back(std::move(e));
      }
    };
    add(d.mu_train, Split::Train, "train");
    add(d.mu_test, Split::Test, "test");
  } else {
    const auto train_ics = hamsys::sample_initial_conditions(sys, {d.box, d.energy_cap, d.train_ics, cfg.seed});
    const Vec train_grid = integrate::uniform_grid(0.0, d.train_t1, d.train_points);
    for (std::size_t i = 0; i < train_ics.size(); ++i)
      data.entries.push_back(
          integrate_entry(sys, train_ics[i], train_grid, Split::Train, d.train_points, ic_name("train", i), cfg.max_step));
    if (d.test_ics > 0) {
      const auto test_ics =
          hamsys::sample_initial_conditions(sys, {d.box, d.energy_cap, d.test_ics, cfg.seed + d.test_seed_offset});
      const Vec test_grid = integrate::uniform_grid(0.0, d.test_t1, d.test_points);
      for (std::size_t i = 0; i < test_ics.size(); ++i)
        data.entries.push_back(integrate_entry(sys, test_ics[i], test_grid, Split::Test, 0, ic_name("test", i), cfg.max_step));
    }
  }
  return data;
}

Mat training_snapshots(const Dataset& data) {
  std::vector<Mat> states;
  for (const auto& e : data.entries)
    if (e.split != Split::Test && e.train_points > 0) states.push_back(e.traj.states.leftCols(e.train_points));
  if (states.empty()) throw ValidationError("dataset: no training snapshots");
  return pod::assemble_snapshots(states);
}

TrainingData prepare_training_data(const ExperimentConfig& cfg, const Dataset& data) {
  if (data.system != cfg.system)
    throw ValidationError("dataset system '" + data.system + "' does not match config system '" + cfg.system + "'");
  TrainingData td;
  data.training_matrices(td.X, td.Xdot);
  if (cfg.is_pde()) {
    td.basis = cfg.basis.empty() ? pod::pod_basis(training_snapshots(data), cfg.pod_r) : basis_from_json(read_json_file(cfg.basis));
    if (td.basis->N != data.n) throw ValidationError("basis dimension does not match the dataset");
    td.X = pod::project(*td.basis, td.X);
    td.Xdot = pod::project(*td.basis, td.Xdot);
  }
  return td;
}

training::TrainResult train_from_data(const ExperimentConfig& cfg, const TrainingData& td,
                                      const training::EpochCallback& on_epoch) {
  const int n = static_cast<int>(td.X.rows() / 2);
  const int m = cfg.latent_dim / 2;
  if (m < n) throw ValidationError("latent dimension " + std::to_string(2 * m) + " is smaller than the data dimension " + std::to_string(2 * n));
  auto model = training::make_model(n, m, latentham::parse_variant(cfg.variant), cfg.hidden, cfg.seed);
  training::TrainingConfig tc = cfg.training;
  tc.seed = cfg.seed;
  return training::train(td.X, td.Xdot, std::move(model), tc, on_epoch);
}

namespace {

Mat lift_states(const pod::PODBasis& basis, const std::optional<decoders::QuadDecoder>& decoder, const Mat& Y) {
  return decoder ? decoders::quad_reconstruct_batch(*decoder, Y) : pod::lift(basis, Y);
}

}  // namespace

eval::RolloutFn checkpoint_rollout(const Checkpoint& ckpt, std::optional<decoders::QuadDecoder> decoder, double max_step) {
  if (decoder && !ckpt.basis) throw ValidationError("a decoder only applies to POD-coordinate checkpoints");
  if (decoder && decoder->d() != 2 * ckpt.basis->r) throw ValidationError("decoder dimension does not match the basis");
  return [ckpt, decoder, max_step](const Vec& x0, const Vec& grid) {
    if (!ckpt.basis) return training::latent_rollout(ckpt.model, x0, grid, {}, max_step).predicted;
    const Vec y0 = pod::project(*ckpt.basis, x0).col(0);
    integrate::Trajectory t = training::latent_rollout(ckpt.model, y0, grid, {}, max_step).predicted;
    t.states = lift_states(*ckpt.basis, decoder, t.states);
    return t;
  };
}

eval::RolloutFn opinf_rollout_fn(const TrainingData& td, std::optional<decoders::QuadDecoder> decoder, double max_step) {
  const auto fit = baselines::opinf_fit(td.X, td.Xdot);
  const auto basis = td.basis;
  return [model = fit.model, basis, decoder, max_step](const Vec& x0, const Vec& grid) {
    if (!basis) return baselines::opinf_rollout(model, x0, grid, max_step);
    integrate::Trajectory t = baselines::opinf_rollout(model, pod::project(*basis, x0).col(0), grid, max_step);
    t.states = lift_states(*basis, decoder, t.states);
    return t;
  };
}

}  // namespace hamembed::cli
