#include "cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hamembed/errors.hpp"
#include "hamembed/hamsys.hpp"
#include "hamembed/latentham.hpp"
#include "json.hpp"

namespace hamembed::cli {

using nlohmann::json;

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"pendulum", "oscillator", "lotka-volterra", "nls", "wave"};
  return names;
}

ExperimentConfig preset_defaults(const std::string& name) {
  const training::Preset& p = training::preset(name);
  ExperimentConfig c;
  c.preset = name;
  c.system = name;
  c.hidden = p.hidden;
  c.latent_dim = p.latent_dim;
  c.training = training::preset_config(p, 0);
  DataProtocol& d = c.data;
  auto low_dim = [&d](double half_box, double cap, int train_points, double train_t1, int test_points) {
    d.box = {{-half_box, half_box}, {-half_box, half_box}};
    d.energy_cap = cap;
    d.train_ics = 20;
    d.train_points = train_points;
    d.train_t1 = train_t1;
    d.test_ics = 25;
    d.test_points = test_points;
    d.test_t1 = 50.0;
  };
  if (name == "pendulum") {
    low_dim(3.0, 2.0, 25, 20.0, 2500);
  } else if (name == "oscillator") {
    low_dim(2.0, 1.0, 50, 4.0, 5000);
  } else if (name == "lotka-volterra") {
    low_dim(1.5, 4.0, 100, 10.0, 10000);
  } else if (name == "nls") {
    d.points = 3200;
    d.t1 = 160.0;
    d.store_derivs = false;
    c.pod_r = 2;
  } else if (name == "wave") {
    d.points = 501;
    d.t1 = 25.0;
    d.mu_train = {0.5, 0.6, 0.8, 0.9, 1.1, 1.3, 1.4};
    d.mu_test = {0.7, 1.0, 1.2};
    d.store_derivs = false;
    c.pod_r = 3;
  }
  return c;
}

void ExperimentConfig::validate() const {
  const auto& names = hamsys::system_names();
  if (std::find(names.begin(), names.end(), system) == names.end())
    throw ValidationError("config: unknown system '" + system + "'");
  latentham::parse_variant(variant);
  training.validate();
  for (int h : hidden)
    if (h < 1) throw ValidationError("config: hidden widths must be >= 1");
  if (hidden.empty()) throw ValidationError("config: model.hidden must not be empty");
  if (latent_dim < 2 || latent_dim % 2 != 0) throw ValidationError("config: model.latent_dim must be even and >= 2");
  if (!(max_step > 0)) throw ValidationError("config: max_step must be positive");
  if (is_pde()) {
    if (pod_r < 1) throw ValidationError("config: pod.r must be >= 1");
    if (2 * pod_r > latent_dim) throw ValidationError("config: model.latent_dim must be >= 2 * pod.r");
    if (data.grid_points < 5) throw ValidationError("config: data.grid_points must be >= 5");
    if (data.points < 2 || !(data.t1 > 0)) throw ValidationError("config: data.points >= 2 and data.t1 > 0 required");
    if (system == "nls" && !(data.train_fraction > 0 && data.train_fraction <= 1))
      throw ValidationError("config: data.train_fraction must be in (0, 1]");
    if (system == "wave" && data.mu_train.empty()) throw ValidationError("config: data.mu_train must not be empty");
  } else {
    if (latent_dim < 2) throw ValidationError("config: model.latent_dim too small");
    if (data.box.size() != 2) throw ValidationError("config: data.box needs one interval per coordinate");
    for (const auto& [lo, hi] : data.box)
      if (!(lo < hi)) throw ValidationError("config: data.box intervals must have lo < hi");
    if (data.train_ics < 1 || data.train_points < 2 || !(data.train_t1 > 0))
      throw ValidationError("config: train_ics >= 1, train_points >= 2, train_t1 > 0 required");
    if (data.test_ics < 0 || (data.test_ics > 0 && (data.test_points < 2 || !(data.test_t1 > 0))))
      throw ValidationError("config: invalid test protocol");
  }
  if (decoder_kind != "linear" && decoder_kind != "quadratic")
    throw ValidationError("config: decoder.kind must be 'linear' or 'quadratic'");
  decoder_fit.validate();
  if (rollout_x0 && (rollout_points < 2 || !(rollout_t1 > 0)))
    throw ValidationError("config: rollout.points >= 2 and rollout.t1 > 0 required with rollout.x0");
}

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ValidationError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& target) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

void read_data(const json& j, DataProtocol& d) {
  check_keys(j, "data",
             {"box", "energy_cap", "train_ics", "train_points", "train_t1", "test_ics", "test_points", "test_t1",
              "test_seed_offset", "grid_points", "points", "t1", "train_fraction", "mu_train", "mu_test",
              "store_derivs"});
  if (j.contains("box")) {
    std::vector<std::vector<double>> box;
    read(j, "box", box);
    d.box.clear();
    for (const auto& b : box) {
      if (b.size() != 2) throw ValidationError("config: data.box entries must be [lo, hi]");
      d.box.emplace_back(b[0], b[1]);
    }
  }
  read(j, "energy_cap", d.energy_cap);
  read(j, "train_ics", d.train_ics);
  read(j, "train_points", d.train_points);
  read(j, "train_t1", d.train_t1);
  read(j, "test_ics", d.test_ics);
  read(j, "test_points", d.test_points);
  read(j, "test_t1", d.test_t1);
  read(j, "test_seed_offset", d.test_seed_offset);
  read(j, "grid_points", d.grid_points);
  read(j, "points", d.points);
  read(j, "t1", d.t1);
  read(j, "train_fraction", d.train_fraction);
  read(j, "mu_train", d.mu_train);
  read(j, "mu_test", d.mu_test);
  read(j, "store_derivs", d.store_derivs);
}

void read_training(const json& j, training::TrainingConfig& t) {
  check_keys(j, "training",
             {"lambda_encdec", "lambda_symp", "lambda_deri", "epochs", "batch_size", "lr", "gamma", "step_epochs",
              "wd_autoencoder", "wd_hamiltonian", "l1"});
  read(j, "lambda_encdec", t.lambda1);
  read(j, "lambda_symp", t.lambda2);
  read(j, "lambda_deri", t.lambda3);
  read(j, "epochs", t.epochs);
  read(j, "batch_size", t.batch_size);
  read(j, "lr", t.base_lr);
  read(j, "gamma", t.gamma);
  read(j, "step_epochs", t.step_epochs);
  read(j, "wd_autoencoder", t.wd_autoencoder);
  read(j, "wd_hamiltonian", t.wd_hamiltonian);
  read(j, "l1", t.l1);
}

void read_decoder(const json& j, ExperimentConfig& c) {
  check_keys(j, "decoder", {"kind", "epochs", "batch_size", "lr", "gamma", "step_epochs", "weight_decay"});
  read(j, "kind", c.decoder_kind);
  read(j, "epochs", c.decoder_fit.epochs);
  read(j, "batch_size", c.decoder_fit.batch_size);
  read(j, "lr", c.decoder_fit.base_lr);
  read(j, "gamma", c.decoder_fit.gamma);
  read(j, "step_epochs", c.decoder_fit.step_epochs);
  read(j, "weight_decay", c.decoder_fit.weight_decay);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const Overrides& flags) {
  json j;
  try {
    j = text.empty() ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
  check_keys(j, "",
             {"preset", "system", "variant", "seed", "out", "data", "training", "model", "pod", "decoder", "inputs",
              "rollout", "eval", "plot", "max_step"});

  std::string preset_name;
  read(j, "preset", preset_name);
  if (flags.preset) preset_name = *flags.preset;
  std::string system;
  read(j, "system", system);
  if (preset_name.empty()) preset_name = system;
  if (preset_name.empty()) throw ValidationError("config: a preset or system is required");
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), preset_name) == names.end())
    throw ValidationError("config: unknown preset '" + preset_name + "'");
  ExperimentConfig c = preset_defaults(preset_name);
  if (!system.empty() && system != c.system) throw ValidationError("config: system '" + system + "' does not match preset '" + preset_name + "'");

  read(j, "variant", c.variant);
  read(j, "seed", c.seed);
  read(j, "out", c.out);
  read(j, "max_step", c.max_step);
  if (j.contains("data")) read_data(j["data"], c.data);
  if (j.contains("training")) read_training(j["training"], c.training);
  if (j.contains("model")) {
    check_keys(j["model"], "model", {"hidden", "latent_dim"});
    read(j["model"], "hidden", c.hidden);
    read(j["model"], "latent_dim", c.latent_dim);
  }
  if (j.contains("pod")) {
    check_keys(j["pod"], "pod", {"r"});
    read(j["pod"], "r", c.pod_r);
  }
  if (j.contains("decoder")) read_decoder(j["decoder"], c);
  if (j.contains("inputs")) {
    const json& in = j["inputs"];
    check_keys(in, "inputs", {"dataset", "checkpoint", "checkpoints", "basis", "decoder"});
    read(in, "dataset", c.dataset);
    std::string single;
    read(in, "checkpoint", single);
    read(in, "checkpoints", c.checkpoints);
    if (!single.empty()) c.checkpoints.insert(c.checkpoints.begin(), single);
    read(in, "basis", c.basis);
    read(in, "decoder", c.decoder);
  }
  if (j.contains("rollout")) {
    const json& r = j["rollout"];
    check_keys(r, "rollout", {"x0", "t1", "points"});
    if (r.contains("x0")) {
      std::vector<double> x0;
      read(r, "x0", x0);
      c.rollout_x0 = x0;
    }
    read(r, "t1", c.rollout_t1);
    read(r, "points", c.rollout_points);
  }
  if (j.contains("eval")) {
    check_keys(j["eval"], "eval", {"plot", "opinf"});
    read(j["eval"], "plot", c.plot);
    read(j["eval"], "opinf", c.opinf);
  }
  if (j.contains("plot")) {
    const json& p = j["plot"];
    check_keys(p, "plot", {"input", "x", "y", "title"});
    read(p, "input", c.plot_spec.input);
    read(p, "x", c.plot_spec.x);
    read(p, "y", c.plot_spec.y);
    read(p, "title", c.plot_spec.title);
  }

  if (flags.variant) c.variant = *flags.variant;
  if (flags.seed) c.seed = *flags.seed;
  if (flags.out) c.out = *flags.out;
  c.force = flags.force;
  c.training.seed = c.seed;
  c.decoder_fit.seed = c.seed;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, const Overrides& flags) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot read '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), flags);
}

}  // namespace hamembed::cli
