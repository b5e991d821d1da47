#include "cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cli/io.hpp"
#include "cli/pipeline.hpp"
#include "cli/svg.hpp"
#include "hamembed/errors.hpp"
#include "hamembed/hamsys.hpp"

namespace hamembed::cli {

namespace {

void require_input(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("config: inputs.") + what + " is required");
  if (!fs::exists(path)) throw ValidationError(std::string("input ") + what + " '" + path + "' does not exist");
}

std::string numbered(const std::string& stem, std::size_t i, const char* ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03zu", i);
  return stem + buf + ext;
}

std::optional<decoders::QuadDecoder> load_decoder(const ExperimentConfig& cfg) {
  if (cfg.decoder.empty()) return std::nullopt;
  require_input(cfg.decoder, "decoder");
  const json j = read_json_file(cfg.decoder);
  if (j.value("kind", "") == "linear") return std::nullopt;
  return decoder_from_json(j);
}

std::string history_csv(const std::vector<training::EpochRecord>& history) {
  std::ostringstream o;
  o << "epoch,lr,total,encdec,symp,deri,l1\n";
  for (const auto& r : history)
    o << r.epoch << ',' << format_double(r.lr) << ',' << format_double(r.total) << ',' << format_double(r.encdec) << ','
      << format_double(r.symp) << ',' << format_double(r.deri) << ',' << format_double(r.l1) << '\n';
  return o.str();
}

void write_trajectory(const fs::path& path, const integrate::Trajectory& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  write_trajectory_csv(out, t, false);
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log) {
  check_output_target(cfg.out, cfg.force);
  const Dataset data = generate_dataset(cfg);
  StagedOutput stage(cfg.out, cfg.force);
  save_dataset(data, stage.dir());
  stage.commit();
  std::map<Split, int> count;
  for (const auto& e : data.entries) ++count[e.split];
  log << "gen-data: " << cfg.system << ", " << count[Split::Train] << " train / " << count[Split::Test] << " test / "
      << count[Split::Mixed] << " mixed trajectories -> " << cfg.out << '\n';
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  require_input(cfg.dataset, "dataset");
  if (!cfg.basis.empty()) require_input(cfg.basis, "basis");
  check_output_target(cfg.out, cfg.force);
  const Dataset data = load_dataset(cfg.dataset);
  const TrainingData td = prepare_training_data(cfg, data);
  const auto result = train_from_data(cfg, td, [&](const training::EpochRecord& r) {
    if (r.epoch % 500 == 0 || r.epoch + 1 == cfg.training.epochs) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %5d  lr %.1e  total %.4e  encdec %.3e  symp %.3e  deri %.3e\n", r.epoch, r.lr,
                    r.total, r.encdec, r.symp, r.deri);
      log << line << std::flush;
    }
  });
  Checkpoint ckpt{cfg.system, cfg.seed, result.model, td.basis};
  StagedOutput stage(cfg.out, cfg.force);
  write_text_file(stage / "checkpoint.json", checkpoint_to_json(ckpt).dump(1) + "\n");
  write_text_file(stage / "history.csv", history_csv(result.history));
  stage.commit();
  log << "train: " << cfg.variant << " checkpoint -> " << (fs::path(cfg.out) / "checkpoint.json").string() << '\n';
}

void cmd_rollout(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.checkpoints.size() != 1) throw ValidationError("rollout needs exactly one inputs.checkpoint");
  require_input(cfg.checkpoints[0], "checkpoint");
  if (!cfg.rollout_x0) require_input(cfg.dataset, "dataset");
  check_output_target(cfg.out, cfg.force);
  const Checkpoint ckpt = checkpoint_from_json(read_json_file(cfg.checkpoints[0]));
  const auto decoder = load_decoder(cfg);

  std::vector<std::pair<Vec, Vec>> runs;  // (x0, grid)
  if (cfg.rollout_x0) {
    runs.emplace_back(Eigen::Map<const Vec>(cfg.rollout_x0->data(), static_cast<Eigen::Index>(cfg.rollout_x0->size())),
                      integrate::uniform_grid(0.0, cfg.rollout_t1, cfg.rollout_points));
  } else {
    for (const auto& t : load_dataset(cfg.dataset).test_trajectories()) runs.emplace_back(t.states.col(0), t.times);
    if (runs.empty()) throw ValidationError("no test ICs");
  }

  StagedOutput stage(cfg.out, cfg.force);
  json info = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& [x0, grid] = runs[i];
    json item{{"file", numbered("rollout", i, ".csv")}};
    if (ckpt.basis) {
      const auto fn = checkpoint_rollout(ckpt, decoder, cfg.max_step);
      write_trajectory(stage / numbered("rollout", i, ".csv"), fn(x0, grid));
    } else {
      if (x0.size() != 2 * ckpt.model.n) throw ValidationError("rollout: x0 must have " + std::to_string(2 * ckpt.model.n) + " entries");
      const auto r = training::latent_rollout(ckpt.model, x0, grid, {}, cfg.max_step);
      write_trajectory(stage / numbered("rollout", i, ".csv"), r.predicted);
      write_trajectory(stage / numbered("latent", i, ".csv"), r.latent);
      item["bound"] = std::isnan(r.bound) ? json(nullptr) : json(r.bound);
      item["max_certified"] = r.max_certified;
      item["violations"] = r.violations.size();
    }
    info.push_back(item);
  }
  write_text_file(stage / "rollout.json", json{{"system", ckpt.system}, {"variant", latentham::variant_name(ckpt.model.variant)}, {"runs", info}}.dump(1) + "\n");
  stage.commit();
  log << "rollout: " << runs.size() << " run(s) -> " << cfg.out << '\n';
}

void cmd_eval(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.checkpoints.empty() && !cfg.opinf) throw ValidationError("eval needs inputs.checkpoint(s) or eval.opinf");
  for (const auto& c : cfg.checkpoints) require_input(c, "checkpoint");
  require_input(cfg.dataset, "dataset");
  check_output_target(cfg.out, cfg.force);
  const Dataset data = load_dataset(cfg.dataset);
  const auto tests = data.test_trajectories();
  if (tests.empty()) throw ValidationError("no test ICs");
  const auto decoder = load_decoder(cfg);
  const auto sys = hamsys::make_system(data.system, data.grid_points > 0 ? data.grid_points : 256);

  std::vector<eval::NamedModel> models;
  std::map<std::string, int> seen;
  auto unique = [&seen](const std::string& name) {
    const int k = seen[name]++;
    return k == 0 ? name : name + "#" + std::to_string(k + 1);
  };
  for (const auto& path : cfg.checkpoints) {
    const Checkpoint ckpt = checkpoint_from_json(read_json_file(path));
    if (ckpt.system != data.system) throw ValidationError("checkpoint '" + path + "' is for system '" + ckpt.system + "'");
    models.push_back({unique(latentham::variant_name(ckpt.model.variant)), checkpoint_rollout(ckpt, decoder, cfg.max_step)});
  }
  if (cfg.opinf) models.push_back({unique("opinf-ham"), opinf_rollout_fn(prepare_training_data(cfg, data), decoder, cfg.max_step)});

  std::vector<eval::Metric> metrics{eval::traj_error_metric()};
  if (cfg.is_pde()) metrics.push_back(eval::relative_l2_metric());
  std::map<std::pair<std::size_t, std::size_t>, integrate::Trajectory> preds;
  const auto reports = eval::benchmark_suite(tests, models, metrics, [&](std::size_t mi, std::size_t ic, const integrate::Trajectory& p) {
    preds.emplace(std::make_pair(mi, ic), p);
  });

  StagedOutput stage(cfg.out, cfg.force);
  {
    std::ofstream out(stage / "errors.csv", std::ios::binary);
    eval::write_report_csv(out, reports);
  }
  write_text_file(stage / "summary.txt", eval::summary_table(reports));
  for (const auto& [key, pred] : preds) {
    const auto& [mi, ic] = key;
    const auto& gt = tests[ic];
    const std::string stem = models[mi].name + "_" + numbered("ic", ic, "");
    std::ostringstream ts;
    ts << "t,sq_error,h_true,h_pred\n";
    for (Eigen::Index k = 0; k < gt.times.size(); ++k) {
      double h_pred = std::numeric_limits<double>::quiet_NaN();
      if (pred.states.col(k).allFinite()) h_pred = sys.hamiltonian(pred.states.col(k));
      ts << format_double(gt.times(k)) << ',' << format_double((gt.states.col(k) - pred.states.col(k)).squaredNorm()) << ','
         << format_double(sys.hamiltonian(gt.states.col(k))) << ',' << format_double(h_pred) << '\n';
    }
    write_text_file(stage / ("timeseries_" + stem + ".csv"), ts.str());
    if (!cfg.is_pde()) {
      const Eigen::Index n = sys.n();
      std::ostringstream ph;
      ph << 't';
      for (Eigen::Index i = 0; i < n; ++i) ph << ",q" << i << "_true,p" << i << "_true";
      for (Eigen::Index i = 0; i < n; ++i) ph << ",q" << i << "_pred,p" << i << "_pred";
      ph << '\n';
      for (Eigen::Index k = 0; k < gt.times.size(); ++k) {
        ph << format_double(gt.times(k));
        for (Eigen::Index i = 0; i < n; ++i) ph << ',' << format_double(gt.states(i, k)) << ',' << format_double(gt.states(n + i, k));
        for (Eigen::Index i = 0; i < n; ++i)
          ph << ',' << format_double(pred.states(i, k)) << ',' << format_double(pred.states(n + i, k));
        ph << '\n';
      }
      write_text_file(stage / ("phase_" + stem + ".csv"), ph.str());
    }
  }
  if (cfg.plot) {
    for (std::size_t r = 0; r < reports.size(); ++r) {
      const auto& rep = reports[r];
      if (rep.metric != "traj_error") continue;
      const std::size_t mi = r / metrics.size();
      for (const auto& [tag, ic] : {std::pair<const char*, int>{"best", rep.best}, {"worst", rep.worst}}) {
        if (ic < 0) continue;
        const auto& gt = tests[static_cast<std::size_t>(ic)];
        const auto& pred = preds.at({mi, static_cast<std::size_t>(ic)});
        std::vector<Series> series(2);
        series[0].label = "ground truth";
        series[1].label = rep.variant;
        std::string x_label = "t", y_label = "x0";
        for (Eigen::Index k = 0; k < gt.times.size(); ++k) {
          if (cfg.is_pde()) {
            series[0].x.push_back(gt.times(k));
            series[0].y.push_back(gt.states.col(k).norm());
            series[1].x.push_back(gt.times(k));
            series[1].y.push_back(pred.states.col(k).norm());
            y_label = "|x(t)|";
          } else {
            const Eigen::Index n = sys.n();
            series[0].x.push_back(gt.states(0, k));
            series[0].y.push_back(gt.states(n, k));
            series[1].x.push_back(pred.states(0, k));
            series[1].y.push_back(pred.states(n, k));
            x_label = "q";
            y_label = "p";
          }
        }
        const std::string title = rep.variant + " " + tag + " test IC " + std::to_string(ic);
        write_text_file(stage / (rep.variant + "_" + tag + ".svg"), line_chart(title, x_label, y_label, series));
      }
    }
  }
  stage.commit();
  log << eval::summary_table(reports);
}

void cmd_pod(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.pod_r < 1) throw ValidationError("config: pod.r must be >= 1");
  require_input(cfg.dataset, "dataset");
  check_output_target(cfg.out, cfg.force);
  const Dataset data = load_dataset(cfg.dataset);
  const pod::PODBasis basis = pod::pod_basis(training_snapshots(data), cfg.pod_r);
  const Mat P = basis.projector();
  const double defect = (P.transpose() * symplectic_form(basis.N) * P - symplectic_form(basis.r)).cwiseAbs().maxCoeff();
  json j = basis_to_json(basis);
  j["energy_fraction"] = pod::energy_fraction(basis.singular_values, basis.r);
  j["symplectic_defect"] = defect;

  std::ostringstream energy;
  energy << "r,singular_value,energy_fraction\n";
  for (Eigen::Index r = 1; r <= basis.singular_values.size(); ++r)
    energy << r << ',' << format_double(basis.singular_values(r - 1)) << ','
           << format_double(pod::energy_fraction(basis.singular_values, static_cast<int>(r))) << '\n';

  StagedOutput stage(cfg.out, cfg.force);
  write_text_file(stage / "basis.json", j.dump(1) + "\n");
  write_text_file(stage / "energy.csv", energy.str());
  stage.commit();
  char line[160];
  std::snprintf(line, sizeof line, "pod: r = %d captures %.4f of the snapshot energy (symplectic defect %.1e)\n", basis.r,
                pod::energy_fraction(basis.singular_values, basis.r), defect);
  log << line;
}

void cmd_fit_decoder(const ExperimentConfig& cfg, std::ostream& log) {
  require_input(cfg.dataset, "dataset");
  if (!cfg.basis.empty()) require_input(cfg.basis, "basis");
  check_output_target(cfg.out, cfg.force);
  const Dataset data = load_dataset(cfg.dataset);
  if (data.n < 2) throw ValidationError("fit-decoder needs a high-dimensional dataset");
  const pod::PODBasis basis = cfg.basis.empty() ? pod::pod_basis(training_snapshots(data), cfg.pod_r)
                                                : basis_from_json(read_json_file(cfg.basis));
  Mat X, Xdot;
  data.training_matrices(X, Xdot);
  const Mat Y = pod::project(basis, X);

  StagedOutput stage(cfg.out, cfg.force);
  double err = 0.0;
  if (cfg.decoder_kind == "quadratic") {
    const auto fit = decoders::fit_quad_decoder(Y, X, cfg.decoder_fit);
    err = eval::mean_l2(X, decoders::quad_reconstruct_batch(fit.decoder, Y));
    write_text_file(stage / "decoder.json", decoder_to_json(fit.decoder).dump(1) + "\n");
    std::ostringstream h;
    h << "epoch,loss\n";
    for (std::size_t e = 0; e < fit.history.size(); ++e) h << e << ',' << format_double(fit.history[e]) << '\n';
    write_text_file(stage / "history.csv", h.str());
  } else {
    err = eval::mean_l2(X, decoders::linear_reconstruct(basis, Y));
    write_text_file(stage / "decoder.json", json{{"format", "hamembed-decoder"}, {"kind", "linear"}}.dump(1) + "\n");
  }
  write_text_file(stage / "basis.json", basis_to_json(basis).dump(1) + "\n");
  stage.commit();
  log << "fit-decoder: " << cfg.decoder_kind << " decoder, mean training L2 error " << format_double(err) << '\n';
}

void cmd_plot(const ExperimentConfig& cfg, std::ostream& log) {
  const PlotSpec& spec = cfg.plot_spec;
  if (spec.input.empty()) throw ValidationError("config: plot.input is required");
  require_input(spec.input, "plot input");
  check_output_target(cfg.out, cfg.force);
  std::ifstream in(spec.input);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("plot: empty input");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  auto column = [&header](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("plot: no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t xc = column(spec.x);
  std::vector<std::string> ys = spec.y;
  if (ys.empty())
    for (const auto& h : header)
      if (h != spec.x) ys.push_back(h);
  std::vector<std::size_t> yc;
  for (const auto& y : ys) yc.push_back(column(y));
  std::vector<Series> series(ys.size());
  for (std::size_t k = 0; k < ys.size(); ++k) series[k].label = ys[k];
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell.empty() ? std::nan("") : std::strtod(cell.c_str(), nullptr));
    if (row.size() != header.size()) throw ValidationError("plot: ragged row in input");
    for (std::size_t k = 0; k < ys.size(); ++k) {
      series[k].x.push_back(row[xc]);
      series[k].y.push_back(row[yc[k]]);
    }
  }
  const std::string svg = line_chart(spec.title.empty() ? fs::path(spec.input).stem().string() : spec.title, spec.x,
                                     ys.size() == 1 ? ys[0] : "", series);
  StagedOutput stage(cfg.out, cfg.force);
  write_text_file(stage / (fs::path(spec.input).stem().string() + ".svg"), svg);
  stage.commit();
  log << "plot: " << ys.size() << " series -> " << cfg.out << '\n';
}

}  // namespace hamembed::cli
