#include "cli/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hamembed/errors.hpp"
#include "hamembed/hamsys.hpp"

namespace hamembed::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json matrix_to_json(const Mat& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Mat matrix_from_json(const json& j, const std::string& what) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw ValidationError(what + ": matrix size does not match its data");
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(what + ": malformed matrix: " + e.what());
  }
}

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Mixed: return "mixed";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  if (s == "mixed") return Split::Mixed;
  throw ValidationError("dataset: unknown split '" + s + "'");
}

void Dataset::training_matrices(Mat& X, Mat& Xdot) const {
  Eigen::Index total = 0;
  for (const auto& e : entries)
    if (e.split != Split::Test) total += e.train_points;
  if (total == 0) throw ValidationError("dataset: no training points");
  const Eigen::Index dim = 2 * n;
  X.resize(dim, total);
  Xdot.resize(dim, total);
  Eigen::Index c = 0;
  for (const auto& e : entries) {
    if (e.split == Split::Test) continue;
    if (!e.traj.has_derivs()) throw ValidationError("dataset: training trajectory without derivatives");
    X.middleCols(c, e.train_points) = e.traj.states.leftCols(e.train_points);
    Xdot.middleCols(c, e.train_points) = e.traj.derivs.leftCols(e.train_points);
    c += e.train_points;
  }
}

std::vector<integrate::Trajectory> Dataset::test_trajectories() const {
  std::vector<integrate::Trajectory> out;
  for (const auto& e : entries)
    if (e.split == Split::Test) out.push_back(e.traj);
  if (out.empty())
    for (const auto& e : entries)
      if (e.split == Split::Mixed) out.push_back(e.traj);
  return out;
}

void write_trajectory_csv(std::ostream& out, const integrate::Trajectory& traj, bool with_derivs) {
  const Eigen::Index dim = traj.states.rows();
  out << 't';
  for (Eigen::Index i = 0; i < dim; ++i) out << ",x" << i;
  if (with_derivs)
    for (Eigen::Index i = 0; i < dim; ++i) out << ",d" << i;
  out << '\n';
  for (Eigen::Index k = 0; k < traj.times.size(); ++k) {
    out << format_double(traj.times(k));
    for (Eigen::Index i = 0; i < dim; ++i) out << ',' << format_double(traj.states(i, k));
    if (with_derivs)
      for (Eigen::Index i = 0; i < dim; ++i) out << ',' << format_double(traj.derivs(i, k));
    out << '\n';
  }
}

integrate::Trajectory read_trajectory_csv(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(what + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "t") throw ValidationError(what + ": header must start with 't'");
  Eigen::Index nx = 0, nd = 0;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string expect_x = "x" + std::to_string(nx);
    const std::string expect_d = "d" + std::to_string(nd);
    if (nd == 0 && header[i] == expect_x) {
      ++nx;
    } else if (header[i] == expect_d) {
      ++nd;
    } else {
      throw ValidationError(what + ": unexpected column '" + header[i] + "'");
    }
  }
  if (nx == 0 || (nd != 0 && nd != nx)) throw ValidationError(what + ": inconsistent state/derivative columns");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    while (*p) {
      char* end = nullptr;
      row.push_back(std::strtod(p, &end));
      if (end == p) throw ValidationError(what + ": bad number in row " + std::to_string(rows.size() + 1));
      p = end;
      if (*p == ',') ++p;
    }
    if (row.size() != header.size()) throw ValidationError(what + ": row " + std::to_string(rows.size() + 1) + " has the wrong width");
    rows.push_back(std::move(row));
  }
  integrate::Trajectory t;
  const auto count = static_cast<Eigen::Index>(rows.size());
  t.times.resize(count);
  t.states.resize(nx, count);
  if (nd) t.derivs.resize(nd, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    t.times(k) = r[0];
    for (Eigen::Index i = 0; i < nx; ++i) t.states(i, k) = r[static_cast<std::size_t>(1 + i)];
    for (Eigen::Index i = 0; i < nd; ++i) t.derivs(i, k) = r[static_cast<std::size_t>(1 + nx + i)];
  }
  return t;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

namespace {

std::string entry_file(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traj_%03zu.csv", index);
  return buf;
}

}  // namespace

void save_dataset(const Dataset& data, const fs::path& dir) {
  json manifest{{"format", "hamembed-dataset"}, {"version", 1},        {"system", data.system},
                {"n", data.n},                  {"seed", data.seed},   {"grid_points", data.grid_points}};
  json list = json::array();
  for (std::size_t i = 0; i < data.entries.size(); ++i) {
    const auto& e = data.entries[i];
    json item{{"file", entry_file(i)},
              {"split", split_name(e.split)},
              {"train_points", e.train_points},
              {"points", e.traj.times.size()},
              {"ic_id", e.traj.ic_id},
              {"t0", e.traj.times(0)},
              {"t1", e.traj.times(e.traj.times.size() - 1)}};
    if (e.mu) item["mu"] = *e.mu;
    list.push_back(item);
    std::ofstream out(dir / entry_file(i), std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + (dir / entry_file(i)).string() + "'");
    write_trajectory_csv(out, e.traj, e.traj.has_derivs());
  }
  manifest["trajectories"] = list;
  write_text_file(dir / "manifest", manifest.dump(1) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  const json m = read_json_file(dir / "manifest");
  Dataset data;
  try {
    if (m.at("format") != "hamembed-dataset") throw ValidationError("dataset: not a dataset manifest");
    data.system = m.at("system").get<std::string>();
    data.n = m.at("n").get<int>();
    data.seed = m.at("seed").get<std::uint64_t>();
    data.grid_points = m.at("grid_points").get<int>();
    const auto sys = hamsys::make_system(data.system, data.grid_points > 0 ? data.grid_points : 256);
    if (sys.n() != data.n) throw ValidationError("dataset: n does not match system '" + data.system + "'");
    for (const auto& item : m.at("trajectories")) {
      DatasetEntry e;
      const auto file = item.at("file").get<std::string>();
      std::ifstream in(dir / file);
      if (!in) throw ValidationError("dataset: missing trajectory file '" + file + "'");
      e.traj = read_trajectory_csv(in, file);
      e.traj.ic_id = item.at("ic_id").get<std::string>();
      e.split = parse_split(item.at("split").get<std::string>());
      e.train_points = item.at("train_points").get<int>();
      if (item.contains("mu")) e.mu = item.at("mu").get<double>();
      if (e.traj.states.rows() != 2 * data.n) throw ValidationError("dataset: '" + file + "' has the wrong state dimension");
      if (e.train_points < 0 || e.train_points > e.traj.times.size())
        throw ValidationError("dataset: '" + file + "' train_points out of range");
      if (!e.traj.has_derivs()) {
        e.traj.derivs.resize(e.traj.states.rows(), e.traj.states.cols());
        for (Eigen::Index k = 0; k < e.traj.states.cols(); ++k) e.traj.derivs.col(k) = sys.vector_field(e.traj.states.col(k));
      }
      data.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ValidationError("dataset: malformed manifest: " + std::string(e.what()));
  }
  return data;
}

json basis_to_json(const pod::PODBasis& b) {
  return json{{"format", "hamembed-pod-basis"},
              {"N", b.N},
              {"r", b.r},
              {"V", matrix_to_json(b.V)},
              {"singular_values", std::vector<double>(b.singular_values.data(), b.singular_values.data() + b.singular_values.size())}};
}

pod::PODBasis basis_from_json(const json& j) {
  try {
    pod::PODBasis b;
    b.N = j.at("N").get<int>();
    b.r = j.at("r").get<int>();
    b.V = matrix_from_json(j.at("V"), "basis.V");
    const auto s = j.at("singular_values").get<std::vector<double>>();
    b.singular_values = Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
    if (b.V.rows() != b.N || b.V.cols() != b.r) throw ValidationError("basis: V shape does not match N, r");
    return b;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("basis: malformed: ") + e.what());
  }
}

json decoder_to_json(const decoders::QuadDecoder& d) {
  return json{{"format", "hamembed-decoder"}, {"kind", "quadratic"}, {"V", matrix_to_json(d.V)}, {"H", matrix_to_json(d.H)}};
}

decoders::QuadDecoder decoder_from_json(const json& j) {
  if (!j.contains("kind") || j.at("kind") != "quadratic") throw ValidationError("decoder: expected a quadratic decoder file");
  decoders::QuadDecoder d{matrix_from_json(j.at("V"), "decoder.V"), matrix_from_json(j.at("H"), "decoder.H")};
  if (d.H.rows() != d.V.rows() || d.H.cols() != d.V.cols() * d.V.cols()) throw ValidationError("decoder: inconsistent V/H shapes");
  return d;
}

json checkpoint_to_json(const Checkpoint& c) {
  const auto& model = c.model;
  json params = json::array();
  for (const auto& seg : model.params.layout().segments())
    params.push_back({{"name", seg.name},
                      {"group", seg.group == diffkit::ParamGroup::Hamiltonian ? "hamiltonian" : "autoencoder"},
                      {"value", matrix_to_json(model.params.get(seg.name))}});
  json ham;
  const auto latent = model.latent();
  if (const auto* sos = std::get_if<latentham::SosHamiltonian>(&latent)) {
    ham = {{"type", model.variant == latentham::Variant::QuarticSOS ? "QuarticSOS" : "QuadraticSOS"},
           {"Q", matrix_to_json(sos->Q)},
           {"w", sos->w}};
  } else {
    const auto& poly = std::get<latentham::CubicPoly>(latent);
    json monos = json::array();
    for (std::size_t i = 0; i < poly.monomials().size(); ++i)
      monos.push_back({{"vars", poly.monomials()[i]}, {"coeff", poly.coeffs()(static_cast<Eigen::Index>(i))}});
    ham = {{"type", "CubicPoly"}, {"monomials", monos}};
  }
  json j{{"format", "hamembed-checkpoint"},
         {"version", 1},
         {"system", c.system},
         {"seed", c.seed},
         {"variant", latentham::variant_name(model.variant)},
         {"n", model.n},
         {"m", model.m},
         {"hidden", model.encoder.hidden},
         {"eps", model.eps},
         {"w", model.w},
         {"params", params},
         {"hamiltonian", ham}};
  if (c.basis) j["basis"] = basis_to_json(*c.basis);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("format") != "hamembed-checkpoint") throw ValidationError("checkpoint: not a checkpoint file");
    Checkpoint c;
    c.system = j.at("system").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto variant = latentham::parse_variant(j.at("variant").get<std::string>());
    const int n = j.at("n").get<int>();
    const int m = j.at("m").get<int>();
    const auto hidden = j.at("hidden").get<std::vector<int>>();
    c.model = training::make_model(n, m, variant, hidden, 0);
    c.model.eps = j.at("eps").get<double>();
    c.model.w = j.at("w").get<double>();
    std::size_t seen = 0;
    for (const auto& p : j.at("params")) {
      const auto name = p.at("name").get<std::string>();
      if (!c.model.params.layout().contains(name)) throw ValidationError("checkpoint: unexpected parameter '" + name + "'");
      const Mat value = matrix_from_json(p.at("value"), "checkpoint." + name);
      const auto& seg = c.model.params.layout().segment(name);
      if (value.rows() != seg.rows || value.cols() != seg.cols) throw ValidationError("checkpoint: '" + name + "' has the wrong shape");
      c.model.params.set(name, value);
      ++seen;
    }
    if (seen != c.model.params.layout().segments().size()) throw ValidationError("checkpoint: missing parameters");
    if (j.contains("basis")) c.basis = basis_from_json(j.at("basis"));
    c.model.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint: malformed: ") + e.what());
  }
}

void check_output_target(const std::string& out, bool force) {
  if (out.empty()) throw ValidationError("an output directory is required (--out)");
  if (fs::exists(out) && !force) throw ValidationError("output '" + out + "' already exists (use --force to replace it)");
}

StagedOutput::StagedOutput(fs::path target, bool force) : target_(std::move(target)), force_(force) {
  check_output_target(target_.string(), force_);
  const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
  fs::create_directories(parent);
  staging_ = parent / ("." + target_.filename().string() + ".staging");
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

StagedOutput::~StagedOutput() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedOutput::commit() {
  if (fs::exists(target_)) {
    if (!force_) throw ValidationError("output '" + target_.string() + "' already exists");
    fs::remove_all(target_);
  }
  fs::rename(staging_, target_);
  committed_ = true;
}

}  // namespace hamembed::cli
