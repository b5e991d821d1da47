#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hamembed/decoders.hpp"
#include "hamembed/integrate.hpp"
#include "hamembed/pod.hpp"
#include "hamembed/training.hpp"
#include "json.hpp"

namespace hamembed::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// %.17g, with inf/nan spelled out.
std::string format_double(double v);

json matrix_to_json(const Mat& m);  // {rows, cols, data (row-major)}
Mat matrix_from_json(const json& j, const std::string& what);

enum class Split { Train, Test, Mixed };
std::string split_name(Split s);
Split parse_split(const std::string& s);

struct DatasetEntry {
  integrate::Trajectory traj;
  Split split = Split::Train;
  int train_points = 0;  // leading points usable for training
  std::optional<double> mu;
};

struct Dataset {
  std::string system;
  int n = 0;
  std::uint64_t seed = 0;
  int grid_points = 0;
  std::vector<DatasetEntry> entries;

  /// Training columns of every train/mixed entry, concatenated.
  void training_matrices(Mat& X, Mat& Xdot) const;
  /// Test entries, or the full mixed trajectories when there are none.
  std::vector<integrate::Trajectory> test_trajectories() const;
};

/// Header t,x0..x{2n-1}[,d0..d{2n-1}].
void write_trajectory_csv(std::ostream& out, const integrate::Trajectory& traj, bool with_derivs);
integrate::Trajectory read_trajectory_csv(std::istream& in, const std::string& what);

void save_dataset(const Dataset& data, const fs::path& dir);
/// Derivative columns missing on disk are recomputed from the system's field.
Dataset load_dataset(const fs::path& dir);

struct Checkpoint {
  std::string system;
  std::uint64_t seed = 0;
  training::EmbeddingModel model;
  std::optional<pod::PODBasis> basis;  // set when the model lives in POD coordinates
};

json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const json& j);

json basis_to_json(const pod::PODBasis& b);
pod::PODBasis basis_from_json(const json& j);

json decoder_to_json(const decoders::QuadDecoder& d);
decoders::QuadDecoder decoder_from_json(const json& j);

json read_json_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

/// Output directory written under a sibling staging name and renamed into
/// place by commit(); an uncommitted stage is removed on destruction.
class StagedOutput {
 public:
  StagedOutput(fs::path target, bool force);
  ~StagedOutput();
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  const fs::path& dir() const { return staging_; }
  fs::path operator/(const std::string& name) const { return staging_ / name; }
  void commit();

 private:
  fs::path target_;
  fs::path staging_;
  bool force_;
  bool committed_ = false;
};

/// Throws ValidationError when target exists and force is off.
void check_output_target(const std::string& out, bool force);

}  // namespace hamembed::cli
