#pragma once

#include <string>
#include <vector>

#include "hamembed/diffkit/tape.hpp"
#include "hamembed/linalg.hpp"

namespace hamembed::diffkit {

enum class ParamGroup { Autoencoder, Hamiltonian };

struct Segment {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;
  ParamGroup group = ParamGroup::Autoencoder;

  Eigen::Index size() const { return rows * cols; }
};

/// Ordered list of named matrix blocks laid out back to back (column-major
/// within a block).
class ParamLayout {
 public:
  int add(std::string name, Eigen::Index rows, Eigen::Index cols, ParamGroup group);

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(const std::string& name) const;
  int index_of(const std::string& name) const;
  bool contains(const std::string& name) const;
  Eigen::Index total() const { return total_; }

  bool operator==(const ParamLayout& other) const;

 private:
  std::vector<Segment> segments_;
  Eigen::Index total_ = 0;
};

class ParamVector {
 public:
  ParamVector() = default;
  /// Zero-filled vector for the given layout.
  explicit ParamVector(ParamLayout layout);

  const ParamLayout& layout() const { return layout_; }
  Vec& values() { return values_; }
  const Vec& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  Mat get(const std::string& name) const;
  Mat get(int segment_index) const;
  void set(const std::string& name, const Mat& value);
  void set(int segment_index, const Mat& value);

  std::vector<Mat> unpack() const;
  static ParamVector pack(ParamLayout layout, const std::vector<Mat>& blocks);

 private:
  ParamLayout layout_;
  Vec values_;
};

/// One tape leaf per segment.
class TapeBinding {
 public:
  TapeBinding(Tape& tape, const ParamVector& params, bool differentiable = true);

  Var operator[](const std::string& name) const;
  Var at(int segment_index) const { return vars_.at(static_cast<std::size_t>(segment_index)); }
  /// Flattened gradient in layout order; call after tape.backward().
  Vec gather_grad() const;

 private:
  Tape* tape_;
  const ParamLayout* layout_;
  std::vector<Var> vars_;
};

}  // namespace hamembed::diffkit
