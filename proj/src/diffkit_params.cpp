#include <utility>

#include "hamembed/diffkit/params.hpp"
#include "hamembed/errors.hpp"

namespace hamembed::diffkit {

int ParamLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols, ParamGroup group) {
  if (rows < 0 || cols < 0) throw ValidationError("segment '" + name + "' has negative shape");
  if (contains(name)) throw ValidationError("duplicate segment '" + name + "'");
  segments_.push_back(Segment{std::move(name), rows, cols, total_, group});
  total_ += rows * cols;
  return static_cast<int>(segments_.size()) - 1;
}

int ParamLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i)
    if (segments_[i].name == name) return static_cast<int>(i);
  return -1;
}

bool ParamLayout::contains(const std::string& name) const { return index_of(name) >= 0; }

const Segment& ParamLayout::segment(const std::string& name) const {
  const int i = index_of(name);
  if (i < 0) throw ValidationError("unknown parameter segment '" + name + "'");
  return segments_[static_cast<std::size_t>(i)];
}

bool ParamLayout::operator==(const ParamLayout& other) const {
  if (segments_.size() != other.segments_.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& a = segments_[i];
    const Segment& b = other.segments_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.group != b.group) return false;
  }
  return true;
}

ParamVector::ParamVector(ParamLayout layout) : layout_(std::move(layout)), values_(Vec::Zero(layout_.total())) {}

Mat ParamVector::get(int segment_index) const {
  const Segment& s = layout_.segments().at(static_cast<std::size_t>(segment_index));
  return values_.segment(s.offset, s.size()).reshaped(s.rows, s.cols);
}

Mat ParamVector::get(const std::string& name) const {
  layout_.segment(name);
  return get(layout_.index_of(name));
}

void ParamVector::set(int segment_index, const Mat& value) {
  const Segment& s = layout_.segments().at(static_cast<std::size_t>(segment_index));
  if (value.rows() != s.rows || value.cols() != s.cols)
    throw ValidationError("segment '" + s.name + "' expects " + std::to_string(s.rows) + "x" + std::to_string(s.cols));
  values_.segment(s.offset, s.size()) = value.reshaped();
}

void ParamVector::set(const std::string& name, const Mat& value) {
  layout_.segment(name);
  set(layout_.index_of(name), value);
}

std::vector<Mat> ParamVector::unpack() const {
  std::vector<Mat> out;
  out.reserve(layout_.segments().size());
  for (std::size_t i = 0; i < layout_.segments().size(); ++i) out.push_back(get(static_cast<int>(i)));
  return out;
}

ParamVector ParamVector::pack(ParamLayout layout, const std::vector<Mat>& blocks) {
  if (blocks.size() != layout.segments().size()) throw ValidationError("pack: block count does not match layout");
  ParamVector p(std::move(layout));
  for (std::size_t i = 0; i < blocks.size(); ++i) p.set(static_cast<int>(i), blocks[i]);
  return p;
}

TapeBinding::TapeBinding(Tape& tape, const ParamVector& params, bool differentiable)
    : tape_(&tape), layout_(&params.layout()) {
  const auto& segs = params.layout().segments();
  vars_.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    Mat v = params.get(static_cast<int>(i));
    vars_.push_back(differentiable ? tape.parameter(std::move(v)) : tape.constant(std::move(v)));
  }
}

Var TapeBinding::operator[](const std::string& name) const {
  const int i = layout_->index_of(name);
  if (i < 0) throw ValidationError("unknown parameter segment '" + name + "'");
  return vars_[static_cast<std::size_t>(i)];
}

Vec TapeBinding::gather_grad() const {
  Vec g(layout_->total());
  const auto& segs = layout_->segments();
  for (std::size_t i = 0; i < segs.size(); ++i) g.segment(segs[i].offset, segs[i].size()) = tape_->grad(vars_[i]).reshaped();
  return g;
}

}  // namespace hamembed::diffkit
