#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace agsam {

// One named slice of the flat parameter vector.
struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Immutable segment map shared by every ParamVector of one model. Segments
// must partition [0, size) exactly, in order, with no gaps or overlaps.
class ParamLayout {
 public:
  explicit ParamLayout(std::vector<Segment> segments);

  std::size_t size() const { return total_; }
  std::span<const Segment> segments() const { return segments_; }
  bool operator==(const ParamLayout& other) const;

 private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;

// single unnamed segment of the given length
LayoutPtr flat_layout(std::size_t length);

// Flat view of all model parameters. Value type: copying copies the values,
// the layout is shared. All reductions use the fixed pairwise policy from
// kernels, so results do not depend on thread count or call site.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(LayoutPtr layout, std::vector<double> values);

  static ParamVector zeros(LayoutPtr layout);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const LayoutPtr& layout() const { return layout_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<double> segment(std::size_t index);
  std::span<const double> segment(std::size_t index) const;

  // this += a * x
  ParamVector& axpy(double a, const ParamVector& x);
  ParamVector& operator*=(double a);
  ParamVector& operator+=(const ParamVector& x);
  ParamVector& operator-=(const ParamVector& x);

  double dot(const ParamVector& other) const;
  double norm_sq() const;
  double norm() const;

  // checkpoint format: plain-text layout header, then the raw values as
  // little-endian 64-bit floats
  void save(const std::filesystem::path& path) const;
  static ParamVector load(const std::filesystem::path& path);

 private:
  void check_same_layout(const ParamVector& other, const char* op) const;

  LayoutPtr layout_;
  std::vector<double> values_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(double a, ParamVector x);

}  // namespace agsam
