#include "agsam/param_vector.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "agsam/kernels.hpp"

namespace agsam {

ParamLayout::ParamLayout(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
  std::size_t expected = 0;
  for (const Segment& s : segments_) {
    if (s.offset != expected)
      throw std::invalid_argument("ParamLayout: segment '" + s.name +
                                  "' starts at " + std::to_string(s.offset) +
                                  ", expected " + std::to_string(expected));
    if (s.length == 0)
      throw std::invalid_argument("ParamLayout: segment '" + s.name +
                                  "' is empty");
    expected += s.length;
  }
  total_ = expected;
}

bool ParamLayout::operator==(const ParamLayout& other) const {
  if (total_ != other.total_ || segments_.size() != other.segments_.size())
    return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& a = segments_[i];
    const Segment& b = other.segments_[i];
    if (a.name != b.name || a.offset != b.offset || a.length != b.length)
      return false;
  }
  return true;
}

LayoutPtr flat_layout(std::size_t length) {
  return std::make_shared<const ParamLayout>(
      std::vector<Segment>{{"theta", 0, length}});
}

ParamVector::ParamVector(LayoutPtr layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (!layout_) throw std::invalid_argument("ParamVector: null layout");
  if (layout_->size() != values_.size())
    throw std::invalid_argument(
        "ParamVector: layout size " + std::to_string(layout_->size()) +
        " != value count " + std::to_string(values_.size()));
}

ParamVector ParamVector::zeros(LayoutPtr layout) {
  std::vector<double> v(layout->size(), 0.0);
  return ParamVector(std::move(layout), std::move(v));
}

std::span<double> ParamVector::segment(std::size_t index) {
  const Segment& s = layout_->segments()[index];
  return {values_.data() + s.offset, s.length};
}

std::span<const double> ParamVector::segment(std::size_t index) const {
  const Segment& s = layout_->segments()[index];
  return {values_.data() + s.offset, s.length};
}

void ParamVector::check_same_layout(const ParamVector& other,
                                    const char* op) const {
  if (layout_ == other.layout_) return;
  if (layout_ && other.layout_ && *layout_ == *other.layout_) return;
  throw std::invalid_argument(std::string(op) +
                              ": parameter vectors have different layouts");
}

ParamVector& ParamVector::axpy(double a, const ParamVector& x) {
  check_same_layout(x, "axpy");
  kernels::axpy(a, x.values_.data(), values_.data(), values_.size());
  return *this;
}

ParamVector& ParamVector::operator*=(double a) {
  kernels::scale(values_.data(), a, values_.data(), values_.size());
  return *this;
}

ParamVector& ParamVector::operator+=(const ParamVector& x) {
  return axpy(1.0, x);
}

ParamVector& ParamVector::operator-=(const ParamVector& x) {
  return axpy(-1.0, x);
}

double ParamVector::dot(const ParamVector& other) const {
  check_same_layout(other, "dot");
  return kernels::dot(values_, other.values_);
}

double ParamVector::norm_sq() const { return kernels::norm_sq(values_); }

double ParamVector::norm() const { return kernels::norm(values_); }

ParamVector operator+(ParamVector a, const ParamVector& b) {
  a += b;
  return a;
}

ParamVector operator-(ParamVector a, const ParamVector& b) {
  a -= b;
  return a;
}

ParamVector operator*(double a, ParamVector x) {
  x *= a;
  return x;
}

// ------------------------------------------------------------ storage ----

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void ParamVector::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("ParamVector::save: cannot open " +
                             path.string());
  out << "agsam-paramvector v1\n";
  out << "segments " << layout_->segments().size() << "\n";
  for (const Segment& s : layout_->segments())
    out << s.name << " " << s.offset << " " << s.length << "\n";
  out << "data " << values_.size() << "\n";
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(values_.size() * sizeof(double)));
  if (!out)
    throw std::runtime_error("ParamVector::save: write failed for " +
                             path.string());
}

ParamVector ParamVector::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("ParamVector::load: cannot open " +
                             path.string());
  std::string line;
  if (!std::getline(in, line) || line != "agsam-paramvector v1")
    throw std::runtime_error("ParamVector::load: bad magic in " +
                             path.string());
  std::string word;
  std::size_t n_segments = 0;
  if (!(in >> word >> n_segments) || word != "segments")
    throw std::runtime_error("ParamVector::load: missing segment count");
  std::vector<Segment> segments(n_segments);
  for (Segment& s : segments)
    if (!(in >> s.name >> s.offset >> s.length))
      throw std::runtime_error("ParamVector::load: truncated segment table");
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "data")
    throw std::runtime_error("ParamVector::load: missing data header");
  in.get();  // newline before the binary block
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in)
    throw std::runtime_error("ParamVector::load: truncated data in " +
                             path.string());
  return ParamVector(std::make_shared<const ParamLayout>(std::move(segments)),
                     std::move(values));
}

}  // namespace agsam
