#pragma once

#include <cstddef>
#include <vector>

namespace agsam {

// Paired features/labels, row-major. B^t and B^v in the optimizer APIs are
// both plain Batches.
struct Batch {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> features;  // rows x dim
  std::vector<int> labels;       // rows
};

}  // namespace agsam
