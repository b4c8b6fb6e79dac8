#include "polymerlab/lattice.hpp"

#include <algorithm>
#include <cstdlib>

#include "polymerlab/errors.hpp"

namespace polymerlab {

Dimension::Dimension(int d) : d_(d) {
  if (d < 3 || d > kMaxDim) {
    throw ParameterError("dimension must be 3, 4 or 5 (got " + std::to_string(d) + ")");
  }
}

int l1_norm(const Site& x, int d) {
  int s = 0;
  for (int j = 0; j < d; ++j) s += std::abs(x[j]);
  return s;
}

std::int64_t squared_norm(const Site& x, int d) {
  std::int64_t s = 0;
  for (int j = 0; j < d; ++j) s += static_cast<std::int64_t>(x[j]) * x[j];
  return s;
}

bool reachable(const Site& x, int d, int k) {
  const int n1 = l1_norm(x, d);
  return k >= 0 && n1 <= k && ((n1 - k) & 1) == 0;
}

std::string to_string(const Site& x, int d) {
  std::string s = "(";
  for (int j = 0; j < d; ++j) {
    if (j) s += ",";
    s += std::to_string(x[j]);
  }
  return s + ")";
}

Slab::Slab(int d, int capacity_radius, int padding)
    : d_(d), capacity_(capacity_radius), padding_(padding) {
  if (d < 1 || d > kMaxDim) throw ParameterError("slab dimension out of range");
  if (capacity_radius < 0 || padding < 0) throw ParameterError("negative slab radius or padding");
  side_ = 2 * (capacity_radius + padding) + 1;
  std::ptrdiff_t stride = 1;
  for (int j = d - 1; j >= 0; --j) {
    strides_[j] = stride;
    stride *= side_;
  }
  data_.assign(static_cast<std::size_t>(stride), 0.0);
}

std::size_t Slab::index(const Site& x) const noexcept {
  std::ptrdiff_t idx = 0;
  for (int j = 0; j < d_; ++j) idx += (x[j] + capacity_ + padding_) * strides_[j];
  return static_cast<std::size_t>(idx);
}

bool Slab::in_box(const Site& x) const noexcept {
  for (int j = 0; j < d_; ++j) {
    if (std::abs(x[j]) > capacity_) return false;
  }
  return true;
}

void Slab::clear() { std::fill(data_.begin(), data_.end(), 0.0); }

}  // namespace polymerlab
