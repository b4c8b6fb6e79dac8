#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polymerlab {

inline constexpr int kMaxDim = 5;

/// Lattice dimension. Only transient dimensions 3, 4 and 5 are supported.
class Dimension {
 public:
  explicit Dimension(int d);
  constexpr int value() const noexcept { return d_; }
  friend constexpr bool operator==(Dimension, Dimension) = default;

 private:
  int d_;
};

/// Point of Z^d; coordinates past the dimension are kept at zero.
using Site = std::array<int, kMaxDim>;

int l1_norm(const Site& x, int d);
std::int64_t squared_norm(const Site& x, int d);

/// True when the simple random walk started at 0 can sit at x at time k.
bool reachable(const Site& x, int d, int k);

std::string to_string(const Site& x, int d);

/// Dense array over the centered box [-R, R]^d with `padding` zero cells on
/// every face, so stencil reads of that range never need bounds checks.
class Slab {
 public:
  Slab(int d, int capacity_radius, int padding = 1);

  int dim() const noexcept { return d_; }
  int capacity() const noexcept { return capacity_; }
  int side() const noexcept { return side_; }
  int padding() const noexcept { return padding_; }
  std::size_t size() const noexcept { return data_.size(); }

  /// Stride of coordinate j in the flat array; the last coordinate is contiguous.
  std::ptrdiff_t stride(int j) const noexcept { return strides_[j]; }
  std::size_t index(const Site& x) const noexcept;
  bool in_box(const Site& x) const noexcept;

  double operator()(const Site& x) const { return data_[index(x)]; }
  double& operator()(const Site& x) { return data_[index(x)]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  void clear();

  /// Visits every maximal run of same-parity cells along the last coordinate
  /// inside [-radius, radius]^d whose coordinate sum has the given parity.
  /// `f(first_site, first_index, count)`; consecutive cells are 2 apart.
  template <class F>
  void for_each_row(int radius, int parity, F&& f) const;

  /// Visits every cell of [-radius, radius]^d: `f(site, index)`.
  template <class F>
  void for_each_site(int radius, F&& f) const;

 private:
  int d_;
  int capacity_;
  int padding_;
  int side_;
  std::array<std::ptrdiff_t, kMaxDim> strides_{};
  std::vector<double> data_;
};

template <class F>
void Slab::for_each_row(int radius, int parity, F&& f) const {
  const int last = d_ - 1;
  Site x{};
  for (int j = 0; j < last; ++j) x[j] = -radius;
  while (true) {
    int sum = 0;
    for (int j = 0; j < last; ++j) sum += x[j];
    Site start = x;
    start[last] = -radius;
    if (((sum - radius) & 1) != (parity & 1)) start[last] += 1;
    if (start[last] <= radius) {
      const int count = (radius - start[last]) / 2 + 1;
      f(start, index(start), count);
    }
    int j = last - 1;
    while (j >= 0 && x[j] == radius) {
      x[j] = -radius;
      --j;
    }
    if (j < 0) break;
    ++x[j];
  }
}

template <class F>
void Slab::for_each_site(int radius, F&& f) const {
  Site x{};
  for (int j = 0; j < d_; ++j) x[j] = -radius;
  while (true) {
    f(x, index(x));
    int j = d_ - 1;
    while (j >= 0 && x[j] == radius) {
      x[j] = -radius;
      --j;
    }
    if (j < 0) break;
    ++x[j];
  }
}

}  // namespace polymerlab
