#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ndharm {

inline constexpr int kMaxAxes = 4;

using MultiIndex = std::array<int, kMaxAxes>;

/// A neighbor reached from a node through one stencil slot. `wrap[a]` counts
/// how many times the step crossed the period seam of axis a (-1, 0 or +1);
/// map fields use it to add winding offsets to their continuous lifts.
struct Neighbor {
  std::uint32_t index = 0;
  std::array<std::int8_t, kMaxAxes> wrap{};
};

/// Uniform periodic grid on a box of given periods. Node i along axis a sits
/// at coordinate i * h_a, h_a = period_a / extent_a; node numbering is
/// row-major with axis 0 slowest.
///
/// Stencil slots: axial slots 2a (+e_a) and 2a+1 (-e_a) for each axis, then
/// for each axis pair j < k four corner slots (+,+), (+,-), (-,+), (-,-).
class PeriodicGrid {
 public:
  PeriodicGrid() = default;
  PeriodicGrid(std::vector<int> extents, std::vector<double> periods);

  int axes() const noexcept { return static_cast<int>(extents_.size()); }
  int extent(int axis) const { return extents_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double period(int axis) const { return periods_[axis]; }
  std::span<const int> extents() const noexcept { return extents_; }
  std::span<const double> periods() const noexcept { return periods_; }
  std::size_t size() const noexcept { return size_; }

  /// Product of spacings (volume of one cell).
  double cell_volume() const noexcept;

  MultiIndex multi_index(std::size_t node) const;
  /// Flat index of a multi-index; every component wraps modulo its extent.
  std::size_t flat_index(const MultiIndex& idx) const;
  double coordinate(std::size_t node, int axis) const;

  int slot_count() const noexcept { return slots_; }
  static int plus_slot(int axis) { return 2 * axis; }
  static int minus_slot(int axis) { return 2 * axis + 1; }
  /// Corner slot for axes j != k with signs sj, sk in {+1, -1}.
  int corner_slot(int j, int k, int sj, int sk) const;
  const Neighbor& neighbor(std::size_t node, int slot) const {
    return neighbors_[node * static_cast<std::size_t>(slots_) + static_cast<std::size_t>(slot)];
  }

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) {
    return a.extents_ == b.extents_ && a.periods_ == b.periods_;
  }

 private:
  int pair_index(int j, int k) const;

  std::vector<int> extents_;
  std::vector<double> periods_;
  std::vector<double> spacing_;
  std::size_t size_ = 0;
  int slots_ = 0;
  std::vector<Neighbor> neighbors_;
};

}  // namespace ndharm
