#include "ndharm/grid.hpp"

#include <string>
#include <utility>

#include "ndharm/error.hpp"

namespace ndharm {

PeriodicGrid::PeriodicGrid(std::vector<int> extents, std::vector<double> periods)
    : extents_(std::move(extents)), periods_(std::move(periods)) {
  if (extents_.empty() || extents_.size() > static_cast<std::size_t>(kMaxAxes))
    fail(ErrorCode::invalid_argument, "grid must have between 1 and 4 axes");
  if (extents_.size() != periods_.size())
    fail(ErrorCode::invalid_argument, "grid extents and periods differ in length");
  size_ = 1;
  for (std::size_t a = 0; a < extents_.size(); ++a) {
    if (extents_[a] < 8 || extents_[a] % 2 != 0)
      fail(ErrorCode::invalid_argument,
           "grid extent on axis " + std::to_string(a) + " must be even and >= 8, got " +
               std::to_string(extents_[a]));
    if (!(periods_[a] > 0.0))
      fail(ErrorCode::invalid_argument, "grid period must be positive");
    spacing_.push_back(periods_[a] / extents_[a]);
    size_ *= static_cast<std::size_t>(extents_[a]);
  }

  const int d = axes();
  slots_ = 2 * d + 2 * d * (d - 1);
  neighbors_.resize(size_ * static_cast<std::size_t>(slots_));
  for (std::size_t node = 0; node < size_; ++node) {
    const MultiIndex base = multi_index(node);
    auto fill = [&](int slot, std::array<int, kMaxAxes> step) {
      MultiIndex idx = base;
      Neighbor nb;
      for (int a = 0; a < d; ++a) {
        idx[a] += step[a];
        if (idx[a] >= extents_[a]) {
          idx[a] -= extents_[a];
          nb.wrap[a] = 1;
        } else if (idx[a] < 0) {
          idx[a] += extents_[a];
          nb.wrap[a] = -1;
        }
      }
      nb.index = static_cast<std::uint32_t>(flat_index(idx));
      neighbors_[node * static_cast<std::size_t>(slots_) + static_cast<std::size_t>(slot)] = nb;
    };
    for (int a = 0; a < d; ++a) {
      std::array<int, kMaxAxes> step{};
      step[a] = 1;
      fill(plus_slot(a), step);
      step[a] = -1;
      fill(minus_slot(a), step);
    }
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k)
        for (int sj : {1, -1})
          for (int sk : {1, -1}) {
            std::array<int, kMaxAxes> step{};
            step[j] = sj;
            step[k] = sk;
            fill(corner_slot(j, k, sj, sk), step);
          }
  }
}

double PeriodicGrid::cell_volume() const noexcept {
  double v = 1.0;
  for (double h : spacing_) v *= h;
  return v;
}

MultiIndex PeriodicGrid::multi_index(std::size_t node) const {
  MultiIndex idx{};
  for (int a = axes() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(node % static_cast<std::size_t>(extents_[a]));
    node /= static_cast<std::size_t>(extents_[a]);
  }
  return idx;
}

std::size_t PeriodicGrid::flat_index(const MultiIndex& idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < axes(); ++a) {
    int i = idx[a] % extents_[a];
    if (i < 0) i += extents_[a];
    flat = flat * static_cast<std::size_t>(extents_[a]) + static_cast<std::size_t>(i);
  }
  return flat;
}

double PeriodicGrid::coordinate(std::size_t node, int axis) const {
  return multi_index(node)[axis] * spacing_[axis];
}

int PeriodicGrid::pair_index(int j, int k) const {
  if (j > k) std::swap(j, k);
  const int d = axes();
  // pairs enumerated (0,1), (0,2), ..., (1,2), ...
  return j * d - j * (j + 1) / 2 + (k - j - 1);
}

int PeriodicGrid::corner_slot(int j, int k, int sj, int sk) const {
  if (j > k) {
    std::swap(j, k);
    std::swap(sj, sk);
  }
  const int within = (sj > 0 ? 0 : 2) + (sk > 0 ? 0 : 1);
  return 2 * axes() + 4 * pair_index(j, k) + within;
}

}  // namespace ndharm
