//===- reduction.hpp - Group reduction macro instructions ------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_REDUCTION_HPP
#define SGAP_REDUCTION_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgap/sparse.hpp"

namespace sgap {

class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One lane's contribution to a group reduction.
struct ReductionLane {
  bool active = true;
  Index idx = 0;
  double val = 0;
};

namespace detail {

inline void check_group(std::span<const ReductionLane> group) {
  const auto g = group.size();
  if (g != 2 && g != 4 && g != 8 && g != 16 && g != 32)
    throw SimulationFault("group size " + std::to_string(g) + " is outside {2,4,8,16,32}");
}

}  // namespace detail

/// Sums the active lanes of a group that all target one index and hands the
/// total to `writeback(idx, total)` once, as the lowest active lane would.
/// Returns the number of writebacks (0 or 1).
template <typename Writeback>
std::size_t exec_atomic_add_group(std::span<const ReductionLane> group, Writeback&& writeback) {
  detail::check_group(group);
  const ReductionLane* first = nullptr;
  double total = 0;
  for (std::size_t l = 0; l < group.size(); ++l) {
    const auto& lane = group[l];
    if (!lane.active) continue;
    if (!first) first = &lane;
    else if (lane.idx != first->idx)
      throw SimulationFault("parallel reduction requires single writeback index (lane " + std::to_string(l) +
                            " writes " + std::to_string(lane.idx) + ", lane 0 of the group writes " +
                            std::to_string(first->idx) + ")");
    total += lane.val;
  }
  if (!first) return 0;
  writeback(first->idx, total);
  return 1;
}

/// Segmented sum over runs of equal indices among the active lanes; the
/// last lane of each run writes its run total. Returns the writeback count.
template <typename Writeback>
std::size_t exec_seg_reduce_group(std::span<const ReductionLane> group, Writeback&& writeback) {
  detail::check_group(group);
  std::size_t writes = 0;
  const ReductionLane* run = nullptr;
  double total = 0;
  for (std::size_t l = 0; l < group.size(); ++l) {
    const auto& lane = group[l];
    if (!lane.active) continue;
    if (run && lane.idx < run->idx)
      throw SimulationFault("segment reduction requires non-decreasing indices (lane " + std::to_string(l) +
                            " writes " + std::to_string(lane.idx) + " after " + std::to_string(run->idx) + ")");
    if (run && lane.idx != run->idx) {
      writeback(run->idx, total);
      ++writes;
      total = 0;
    }
    run = &lane;
    total += lane.val;
  }
  if (run) {
    writeback(run->idx, total);
    ++writes;
  }
  return writes;
}

namespace detail {

inline auto add_into(std::vector<double>& c) {
  return [&c](Index idx, double v) {
    if (idx < 0 || idx >= static_cast<Index>(c.size()))
      throw SimulationFault("group writeback index " + std::to_string(idx) + " is out of bounds");
    c[static_cast<std::size_t>(idx)] += v;
  };
}

}  // namespace detail

inline std::size_t exec_atomic_add_group(std::span<const ReductionLane> group, std::vector<double>& c) {
  return exec_atomic_add_group(group, detail::add_into(c));
}

inline std::size_t exec_seg_reduce_group(std::span<const ReductionLane> group, std::vector<double>& c) {
  return exec_seg_reduce_group(group, detail::add_into(c));
}

}  // namespace sgap

#endif  // SGAP_REDUCTION_HPP
