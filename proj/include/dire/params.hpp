#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "dire/numerics.hpp"

namespace dire {

struct ParamBlock {
  std::string name;
  Mat value;
};

// Ordered collection of named parameter matrices. Scalars are stored as 1x1
// blocks. Gradients use the same type with identical names and shapes.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet& other);
  ParamSet(ParamSet&& other) noexcept;
  ParamSet& operator=(const ParamSet& other);
  ParamSet& operator=(ParamSet&& other) noexcept;

  void add(std::string name, Mat value);

  bool contains(const std::string& name) const;
  const Mat& get(const std::string& name) const;
  Mat& get(const std::string& name);
  double scalar(const std::string& name) const;

  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  std::vector<ParamBlock>& blocks() {
    invalidate();
    return blocks_;
  }
  std::size_t total_size() const;

  // Same names and shapes, all zeros.
  ParamSet zeros_like() const;
  bool same_layout(const ParamSet& other) const;

  Vec flatten() const;
  void assign_flat(std::span<const double> values);

  // p += k·other
  void add_scaled(const ParamSet& other, double k);

  // Hash of names, shapes and values; used to detect stale traces. Cached
  // until the next non-const access, so writes through a reference obtained
  // before the last fingerprint() call go unnoticed.
  std::uint64_t fingerprint() const;

  bool operator==(const ParamSet&) const;

 private:
  const ParamBlock* find(const std::string& name) const;
  void invalidate() { cached_fingerprint_.store(0, std::memory_order_relaxed); }

  std::vector<ParamBlock> blocks_;
  // 0 means not computed; safe to fill from concurrent const callers.
  mutable std::atomic<std::uint64_t> cached_fingerprint_{0};
};

// Makes g an all-zero set with p's layout, reusing g's storage when the layout
// already matches.
void reset_gradient(const ParamSet& p, ParamSet& g);

}  // namespace dire
