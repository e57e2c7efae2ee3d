#include "dire/params.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace dire {

ParamSet::ParamSet(const ParamSet& other)
    : blocks_(other.blocks_), cached_fingerprint_(other.cached_fingerprint_.load()) {}

ParamSet::ParamSet(ParamSet&& other) noexcept
    : blocks_(std::move(other.blocks_)), cached_fingerprint_(other.cached_fingerprint_.load()) {
  other.invalidate();
}

ParamSet& ParamSet::operator=(const ParamSet& other) {
  blocks_ = other.blocks_;
  cached_fingerprint_.store(other.cached_fingerprint_.load());
  return *this;
}

ParamSet& ParamSet::operator=(ParamSet&& other) noexcept {
  blocks_ = std::move(other.blocks_);
  cached_fingerprint_.store(other.cached_fingerprint_.load());
  other.invalidate();
  return *this;
}

void ParamSet::add(std::string name, Mat value) {
  invalidate();
  if (contains(name)) throw std::invalid_argument("ParamSet: duplicate block " + name);
  blocks_.push_back({std::move(name), std::move(value)});
}

const ParamBlock* ParamSet::find(const std::string& name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

bool ParamSet::contains(const std::string& name) const { return find(name) != nullptr; }

const Mat& ParamSet::get(const std::string& name) const {
  const ParamBlock* b = find(name);
  if (!b) throw std::out_of_range("ParamSet: no block named " + name);
  return b->value;
}

Mat& ParamSet::get(const std::string& name) {
  invalidate();
  return const_cast<Mat&>(static_cast<const ParamSet&>(*this).get(name));
}

double ParamSet::scalar(const std::string& name) const { return get(name)(0, 0); }

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.value.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& b : blocks_) out.add(b.name, Mat(b.value.rows(), b.value.cols()));
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& a = blocks_[i];
    const auto& b = other.blocks_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) {
      return false;
    }
  }
  return true;
}

Vec ParamSet::flatten() const {
  std::vector<double> out;
  out.reserve(total_size());
  for (const auto& b : blocks_) out.insert(out.end(), b.value.flat().begin(), b.value.flat().end());
  return Vec(std::move(out));
}

void ParamSet::assign_flat(std::span<const double> values) {
  if (values.size() != total_size()) {
    throw DimensionError("ParamSet::assign_flat: " + std::to_string(values.size()) +
                         " values for " + std::to_string(total_size()) + " parameters");
  }
  invalidate();
  std::size_t offset = 0;
  for (auto& b : blocks_) {
    auto dst = b.value.flat();
    std::copy(values.begin() + offset, values.begin() + offset + dst.size(), dst.begin());
    offset += dst.size();
  }
}

void ParamSet::add_scaled(const ParamSet& other, double k) {
  if (!same_layout(other)) throw DimensionError("ParamSet::add_scaled: layout mismatch");
  invalidate();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    axpy(k, other.blocks_[i].value.flat(), blocks_[i].value.flat());
  }
}

std::uint64_t ParamSet::fingerprint() const {
  if (const std::uint64_t cached = cached_fingerprint_.load(std::memory_order_relaxed)) {
    return cached;
  }
  // FNV-1a over names and shapes; values are folded in 8 bytes at a time.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_word = [&h](std::uint64_t w) {
    h ^= w;
    h *= 1099511628211ULL;
    h ^= h >> 29;
  };
  for (const auto& b : blocks_) {
    for (unsigned char c : b.name) mix_word(c);
    mix_word(b.value.rows());
    mix_word(b.value.cols());
    for (double x : b.value.flat()) {
      std::uint64_t w;
      std::memcpy(&w, &x, sizeof w);
      mix_word(w);
    }
  }
  if (h == 0) h = 1;
  cached_fingerprint_.store(h, std::memory_order_relaxed);
  return h;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (!same_layout(other)) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto a = blocks_[i].value.flat();
    const auto b = other.blocks_[i].value.flat();
    if (std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

void reset_gradient(const ParamSet& p, ParamSet& g) {
  if (!g.same_layout(p)) {
    g = p.zeros_like();
    return;
  }
  for (auto& b : g.blocks()) std::fill(b.value.flat().begin(), b.value.flat().end(), 0.0);
}

}  // namespace dire
