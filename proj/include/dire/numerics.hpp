#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dire {

// Thrown whenever operand shapes disagree. The message carries both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  Vec(std::initializer_list<double> values) : values_(values) {}
  explicit Vec(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  Vec& operator+=(const Vec& other);
  Vec& operator-=(const Vec& other);
  Vec& operator*=(double k);

  bool operator==(const Vec&) const = default;

 private:
  std::vector<double> values_;
};

Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator*(double k, Vec a);

// Dense row-major matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> values);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  Vec row_vec(std::size_t i) const;

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  // Appends a row of zeros; used by soft insertion to open a blank slot.
  void append_zero_row();

  Mat& operator+=(const Mat& other);
  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

std::string shape_string(const Mat& m);

// M·x
Vec matvec(const Mat& m, const Vec& x);
// Mᵀ·x. Mapping matrices are stored input-dim × output-dim, so every
// projection into multimodal space goes through this.
Vec matvec_transposed(const Mat& m, const Vec& x);
double dot(const Vec& x, const Vec& y);
double dot(std::span<const double> x, std::span<const double> y);
Mat outer(const Vec& z, const Vec& u);
// m += k · z uᵀ
void add_outer(Mat& m, const Vec& z, const Vec& u, double k = 1.0);
// y += k · x
void axpy(double k, const Vec& x, Vec& y);
void axpy(double k, std::span<const double> x, std::span<double> y);
Vec hadamard(const Vec& x, const Vec& y);
double norm(const Vec& x);
double norm(std::span<const double> x);
Vec concat(std::span<const Vec> parts);

Vec softmax(const Vec& s);
// Pull a gradient on softmax outputs back to its inputs given the outputs y.
Vec softmax_backward(const Vec& y, const Vec& dy);
double log_sum_exp(const Vec& s);
double sigmoid(double x);
Vec sigmoid(const Vec& x);

// Index of the maximum; exact ties resolve to the lowest index.
std::size_t argmax_first(const Vec& x);

bool all_finite(const Vec& x);
bool all_finite(const Mat& m);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central finite-difference gradient of f at x0. Throws std::domain_error
// naming the coordinate if f goes non-finite.
Vec central_fd_gradient(const ScalarFunction& f, const Vec& x0, double h);

}  // namespace dire
