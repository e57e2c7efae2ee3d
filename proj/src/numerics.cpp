#include "dire/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dire {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    std::ostringstream os;
    os << op << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionError(os.str());
  }
}

}  // namespace

Vec& Vec::operator+=(const Vec& other) {
  require_same_dim(dim(), other.dim(), "Vec::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Vec& Vec::operator-=(const Vec& other) {
  require_same_dim(dim(), other.dim(), "Vec::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Vec& Vec::operator*=(double k) {
  for (auto& v : values_) v *= k;
  return *this;
}

Vec operator+(Vec a, const Vec& b) { return a += b; }
Vec operator-(Vec a, const Vec& b) { return a -= b; }
Vec operator*(double k, Vec a) { return a *= k; }

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    std::ostringstream os;
    os << "Mat: " << values_.size() << " values for shape " << rows_ << "x" << cols_;
    throw DimensionError(os.str());
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Mat: ragged initializer rows");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vec Mat::row_vec(std::size_t i) const {
  auto r = row(i);
  return Vec(std::vector<double>(r.begin(), r.end()));
}

void Mat::append_zero_row() {
  values_.resize(values_.size() + cols_, 0.0);
  ++rows_;
}

Mat& Mat::operator+=(const Mat& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw DimensionError("Mat::operator+=: " + shape_string(*this) + " vs " + shape_string(other));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

std::string shape_string(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Vec matvec(const Mat& m, const Vec& x) {
  if (m.cols() != x.dim()) {
    throw DimensionError("matvec: matrix " + shape_string(m) + " times vector of dim " +
                         std::to_string(x.dim()));
  }
  Vec out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), x.span());
  return out;
}

Vec matvec_transposed(const Mat& m, const Vec& x) {
  if (m.rows() != x.dim()) {
    throw DimensionError("matvec_transposed: matrix " + shape_string(m) +
                         " transposed times vector of dim " + std::to_string(x.dim()));
  }
  Vec out(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += r[j] * xi;
  }
  return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
  require_same_dim(x.size(), y.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double dot(const Vec& x, const Vec& y) { return dot(x.span(), y.span()); }

Mat outer(const Vec& z, const Vec& u) {
  Mat m(z.dim(), u.dim());
  add_outer(m, z, u);
  return m;
}

void add_outer(Mat& m, const Vec& z, const Vec& u, double k) {
  if (m.rows() != z.dim() || m.cols() != u.dim()) {
    throw DimensionError("add_outer: target " + shape_string(m) + " vs outer " +
                         std::to_string(z.dim()) + "x" + std::to_string(u.dim()));
  }
  for (std::size_t i = 0; i < z.dim(); ++i) {
    const double zi = k * z[i];
    if (zi == 0.0) continue;
    auto r = m.row(i);
    for (std::size_t j = 0; j < u.dim(); ++j) r[j] += zi * u[j];
  }
}

void axpy(double k, std::span<const double> x, std::span<double> y) {
  require_same_dim(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += k * x[i];
}

void axpy(double k, const Vec& x, Vec& y) { axpy(k, x.span(), y.span()); }

Vec hadamard(const Vec& x, const Vec& y) {
  require_same_dim(x.dim(), y.dim(), "hadamard");
  Vec out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = x[i] * y[i];
  return out;
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }
double norm(const Vec& x) { return norm(x.span()); }

Vec concat(std::span<const Vec> parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return Vec(std::move(out));
}

Vec softmax(const Vec& s) {
  if (s.empty()) throw std::invalid_argument("softmax: empty input");
  const double mx = *std::max_element(s.begin(), s.end());
  Vec out(s.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    out[i] = std::exp(s[i] - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

Vec softmax_backward(const Vec& y, const Vec& dy) {
  const double inner = dot(y, dy);
  Vec out(y.dim());
  for (std::size_t i = 0; i < y.dim(); ++i) out[i] = y[i] * (dy[i] - inner);
  return out;
}

double log_sum_exp(const Vec& s) {
  if (s.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double mx = *std::max_element(s.begin(), s.end());
  double total = 0.0;
  for (double v : s) total += std::exp(v - mx);
  return mx + std::log(total);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec sigmoid(const Vec& x) {
  Vec out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

std::size_t argmax_first(const Vec& x) {
  if (x.empty()) throw std::invalid_argument("argmax_first: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.dim(); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

bool all_finite(const Vec& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(const Mat& m) {
  auto f = m.flat();
  return std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); });
}

Vec central_fd_gradient(const ScalarFunction& f, const Vec& x0, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("central_fd_gradient: step must be positive");
  std::vector<double> x(x0.begin(), x0.end());
  Vec grad(x0.dim());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = x[j];
    x[j] = saved + h;
    const double up = f(x);
    x[j] = saved - h;
    const double down = f(x);
    x[j] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("central_fd_gradient: non-finite evaluation at coordinate " +
                              std::to_string(j));
    }
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace dire
