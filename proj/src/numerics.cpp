#include "uavtraj/numerics.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <numbers>
#include <string>

namespace uavtraj {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::InvalidDuration: return "InvalidDuration";
    case ErrorKind::InvalidFractions: return "InvalidFractions";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DegenerateNormal: return "DegenerateNormal";
    case ErrorKind::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorKind::NonUniformSpacing: return "NonUniformSpacing";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::WrongChannel: return "WrongChannel";
    case ErrorKind::MethodMismatch: return "MethodMismatch";
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::ZeroData: return "ZeroData";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::StaleTape: return "StaleTape";
    case ErrorKind::NotReady: return "NotReady";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::NoCompleteRecords: return "NoCompleteRecords";
    case ErrorKind::SourceTooShort: return "SourceTooShort";
    case ErrorKind::Io: return "Io";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularFactor: return "SingularFactor";
    case ErrorKind::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap as_eigen(const Matrix& m) { return ConstMap(m.data(), m.rows(), m.cols()); }
MutMap as_eigen(Matrix& m) { return MutMap(m.data(), m.rows(), m.cols()); }

void prepare_out(Matrix& out, std::size_t rows, std::size_t cols, bool accumulate) {
  if (accumulate) {
    if (out.rows() != rows || out.cols() != cols) {
      throw Error(ErrorKind::DimensionMismatch, "gemm accumulator has wrong shape");
    }
  } else if (out.rows() != rows || out.cols() != cols) {
    out = Matrix(rows, cols);
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::DimensionMismatch, "matrix data length does not equal rows*cols");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::DimensionMismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vec3 Matrix::row3(std::size_t r) const {
  const double* p = data_.data() + r * cols_;
  return {p[0], p[1], p[2]};
}

void Matrix::set_row3(std::size_t r, const Vec3& v) {
  double* p = data_.data() + r * cols_;
  p[0] = v[0];
  p[1] = v[1];
  p[2] = v[2];
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix out;
  gemm_nn(a, b, out);
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorKind::DimensionMismatch, "matrix difference");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(ErrorKind::DimensionMismatch, "matrix-vector product");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) acc += a(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  if (a.cols() != b.cols()) throw Error(ErrorKind::DimensionMismatch, "gemm_nt inner dimension");
  prepare_out(out, a.rows(), b.rows(), accumulate);
  if (accumulate) {
    as_eigen(out).noalias() += as_eigen(a) * as_eigen(b).transpose();
  } else {
    as_eigen(out).noalias() = as_eigen(a) * as_eigen(b).transpose();
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  if (a.rows() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "gemm_tn inner dimension");
  prepare_out(out, a.cols(), b.cols(), accumulate);
  if (accumulate) {
    as_eigen(out).noalias() += as_eigen(a).transpose() * as_eigen(b);
  } else {
    as_eigen(out).noalias() = as_eigen(a).transpose() * as_eigen(b);
  }
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  if (a.cols() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "gemm_nn inner dimension");
  prepare_out(out, a.rows(), b.cols(), accumulate);
  if (accumulate) {
    as_eigen(out).noalias() += as_eigen(a) * as_eigen(b);
  } else {
    as_eigen(out).noalias() = as_eigen(a) * as_eigen(b);
  }
}

Matrix cholesky(const Matrix& sigma) {
  const std::size_t n = sigma.rows();
  if (sigma.cols() != n) throw Error(ErrorKind::DimensionMismatch, "cholesky needs a square matrix");
  const double scale = std::max(sigma.max_abs(), 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-9 * scale) {
        throw Error(ErrorKind::InvalidArgument, "cholesky input is not symmetric");
      }

  // Left-looking: column j is finished using the already-computed columns < j.
  Matrix lower(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = sigma(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > 0.0)) {
      throw Error(ErrorKind::NotPositiveDefinite, "pivot " + std::to_string(j) + " is " + std::to_string(pivot));
    }
    const double diag = std::sqrt(pivot);
    lower(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = sigma(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= lower(i, k) * lower(j, k);
      lower(i, j) = acc / diag;
    }
  }
  return lower;
}

namespace {

void check_factor(const Matrix& lower, std::size_t n) {
  if (lower.rows() != lower.cols() || lower.rows() != n) {
    throw Error(ErrorKind::DimensionMismatch, "triangular solve shape");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(lower(i, i)) < 1e-15) {
      throw Error(ErrorKind::SingularFactor, "diagonal entry " + std::to_string(i) + " is ~0");
    }
  }
}

}  // namespace

std::vector<double> solve_lower(const Matrix& lower, std::span<const double> b) {
  const std::size_t n = b.size();
  check_factor(lower, n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b[i];
    for (std::size_t k = 0; k < i; ++k) acc -= lower(i, k) * x[k];
    x[i] = acc / lower(i, i);
  }
  return x;
}

std::vector<double> solve_lower_transposed(const Matrix& lower, std::span<const double> b) {
  const std::size_t n = b.size();
  check_factor(lower, n);
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) acc -= lower(k, ii) * x[k];
    x[ii] = acc / lower(ii, ii);
  }
  return x;
}

Vec3 solve_lower(const Matrix& lower, const Vec3& b) {
  const auto x = solve_lower(lower, std::span<const double>(b.e));
  return {x[0], x[1], x[2]};
}

Vec3 mul3(const Matrix& m, const Vec3& v) {
  if (m.rows() != 3 || m.cols() != 3) throw Error(ErrorKind::DimensionMismatch, "mul3 needs a 3x3 matrix");
  Vec3 out;
  for (std::size_t r = 0; r < 3; ++r) out[r] = m(r, 0) * v[0] + m(r, 1) * v[1] + m(r, 2) * v[2];
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorKind::InvalidRange, "uniform needs lo < hi");
  const double v = lo + (hi - lo) * unit();
  // lo + (hi-lo)*u can round up to hi when the range is tiny.
  return v < hi ? v : lo;
}

double Rng::normal() {
  double u1 = unit();
  while (u1 <= 0.0) u1 = unit();
  const double u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidRange, "below(0)");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (std::uint64_t{0} - bound) % bound;  // 2^64 mod n
  std::uint64_t x = engine_();
  while (x < threshold) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

double uniform_or_fixed(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return rng.uniform(lo, hi);
}

}  // namespace uavtraj
