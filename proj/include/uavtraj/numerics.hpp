#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "uavtraj/error.hpp"

namespace uavtraj {

/// Plain 3-vector for positions (m) and velocities (m/s).
struct Vec3 {
  std::array<double, 3> e{};

  constexpr Vec3() = default;
  constexpr Vec3(double x, double y, double z) : e{x, y, z} {}

  constexpr double& operator[](std::size_t i) { return e[i]; }
  constexpr double operator[](std::size_t i) const { return e[i]; }
  constexpr double x() const { return e[0]; }
  constexpr double y() const { return e[1]; }
  constexpr double z() const { return e[2]; }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

inline constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }
inline constexpr Vec3 operator/(const Vec3& a, double s) { return {a[0] / s, a[1] / s, a[2] / s}; }
inline constexpr double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// 64-byte aligned allocator for matrix storage.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

/// Dense row-major matrix of doubles. Vectors are n×1 matrices or plain
/// std::vector<double>, whichever reads better at the call site.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);
  Matrix(const Matrix&) = default;
  Matrix& operator=(const Matrix&) = default;
  // A moved-from matrix is left empty (0×0), never with stale dimensions.
  Matrix(Matrix&& o) noexcept
      : rows_(std::exchange(o.rows_, 0)), cols_(std::exchange(o.cols_, 0)), data_(std::move(o.data_)) {
    o.data_.clear();
  }
  Matrix& operator=(Matrix&& o) noexcept {
    if (this != &o) {
      rows_ = std::exchange(o.rows_, 0);
      cols_ = std::exchange(o.cols_, 0);
      data_ = std::move(o.data_);
      o.data_.clear();
    }
    return *this;
  }

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Vec3 row3(std::size_t r) const;
  void set_row3(std::size_t r, const Vec3& v);

  Matrix transposed() const;
  void fill(double v);
  bool all_finite() const;
  double max_abs() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double, AlignedAllocator<double>> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);

// GEMM kernels used by the recurrent layers. `accumulate` adds into out
// instead of overwriting it; out must already have the right shape when
// accumulating.
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);  // a · bᵀ
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);  // aᵀ · b
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);  // a · b

/// Lower Cholesky factor of a symmetric positive-definite matrix
/// (left-looking, no pivoting). Throws NotPositiveDefinite on a
/// non-positive pivot.
Matrix cholesky(const Matrix& sigma);

/// Forward substitution: solves L·x = b.
std::vector<double> solve_lower(const Matrix& lower, std::span<const double> b);
/// Back substitution against the transpose: solves Lᵀ·x = b.
std::vector<double> solve_lower_transposed(const Matrix& lower, std::span<const double> b);

Vec3 solve_lower(const Matrix& lower, const Vec3& b);
Vec3 mul3(const Matrix& m, const Vec3& v);

/// splitmix64 finalizer applied to (seed, stream); used to derive
/// independent child seeds (per trajectory, per init, per shuffle...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Seeded generator. Backed by std::mt19937_64, whose output sequence is
/// fixed by the standard; the conversions to doubles are done here rather
/// than through <random> distributions, which are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in [lo, hi). Throws InvalidRange unless lo < hi.
  double uniform(double lo, double hi);
  /// Standard normal via Box–Muller (no cached second value).
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Uniform draw that tolerates a collapsed range (lo == hi returns lo).
double uniform_or_fixed(Rng& rng, double lo, double hi);

}  // namespace uavtraj
