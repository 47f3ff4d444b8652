#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ordfem {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Point3 = Eigen::Vector3d;

// Dense eigen/nullspace routines refuse problems larger than this many rows.
inline constexpr int kDenseCap = 6000;

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IterationLimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DecompositionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Locale-independent float formatting, 17 significant digits.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// Deterministic normal sampler: splitmix64-seeded xorshift-style generator with
// Box-Muller, independent of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = kDefaultSeed) {
    state_ = seed;
    // splitmix64 warmup so nearby seeds decorrelate
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in (0, 1)
  double uniform() {
    double u;
    do {
      u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    } while (u <= 0.0);
    return u;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = two_pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::uint64_t state_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ordfem
