#pragma once

#include <cmath>
#include <iosfwd>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pinmix {

// Height profile (xi_0, ..., xi_L) of a nonnegative nearest-neighbour bridge
// from 0 to 0. Always valid once constructed.
class Path {
 public:
  explicit Path(std::vector<int> heights);

  int length() const noexcept { return static_cast<int>(heights_.size()) - 1; }
  int operator[](int x) const noexcept { return heights_[static_cast<std::size_t>(x)]; }
  std::span<const int> heights() const noexcept { return heights_; }

  // Unchecked construction for callers that already maintain the invariants
  // (corner flips of a valid path, enumeration).
  static Path trusted(std::vector<int> heights) noexcept { return Path(std::move(heights), Unchecked{}); }

  friend bool operator==(const Path&, const Path&) = default;

 private:
  struct Unchecked {};
  Path(std::vector<int> heights, Unchecked) noexcept : heights_(std::move(heights)) {}

  std::vector<int> heights_;
};

// Returns an empty string when valid, otherwise the violated rule.
std::string validate_heights(std::span<const int> heights);

// (L, lambda) with the spectral constant kappa_L = 1 - cos(pi/L).
struct ModelParams {
  int L;
  double lambda;

  ModelParams(int length, double pinning);

  double kappa() const noexcept { return 1.0 - std::cos(std::numbers::pi / L); }
};

void require_valid_length(int L);

// Natural-log weight; zero weight is carried as -inf.
struct LogWeight {
  double value;

  static LogWeight zero() noexcept { return {-INFINITY}; }
  bool is_zero() const noexcept { return std::isinf(value) && value < 0; }
  double weight() const noexcept { return std::exp(value); }
};

int contacts(const Path& path);

Path maximal_path(int L);
Path minimal_path(int L);

// Coordinatewise order; throws std::invalid_argument on length mismatch.
bool leq(const Path& lower, const Path& upper);
bool leq(std::span<const int> lower, std::span<const int> upper);

// Omega_{L-2} -> Omega_L^+ (raise by one, pad with the two wall steps) and back.
Path lift(const Path& path);
Path project(const Path& path);

// Path text format: heights separated by single spaces on one line.
std::string format_path(std::span<const int> heights);
Path parse_path(std::string_view line);
std::vector<Path> read_paths(std::istream& in);

}  // namespace pinmix
