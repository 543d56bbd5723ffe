#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pinmix/path.hpp"
#include "pinmix/rng.hpp"

namespace pinmix {

// log Z_L(lambda) by transfer over (position, height) with per-column
// rescaling; stable for L in the thousands.
LogWeight partition_function(const ModelParams& params);

// log Z_x(lambda) for every even x in [0, L] (odd entries are -inf); Z_0 = 1.
std::vector<double> log_partition_table(int L, double lambda);

// Exact counts c_k = #{xi in Omega_L : N(xi) = k}, so Z_L(lambda) = sum c_k lambda^k.
// Exact for L <= 64 (Catalan(32) < 2^63).
std::vector<std::uint64_t> contact_polynomial(int L);

using Rational = boost::multiprecision::cpp_rational;

// Z_L(p/q) in exact rational arithmetic (L <= 64).
Rational exact_partition_function(int L, const Rational& lambda);

// mu_L^lambda(xi) = lambda^N(xi) / Z_L(lambda), with 0^0 = 1.
double gibbs_prob(const Path& path, const ModelParams& params);
LogWeight log_gibbs_weight(const Path& path, double lambda);

// Exact sampler for mu_L^lambda. Builds the backward table of conditional
// partition weights once; each draw is O(L). lambda = 0 samples
// mu_{L-2}^1 and lifts it.
class EquilibriumSampler {
 public:
  explicit EquilibriumSampler(const ModelParams& params);

  const ModelParams& params() const noexcept { return params_; }
  Path sample(RngStream& rng) const;
  void sample_into(RngStream& rng, std::vector<int>& heights) const;

 private:
  ModelParams params_;
  bool lifted_ = false;
  int table_L_ = 0;
  double table_lambda_ = 1.0;
  // backward_[x][h]: weight of completions from (x, h) to (table_L_, 0),
  // rescaled per column.
  std::vector<std::vector<double>> backward_;
};

}  // namespace pinmix
