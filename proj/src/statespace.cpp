#include "pinmix/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pinmix {

std::vector<double> log_partition_table(int L, double lambda) {
  require_valid_length(L);
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  const auto n = static_cast<std::size_t>(L) + 2;
  std::vector<double> out(static_cast<std::size_t>(L) + 1, -INFINITY);
  out[0] = 0.0;
  // v[h]: weight of nonnegative paths from (0,0) to (x,h), lambda applied at
  // every zero strictly inside (0, x).
  std::vector<double> v(n, 0.0), next(n, 0.0);
  v[0] = 1.0;
  double log_scale = 0.0;
  for (int x = 1; x <= L; ++x) {
    const int hmax = std::min(x, L - x + 1);
    std::fill(next.begin(), next.end(), 0.0);
    double peak = 0.0;
    for (int h = 0; h <= hmax; ++h) {
      double w = 0.0;
      if (h > 0) w += v[static_cast<std::size_t>(h - 1)];
      w += v[static_cast<std::size_t>(h + 1)];
      next[static_cast<std::size_t>(h)] = w;
    }
    if (x % 2 == 0) {
      out[static_cast<std::size_t>(x)] = next[0] > 0.0 ? log_scale + std::log(next[0]) : -INFINITY;
      if (x < L) next[0] *= lambda;
    }
    for (int h = 0; h <= hmax; ++h) peak = std::max(peak, next[static_cast<std::size_t>(h)]);
    if (peak > 0.0) {
      for (int h = 0; h <= hmax; ++h) next[static_cast<std::size_t>(h)] /= peak;
      log_scale += std::log(peak);
    }
    std::swap(v, next);
  }
  return out;
}

LogWeight partition_function(const ModelParams& params) {
  return {log_partition_table(params.L, params.lambda)[static_cast<std::size_t>(params.L)]};
}

std::vector<std::uint64_t> contact_polynomial(int L) {
  require_valid_length(L);
  if (L > 64) throw std::invalid_argument("contact_polynomial: L must be <= 64");
  const int kmax = L / 2;
  const int hmax = L / 2 + 1;
  using Table = std::vector<std::vector<std::uint64_t>>;
  Table cur(static_cast<std::size_t>(hmax) + 2, std::vector<std::uint64_t>(static_cast<std::size_t>(kmax) + 1, 0));
  Table nxt = cur;
  cur[0][0] = 1;
  for (int x = 1; x <= L; ++x) {
    for (auto& row : nxt) std::fill(row.begin(), row.end(), 0);
    for (int h = 0; h <= hmax; ++h) {
      for (int k = 0; k <= kmax; ++k) {
        std::uint64_t w = cur[static_cast<std::size_t>(h + 1)][static_cast<std::size_t>(k)];
        if (h > 0) w += cur[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(k)];
        if (w == 0) continue;
        const int k2 = (h == 0 && x < L) ? k + 1 : k;
        nxt[static_cast<std::size_t>(h)][static_cast<std::size_t>(k2)] += w;
      }
    }
    std::swap(cur, nxt);
  }
  std::vector<std::uint64_t> coeffs = cur[0];
  while (coeffs.size() > 1 && coeffs.back() == 0) coeffs.pop_back();
  return coeffs;
}

Rational exact_partition_function(int L, const Rational& lambda) {
  const auto coeffs = contact_polynomial(L);
  Rational z = 0;
  Rational power = 1;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    z += Rational(coeffs[k]) * power;
    power *= lambda;
  }
  return z;
}

LogWeight log_gibbs_weight(const Path& path, double lambda) {
  const int n = contacts(path);
  if (n == 0) return {0.0};
  if (lambda == 0.0) return LogWeight::zero();
  return {n * std::log(lambda)};
}

double gibbs_prob(const Path& path, const ModelParams& params) {
  if (path.length() != params.L) throw std::invalid_argument("gibbs_prob: path length differs from L");
  const LogWeight w = log_gibbs_weight(path, params.lambda);
  if (w.is_zero()) return 0.0;
  return std::exp(w.value - partition_function(params).value);
}

EquilibriumSampler::EquilibriumSampler(const ModelParams& params) : params_(params) {
  table_L_ = params.L;
  table_lambda_ = params.lambda;
  if (params.lambda == 0.0 && params.L >= 4) {
    lifted_ = true;
    table_L_ = params.L - 2;
    table_lambda_ = 1.0;
  }
  const int L = table_L_;
  backward_.resize(static_cast<std::size_t>(L) + 1);
  for (int x = L; x >= 0; --x) {
    const int hmax = std::min(x, L - x);
    auto& col = backward_[static_cast<std::size_t>(x)];
    col.assign(static_cast<std::size_t>(hmax) + 1, 0.0);
    if (x == L) {
      col[0] = 1.0;
      continue;
    }
    const auto& right = backward_[static_cast<std::size_t>(x) + 1];
    const int rmax = static_cast<int>(right.size()) - 1;
    double peak = 0.0;
    for (int h = (x % 2); h <= hmax; h += 2) {
      double w = 0.0;
      if (h + 1 <= rmax) w += right[static_cast<std::size_t>(h + 1)];
      if (h >= 1 && h - 1 <= rmax) {
        const double wall = (h - 1 == 0 && x + 1 < L) ? table_lambda_ : 1.0;
        w += wall * right[static_cast<std::size_t>(h - 1)];
      }
      col[static_cast<std::size_t>(h)] = w;
      peak = std::max(peak, w);
    }
    if (peak > 0.0) {
      for (double& w : col) w /= peak;
    }
  }
}

void EquilibriumSampler::sample_into(RngStream& rng, std::vector<int>& heights) const {
  const int L = table_L_;
  heights.assign(static_cast<std::size_t>(L) + 1, 0);
  int h = 0;
  for (int x = 0; x < L; ++x) {
    const auto& right = backward_[static_cast<std::size_t>(x) + 1];
    const int rmax = static_cast<int>(right.size()) - 1;
    const double up = (h + 1 <= rmax) ? right[static_cast<std::size_t>(h + 1)] : 0.0;
    double down = 0.0;
    if (h >= 1 && h - 1 <= rmax) {
      const double wall = (h - 1 == 0 && x + 1 < L) ? table_lambda_ : 1.0;
      down = wall * right[static_cast<std::size_t>(h - 1)];
    }
    h += (rng.uniform() * (up + down) < up) ? 1 : -1;
    heights[static_cast<std::size_t>(x) + 1] = h;
  }
  if (lifted_) {
    std::vector<int> lifted(static_cast<std::size_t>(params_.L) + 1, 0);
    for (int x = 1; x < params_.L; ++x) lifted[static_cast<std::size_t>(x)] = heights[static_cast<std::size_t>(x) - 1] + 1;
    heights = std::move(lifted);
  }
}

Path EquilibriumSampler::sample(RngStream& rng) const {
  std::vector<int> h;
  sample_into(rng, h);
  return Path::trusted(std::move(h));
}

}  // namespace pinmix
