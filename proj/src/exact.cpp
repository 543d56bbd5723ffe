#include "pinmix/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace pinmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void dfs(int L, int x, std::vector<int>& h, std::vector<Path>& out) {
  if (x == L) {
    out.push_back(Path::trusted(h));
    return;
  }
  const int cur = h[static_cast<std::size_t>(x)];
  const int remaining = L - x - 1;
  if (cur + 1 <= remaining) {
    h[static_cast<std::size_t>(x) + 1] = cur + 1;
    dfs(L, x + 1, h, out);
  }
  if (cur - 1 >= 0) {
    h[static_cast<std::size_t>(x) + 1] = cur - 1;
    dfs(L, x + 1, h, out);
  }
}

}  // namespace

std::uint64_t catalan(int n) {
  if (n < 0 || n > 33) throw std::out_of_range("catalan: n out of range");
  std::uint64_t c = 1;
  for (int k = 0; k < n; ++k) c = c * 2 * (2 * static_cast<std::uint64_t>(k) + 1) / (static_cast<std::uint64_t>(k) + 2);
  return c;
}

double StateSpaceIndex::memory_estimate(int L) {
  const int n = L / 2;
  const double states = std::exp(std::lgamma(2.0 * n + 1) - std::lgamma(n + 2.0) - std::lgamma(n + 1.0));
  // path storage, code, mu/diag/work vectors, and both CSR copies with
  // plaquette tags for up to L/2 corners per state
  const double per_state = 4.0 * (L + 1) + 32.0 + 8.0 + 5 * 8.0 + (L / 2.0) * (2 * (4 + 8) + 8);
  return states * per_state;
}

StateSpaceIndex StateSpaceIndex::enumerate(int L, int cap) {
  require_valid_length(L);
  if (cap > 62) cap = 62;
  if (L > cap) {
    const double bytes = memory_estimate(L);
    std::ostringstream msg;
    msg.precision(3);
    msg << "L=" << L << " exceeds the enumeration cap " << cap << " (about " << bytes / (1024.0 * 1024.0 * 1024.0)
        << " GiB needed)";
    throw CapExceeded(msg.str(), bytes);
  }
  StateSpaceIndex idx;
  idx.L_ = L;
  std::vector<int> h(static_cast<std::size_t>(L) + 1, 0);
  idx.states_.reserve(static_cast<std::size_t>(catalan(L / 2)));
  dfs(L, 0, h, idx.states_);
  idx.codes_.reserve(idx.states_.size());
  for (const auto& p : idx.states_) idx.codes_.push_back(encode(p.heights()));
  if (idx.states_.size() != catalan(L / 2)) throw std::logic_error("enumeration size differs from Catalan(L/2)");
  if (!std::is_sorted(idx.codes_.begin(), idx.codes_.end()) ||
      std::adjacent_find(idx.codes_.begin(), idx.codes_.end()) != idx.codes_.end())
    throw std::logic_error("enumeration is not in strictly increasing canonical order");
  return idx;
}

std::uint64_t StateSpaceIndex::encode(std::span<const int> heights) noexcept {
  std::uint64_t c = 0;
  for (std::size_t x = 1; x < heights.size(); ++x) c = c << 1 | (heights[x] < heights[x - 1] ? 1u : 0u);
  return c;
}

std::optional<std::size_t> StateSpaceIndex::find(std::span<const int> heights) const {
  if (static_cast<int>(heights.size()) != L_ + 1) return std::nullopt;
  const std::uint64_t c = encode(heights);
  const auto it = std::lower_bound(codes_.begin(), codes_.end(), c);
  if (it == codes_.end() || *it != c) return std::nullopt;
  const auto i = static_cast<std::size_t>(it - codes_.begin());
  if (!std::equal(heights.begin(), heights.end(), states_[i].heights().begin())) return std::nullopt;
  return i;
}

std::size_t StateSpaceIndex::index_of(const Path& p) const {
  const auto i = find(p.heights());
  if (!i) throw std::invalid_argument("path is not in the enumerated state space: " + format_path(p.heights()));
  return *i;
}

std::vector<double> equilibrium_vector(const StateSpaceIndex& index, double lambda) {
  std::vector<double> mu(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) mu[i] = std::pow(lambda, contacts(index.state(i)));
  const double z = std::accumulate(mu.begin(), mu.end(), 0.0);
  for (double& m : mu) m /= z;
  return mu;
}

std::vector<double> point_mass(const StateSpaceIndex& index, const Path& p) {
  std::vector<double> v(index.size(), 0.0);
  v[index.index_of(p)] = 1.0;
  return v;
}

SparseGenerator::SparseGenerator(const StateSpaceIndex& index, const ModelParams& params) : params_(params) {
  if (params.L != index.L()) throw std::invalid_argument("generator: L differs from the index");
  const std::size_t n = index.size();
  mu_ = equilibrium_vector(index, params.lambda);
  diag_.assign(n, 0.0);
  row_ptr_.reserve(n + 1);
  row_ptr_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    const Path& p = index.state(i);
    double exit = 0.0;
    for (int x = 1; x < params.L; ++x) {
      const double r = pinmix::rate(p, x, params);
      if (r <= 0.0) continue;
      const auto j = index.index_of(flip(p, x));
      col_.push_back(static_cast<std::uint32_t>(j));
      val_.push_back(r);
      plaquette_.emplace_back(x, p[x - 1]);
      exit += r;
    }
    diag_[i] = -exit;
    max_exit_ = std::max(max_exit_, exit);
    row_ptr_.push_back(static_cast<std::uint32_t>(col_.size()));
  }
  build_transpose();
}

void SparseGenerator::build_transpose() {
  const std::size_t n = diag_.size();
  trow_ptr_.assign(n + 1, 0);
  for (auto c : col_) ++trow_ptr_[c + 1];
  for (std::size_t j = 0; j < n; ++j) trow_ptr_[j + 1] += trow_ptr_[j];
  tcol_.assign(col_.size(), 0);
  tval_.assign(col_.size(), 0.0);
  std::vector<std::uint32_t> fill(trow_ptr_.begin(), trow_ptr_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const auto slot = fill[col_[k]]++;
      tcol_[slot] = static_cast<std::uint32_t>(i);
      tval_[slot] = val_[k];
    }
  }
}

double SparseGenerator::rate(std::size_t i, std::size_t j) const {
  for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    if (col_[k] == j) return val_[k];
  return 0.0;
}

SparseGenerator SparseGenerator::censored(std::span<const std::pair<int, int>> sites) const {
  SparseGenerator g;
  g.params_ = params_;
  g.mu_ = mu_;
  const std::size_t n = diag_.size();
  g.diag_.assign(n, 0.0);
  g.row_ptr_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    double exit = 0.0;
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (std::find(sites.begin(), sites.end(), plaquette_[k]) != sites.end()) continue;
      g.col_.push_back(col_[k]);
      g.val_.push_back(val_[k]);
      g.plaquette_.push_back(plaquette_[k]);
      exit += val_[k];
    }
    g.diag_[i] = -exit;
    g.max_exit_ = std::max(g.max_exit_, exit);
    g.row_ptr_.push_back(static_cast<std::uint32_t>(g.col_.size()));
  }
  g.build_transpose();
  return g;
}

void SparseGenerator::apply_left_serial(std::span<const double> p, std::span<double> out) const {
  const std::size_t n = diag_.size();
  for (std::size_t j = 0; j < n; ++j) {
    double s = p[j] * diag_[j];
    for (auto k = trow_ptr_[j]; k < trow_ptr_[j + 1]; ++k) s += p[tcol_[k]] * tval_[k];
    out[j] = s;
  }
}

void SparseGenerator::apply_left(std::span<const double> p, std::span<double> out) const {
  const auto n = static_cast<std::int64_t>(diag_.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (std::int64_t jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    double s = p[j] * diag_[j];
    for (auto k = trow_ptr_[j]; k < trow_ptr_[j + 1]; ++k) s += p[tcol_[k]] * tval_[k];
    out[j] = s;
  }
}

void SparseGenerator::apply_right(std::span<const double> f, std::span<double> out) const {
  const auto n = static_cast<std::int64_t>(diag_.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double s = f[i] * diag_[i];
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += f[col_[k]] * val_[k];
    out[i] = s;
  }
}

double detailed_balance_defect(const SparseGenerator& gen) {
  const auto mu = gen.mu();
  double worst = 0.0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    gen.for_each_entry(i, [&](std::size_t j, double q, const std::pair<int, int>&) {
      worst = std::max(worst, std::abs(mu[i] * q - mu[j] * gen.rate(j, i)));
    });
  }
  return worst;
}

double stationarity_defect(const SparseGenerator& gen) {
  std::vector<double> out(gen.size());
  gen.apply_left_serial(gen.mu(), out);
  double worst = 0.0;
  for (double v : out) worst = std::max(worst, std::abs(v));
  return worst;
}

namespace {

Rational rational_power(const Rational& base, int k) {
  Rational r = 1;
  for (int i = 0; i < k; ++i) r *= base;
  return r;
}

// Rate table in exact arithmetic, written from the case analysis directly.
Rational rational_rate(const Path& p, int x, const Rational& lambda) {
  const int a = p[x - 1];
  const int b = p[x + 1];
  if (a != b || a == 0) return 0;
  if (a == 1 && p[x] == 2) return lambda / (1 + lambda);
  if (a == 1 && p[x] == 0) return 1 / (1 + lambda);
  return Rational(1, 2);
}

}  // namespace

bool detailed_balance_exact(const StateSpaceIndex& index, const Rational& lambda) {
  std::vector<Rational> w(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) w[i] = rational_power(lambda, contacts(index.state(i)));
  for (std::size_t i = 0; i < index.size(); ++i) {
    const Path& p = index.state(i);
    for (int x = 1; x < index.L(); ++x) {
      const Rational r = rational_rate(p, x, lambda);
      if (r == 0) continue;
      const Path q = flip(p, x);
      const auto j = index.index_of(q);
      if (w[i] * r != w[j] * rational_rate(q, x, lambda)) return false;
    }
  }
  return true;
}

bool contact_identity_exact(const StateSpaceIndex& index, const Rational& lambda) {
  if (lambda <= 0) throw std::invalid_argument("contact identity needs lambda > 0");
  const int L = index.L();
  for (int x = 2; x <= L - 2; x += 2) {
    Rational ones = 0, zero = 0;
    for (const auto& p : index.states()) {
      const Rational w = rational_power(lambda, contacts(p));
      if (p[x] == 0) zero += w;
      if (p[x - 1] == 1 && p[x + 1] == 1) ones += w;
    }
    if (ones * lambda != (1 + lambda) * zero) return false;
  }
  return true;
}

namespace {

// Smallest eigenvalue of a symmetric operator restricted to the orthogonal
// complement of the unit vector u0: Lanczos with full reorthogonalisation
// and explicit restarts on the current Ritz vector.
template <class Apply>
double lanczos_smallest(std::size_t n, Apply&& apply, const std::vector<double>& u0) {
  const std::size_t m = std::min<std::size_t>(n - 1, 80);
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  };
  auto axpy = [&](double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
  };
  auto normalize = [&](std::vector<double>& v) {
    const double s = std::sqrt(dot(v, v));
    for (double& e : v) e /= s;
    return s;
  };

  std::vector<double> v(n);
  RngStream rng(0x6a09e667f3bcc909ull, 0);
  for (double& e : v) e = rng.uniform() - 0.5;
  axpy(-dot(v, u0), u0, v);
  normalize(v);

  double theta = kInf;
  std::vector<std::vector<double>> V;
  std::vector<double> w(n);
  for (int restart = 0; restart < 500; ++restart) {
    V.assign(1, v);
    std::vector<double> alpha, beta;
    double last_beta = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      apply(V[j], w);
      alpha.push_back(dot(V[j], w));
      for (int pass = 0; pass < 2; ++pass) {
        axpy(-dot(w, u0), u0, w);
        for (const auto& q : V) axpy(-dot(w, q), q, w);
      }
      last_beta = std::sqrt(dot(w, w));
      if (last_beta < 1e-13 || j + 1 == m) break;
      beta.push_back(last_beta);
      for (double& e : w) e /= last_beta;
      V.push_back(w);
    }
    const auto k = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    theta = es.eigenvalues()(0);
    const Eigen::VectorXd s = es.eigenvectors().col(0);
    const double residual = last_beta * std::abs(s(k - 1));
    std::fill(v.begin(), v.end(), 0.0);
    for (Eigen::Index i = 0; i < k; ++i) axpy(s(i), V[static_cast<std::size_t>(i)], v);
    normalize(v);
    if (residual <= 1e-11 * std::max(1.0, std::abs(theta))) break;
  }
  return theta;
}

}  // namespace

GapResult spectral_gap(const SparseGenerator& gen, GapMethod method) {
  const double kappa = gen.params().kappa();
  const auto mu = gen.mu();
  std::vector<std::size_t> support;
  std::vector<std::int64_t> pos(gen.size(), -1);
  for (std::size_t i = 0; i < gen.size(); ++i) {
    if (mu[i] > 0.0) {
      pos[i] = static_cast<std::int64_t>(support.size());
      support.push_back(i);
    }
  }
  const std::size_t n = support.size();
  if (method == GapMethod::automatic) method = gen.params().L < 18 ? GapMethod::dense : GapMethod::lanczos;
  if (n < 2) return {kInf, kappa, method, true};

  // -D^{1/2} Q D^{-1/2}, symmetric by detailed balance; averaged for exact symmetry
  auto entry = [&](std::size_t i, std::size_t j, double q) {
    return -0.5 * (std::sqrt(mu[i] / mu[j]) * q + std::sqrt(mu[j] / mu[i]) * gen.rate(j, i));
  };

  double gap = 0.0;
  if (method == GapMethod::dense) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t i = support[a];
      A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = -gen.diagonal(i);
      gen.for_each_entry(i, [&](std::size_t j, double q, const std::pair<int, int>&) {
        if (pos[j] >= 0) A(static_cast<Eigen::Index>(a), pos[j]) = entry(i, j, q);
      });
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    gap = es.eigenvalues()(1);
  } else {
    std::vector<std::uint32_t> rp{0}, cl;
    std::vector<double> vl;
    std::vector<double> dg(n);
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t i = support[a];
      dg[a] = -gen.diagonal(i);
      gen.for_each_entry(i, [&](std::size_t j, double q, const std::pair<int, int>&) {
        if (pos[j] < 0) return;
        cl.push_back(static_cast<std::uint32_t>(pos[j]));
        vl.push_back(entry(i, j, q));
      });
      rp.push_back(static_cast<std::uint32_t>(cl.size()));
    }
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
      const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (nn > 8192)
      for (std::int64_t aa = 0; aa < nn; ++aa) {
        const auto a = static_cast<std::size_t>(aa);
        double s = dg[a] * x[a];
        for (auto k = rp[a]; k < rp[a + 1]; ++k) s += vl[k] * x[cl[k]];
        y[a] = s;
      }
    };
    std::vector<double> u0(n);
    for (std::size_t a = 0; a < n; ++a) u0[a] = std::sqrt(mu[support[a]]);
    double norm = 0.0;
    for (double e : u0) norm += e * e;
    for (double& e : u0) e /= std::sqrt(norm);
    gap = lanczos_smallest(n, apply, u0);
  }
  return {gap, kappa, method, gap >= kappa * (1.0 - 1e-10)};
}

std::vector<double> evolve(const SparseGenerator& gen, std::span<const double> p, double t, const Uniformization& u) {
  if (t < 0.0) throw std::invalid_argument("evolve: negative time");
  std::vector<double> cur(p.begin(), p.end());
  if (t == 0.0 || gen.max_exit_rate() == 0.0) return cur;
  const double rate = gen.max_exit_rate() + 1.0;
  const double total = rate * t;
  const auto pieces = static_cast<int>(std::ceil(total / u.max_step));
  const double a = total / pieces;
  const double tol = u.tolerance / pieces;
  const std::size_t n = cur.size();
  std::vector<double> term(n), next(n), acc(n);
  for (int piece = 0; piece < pieces; ++piece) {
    term = cur;
    double w = std::exp(-a);
    for (std::size_t i = 0; i < n; ++i) acc[i] = w * term[i];
    for (int k = 0;; ++k) {
      const double w_next = w * a / (k + 1);
      // tail sum_{j > k} w_j <= w_{k+1} / (1 - a / (k + 2)) once k + 2 > a
      if (k + 2 > 2.0 * a && 2.0 * w_next < tol) break;
      gen.apply_left(term, next);
      for (std::size_t i = 0; i < n; ++i) term[i] += next[i] / rate;
      w = w_next;
      for (std::size_t i = 0; i < n; ++i) acc[i] += w * term[i];
    }
    cur.swap(acc);
  }
  return cur;
}

namespace {

// Generators per schedule interval, built on demand.
class ScheduledGenerators {
 public:
  ScheduledGenerators(const SparseGenerator& gen, const CensoringSchedule& schedule) : gen_(gen), schedule_(schedule) {}

  // Evolves p from `from` to `to`, switching generator at breakpoints.
  void advance(std::vector<double>& p, double from, double to, const Uniformization& u) {
    while (from < to) {
      double stop = to;
      for (double b : schedule_.breakpoints())
        if (b > from) {
          stop = std::min(stop, b);
          break;
        }
      p = evolve(at(from), p, stop - from, u);
      from = stop;
    }
  }

 private:
  const SparseGenerator& at(double t) {
    if (schedule_.empty()) return gen_;
    const auto sites = schedule_.censored_at(t);
    if (sites.empty()) return gen_;
    std::vector<std::pair<int, int>> key(sites.begin(), sites.end());
    for (auto& [k, g] : cache_)
      if (k == key) return g;
    cache_.emplace_back(key, gen_.censored(key));
    return cache_.back().second;
  }

  const SparseGenerator& gen_;
  const CensoringSchedule& schedule_;
  std::vector<std::pair<std::vector<std::pair<int, int>>, SparseGenerator>> cache_;
};

}  // namespace

std::vector<double> exact_distribution(const SparseGenerator& gen, std::span<const double> initial, double t,
                                       const CensoringSchedule& schedule, const Uniformization& u) {
  if (initial.size() != gen.size()) throw std::invalid_argument("initial distribution has the wrong size");
  std::vector<double> p(initial.begin(), initial.end());
  ScheduledGenerators sg(gen, schedule);
  sg.advance(p, 0.0, t, u);
  return p;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

TvCurve exact_tv_curve(const SparseGenerator& gen, std::span<const double> initial, std::span<const double> grid,
                       const CensoringSchedule& schedule, const Uniformization& u) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("time grid must be sorted");
  if (initial.size() != gen.size()) throw std::invalid_argument("initial distribution has the wrong size");
  TvCurve curve{{}, true};
  std::vector<double> p(initial.begin(), initial.end());
  ScheduledGenerators sg(gen, schedule);
  double now = 0.0;
  for (double t : grid) {
    sg.advance(p, now, t, u);
    now = std::max(now, t);
    const double d = tv_distance(p, gen.mu());
    if (!curve.points.empty() && d > curve.points.back().d + 1e-12) curve.nonincreasing = false;
    curve.points.push_back({t, d});
  }
  return curve;
}

std::vector<WorstStartPoint> worst_start_report(const StateSpaceIndex& index, const SparseGenerator& gen,
                                                std::span<const double> grid) {
  std::vector<WorstStartPoint> out;
  for (double t : grid) out.push_back({t, -1.0, 0, false});
  for (std::size_t i = 0; i < index.size(); ++i) {
    std::vector<double> start(index.size(), 0.0);
    start[i] = 1.0;
    const auto curve = exact_tv_curve(gen, start, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (curve.points[g].d > out[g].d) {
        out[g].d = curve.points[g].d;
        out[g].argmax = i;
      }
    }
  }
  const Path top = maximal_path(index.L());
  const Path bottom = minimal_path(index.L());
  for (auto& w : out) w.extremal = index.state(w.argmax) == top || index.state(w.argmax) == bottom;
  return out;
}

double chi_square_variance(const SparseGenerator& gen, std::span<const double> nu) {
  const auto mu = gen.mu();
  if (nu.size() != mu.size()) throw std::invalid_argument("distribution has the wrong size");
  double s = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] == 0.0) continue;
    if (mu[i] == 0.0) throw std::invalid_argument("distribution charges a state outside the support of mu");
    s += nu[i] * nu[i] / mu[i];
  }
  return std::max(0.0, s - 1.0);
}

double chi_square_bound(const SparseGenerator& gen, std::span<const double> nu, double t, double gap) {
  return 0.5 * std::exp(-t * gap) * std::sqrt(chi_square_variance(gen, nu));
}

ChiSquareReport chi_square_report(const SparseGenerator& gen, std::span<const double> nu, std::span<const double> grid) {
  ChiSquareReport r;
  r.variance = chi_square_variance(gen, nu);
  r.gap = spectral_gap(gen).gap;
  r.exact = exact_tv_curve(gen, nu, grid).points;
  r.dominates = true;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double b = 0.5 * std::exp(-grid[g] * r.gap) * std::sqrt(r.variance);
    r.bound.push_back({grid[g], b});
    if (b < r.exact[g].d - 1e-12) r.dominates = false;
  }
  return r;
}

namespace {

std::string describe(const FlipRecord& f) {
  std::ostringstream s;
  s.precision(17);
  s << "t=" << f.t << " chain=" << f.chain << " x=" << f.x << " height=" << f.height;
  return s.str();
}

}  // namespace

CouplingCheckReport brute_force_coupling_check(std::uint64_t master_seed, const ModelParams& params, double horizon,
                                               const std::vector<Path>& extra_starts) {
  const int L = params.L;
  std::vector<std::vector<int>> starts;
  for (const Path& p : {maximal_path(L), minimal_path(L)}) starts.emplace_back(p.heights().begin(), p.heights().end());
  for (const auto& p : extra_starts) {
    if (p.length() != L) throw std::invalid_argument("extra start has the wrong length");
    starts.emplace_back(p.heights().begin(), p.heights().end());
  }

  const SiteLattice lattice = SiteLattice::pinning(L);
  const ClockRealization clocks(master_seed);

  std::vector<ChainSpec> specs;
  for (const auto& s : starts) specs.push_back({s, params.lambda, true, {}});
  CoupledChains engine(lattice, clocks, specs);
  FlipRecorder lazy;
  engine.set_observer(&lazy);
  engine.advance_to(horizon);

  struct Ring {
    double t;
    std::uint32_t id;
    double coin;
  };
  std::vector<Ring> rings;
  for (const auto& site : lattice.all_sites()) {
    const auto id = lattice.id(site.x, site.z, site.dir);
    clocks.for_each_ring(site, horizon, [&](const ClockRealization::Cursor& c) { rings.push_back({c.time, id, c.coin}); });
  }
  std::sort(rings.begin(), rings.end(), [](const Ring& a, const Ring& b) { return a.t != b.t ? a.t < b.t : a.id < b.id; });

  std::vector<FlipRecord> brute;
  auto chains = starts;
  for (const auto& r : rings) {
    const ClockSite site = lattice.site(r.id);
    const auto ux = static_cast<std::size_t>(site.x);
    const int before = site.dir == Direction::up ? site.z - 1 : site.z + 1;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      auto& h = chains[c];
      if (h[ux - 1] != site.z || h[ux + 1] != site.z || h[ux] != before) continue;
      if (!(r.coin < coin_threshold(site.dir, site.z, true, params.lambda))) continue;
      h[ux] = 2 * site.z - h[ux];
      brute.push_back({r.t, static_cast<int>(c), site.x, h[ux]});
    }
  }

  CouplingCheckReport rep{true, rings.size(), lazy.flips.size(), brute.size(), std::nullopt, {}};
  const std::size_t common = std::min(lazy.flips.size(), brute.size());
  for (std::size_t k = 0; k < common; ++k) {
    if (lazy.flips[k] == brute[k]) continue;
    rep.identical = false;
    rep.first_divergence = k;
    rep.detail = "flip " + std::to_string(k) + ": lazy " + describe(lazy.flips[k]) + " vs replay " + describe(brute[k]);
    return rep;
  }
  if (lazy.flips.size() != brute.size()) {
    rep.identical = false;
    rep.first_divergence = common;
    rep.detail = "flip counts differ: lazy " + std::to_string(lazy.flips.size()) + " vs replay " + std::to_string(brute.size());
    return rep;
  }
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto h = engine.heights(static_cast<int>(c));
    if (!std::equal(h.begin(), h.end(), chains[c].begin())) {
      rep.identical = false;
      rep.detail = "final state of chain " + std::to_string(c) + " differs";
      return rep;
    }
  }
  return rep;
}

}  // namespace pinmix
