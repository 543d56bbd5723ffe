#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pinmix/rng.hpp"

namespace pinmix {

enum class Direction : std::uint8_t { up = 0, down = 1 };

// One Poisson stream of the graphical construction: the plaquette centred
// at (x, z). An up ring turns a valley at z-1 into a peak at z+1, a down
// ring does the reverse; both need xi_{x-1} = xi_{x+1} = z.
struct ClockSite {
  int x;
  int z;
  Direction dir;

  friend bool operator==(const ClockSite&, const ClockSite&) = default;
};

// Index set of clock plaquettes for bridges of length L pinned at height
// `base` at both ends. With base = 0 and floor = 1 this is Theta; the
// no-wall comparison system uses base = m and no floor.
class SiteLattice {
 public:
  static constexpr int kNoFloor = INT32_MIN / 2;

  SiteLattice(int L, int base, int floor);

  static SiteLattice pinning(int L) { return {L, 0, 1}; }
  static SiteLattice lifted(int L, int m) { return {L, m, kNoFloor}; }

  int L() const noexcept { return L_; }
  int base() const noexcept { return base_; }

  bool contains(int x, int z) const noexcept;
  // Dense id for (x, z, dir); valid only when contains(x, z).
  std::uint32_t id(int x, int z, Direction dir) const noexcept {
    return static_cast<std::uint32_t>(((x * span_) + (z - zlo_)) * 2 + static_cast<int>(dir));
  }
  ClockSite site(std::uint32_t id) const noexcept;
  std::size_t id_space() const noexcept { return static_cast<std::size_t>(L_ + 1) * span_ * 2; }
  std::vector<ClockSite> all_sites() const;

 private:
  int L_;
  int base_;
  int floor_;
  int zlo_;
  int span_;
};

// The k-th ring of each site, keyed by a unit time block and an ordinal
// inside it. Inside block n = [n, n+1) ring times are n + E_0, n + E_0 + E_1,
// ... while below n + 1, with E_j i.i.d. Exp(1); blocks are independent, so
// each site sees a rate-one Poisson process. Ring time and coin are pure
// functions of (seed, x, z, dir, n, j).
class ClockRealization {
 public:
  explicit ClockRealization(std::uint64_t master_seed) noexcept : key_(philox_key(master_seed)), seed_(master_seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  struct Draw {
    double gap;
    double coin;
  };

  Draw draw(const ClockSite& site, std::int64_t block, std::uint32_t ordinal) const noexcept {
    const auto out = Philox4x32::apply(
        {static_cast<std::uint32_t>(site.x) | (static_cast<std::uint32_t>(site.dir) << 31),
         static_cast<std::uint32_t>(site.z), static_cast<std::uint32_t>(block), ordinal},
        key_);
    return {-std::log1p(-to_unit_double(out[0], out[1])), to_unit_double(out[2], out[3])};
  }

  // Position in one site's ring sequence.
  struct Cursor {
    std::int64_t block = 0;
    std::uint32_t ordinal = 0;
    double time = 0.0;
    double coin = 0.0;
  };

  // First ring strictly after t.
  Cursor first_after(const ClockSite& site, double t) const noexcept;
  // Same, but resumes from `hint` (a ring of this site at or before t)
  // when it lies in t's block.
  Cursor first_after(const ClockSite& site, double t, const Cursor& hint) const noexcept;
  // The ring following c.
  Cursor next(const ClockSite& site, Cursor c) const noexcept;

  // Every ring of the site in (0, horizon], in time order.
  template <class Fn>
  void for_each_ring(const ClockSite& site, double horizon, Fn&& fn) const {
    Cursor c = start_of_block(site, 0);
    while (c.time <= horizon) {
      fn(c);
      c = next(site, c);
    }
  }

 private:
  Cursor start_of_block(const ClockSite& site, std::int64_t block) const noexcept;

  Philox4x32::Key key_;
  std::uint64_t seed_;
};

}  // namespace pinmix
