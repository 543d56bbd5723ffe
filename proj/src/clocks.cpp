#include "pinmix/clocks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pinmix {

SiteLattice::SiteLattice(int L, int base, int floor) : L_(L), base_(base), floor_(floor) {
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("L must be even and >= 2");
  const int reach = L / 2 - 1;
  zlo_ = std::max(base - reach, floor);
  const int zhi = base + reach;
  span_ = std::max(1, zhi - zlo_ + 1);
}

bool SiteLattice::contains(int x, int z) const noexcept {
  if (x < 1 || x > L_ - 1) return false;
  const int reach = std::min(x, L_ - x) - 1;
  if (z < base_ - reach || z > base_ + reach || z < floor_) return false;
  return ((x + z + base_) & 1) == 1;
}

ClockSite SiteLattice::site(std::uint32_t id) const noexcept {
  const auto dir = static_cast<Direction>(id & 1u);
  const int cell = static_cast<int>(id >> 1);
  return {cell / span_, cell % span_ + zlo_, dir};
}

std::vector<ClockSite> SiteLattice::all_sites() const {
  std::vector<ClockSite> out;
  for (int x = 1; x < L_; ++x) {
    for (int z = zlo_; z < zlo_ + span_; ++z) {
      if (!contains(x, z)) continue;
      out.push_back({x, z, Direction::up});
      out.push_back({x, z, Direction::down});
    }
  }
  return out;
}

ClockRealization::Cursor ClockRealization::start_of_block(const ClockSite& site, std::int64_t block) const noexcept {
  // Empty blocks are skipped: the first gap that lands inside its block wins.
  for (;;) {
    const Draw d = draw(site, block, 0);
    const double t = static_cast<double>(block) + d.gap;
    if (t < static_cast<double>(block + 1)) return {block, 0, t, d.coin};
    ++block;
  }
}

ClockRealization::Cursor ClockRealization::next(const ClockSite& site, Cursor c) const noexcept {
  const Draw d = draw(site, c.block, c.ordinal + 1);
  const double t = c.time + d.gap;
  if (t < static_cast<double>(c.block + 1)) return {c.block, c.ordinal + 1, t, d.coin};
  return start_of_block(site, c.block + 1);
}

ClockRealization::Cursor ClockRealization::first_after(const ClockSite& site, double t) const noexcept {
  const auto block = static_cast<std::int64_t>(std::floor(std::max(t, 0.0)));
  Cursor c = start_of_block(site, block);
  while (c.time <= t) c = next(site, c);
  return c;
}

ClockRealization::Cursor ClockRealization::first_after(const ClockSite& site, double t, const Cursor& hint) const noexcept {
  if (hint.time > t || hint.block != static_cast<std::int64_t>(std::floor(std::max(t, 0.0)))) return first_after(site, t);
  Cursor c = next(site, hint);
  while (c.time <= t) c = next(site, c);
  return c;
}

}  // namespace pinmix
