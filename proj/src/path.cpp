#include "pinmix/path.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>

namespace pinmix {

std::string validate_heights(std::span<const int> heights) {
  if (heights.size() < 3) return "path needs at least 3 heights";
  const auto L = heights.size() - 1;
  if (L % 2 != 0) return "path length must be even";
  if (heights.front() != 0 || heights.back() != 0) return "path must start and end at 0";
  for (std::size_t x = 0; x < L; ++x) {
    if (std::abs(heights[x + 1] - heights[x]) != 1) return "steps must be +1 or -1 (at x=" + std::to_string(x) + ")";
  }
  if (std::ranges::any_of(heights, [](int h) { return h < 0; })) return "heights must be nonnegative";
  return {};
}

Path::Path(std::vector<int> heights) : heights_(std::move(heights)) {
  if (auto err = validate_heights(heights_); !err.empty()) throw std::invalid_argument(err);
}

void require_valid_length(int L) {
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("L must be even and >= 2");
}

ModelParams::ModelParams(int length, double pinning) : L(length), lambda(pinning) {
  require_valid_length(L);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
}

int contacts(const Path& path) {
  int n = 0;
  for (int x = 1; x < path.length(); ++x) n += path[x] == 0;
  return n;
}

Path maximal_path(int L) {
  require_valid_length(L);
  std::vector<int> h(static_cast<std::size_t>(L) + 1);
  for (int x = 0; x <= L; ++x) h[static_cast<std::size_t>(x)] = std::min(x, L - x);
  return Path::trusted(std::move(h));
}

Path minimal_path(int L) {
  require_valid_length(L);
  std::vector<int> h(static_cast<std::size_t>(L) + 1);
  for (int x = 0; x <= L; ++x) h[static_cast<std::size_t>(x)] = x % 2;
  return Path::trusted(std::move(h));
}

bool leq(std::span<const int> lower, std::span<const int> upper) {
  if (lower.size() != upper.size()) throw std::invalid_argument("paths have different lengths");
  for (std::size_t x = 0; x < lower.size(); ++x) {
    if (lower[x] > upper[x]) return false;
  }
  return true;
}

bool leq(const Path& lower, const Path& upper) { return leq(lower.heights(), upper.heights()); }

Path lift(const Path& path) {
  const int L = path.length() + 2;
  std::vector<int> h(static_cast<std::size_t>(L) + 1, 0);
  for (int x = 1; x < L; ++x) h[static_cast<std::size_t>(x)] = path[x - 1] + 1;
  return Path::trusted(std::move(h));
}

Path project(const Path& path) {
  const int L = path.length();
  if (contacts(path) != 0) throw std::invalid_argument("project: path has an interior contact");
  // (0,1,0) would project to the length-0 bridge, which Path cannot hold.
  if (L < 4) throw std::invalid_argument("project needs L >= 4");
  std::vector<int> h(static_cast<std::size_t>(L) - 1);
  for (int x = 0; x <= L - 2; ++x) h[static_cast<std::size_t>(x)] = path[x + 1] - 1;
  return Path::trusted(std::move(h));
}

std::string format_path(std::span<const int> heights) {
  std::string out;
  out.reserve(heights.size() * 3);
  for (std::size_t i = 0; i < heights.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(heights[i]);
  }
  return out;
}

Path parse_path(std::string_view line) {
  std::vector<int> h;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    int v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{}) throw std::invalid_argument("malformed path line: '" + std::string(line) + "'");
    h.push_back(v);
    p = next;
  }
  return Path(std::move(h));
}

std::vector<Path> read_paths(std::istream& in) {
  std::vector<Path> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_path(line));
  }
  return out;
}

}  // namespace pinmix
