#include "pinmix/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

namespace pinmix {

ConfigError::ConfigError(int line, std::string field, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (field.empty() ? "" : field + ": ") + message),
      line_(line),
      field_(std::move(field)) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::string v = value;
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

template <class T>
T parse_number(const std::string& s, int line, const std::string& key) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw ConfigError(line, key, "cannot parse '" + s + "'");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& value, int line, const std::string& key) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number<T>(item, line, key));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"L", [](auto& c, auto& v, int l, auto& k) { c.L = parse_list<int>(v, l, k); }},
      {"lambda", [](auto& c, auto& v, int l, auto& k) { c.lambda = parse_list<double>(v, l, k); }},
      {"replicas", [](auto& c, auto& v, int l, auto& k) { c.replicas = parse_number<int>(v, l, k); }},
      {"master_seed", [](auto& c, auto& v, int l, auto& k) { c.master_seed = parse_number<std::uint64_t>(v, l, k); }},
      {"time_unit",
       [](auto& c, auto& v, int l, auto& k) {
         if (v == "normalized")
           c.time_unit = TimeUnit::normalized;
         else if (v == "absolute")
           c.time_unit = TimeUnit::absolute;
         else
           throw ConfigError(l, k, "expected 'normalized' or 'absolute'");
       }},
      {"horizon", [](auto& c, auto& v, int l, auto& k) { c.horizon = parse_number<double>(v, l, k); }},
      {"grid", [](auto& c, auto& v, int l, auto& k) { c.grid = parse_list<double>(v, l, k); }},
      {"lower_until", [](auto& c, auto& v, int l, auto& k) { c.lower_until = parse_number<double>(v, l, k); }},
      {"epsilon", [](auto& c, auto& v, int l, auto& k) { c.epsilon = parse_list<double>(v, l, k); }},
      {"delta", [](auto& c, auto& v, int l, auto& k) { c.delta = parse_number<double>(v, l, k); }},
      {"M", [](auto& c, auto& v, int l, auto& k) { c.M = parse_number<int>(v, l, k); }},
      {"s0_factor", [](auto& c, auto& v, int l, auto& k) { c.s0_factor = parse_number<double>(v, l, k); }},
      {"beta", [](auto& c, auto& v, int l, auto& k) { c.beta = parse_number<double>(v, l, k); }},
      {"eta", [](auto& c, auto& v, int l, auto& k) { c.eta = parse_number<double>(v, l, k); }},
      {"eq_samples", [](auto& c, auto& v, int l, auto& k) { c.eq_samples = parse_number<int>(v, l, k); }},
      {"bootstrap", [](auto& c, auto& v, int l, auto& k) { c.bootstrap = parse_number<int>(v, l, k); }},
      {"out_dir",
       [](auto& c, auto& v, int l, auto& k) {
         if (v.empty()) throw ConfigError(l, k, "must not be empty");
         c.out_dir = v;
       }},
      {"threads", [](auto& c, auto& v, int l, auto& k) { c.threads = parse_number<int>(v, l, k); }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::map<std::string, int> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "", "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(line, key, "unknown key");
    if (seen.contains(key)) throw ConfigError(line, key, "repeated key (first on line " + std::to_string(seen[key]) + ")");
    seen[key] = line;
    it->second(cfg, value, line, key);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    const std::string field = colon == std::string::npos ? "" : what.substr(0, colon);
    const std::string message = colon == std::string::npos ? what : trim(what.substr(colon + 1));
    throw ConfigError(seen.contains(field) ? seen[field] : 0, field, message);
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out.precision(17);
  auto list = [&out](const auto& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
    out << '\n';
  };
  out << "L = ";
  list(c.L);
  out << "lambda = ";
  list(c.lambda);
  out << "replicas = " << c.replicas << '\n';
  out << "master_seed = " << c.master_seed << '\n';
  out << "time_unit = " << (c.time_unit == TimeUnit::normalized ? "normalized" : "absolute") << '\n';
  out << "horizon = " << c.horizon << '\n';
  out << "grid = ";
  list(c.grid);
  out << "lower_until = " << c.lower_until << '\n';
  out << "epsilon = ";
  list(c.epsilon);
  out << "delta = " << c.delta << '\n';
  out << "M = " << c.M << '\n';
  out << "s0_factor = " << c.s0_factor << '\n';
  out << "beta = " << c.beta << '\n';
  out << "eta = " << c.eta << '\n';
  out << "eq_samples = " << c.eq_samples << '\n';
  out << "bootstrap = " << c.bootstrap << '\n';
  out << "out_dir = " << c.out_dir << '\n';
  out << "threads = " << c.threads << '\n';
  return out.str();
}

}  // namespace pinmix
