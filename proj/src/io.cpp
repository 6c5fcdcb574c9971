#include "affine_cdo/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

namespace affine_cdo {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace {

double parse_double(const std::string& text, std::size_t line, const std::string& what) {
  const std::string s = boost::algorithm::trim_copy(text);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("malformed " + what + " '" + text + "'", line);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  boost::algorithm::split(cells, line, boost::algorithm::is_any_of(","));
  for (auto& c : cells) boost::algorithm::trim(c);
  return cells;
}

std::vector<std::string> content_lines(const std::string& text, std::vector<std::size_t>& numbers) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (boost::algorithm::trim_copy(line).empty() || line[0] == '#') continue;
    out.push_back(line);
    numbers.push_back(n);
  }
  return out;
}

std::chrono::sys_days base_date() {
  using namespace std::chrono;
  return sys_days{year{kBaseYear} / month{kBaseMonth} / day{kBaseDay}};
}

long floor_div(long a, long b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0)) ? 1 : 0); }

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string iso_date(long business_day) {
  using namespace std::chrono;
  const long week = floor_div(business_day, 5);
  const sys_days d = base_date() + days{week * 7 + (business_day - 5 * week)};
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

long business_day_index(const std::string& iso) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (iso.size() != 10 || std::sscanf(iso.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    throw ParseError("malformed ISO date '" + iso + "'", 0);
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw ParseError("invalid date '" + iso + "'", 0);
  const long offset = (sys_days{ymd} - base_date()).count();
  const long week = floor_div(offset, 7), dow = offset - 7 * week;
  if (dow >= 5) throw ParseError("date '" + iso + "' falls on a weekend", 0);
  return week * 5 + dow;
}

ObservationPanel parse_panel(const std::string& text) {
  std::vector<std::size_t> numbers;
  const auto lines = content_lines(text, numbers);
  if (lines.empty()) throw ParseError("panel file is empty", 0);
  const auto header = split_csv(lines[0]);
  const std::vector<std::string> expected{"date", "maturity_years", "tranche_lo", "tranche_hi", "zero_spread"};
  if (header != expected) throw ParseError("panel header must be " + boost::algorithm::join(expected, ","), numbers[0]);

  struct Row {
    long day;
    double tau, lo, hi, spread;
    bool present;
    std::size_t line;
  };
  std::vector<Row> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    const std::size_t ln = numbers[i];
    if (cells.size() != 5) throw ParseError("expected 5 fields, found " + std::to_string(cells.size()), ln);
    Row r{};
    try {
      r.day = business_day_index(cells[0]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), ln);
    }
    r.tau = parse_double(cells[1], ln, "maturity");
    r.lo = parse_double(cells[2], ln, "attachment");
    r.hi = parse_double(cells[3], ln, "detachment");
    r.present = !cells[4].empty();
    r.spread = r.present ? parse_double(cells[4], ln, "spread") : 0.0;
    r.line = ln;
    if (!(r.tau > 0.0)) throw ParseError("maturity must be positive", ln);
    if (!(r.lo >= 0.0 && r.hi > r.lo && r.hi <= 1.0)) throw ParseError("tranche bounds must satisfy 0 <= lo < hi <= 1", ln);
    if (r.present && !std::isfinite(r.spread)) throw ParseError("spread must be finite", ln);
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError("panel has no observations", 0);

  std::set<long> days;
  std::set<double> taus;
  std::set<std::pair<double, double>> cells;
  for (const auto& r : rows) {
    days.insert(r.day);
    taus.insert(r.tau);
    cells.insert({r.lo, r.hi});
  }
  ObservationPanel panel;
  panel.maturities.assign(taus.begin(), taus.end());
  panel.boundaries.push_back(cells.begin()->first);
  for (const auto& [lo, hi] : cells) {
    if (lo != panel.boundaries.back()) throw ParseError("tranches must tile the loss axis without gaps or overlaps", 0);
    panel.boundaries.push_back(hi);
  }
  const long first = *days.begin();
  panel.first_day = first;
  std::map<long, std::size_t> day_row;
  for (long d : days) {
    day_row[d] = panel.dates.size();
    panel.dates.push_back(static_cast<double>(d - first) * kDayFraction);
  }
  const auto n_dates = static_cast<Eigen::Index>(panel.dates.size());
  const auto n_cols = static_cast<Eigen::Index>(panel.column_count());
  panel.spreads = Eigen::MatrixXd::Zero(n_dates, n_cols);
  panel.mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_dates, n_cols);
  std::set<std::tuple<long, double, double>> seen;
  for (const auto& r : rows) {
    if (!seen.insert({r.day, r.tau, r.lo}).second) throw ParseError("duplicate (date, maturity, tranche) entry", r.line);
    const auto i = static_cast<std::size_t>(std::lower_bound(panel.maturities.begin(), panel.maturities.end(), r.tau) -
                                            panel.maturities.begin());
    const auto j = static_cast<std::size_t>(
        std::lower_bound(panel.boundaries.begin(), panel.boundaries.end(), r.lo) - panel.boundaries.begin());
    const auto k = static_cast<Eigen::Index>(day_row[r.day]);
    const auto c = static_cast<Eigen::Index>(panel.column(i, j));
    panel.spreads(k, c) = r.spread;
    panel.mask(k, c) = r.present ? 1 : 0;
  }
  panel.check();
  return panel;
}

ObservationPanel load_panel(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("panel file not found: " + path.string());
  return parse_panel(read_file(path));
}

std::string format_panel(const ObservationPanel& panel) {
  panel.check();
  std::string out = "date,maturity_years,tranche_lo,tranche_hi,zero_spread\n";
  for (std::size_t k = 0; k < panel.dates.size(); ++k) {
    const double day = std::round(panel.dates[k] / kDayFraction);
    if (std::abs(static_cast<double>(static_cast<std::size_t>(day)) * kDayFraction - panel.dates[k]) > 1e-12)
      throw DomainError("panel dates must lie on the business-day grid");
    const std::string date = iso_date(panel.first_day + static_cast<long>(day));
    for (std::size_t j = 0; j < panel.tranche_count(); ++j)
      for (std::size_t i = 0; i < panel.maturity_count(); ++i) {
        const auto c = static_cast<Eigen::Index>(panel.column(i, j));
        const auto r = static_cast<Eigen::Index>(k);
        out += date + ',' + format_double(panel.maturities[i]) + ',' + format_double(panel.boundaries[j]) + ',' +
               format_double(panel.boundaries[j + 1]) + ',' +
               (panel.mask(r, c) ? format_double(panel.spreads(r, c)) : std::string()) + '\n';
      }
  }
  return out;
}

void write_panel(const fs::path& path, const ObservationPanel& panel, const std::string& footer) {
  write_atomic(path, format_panel(panel) + footer);
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("missing column '" + name + "'", 0);
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> Table::numbers(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(parse_double(rows[i][c], i + 2, name));
  return out;
}

std::string format_table(const Table& table) {
  std::string out = boost::algorithm::join(table.header, ",") + '\n';
  for (const auto& row : table.rows) out += boost::algorithm::join(row, ",") + '\n';
  return out;
}

Table parse_table(const std::string& text) {
  std::vector<std::size_t> numbers;
  const auto lines = content_lines(text, numbers);
  if (lines.empty()) throw ParseError("table is empty", 0);
  Table t;
  t.header = split_csv(lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = split_csv(lines[i]);
    if (cells.size() != t.header.size()) throw ParseError("row width differs from the header", numbers[i]);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table load_table(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("file not found: " + path.string());
  try {
    return parse_table(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

namespace {

struct Field {
  const char* name;
  double ModelParams::*member;
};

constexpr std::array<Field, 12> kFields{{{"kappa_y", &ModelParams::kappa_y},
                                         {"kappa_z", &ModelParams::kappa_z},
                                         {"theta_z", &ModelParams::theta_z},
                                         {"sigma_y", &ModelParams::sigma_y},
                                         {"sigma_z", &ModelParams::sigma_z},
                                         {"lambda_y", &ModelParams::lambda_y},
                                         {"lambda_z", &ModelParams::lambda_z},
                                         {"gamma", &ModelParams::gamma},
                                         {"a0", &ModelParams::a0},
                                         {"b0", &ModelParams::b0},
                                         {"c0", &ModelParams::c0},
                                         {"r", &ModelParams::r}}};

}  // namespace

std::string params_to_json(const ModelParams& p, const std::map<std::string, double>& extra,
                           const std::string& config_hash) {
  ordered_json j;
  j["kind"] = to_string(p.kind);
  for (const auto& f : kFields) j[f.name] = p.*(f.member);
  for (std::size_t i = 0; i < p.h.size(); ++i) j["h_" + std::to_string(i + 1)] = p.h[i];
  for (const auto& [k, v] : extra) j[k] = v;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  return j.dump(2) + '\n';
}

ModelParams params_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid parameter JSON: ") + e.what(), 0);
  }
  if (!j.is_object()) throw ParseError("parameter JSON must be an object", 0);
  ModelParams p;
  if (j.contains("kind")) p.kind = parse_model_kind(j.at("kind").get<std::string>());
  for (const auto& f : kFields) {
    if (!j.contains(f.name)) {
      if (std::string(f.name) == "r") continue;
      throw ConfigError(std::string("parameter JSON lacks '") + f.name + "'");
    }
    if (!j.at(f.name).is_number()) throw ConfigError(std::string("parameter '") + f.name + "' must be a number");
    p.*(f.member) = j.at(f.name).get<double>();
  }
  for (std::size_t i = 1; j.contains("h_" + std::to_string(i)); ++i) p.h.push_back(j.at("h_" + std::to_string(i)).get<double>());
  try {
    validate(p);
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid parameters: ") + e.what());
  }
  return p;
}

ModelParams load_params(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("parameter file not found: " + path.string());
  return params_from_json(read_file(path));
}

Table scenario_table(const ScenarioSet& set) {
  Table t;
  t.header = {"scenario", "seed", "psi", "jumps", "terminal_loss", "weight", "probability"};
  for (const auto& s : set.scenarios)
    t.rows.push_back({std::to_string(s.index), std::to_string(set.seed), format_double(s.psi),
                      std::to_string(s.loss.jumps), format_double(s.loss.loss.empty() ? 0.0 : s.loss.loss.back()),
                      format_double(s.weight), format_double(s.probability)});
  return t;
}

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    static_assert(sizeof(double) == 8);
    std::memcpy(&bits, &value, 8);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

}  // namespace

std::string path_dump(const ScenarioSet& set) {
  const std::size_t n = set.scenarios.size();
  const std::size_t k = n ? set.scenarios[0].factors.size() - 1 : 0;
  std::string out = "ACDOPATH";
  put_le<std::uint32_t>(out, kPathDumpVersion);
  put_le<std::uint32_t>(out, 3);
  put_le<std::uint64_t>(out, k);
  put_le<std::uint64_t>(out, n);
  out.reserve(out.size() + n * 3 * (k + 1) * 8);
  for (const auto& s : set.scenarios) {
    if (s.factors.size() != k + 1 || s.loss.loss.size() != k + 1) throw ShapeError("scenario paths differ in length");
    for (double v : s.factors.y) put_le(out, v);
    for (double v : s.factors.z) put_le(out, v);
    for (double v : s.loss.loss) put_le(out, v);
  }
  return out;
}

namespace {

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(","));
  std::vector<double> out;
  for (const auto& part : parts) {
    try {
      out.push_back(parse_double(part, 0, key));
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

bool parse_bool(const std::string& text, const std::string& key) {
  const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(text));
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("'" + key + "' must be a boolean");
}

}  // namespace

std::pair<double, double> parse_tranche(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(":"));
  if (parts.size() != 2) throw ConfigError("tranche must be written LO:HI, got '" + text + "'");
  double lo = 0.0, hi = 0.0;
  try {
    lo = parse_double(parts[0], 0, "attachment");
    hi = parse_double(parts[1], 0, "detachment");
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  if (!(lo >= 0.0 && hi > lo && hi <= 1.0)) throw ConfigError("tranche bounds must satisfy 0 <= LO < HI <= 1");
  return {lo, hi};
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  const std::map<std::string, std::set<std::string>> schema{
      {"model", {"kind", "params", "r"}},
      {"data", {"panel", "dates", "maturities", "boundaries"}},
      {"run", {"seed", "out_dir"}},
      {"calibration", {"multistarts", "max_evaluations", "newton_iterations", "hessian_step", "start_spread", "lrt"}},
      {"simulation", {"n_normal", "n_stress", "psi", "steps", "dt", "y0", "z0", "dump_paths", "hedge_book"}},
      {"hedge", {"maturity", "tranches"}},
      {"price", {"y", "z"}}};
  RunConfig c;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return path;
  };
  for (const auto& [section, keys] : tree) {
    const auto known = schema.find(section);
    if (known == schema.end()) throw ConfigError("unknown config section [" + section + "]");
    if (!keys.data().empty()) throw ConfigError("config key '" + section + "' outside a section");
    for (const auto& [key, node] : keys) {
      if (!known->second.count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
      const std::string v = boost::algorithm::trim_copy(node.data());
      const std::string name = section + "." + key;
      auto number = [&]() {
        try {
          return parse_double(v, 0, name);
        } catch (const ParseError& e) {
          throw ConfigError(e.what());
        }
      };
      auto count = [&]() {
        const double x = number();
        if (!(x >= 0.0) || x != std::floor(x)) throw ConfigError("'" + name + "' must be a nonnegative integer");
        return static_cast<std::size_t>(x);
      };
      if (name == "model.kind") {
        try {
          c.model_kind = parse_model_kind(v);
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      } else if (name == "model.params") {
        c.params_path = resolve(v);
      } else if (name == "model.r") {
        c.r = number();
      } else if (name == "data.panel") {
        c.panel_path = resolve(v);
      } else if (name == "data.dates") {
        c.dates = count();
      } else if (name == "data.maturities") {
        c.maturities = parse_list(v, name);
      } else if (name == "data.boundaries") {
        c.boundaries = parse_list(v, name);
      } else if (name == "run.seed") {
        c.seed = count();
      } else if (name == "run.out_dir") {
        c.out_dir = resolve(v);
      } else if (name == "calibration.multistarts") {
        c.calibration.multistarts = count();
      } else if (name == "calibration.max_evaluations") {
        c.calibration.max_evaluations = count();
      } else if (name == "calibration.newton_iterations") {
        c.calibration.newton_iterations = count();
      } else if (name == "calibration.hessian_step") {
        c.calibration.hessian_step = number();
      } else if (name == "calibration.start_spread") {
        c.calibration.start_spread = number();
      } else if (name == "calibration.lrt") {
        c.lrt = parse_bool(v, name);
      } else if (name == "simulation.n_normal") {
        c.simulation.n_normal = count();
      } else if (name == "simulation.n_stress") {
        c.simulation.n_stress = count();
      } else if (name == "simulation.psi") {
        c.simulation.psi = number();
      } else if (name == "simulation.steps") {
        c.simulation.steps = count();
      } else if (name == "simulation.dt") {
        c.dt = number();
      } else if (name == "simulation.y0") {
        c.simulation.y0 = number();
      } else if (name == "simulation.z0") {
        c.simulation.z0 = number();
      } else if (name == "simulation.dump_paths") {
        c.dump_paths = parse_bool(v, name);
      } else if (name == "simulation.hedge_book") {
        c.hedge_book = parse_bool(v, name);
      } else if (name == "hedge.maturity") {
        c.hedge_maturity = number();
      } else if (name == "hedge.tranches") {
        c.tranches.clear();
        std::vector<std::string> parts;
        boost::algorithm::split(parts, v, boost::algorithm::is_any_of(","));
        for (const auto& part : parts) c.tranches.push_back(parse_tranche(boost::algorithm::trim_copy(part)));
      } else if (name == "price.y") {
        c.state_y = number();
      } else if (name == "price.z") {
        c.state_z = number();
      }
    }
  }
  if (!c.params_path.empty() && !fs::exists(c.params_path))
    throw ConfigError("parameter file not found: " + c.params_path.string());
  if (!c.panel_path.empty() && !fs::exists(c.panel_path))
    throw ConfigError("panel file not found: " + c.panel_path.string());
  canonicalize(c);
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(read_file(path), path.parent_path());
}

void canonicalize(RunConfig& c) {
  if (!(c.dt > 0.0)) throw ConfigError("time step must be positive");
  if (!std::is_sorted(c.boundaries.begin(), c.boundaries.end()) || c.boundaries.size() < 2 ||
      c.boundaries.front() != 0.0 || c.boundaries.back() != 1.0)
    throw ConfigError("boundaries must be sorted from 0 to 1");
  if (c.maturities.empty()) throw ConfigError("at least one maturity is required");
  for (double m : c.maturities)
    if (!(m > 0.0)) throw ConfigError("maturities must be positive");
  if (!(c.simulation.psi > 0.0)) throw ConfigError("psi must be positive");
  if (!(c.hedge_maturity > 0.0)) throw ConfigError("hedge maturity must be positive");
  if (c.tranches.empty()) throw ConfigError("at least one tranche is required");
  c.simulation.dt = c.dt;
  c.simulation.seed = c.seed;
  c.calibration.seed = c.seed;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (const double x : v) s += (s.empty() ? "" : ",") + format_double(x);
    return s;
  };
  std::string tranches;
  for (const auto& [lo, hi] : c.tranches) tranches += (tranches.empty() ? "" : ",") + format_double(lo) + ":" + format_double(hi);
  std::ostringstream s;
  s << "model.kind=" << to_string(c.model_kind) << '\n'
    << "model.params=" << (c.params_path.empty() ? std::string("reference") : hash_hex(fnv1a(read_file(c.params_path))))
    << '\n'
    << "model.r=" << format_double(c.r) << '\n'
    << "data.dates=" << c.dates << '\n'
    << "data.maturities=" << list(c.maturities) << '\n'
    << "data.boundaries=" << list(c.boundaries) << '\n'
    << "run.seed=" << c.seed << '\n'
    << "calibration=" << c.calibration.multistarts << ',' << c.calibration.max_evaluations << ','
    << c.calibration.newton_iterations << ',' << format_double(c.calibration.hessian_step) << ','
    << format_double(c.calibration.start_spread) << ',' << c.lrt << '\n'
    << "simulation=" << c.simulation.n_normal << ',' << c.simulation.n_stress << ','
    << format_double(c.simulation.psi) << ',' << c.simulation.steps << ',' << format_double(c.dt) << ','
    << format_double(c.simulation.y0) << ',' << format_double(c.simulation.z0) << ',' << c.dump_paths << ','
    << c.hedge_book << '\n'
    << "hedge=" << format_double(c.hedge_maturity) << ',' << tranches << '\n'
    << "price=" << format_double(c.state_y) << ',' << format_double(c.state_z) << '\n';
  c.canonical = s.str();
}

}  // namespace affine_cdo
