#include "ectm/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ectm/error.hpp"
#include "ectm/model.hpp"

namespace ectm {

namespace {

constexpr double kKelvinOffset = 273.15;
constexpr std::size_t kMaxRowWarnings = 20;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_number(std::string_view text) {
  std::string s = trim(text);
  std::string_view v = s;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  if (v.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
  if (ec != std::errc() || ptr != v.data() + v.size()) return std::nullopt;
  return value;
}

// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

double round_sig3(double x) {
  const int e = static_cast<int>(std::floor(std::log10(x)));
  const int shift = 2 - e;
  if (shift >= 0) {
    const double p = std::pow(10.0, shift);
    return std::round(x * p) / p;
  }
  const double p = std::pow(10.0, -shift);
  return std::round(x / p) * p;
}

double max_jitter(std::span<const Sample> s, double dt) {
  double worst = 0.0;
  for (std::size_t k = 1; k < s.size(); ++k)
    worst = std::max(worst, std::abs((s[k].t - s[k - 1].t) - dt) / dt);
  return worst;
}

TimeUnit parse_time_unit(const std::string& v) {
  if (v == "s") return TimeUnit::Seconds;
  if (v == "ms") return TimeUnit::Milliseconds;
  if (v == "h") return TimeUnit::Hours;
  throw Error(ErrorKind::Schema, "time_unit must be one of s, ms, h (got '" + v + "')");
}

TempUnit parse_temp_unit(const std::string& v) {
  if (v == "C") return TempUnit::Celsius;
  if (v == "K") return TempUnit::Kelvin;
  throw Error(ErrorKind::Schema, "temp_unit must be C or K (got '" + v + "')");
}

CurrentSign parse_current_sign(const std::string& v) {
  if (v == "as_is") return CurrentSign::AsIs;
  if (v == "flipped") return CurrentSign::Flipped;
  throw Error(ErrorKind::Schema, "current_sign must be as_is or flipped (got '" + v + "')");
}

}  // namespace

// ---- KeyValueConfig ----------------------------------------------------------

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos)
      throw Error(ErrorKind::Schema, where + ": expected 'key = value'");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Schema, where + ": empty key");
    if (value.empty()) throw Error(ErrorKind::Schema, where + ": empty value for '" + key + "'");
    if (!cfg.values_.emplace(key, value).second)
      throw Error(ErrorKind::Schema, where + ": duplicate key '" + key + "'");
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path.string());
  return parse(in, path.string());
}

const std::string& KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw Error(ErrorKind::Schema, source_ + ": missing required key '" + key + "'");
  return it->second;
}

std::optional<std::string> KeyValueConfig::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const auto v = parse_number(get(key));
  if (!v) throw Error(ErrorKind::Schema, source_ + ": '" + key + "' is not a number");
  return *v;
}

std::int64_t KeyValueConfig::get_int(const std::string& key) const {
  const std::string& text = get(key);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::Schema, source_ + ": '" + key + "' is not an integer");
  return value;
}

void KeyValueConfig::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : values_)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorKind::Schema, source_ + ": unknown key '" + key + "'");
}

// ---- ColumnMap ---------------------------------------------------------------

void ColumnMap::validate() const {
  const std::pair<const char*, const std::string*> cols[] = {
      {"time_col", &time_col},
      {"current_col", &current_col},
      {"voltage_col", &voltage_col},
      {"temp_col", &temp_col}};
  for (const auto& [key, value] : cols)
    if (value->empty()) throw Error(ErrorKind::Schema, std::string(key) + " is empty");
  if (ambient_col.has_value() == ambient_const.has_value())
    throw Error(ErrorKind::Schema, "exactly one of ambient_col and ambient_const must be given");
  if (ambient_const && !std::isfinite(*ambient_const))
    throw Error(ErrorKind::Schema, "ambient_const must be finite");
  if (!(q0_ah > 0.0) || !std::isfinite(q0_ah))
    throw Error(ErrorKind::Schema, "q0_ah must be positive");
  if (!(soc0 >= 0.0 && soc0 <= 1.0)) throw Error(ErrorKind::Schema, "soc0 must lie in [0, 1]");
}

ColumnMap ColumnMap::from_config(const KeyValueConfig& config) {
  config.require_known({"time_col", "current_col", "voltage_col", "temp_col", "ambient_col",
                        "ambient_const", "time_unit", "temp_unit", "current_sign", "q0_ah",
                        "soc0"});
  ColumnMap map;
  map.time_col = config.get("time_col");
  map.current_col = config.get("current_col");
  map.voltage_col = config.get("voltage_col");
  map.temp_col = config.get("temp_col");
  map.ambient_col = config.find("ambient_col");
  if (config.has("ambient_const")) map.ambient_const = config.get_double("ambient_const");
  if (auto v = config.find("time_unit")) map.time_unit = parse_time_unit(*v);
  if (auto v = config.find("temp_unit")) map.temp_unit = parse_temp_unit(*v);
  if (auto v = config.find("current_sign")) map.current_sign = parse_current_sign(*v);
  map.q0_ah = config.get_double("q0_ah");
  if (config.has("soc0")) map.soc0 = config.get_double("soc0");
  map.validate();
  return map;
}

ColumnMap ColumnMap::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

ColumnMap ColumnMap::canonical(double q0_ah, double soc0) {
  ColumnMap map;
  map.time_col = "t_s";
  map.current_col = "current_a";
  map.voltage_col = "voltage_v";
  map.temp_col = "temp_c";
  map.ambient_col = "ambient_c";
  map.q0_ah = q0_ah;
  map.soc0 = soc0;
  map.validate();
  return map;
}

std::string ColumnMap::to_config_text() const {
  std::ostringstream os;
  os << "time_col = " << time_col << '\n'
     << "current_col = " << current_col << '\n'
     << "voltage_col = " << voltage_col << '\n'
     << "temp_col = " << temp_col << '\n';
  if (ambient_col) os << "ambient_col = " << *ambient_col << '\n';
  if (ambient_const) os << "ambient_const = " << format_double(*ambient_const) << '\n';
  os << "time_unit = "
     << (time_unit == TimeUnit::Seconds ? "s" : time_unit == TimeUnit::Milliseconds ? "ms" : "h")
     << '\n'
     << "temp_unit = " << (temp_unit == TempUnit::Celsius ? "C" : "K") << '\n'
     << "current_sign = " << (current_sign == CurrentSign::AsIs ? "as_is" : "flipped") << '\n'
     << "q0_ah = " << format_double(q0_ah) << '\n'
     << "soc0 = " << format_double(soc0) << '\n';
  return os.str();
}

// ---- ingestion ---------------------------------------------------------------

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMap& map,
                        std::int64_t cycle_index, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return ingest_csv(in, map, cycle_index, options, path.string());
}

IngestResult ingest_csv(std::istream& in, const ColumnMap& map, std::int64_t cycle_index,
                        const IngestOptions& options, const std::string& source) {
  map.validate();
  IngestResult result;
  IngestReport& report = result.report;

  std::string line;
  if (!std::getline(in, line) || trim(line).empty())
    throw Error(ErrorKind::EmptyCycle, source + ": empty file, no header");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_csv(line);

  auto locate = [&](const char* key, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw Error(ErrorKind::Schema, source + ": column '" + name + "' mapped by " + key +
                                         " is missing");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_t = locate("time_col", map.time_col);
  const std::size_t c_i = locate("current_col", map.current_col);
  const std::size_t c_v = locate("voltage_col", map.voltage_col);
  const std::size_t c_ts = locate("temp_col", map.temp_col);
  const std::optional<std::size_t> c_ta =
      map.ambient_col ? std::optional(locate("ambient_col", *map.ambient_col)) : std::nullopt;

  const double time_scale = map.time_unit == TimeUnit::Milliseconds ? 1e-3
                            : map.time_unit == TimeUnit::Hours      ? 3600.0
                                                                    : 1.0;
  const double sign = map.current_sign == CurrentSign::Flipped ? -1.0 : 1.0;
  auto to_celsius = [&](double x) {
    return map.temp_unit == TempUnit::Kelvin ? x - kKelvinOffset : x;
  };

  std::size_t row_warnings = 0;
  auto drop = [&](std::size_t lineno, const std::string& why) {
    ++report.rows_dropped;
    if (row_warnings++ < kMaxRowWarnings)
      report.warnings.push_back("line " + std::to_string(lineno) + ": " + why);
  };

  std::vector<Sample> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ++report.rows_read;
    const auto fields = split_csv(line);
    auto cell = [&](std::size_t c) -> std::optional<double> {
      if (c >= fields.size()) return std::nullopt;
      auto v = parse_number(fields[c]);
      if (v && !std::isfinite(*v)) return std::nullopt;
      return v;
    };
    const auto t = cell(c_t), i = cell(c_i), v = cell(c_v), ts = cell(c_ts);
    const auto ta = c_ta ? cell(*c_ta) : map.ambient_const;
    if (!t || !i || !v || !ts || !ta) {
      drop(lineno, "unparseable numeric cell");
      continue;
    }
    Sample s{*t * time_scale, sign * *i, *v, to_celsius(*ts),
             c_ta ? to_celsius(*ta) : *ta};
    if (!samples.empty() && !(s.t > samples.back().t)) {
      drop(lineno, "non-monotone timestamp");
      continue;
    }
    samples.push_back(s);
  }
  if (row_warnings > kMaxRowWarnings)
    report.warnings.push_back(std::to_string(row_warnings - kMaxRowWarnings) +
                              " further dropped rows not listed");
  if (samples.size() < 2)
    throw Error(ErrorKind::EmptyCycle,
                source + ": " + std::to_string(samples.size()) + " usable rows; a cycle needs 2");

  const double t0 = samples.front().t;
  if (t0 != 0.0)
    for (auto& s : samples) s.t -= t0;

  CycleData& cycle = result.cycle;
  cycle.samples = std::move(samples);
  cycle.q0 = map.q0_ah;
  cycle.soc0 = map.soc0;
  cycle.cycle_index = cycle_index;
  cycle.meta["source"] = source;

  const double dt = options.resample_dt ? *options.resample_dt : default_resample_dt(cycle.samples);
  report.dt_nominal = dt;
  report.dt_jitter_max = max_jitter(cycle.samples, dt);
  cycle.dt = dt;
  if (report.dt_jitter_max > kGridTolerance) {
    cycle = resample_uniform(cycle, dt);
    report.resampled = true;
    std::ostringstream os;
    os << "sample intervals deviate up to " << report.dt_jitter_max * 100
       << "% from dt = " << dt << " s; resampled to a uniform grid";
    report.warnings.push_back(os.str());
  }

  validate_cycle(cycle);
  report.clamp_events = soc_profile(cycle).clamp_events;
  if (report.clamp_events > 0)
    report.warnings.push_back(std::to_string(report.clamp_events) +
                              " SOC values clamped to [0, 1]; check q0_ah and soc0");
  return result;
}

CycleData resample_uniform(const CycleData& cycle, double dt) {
  const auto& s = cycle.samples;
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorKind::InvalidInterval, "resample interval must be positive");
  if (s.size() < 2) throw Error(ErrorKind::EmptyCycle, "cannot resample fewer than two samples");
  const double t0 = s.front().t;
  const double span = s.back().t - t0;
  if (dt > 0.5 * span) {
    std::ostringstream os;
    os << "resample interval " << dt << " s exceeds half the cycle span " << span << " s";
    throw Error(ErrorKind::InvalidInterval, os.str());
  }

  const auto n = static_cast<std::size_t>(std::floor(span / dt * (1.0 + 1e-12))) + 1;
  CycleData out = cycle;
  out.samples.clear();
  out.samples.reserve(n);
  out.dt = dt;

  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (j + 1 < s.size() && s[j + 1].t <= t) ++j;
    Sample x;
    if (j + 1 >= s.size() || s[j].t == t) {
      x = s[j];
    } else {
      const Sample& a = s[j];
      const Sample& b = s[j + 1];
      const double w = (t - a.t) / (b.t - a.t);
      x.i = a.i + w * (b.i - a.i);
      x.v = a.v + w * (b.v - a.v);
      x.ts = a.ts + w * (b.ts - a.ts);
      x.ta = a.ta + w * (b.ta - a.ta);
    }
    x.t = t;
    out.samples.push_back(x);
  }
  return out;
}

double default_resample_dt(std::span<const Sample> samples) {
  if (samples.size() < 2) throw Error(ErrorKind::EmptyCycle, "need two samples to infer dt");
  std::vector<double> steps;
  steps.reserve(samples.size() - 1);
  for (std::size_t k = 1; k < samples.size(); ++k) steps.push_back(samples[k].t - samples[k - 1].t);
  const std::size_t mid = steps.size() / 2;
  std::nth_element(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(mid), steps.end());
  double median = steps[mid];
  if (steps.size() % 2 == 0) {
    const double lower = *std::max_element(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0)) throw Error(ErrorKind::InvalidInterval, "median sample interval is not positive");
  return round_sig3(median);
}

double capacity_fade(double q_cycle, double q_nominal) {
  if (!(q_nominal > 0.0)) throw Error(ErrorKind::InvalidCapacity, "nominal capacity must be positive");
  return 100.0 * (1.0 - q_cycle / q_nominal);
}

// ---- canonical writer --------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_canonical_csv(std::ostream& out, const CycleData& cycle) {
  out << kCanonicalHeader << '\n';
  for (const Sample& s : cycle.samples) {
    out << format_double(s.t) << ',' << format_double(s.i) << ',' << format_double(s.v) << ','
        << format_double(s.ts) << ',' << format_double(s.ta) << '\n';
  }
}

void write_canonical_csv(const std::filesystem::path& path, const CycleData& cycle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_canonical_csv(out, cycle);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace ectm
