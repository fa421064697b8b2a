#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"

#include "ectm/datasets.hpp"
#include "ectm/error.hpp"

using namespace ectm;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an ectm::Error");
  return ErrorKind::InvalidInput;
}

KeyValueConfig config_of(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::parse(in);
}

IngestResult ingest_text(const std::string& text, const ColumnMap& map, const IngestOptions& opt = {}) {
  std::istringstream in(text);
  return ingest_csv(in, map, 7, opt);
}

// Vendor-style export with a constant ambient, like the 2 Ah 18650 cells
// cycled at 24 degC.
const char* kNbMap = R"(# NASA-style export
time_col = Time
current_col = Current_measured
voltage_col = Voltage_measured
temp_col = Temperature_measured
ambient_const = 24
q0_ah = 2.0
soc0 = 0
)";

std::string nb_export(std::size_t rows) {
  std::ostringstream os;
  os << "Voltage_measured,Current_measured,Temperature_measured,Time\n";
  for (std::size_t k = 0; k < rows; ++k)
    os << 3.5 + 0.001 * static_cast<double>(k) << ",1.5," << 24.0 + 0.01 * static_cast<double>(k) << ","
       << 10.0 + 2.0 * static_cast<double>(k) << "\n";
  return os.str();
}

}  // namespace

TEST_CASE("key-value configuration grammar") {
  const auto c = config_of("# comment\n\n a = 1 \nb=two words\n");
  CHECK(c.get("a") == "1");
  CHECK(c.get("b") == "two words");
  CHECK(c.get_int("a") == 1);
  CHECK_FALSE(c.find("zz"));
  CHECK(kind_of([] { config_of("a = 1\na = 2\n"); }) == ErrorKind::Schema);
  CHECK(kind_of([] { config_of("a =\n"); }) == ErrorKind::Schema);
  CHECK(kind_of([] { config_of("just text\n"); }) == ErrorKind::Schema);
  CHECK(kind_of([&] { c.get("missing"); }) == ErrorKind::Schema);
  CHECK(kind_of([&] { c.get_double("b"); }) == ErrorKind::Schema);
  CHECK(kind_of([&] { c.require_known({"a"}); }) == ErrorKind::Schema);
}

TEST_CASE("column map validation") {
  const auto ok = ColumnMap::from_config(config_of(kNbMap));
  CHECK(ok.ambient_const == 24.0);
  CHECK(ok.q0_ah == 2.0);
  CHECK(ok.time_unit == TimeUnit::Seconds);

  const std::string base = "time_col = t\ncurrent_col = i\nvoltage_col = v\ntemp_col = T\n";
  CHECK(kind_of([&] { ColumnMap::from_config(config_of(base + "q0_ah = 1\n")); }) == ErrorKind::Schema);
  CHECK(kind_of([&] {
          ColumnMap::from_config(config_of(base + "q0_ah = 1\nambient_col = a\nambient_const = 3\n"));
        }) == ErrorKind::Schema);
  CHECK(kind_of([&] { ColumnMap::from_config(config_of(base + "q0_ah = 0\nambient_const = 3\n")); }) ==
        ErrorKind::Schema);
  CHECK(kind_of([&] {
          ColumnMap::from_config(config_of(base + "q0_ah = 1\nambient_const = 3\nsoc0 = 2\n"));
        }) == ErrorKind::Schema);
  CHECK(kind_of([&] {
          ColumnMap::from_config(config_of(base + "q0_ah = 1\nambient_const = 3\ntime_unit = min\n"));
        }) == ErrorKind::Schema);
  CHECK(kind_of([&] {
          ColumnMap::from_config(config_of(base + "q0_ah = 1\nambient_const = 3\ncolour = red\n"));
        }) == ErrorKind::Schema);

  auto m = ColumnMap::from_config(config_of(base + "q0_ah = 0.74\nambient_col = amb\ntime_unit = ms\n"
                                                   "temp_unit = K\ncurrent_sign = flipped\nsoc0 = 0.25\n"));
  std::istringstream again(m.to_config_text());
  const auto back = ColumnMap::from_config(KeyValueConfig::parse(again));
  CHECK(back.ambient_col == m.ambient_col);
  CHECK(back.time_unit == TimeUnit::Milliseconds);
  CHECK(back.temp_unit == TempUnit::Kelvin);
  CHECK(back.current_sign == CurrentSign::Flipped);
  CHECK(back.q0_ah == 0.74);
  CHECK(back.soc0 == 0.25);
}

TEST_CASE("ingest vendor exports") {
  SUBCASE("constant ambient at 24 degC and 2 Ah") {
    const auto r = ingest_text(nb_export(50), ColumnMap::from_config(config_of(kNbMap)));
    CHECK(r.cycle.size() == 50);
    CHECK(r.cycle.q0 == 2.0);
    CHECK(r.cycle.cycle_index == 7);
    CHECK(r.cycle.dt == 2.0);
    CHECK(r.cycle.samples.front().t == 0.0);
    for (const auto& s : r.cycle.samples) CHECK(s.ta == 24.0);
    CHECK(r.cycle.samples[3].v == Approx(3.503));
    CHECK(r.report.rows_read == 50);
    CHECK(r.report.rows_dropped == 0);
    CHECK_FALSE(r.report.resampled);
  }
  SUBCASE("0.74 Ah pouch cell at 40 degC") {
    ColumnMap m = ColumnMap::canonical(0.74, 0.0);
    m.ambient_col.reset();
    m.ambient_const = 40.0;
    const auto r = ingest_text("t_s,current_a,voltage_v,temp_c\n0,0.74,3.9,40.5\n1,0.74,3.91,40.6\n2,0.74,3.92,40.7\n", m);
    CHECK(r.cycle.q0 == 0.74);
    for (const auto& s : r.cycle.samples) CHECK(s.ta == 40.0);
  }
  SUBCASE("kelvin, milliseconds, hours and sign flips") {
    ColumnMap m = ColumnMap::canonical(1.0, 0.5);
    m.temp_unit = TempUnit::Kelvin;
    m.time_unit = TimeUnit::Milliseconds;
    m.current_sign = CurrentSign::Flipped;
    const auto r = ingest_text("t_s,current_a,voltage_v,temp_c,ambient_c\n0,2,3.7,298.15,298.15\n"
                               "500,2,3.7,298.15,300.15\n1000,2,3.7,298.15,298.15\n", m);
    CHECK(r.cycle.dt == 0.5);
    CHECK(r.cycle.samples[2].t == 1.0);
    for (const auto& s : r.cycle.samples) {
      CHECK(s.ts == Approx(25.0).epsilon(1e-12));
      CHECK(s.i == -2.0);
    }
    CHECK(r.cycle.samples[1].ta == Approx(27.0).epsilon(1e-12));

    m = ColumnMap::canonical(1.0, 0.5);
    m.time_unit = TimeUnit::Hours;
    const auto h = ingest_text("t_s,current_a,voltage_v,temp_c,ambient_c\n0,1,3.7,25,25\n0.5,1,3.7,25,25\n1,1,3.7,25,25\n", m);
    CHECK(h.cycle.dt == 1800.0);
  }
  SUBCASE("missing column names its mapping key") {
    try {
      ingest_text("Current_measured,Temperature_measured,Time\n1,2,3\n", ColumnMap::from_config(config_of(kNbMap)));
      FAIL("expected schema error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Schema);
      CHECK(std::string(e.what()).find("voltage_col") != std::string::npos);
    }
  }
  SUBCASE("empty input") {
    const auto m = ColumnMap::canonical(1.0, 0.0);
    CHECK(kind_of([&] { ingest_text("", m); }) == ErrorKind::EmptyCycle);
    CHECK(kind_of([&] { ingest_text(std::string(kCanonicalHeader) + "\n", m); }) == ErrorKind::EmptyCycle);
  }
  SUBCASE("bad cells and backwards timestamps are dropped with line numbers") {
    const std::string text = std::string(kCanonicalHeader) +
                             "\n0,1,3.7,25,25\n1,abc,3.7,25,25\n1,1,3.7,25,25\n0.5,1,3.7,25,25\n2,1,3.7,25,25\n"
                             "3,1,3.7,nan,25\n3,1,3.7,25,25\n";
    const auto r = ingest_text(text, ColumnMap::canonical(1.0, 0.0));
    CHECK(r.cycle.size() == 4);
    CHECK(r.report.rows_read == 7);
    CHECK(r.report.rows_dropped == 3);
    REQUIRE(r.report.warnings.size() >= 3);
    CHECK(r.report.warnings[0].find("line 3") != std::string::npos);
    CHECK(r.report.warnings[1].find("line 5") != std::string::npos);
    CHECK(r.report.rows_read >= r.report.rows_dropped);
  }
  SUBCASE("jittered grid is resampled to the median interval") {
    std::ostringstream os;
    os << kCanonicalHeader << "\n";
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jit(-0.2, 0.2);
    for (int k = 0; k < 200; ++k) os << (k == 0 ? 0.0 : k + jit(rng)) << ",1,3.7,25,25\n";
    const auto r = ingest_text(os.str(), ColumnMap::canonical(2.0, 0.0));
    CHECK(r.report.resampled);
    CHECK(r.report.dt_jitter_max > kGridTolerance);
    CHECK(r.cycle.dt == Approx(1.0).epsilon(0.01));
    CHECK(format_double(r.cycle.dt).size() <= 5);
    CHECK_NOTHROW(validate_cycle(r.cycle));
  }
  SUBCASE("clamped SOC is reported") {
    const auto r = ingest_text(std::string(kCanonicalHeader) + "\n0,3600,3.7,25,25\n1,3600,3.7,25,25\n2,3600,3.7,25,25\n",
                               ColumnMap::canonical(1.0, 0.5));
    CHECK(r.report.clamp_events == 2);
    CHECK_FALSE(r.report.warnings.empty());
  }
  SUBCASE("missing file is an I/O error") {
    CHECK(kind_of([] { ingest_csv("/nonexistent/cycle_1.csv", ColumnMap::canonical(1.0, 0.0), 1); }) ==
          ErrorKind::Io);
  }
}

TEST_CASE("canonical CSV round trip is byte-identical") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::ostringstream os;
  os << kCanonicalHeader << "\n";
  for (int k = 0; k < 300; ++k)
    os << format_double(0.1 * k) << ',' << format_double(n01(rng)) << ',' << format_double(3.7 + 0.1 * n01(rng))
       << ',' << format_double(25.0 + n01(rng)) << ',' << format_double(24.0 + 1e-7 * n01(rng)) << "\n";
  const auto r = ingest_text(os.str(), ColumnMap::canonical(2.0, 0.5));
  std::ostringstream back;
  write_canonical_csv(back, r.cycle);
  CHECK(back.str() == os.str());

  const auto again = ingest_text(back.str(), ColumnMap::canonical(2.0, 0.5));
  CHECK(again.cycle.samples.size() == r.cycle.samples.size());
  for (std::size_t k = 0; k < r.cycle.size(); ++k) {
    CHECK(again.cycle.samples[k].ts == r.cycle.samples[k].ts);
    CHECK(again.cycle.samples[k].i == r.cycle.samples[k].i);
  }

  const auto dir = fs::temp_directory_path() / "ectm_test_datasets";
  fs::create_directories(dir);
  write_canonical_csv(dir / "cycle_3.csv", r.cycle);
  const auto from_file = ingest_csv(dir / "cycle_3.csv", ColumnMap::canonical(2.0, 0.5), 3);
  std::ostringstream third;
  write_canonical_csv(third, from_file.cycle);
  CHECK(third.str() == os.str());
  fs::remove_all(dir);
}

TEST_CASE("format_double is the shortest exact text") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(25.0) == "25");
  CHECK(format_double(-0.5) == "-0.5");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng) * std::pow(10.0, static_cast<double>(k % 20) - 10.0);
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("resample_uniform") {
  CycleData c;
  c.q0 = 1.0;
  for (int k = 0; k < 50; ++k) {
    const double t = k;
    c.samples.push_back({t, std::sin(t), 3.7 + 0.01 * t, 25.0 + 0.1 * t, 24.0});
  }
  SUBCASE("uniform input is unchanged and resampling is idempotent") {
    const auto r = resample_uniform(c, 1.0);
    REQUIRE(r.size() == c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      CHECK(std::abs(r.samples[k].i - c.samples[k].i) <= 1e-12);
      CHECK(std::abs(r.samples[k].ts - c.samples[k].ts) <= 1e-12);
    }
    const auto rr = resample_uniform(r, 1.0);
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(std::abs(rr.samples[k].v - r.samples[k].v) <= 1e-12);
  }
  SUBCASE("linear data is interpolated exactly") {
    CycleData g;
    g.q0 = 1.0;
    for (double t : {0.0, 1.0, 3.0}) g.samples.push_back({t, 2.0 * t, 3.0 + t, 20.0 + 4.0 * t, 25.0});
    const auto r = resample_uniform(g, 1.0);
    REQUIRE(r.size() == 4);
    CHECK(r.samples[2].t == 2.0);
    CHECK(r.samples[2].i == Approx(4.0));
    CHECK(r.samples[2].ts == Approx(28.0));
    CHECK(r.dt == 1.0);
  }
  SUBCASE("jittered sinusoid stays within the interpolation error bound") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> jit(-0.2, 0.2);
    const double w = 0.3;
    CycleData g;
    g.q0 = 1.0;
    double widest = 0.0;
    for (int k = 0; k < 400; ++k) {
      const double t = k == 0 ? 0.0 : k + jit(rng);
      if (!g.samples.empty()) widest = std::max(widest, t - g.samples.back().t);
      g.samples.push_back({t, 0.0, 3.7, std::sin(w * t), 25.0});
    }
    const auto r = resample_uniform(g, 1.0);
    const double bound = w * w * widest * widest / 8.0;
    double worst = 0.0;
    for (const auto& s : r.samples) worst = std::max(worst, std::abs(s.ts - std::sin(w * s.t)));
    CHECK(worst <= bound);
    CHECK(r.samples.back().t <= g.samples.back().t);
  }
  SUBCASE("interval longer than half the span") {
    CHECK(kind_of([&] { resample_uniform(c, 30.0); }) == ErrorKind::InvalidInterval);
    CHECK(kind_of([&] { resample_uniform(c, 0.0); }) == ErrorKind::InvalidInterval);
  }
  SUBCASE("default interval is the median rounded to three digits") {
    std::vector<Sample> s;
    for (double t : {0.0, 0.12345, 0.2469, 0.37035, 1.0}) s.push_back({t, 0, 0, 0, 0});
    CHECK(default_resample_dt(s) == 0.123);
  }
}

TEST_CASE("capacity fade") {
  CHECK(capacity_fade(2.0, 2.0) == 0.0);
  CHECK(capacity_fade(0.7584 * 2.0, 2.0) == Approx(24.16).epsilon(1e-12));
  CHECK(1.0 - 24.16 / 100.0 == Approx(0.7584).epsilon(1e-12));
  CHECK(capacity_fade((1.0 - 0.274) * 0.74, 0.74) == Approx(27.40).epsilon(1e-12));
  CHECK(kind_of([] { capacity_fade(1.0, 0.0); }) == ErrorKind::InvalidCapacity);
}
