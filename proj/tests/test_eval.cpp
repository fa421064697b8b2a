#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "ectm/error.hpp"
#include "ectm/eval.hpp"
#include "ectm/identify.hpp"

using namespace ectm;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

SynthSpec rich_spec(double sigma, std::uint64_t seed, double dt = 1.0) {
  SynthSpec spec{params_to_linear(default_synth_physical(5), dt)};
  spec.noise_sigma = sigma;
  spec.seed = seed;
  spec.dt = dt;
  return spec;
}

std::vector<double> temps(const CycleData& c) {
  std::vector<double> out;
  for (const auto& s : c.samples) out.push_back(s.ts);
  return out;
}

}  // namespace

TEST_CASE("rmse") {
  const std::vector<double> x{1.0, 2.5, -3.0, 4.0};
  CHECK(rmse(x, x) == 0.0);
  std::vector<double> shifted = x;
  for (auto& v : shifted) v += 1.0;
  CHECK(rmse(shifted, x) == Approx(1.0).epsilon(1e-15));
  CHECK(rmse(std::vector<double>{3.0, -4.0}, std::vector<double>{0.0, 0.0}) ==
        Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(rmse(std::vector<double>{3.0, -4.0}, std::vector<double>{0.0, 0.0}) == Approx(3.5355).epsilon(1e-4));
  CHECK_THROWS_AS(rmse(x, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), Error);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(1 + static_cast<std::size_t>(trial) * 97), b(a.size());
    for (auto& v : a) v = n01(rng);
    for (auto& v : b) v = n01(rng);
    CHECK(rmse(a, b) == rmse(b, a));
    CHECK(rmse(a, a) == 0.0);
    const double c = 10.0 * n01(rng);
    auto ac = a, bc = b;
    for (auto& v : ac) v += c;
    for (auto& v : bc) v += c;
    CHECK(rmse(ac, bc) == Approx(rmse(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("max error and correlation") {
  CHECK(max_abs_error(std::vector<double>{1, 2, 3}, std::vector<double>{1, 4, 2.5}) == 2.0);
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(pearson(x, std::vector<double>{2, 4, 6, 8}) == Approx(1.0));
  CHECK(pearson(x, std::vector<double>{8, 6, 4, 2}) == Approx(-1.0));
  CHECK(pearson(x, std::vector<double>{5, 5, 5, 5}) == 0.0);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(20), b(20);
    for (auto& v : a) v = n01(rng);
    for (std::size_t k = 0; k < 20; ++k) b[k] = a[k] * (trial % 2 ? 1.0 : -1.0) + 1e-9 * n01(rng);
    const double r = pearson(a, b);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("synthetic generator") {
  const auto spec = rich_spec(0.05, 31);
  const auto a = synth_generate(spec);
  const auto b = synth_generate(spec);
  CHECK(a.size() == spec.length);
  CHECK(temps(a) == temps(b));
  auto other = spec;
  other.seed = 32;
  CHECK(temps(synth_generate(other)) != temps(a));
  CHECK_NOTHROW(validate_cycle(a, 9));

  auto bad = spec;
  bad.length = 5;
  CHECK_THROWS_AS(synth_generate(bad), Error);
  bad = spec;
  bad.noise_sigma = -1.0;
  CHECK_THROWS_AS(synth_generate(bad), Error);

  SUBCASE("constant current is degenerate and says so") {
    auto cc = rich_spec(0.0, 1);
    cc.input_profile = InputProfile::ConstantCurrent;
    const auto cycle = synth_generate(cc);
    CHECK(cycle.meta.count("warning") == 1);
    CHECK_THROWS_AS(fit_one_shot(cycle), IllConditionedError);
  }
  SUBCASE("cc-cv current tapers after the constant phase") {
    auto s = rich_spec(0.0, 1);
    s.input_profile = InputProfile::CcCvLike;
    s.soc0 = 0.2;
    s.length = 8000;
    const auto cycle = synth_generate(s);
    CHECK(cycle.samples.front().i == Approx(1.5));
    CHECK(cycle.samples.back().i < 0.1 * cycle.samples.front().i);
  }
  SUBCASE("profile names") {
    for (auto p : {InputProfile::ConstantCurrent, InputProfile::CcCvLike, InputProfile::RandomSteps})
      CHECK(parse_input_profile(to_string(p)) == p);
    CHECK_THROWS_AS(parse_input_profile("sawtooth"), Error);
  }
}

TEST_CASE("evaluation against fitted and true models") {
  SUBCASE("teacher forcing on the fit cycle reproduces the training residual") {
    const auto cycle = synth_generate(rich_spec(0.05, 4));
    const auto fit = fit_one_shot(cycle);
    const auto r = evaluate_cycle(cycle, fit.params(), SimMode::TeacherForced);
    CHECK(std::abs(r.rmse - fit.rmse_train) <= 1e-12);
    CHECK(r.mode == SimMode::TeacherForced);
    CHECK(r.max_abs_err >= r.rmse);
  }
  SUBCASE("true parameters on noiseless data") {
    const auto spec = rich_spec(0.0, 6);
    const auto r = evaluate_cycle(synth_generate(spec), spec.theta_true, SimMode::FreeRunning);
    CHECK(r.rmse <= 1e-9);
    CHECK(r.pearson_r == Approx(1.0));
  }
  SUBCASE("noisy loop closes within two sigma on a rich profile") {
    // 10 s sampling against a 300 s thermal time constant; seeded regression.
    constexpr double kSigma = 0.05;
    const auto base = synth_generate(rich_spec(kSigma, 2024, 10.0));
    const auto fit = fit_one_shot(base);
    const auto r = evaluate_cycle(base, fit.params(), SimMode::FreeRunning);
    CHECK(r.rmse <= 2.0 * kSigma);

    // Same true model, different inputs: generalization to another cycle.
    auto later = rich_spec(kSigma, 2025, 10.0);
    later.cycle_index = 40;
    later.ambient = 30.0;
    const auto other = evaluate_cycle(synth_generate(later), fit.params(), SimMode::FreeRunning);
    CHECK(other.cycle_index == 40);
    CHECK(other.rmse <= 2.0 * kSigma);
  }
  SUBCASE("parallel evaluation keeps input order") {
    std::vector<CycleData> cycles;
    for (std::int64_t k : {128, 15, 40}) {
      auto s = rich_spec(0.05, static_cast<std::uint64_t>(k));
      s.cycle_index = k;
      s.length = 2000;
      cycles.push_back(synth_generate(s));
    }
    const auto th = params_to_linear(default_synth_physical(5), 1.0);
    const auto all = evaluate_cycles(cycles, th, SimMode::FreeRunning);
    REQUIRE(all.size() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(all[c].result.cycle_index == cycles[c].cycle_index);
      const auto one = evaluate_cycle(cycles[c], th, SimMode::FreeRunning);
      CHECK(all[c].result.rmse == one.rmse);
      CHECK(all[c].predicted.size() == cycles[c].size());
    }
  }
}

TEST_CASE("profile export") {
  const auto dir = fs::temp_directory_path() / "ectm_test_eval";
  fs::create_directories(dir);

  CycleData a;
  a.cycle_index = 40;
  for (double t : {0.0, 1.0, 2.0}) a.samples.push_back({t, 0.0, 3.7, 25.0 + t / 3.0, 25.0});
  CycleData b = a;
  b.cycle_index = 15;
  const std::vector<double> pa{25.0, 0.1 + 1.0 / 3.0 + 25.0, 1e-17 + 25.7};
  const std::vector<double> pb{24.0, 24.5, 24.25};

  SUBCASE("one cycle gives one row per sample") {
    const std::vector<ProfileSeries> s{{&a, pa}};
    export_profiles(s, dir / "one.csv");
    std::ifstream in(dir / "one.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == kProfileHeader);
  }
  SUBCASE("grouped by cycle and exact on re-read") {
    const std::vector<ProfileSeries> s{{&a, pa}, {&b, pb}};
    export_profiles(s, dir / "two.csv");
    const auto rows = read_profiles(dir / "two.csv");
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].cycle_index == 15);
    CHECK(rows[3].cycle_index == 40);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(rows[k].temp_pred_c == pb[k]);
      CHECK(rows[3 + k].temp_pred_c == pa[k]);
      CHECK(rows[3 + k].temp_true_c == a.samples[k].ts);
      CHECK(rows[3 + k].t_s == a.samples[k].t);
    }
  }
  SUBCASE("errors") {
    const std::vector<ProfileSeries> s{{&a, pa}};
    try {
      export_profiles(s, "/nonexistent_dir/x/profiles.csv");
      FAIL("expected I/O error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
    }
    CHECK_THROWS_AS(export_profiles({}, dir / "none.csv"), Error);
    const std::vector<ProfileSeries> short_pred{{&a, std::span<const double>(pa).first(2)}};
    CHECK_THROWS_AS(export_profiles(short_pred, dir / "short.csv"), Error);
  }
  fs::remove_all(dir);
}
