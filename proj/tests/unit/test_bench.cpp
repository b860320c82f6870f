#include <doctest.h>

#include <sstream>

#include "ridge/bench.hpp"
#include "ridge/step_log.hpp"
#include "support.hpp"

using namespace ridge;

namespace {

class Scripted final : public Controller {
 public:
  explicit Scripted(Action a) : a_(a) {}
  std::string_view id() const override { return "scripted"; }
  void reset() override {}
  Action act(const ControllerInput&) override { return a_; }

 private:
  Action a_;
};

VehicleParams hmmwv() { return vehicle_preset("hmmwv", Scale::Full); }

EpisodeResult synthetic(Outcome o, std::optional<double> time, ElevationLevel level, double roll = 0.0) {
  EpisodeResult r;
  r.outcome = o;
  r.traversal_time = time;
  r.elevation_level = level;
  r.roll_series.assign(10, roll);
  r.pitch_series.assign(10, -roll);
  return r;
}

std::string tamper_action(const std::string& log, std::size_t step) {
  std::istringstream in(log);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    if (j.value("type", "") == "step" && j.at("step").get<std::size_t>() == step) {
      j["action"][0] = j["action"][0].get<double>() + 0.25;
      line = j.dump();
    }
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("flat empty world: PID reaches the goal in about 120 m / 3 m/s") {
  const auto env = test::flat_env();
  auto pid = make_controller("pid", ControllerContext{hmmwv()});
  const auto r = run_episode(env, 0, *pid, hmmwv(), EpisodeConfig{});
  REQUIRE(r.outcome == Outcome::Success);
  REQUIRE(r.traversal_time.has_value());
  CHECK(*r.traversal_time == doctest::Approx(40.0).epsilon(0.10));
  CHECK(r.roll_series.size() == r.action_log.size());
  CHECK(r.trajectory.size() == r.action_log.size());
}

TEST_CASE("zero action never succeeds: stuck or timeout") {
  const auto env = test::flat_env();
  Scripted idle(Action{});
  const auto r = run_episode(env, 2, idle, hmmwv(), EpisodeConfig{});
  CHECK((r.outcome == Outcome::Stuck || r.outcome == Outcome::Timeout));
  CHECK_FALSE(r.traversal_time.has_value());
  CHECK(r.duration <= EpisodeConfig{}.timeout + 1e-9);
}

TEST_CASE("driving across a 70 degree side slope rolls over") {
  // Task 0 runs along -x; the plane rises along +y.
  const auto env = test::custom_env([t = std::tan(70.0 * kPi / 180.0)](double, double y) { return t * y; });
  Scripted drive(Action{0.0, 0.6, 0.0});
  const auto r = run_episode(env, 0, drive, hmmwv(), EpisodeConfig{});
  CHECK(r.outcome == Outcome::Rollover);
  double peak = 0.0;
  for (double x : r.roll_series) peak = std::max(peak, std::abs(x));
  CHECK(peak > 60.0 * kPi / 180.0);
}

TEST_CASE("metrics: counting, successes-only times, constant series") {
  std::vector<EpisodeResult> rs;
  rs.push_back(synthetic(Outcome::Success, 30.0, ElevationLevel::Low, 0.1));
  rs.push_back(synthetic(Outcome::Success, 50.0, ElevationLevel::Low, 0.1));
  rs.push_back(synthetic(Outcome::Success, 40.0, ElevationLevel::Medium, 0.1));
  rs.push_back(synthetic(Outcome::Rollover, std::nullopt, ElevationLevel::High, 0.1));
  rs.push_back(synthetic(Outcome::Timeout, std::nullopt, ElevationLevel::High, 0.1));
  const auto m = compute_metrics(rs);
  CHECK(m.overall.trials == 5);
  CHECK(m.overall.success_rate == doctest::Approx(0.6));
  CHECK(m.overall.roll.mean == doctest::Approx(0.1));
  CHECK(m.overall.roll.std == doctest::Approx(0.0));
  CHECK(m.overall.roll.max == doctest::Approx(0.1));
  CHECK(m.overall.pitch.mean == doctest::Approx(0.1));  // absolute values
  const auto& low = m.by_level.at(ElevationLevel::Low);
  CHECK(low.traversal_time.mean == doctest::Approx(40.0));
  CHECK(low.traversal_time.std == doctest::Approx(10.0));
  CHECK(m.by_level.at(ElevationLevel::High).traversal_time.count == 0);
  CHECK(m.by_level.at(ElevationLevel::High).success_rate == 0.0);
  CHECK(m.overall.outcomes.at(std::string(to_string(Outcome::Rollover))) == 1);

  std::size_t sum = 0;
  for (const auto& [level, g] : m.by_level) sum += g.trials;
  CHECK(sum == m.overall.trials);
  CHECK_THROWS_AS(compute_metrics({}), Error);
}

TEST_CASE("benchmark results do not depend on the thread count") {
  std::vector<EnvironmentSpec> envs{test::generated(301, ElevationLevel::Low),
                                    test::generated(302, ElevationLevel::High, ObstacleDensity::Dense)};
  BenchmarkOptions opt;
  opt.controller = "pid";
  opt.tasks = {0, 3, 7};
  opt.episode.timeout = 20.0;
  const auto a = run_benchmark(envs, opt);
  opt.threads = 4;
  const auto b = run_benchmark(envs, opt);
  REQUIRE(a.results.size() == 6);
  REQUIRE(b.results.size() == a.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    CHECK(a.results[i].outcome == b.results[i].outcome);
    CHECK(a.results[i].task_id == b.results[i].task_id);
    CHECK(a.results[i].roll_series == b.results[i].roll_series);
    REQUIRE(a.results[i].trajectory.size() == b.results[i].trajectory.size());
    CHECK(a.results[i].trajectory.back().position == b.results[i].trajectory.back().position);
  }
  CHECK(to_json(a.report) == to_json(b.report));
  CHECK(a.results[1].task_id == 3);
  CHECK(a.results[3].env_seed == 302);

  opt.tasks = {11};
  CHECK_THROWS_AS(run_benchmark(envs, opt), ConfigError);
}

TEST_CASE("replay reproduces a fresh log and pins a tampered step") {
  const auto env = test::generated(303, ElevationLevel::Medium);
  auto pid = make_controller("pid", ControllerContext{hmmwv()});
  EpisodeConfig cfg;
  cfg.timeout = 8.0;
  std::ostringstream log;
  const auto r = run_episode(env, 4, *pid, hmmwv(), cfg, &log);

  std::istringstream fresh(log.str());
  const auto ok = replay_log(fresh, env);
  CHECK(ok.match);
  CHECK(ok.max_divergence == 0.0);
  CHECK(ok.steps == r.action_log.size());

  std::istringstream regenerated(log.str());
  CHECK(replay_log(regenerated).match);

  std::istringstream bad(tamper_action(log.str(), 30));
  const auto v = replay_log(bad, env);
  CHECK_FALSE(v.match);
  CHECK(v.max_divergence > 0.0);
  REQUIRE(v.first_divergent_step.has_value());
  CHECK(*v.first_divergent_step == 30);
}

TEST_CASE("step records round-trip and malformed lines are named") {
  const auto env = test::generated(304, ElevationLevel::High);
  auto sim = settle_vehicle(env, hmmwv(), env.tasks[1].start, env.tasks[1].start_yaw, EpisodeConfig{});
  for (int i = 0; i < 40; ++i) sim.step(Action{0.3, 0.8, 0.0}, 0.005);
  const VehicleState s = sim.state();
  const VehicleState back = state_from_json(nlohmann::json::parse(state_to_json(s).dump()));
  CHECK(back == s);
  const Action a{0.123456789012345, 1.0 / 3.0, 0.0};
  const Action b = action_from_json(nlohmann::json::parse(action_to_json(a).dump()));
  CHECK(a.steering == b.steering);
  CHECK(a.throttle == b.throttle);

  const auto rec = step_record_json(7, 0.7, s, a);
  CHECK(rec.at("type") == "step");
  CHECK(rec.at("step") == 7);

  std::istringstream good("{\"type\": \"step\"}\n\n{\"type\": \"outcome\"}\n");
  CHECK(read_log_lines(good).size() == 2);
  std::istringstream broken("{\"type\": \"step\"}\n{oops\n");
  try {
    read_log_lines(broken);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("reports: csv row counts and export formats") {
  std::vector<EnvironmentSpec> envs{test::generated(305, ElevationLevel::Low)};
  BenchmarkOptions opt;
  opt.tasks = {1, 2};
  opt.episode.timeout = 5.0;
  const auto run = run_benchmark(envs, opt);
  std::ostringstream csv;
  write_episode_csv(run.results, csv);
  std::size_t lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  CHECK(lines == run.results.size() + 1);

  const auto report = report_json(run, opt);
  std::ostringstream exported;
  export_report(report, "csv", exported);
  CHECK(exported.str() == csv.str());
  std::ostringstream js;
  export_report(report, "json", js);
  const auto flat = nlohmann::json::parse(js.str());
  CHECK(flat.at("episodes").size() == run.results.size());
  std::ostringstream sink;
  CHECK_THROWS_AS(export_report(report, "xml", sink), ConfigError);

  std::ostringstream summary;
  write_summary_csv(run.report, summary);
  lines = 0;
  for (char c : summary.str()) lines += c == '\n';
  CHECK(lines == 1 + 1 + run.report.by_level.size());
}

TEST_CASE("episode config scaling and validation") {
  EpisodeConfig c;
  const auto s = c.scaled(0.1);
  CHECK(s.goal_radius == doctest::Approx(0.3));
  CHECK(s.timeout == doctest::Approx(120.0 * std::sqrt(0.1)));
  CHECK(c.substeps() == 20);
  c.timeout = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_outcome(to_string(Outcome::Rollover)) == Outcome::Rollover);
  CHECK_THROWS(parse_outcome("crash"));
}
