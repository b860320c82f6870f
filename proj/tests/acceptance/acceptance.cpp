// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `ridge_acceptance 2 5`.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "oracles.hpp"
#include "ridge/bench.hpp"
#include "ridge/datasets.hpp"
#include "ridge/environment_io.hpp"
#include "ridge/mppi.hpp"
#include "ridge/path_planner.hpp"
#include "ridge/rng.hpp"
#include "ridge/soil.hpp"
#include "ridge/step_log.hpp"
#include "ridge/worldgen.hpp"
#include "support.hpp"

using namespace ridge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const VehicleParams& hmmwv() {
  static const VehicleParams p = vehicle_preset("hmmwv", Scale::Full);
  return p;
}

EnvironmentSpec generate(std::uint64_t seed, std::optional<ElevationLevel> level = std::nullopt,
                         std::optional<ObstacleDensity> density = std::nullopt) {
  WorldGenConfig c;
  c.seed = seed;
  c.elevation_level = level;
  c.obstacle_density = density;
  return generate_environment(c);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::set<fs::path> files;
  for (const auto& root : {a, b}) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files.insert(fs::relative(e.path(), root));
    }
  }
  for (const auto& f : files) {
    if (!fs::exists(a / f) || !fs::exists(b / f) || slurp(a / f) != slurp(b / f)) return false;
  }
  return !files.empty();
}

// 1 -------------------------------------------------------------------------
Verdict determinism() {
  Verdict v;
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "ridge_acceptance_determinism";
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    for (std::uint64_t s = 0; s < 10; ++s) write_environment(generate(700 + s), root / run / fmt::format("env_{}", s));
  }
  const bool identical = same_tree(root / "a", root / "b");
  v.require(identical, "regenerated directories differ");
  fs::remove_all(root);

  EpisodeConfig cfg;
  cfg.timeout = 30.0;
  double worst = 0.0;
  int matched = 0;
  for (std::uint64_t s = 0; s < 2; ++s) {
    const auto env = generate(710 + s);
    for (int task = 0; task < kTaskCount; ++task) {
      auto pid = make_controller("pid", ControllerContext{hmmwv()});
      std::ostringstream log;
      run_episode(env, task, *pid, hmmwv(), cfg, &log);
      std::istringstream in(log.str());
      const auto verdict = replay_log(in);  // regenerates the world from the header
      worst = std::max(worst, verdict.max_divergence);
      matched += verdict.match;
    }
  }
  v.require(matched == 20 && worst == 0.0, fmt::format("{}/20 replays matched, max divergence {}", matched, worst));
  const double took = seconds_since(t0);
  v.require(took < 120.0, fmt::format("took {:.1f} s", took));
  if (v.pass) v.detail = fmt::format("10 environments byte-identical; 20/20 replays, divergence 0 ({:.1f} s)", took);
  return v;
}

// 2 -------------------------------------------------------------------------
Verdict generator_constraints() {
  Verdict v;
  const auto t0 = Clock::now();
  std::size_t tasks = 0, violations = 0;
  auto fail = [&](const std::string& what) {
    if (violations++ < 5) v.require(false, what);
  };
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto env = generate(seed);
    for (const auto& t : env.tasks) {
      ++tasks;
      const double d = (t.goal - t.start).norm();
      if (std::abs(d - 120.0) > 0.5) fail(fmt::format("seed {} task {} separation {}", seed, t.task_id, d));
    }
    const std::size_t want = env.obstacles.density == ObstacleDensity::Sparse   ? 10
                             : env.obstacles.density == ObstacleDensity::Medium ? 20
                                                                                 : 40;
    const auto& obs = env.obstacles.obstacles;
    if (obs.size() != want) fail(fmt::format("seed {}: {} obstacles, expected {}", seed, obs.size(), want));
    for (std::size_t i = 0; i < obs.size(); ++i) {
      for (std::size_t j = i + 1; j < obs.size(); ++j) {
        if ((obs[i].center - obs[j].center).norm() < 10.0) fail(fmt::format("seed {}: obstacles {} and {} too close", seed, i, j));
      }
      for (const auto& t : env.tasks) {
        if ((obs[i].center - t.start).norm() < 10.0 || (obs[i].center - t.goal).norm() < 10.0) {
          fail(fmt::format("seed {}: obstacle {} near task {} endpoint", seed, i, t.task_id));
        }
      }
    }
    if (static_cast<int>(env.semantics.patches.size()) != 16 * 16) fail(fmt::format("seed {}: patch count", seed));
  }
  if (16 * 8 + 1 != kGridCells || kPatchesPerAxis * (kPatchCells - 1) + 1 != kGridCells) fail("patch tiling identity");
  if (tasks != 1000) fail(fmt::format("{} tasks", tasks));
  const double took = seconds_since(t0);
  v.require(took < 300.0, fmt::format("took {:.1f} s", took));
  if (v.pass) v.detail = fmt::format("100 environments, 1000 tasks, zero violations ({:.1f} s)", took);
  return v;
}

// 3 -------------------------------------------------------------------------
double variance(const std::vector<double>& x) {
  double m = 0.0;
  for (double z : x) m += z;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double z : x) s += (z - m) * (z - m);
  return s / static_cast<double>(x.size());
}

Verdict elevation_statistics() {
  Verdict v;
  int ordered = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::array<std::vector<double>, 3> field;
    for (auto level : kElevationLevels) {
      WorldGenConfig c;
      c.seed = seed;
      c.elevation_level = level;
      field[static_cast<std::size_t>(level)] = generate_elevation(c).elevations;
    }
    const auto& low = field[0];
    const auto& high = field[2];
    ordered += variance(high) > variance(field[1]) && variance(field[1]) > variance(low);
    for (std::size_t i = 0; i < low.size(); ++i) {
      if (std::abs(low[i]) < 1e-6) continue;
      worst_ratio = std::max(worst_ratio, std::abs(high[i] / low[i] - 10.0 / 3.0));
    }
  }
  v.require(ordered == 100, fmt::format("variance ordered in {}/100 triples", ordered));
  v.require(worst_ratio <= 1e-9, fmt::format("High/Low ratio off by {:.3g}", worst_ratio));
  if (v.pass) v.detail = fmt::format("Var(H) > Var(M) > Var(L) in 100/100; |High/Low - 10/3| <= {:.2g}", worst_ratio);
  return v;
}

// 4 -------------------------------------------------------------------------
// Downslope speed averaged over [t0, t1] for a braked vehicle facing uphill.
double slide_speed(double theta, double mu, double t0, double t1) {
  const auto env = test::incline_env(theta, mu);
  Simulator sim(env, hmmwv(), spawn_state(hmmwv(), env, {}, Vec2(64, 64), 0.0));
  double x0 = 0.0;
  for (int i = 1; i * kDefaultDt <= t1 + 1e-12; ++i) {
    sim.step({0.0, 0.0, 1.0});
    if (std::abs(i * kDefaultDt - t0) < 1e-9) x0 = sim.state().position.x();
  }
  return (x0 - sim.state().position.x()) / (t1 - t0);
}

Verdict physics() {
  Verdict v;
  const auto t0 = Clock::now();
  {
    const auto env = test::flat_env();
    Simulator sim(env, hmmwv(), spawn_state(hmmwv(), env, {}, Vec2(64, 64), 0.3));
    const Vec3 start = sim.state().position;
    for (int i = 0; i < 1000; ++i) sim.step({});
    double normal = 0.0;
    for (const auto& w : sim.diagnostics().wheels) normal += w.normal_force;
    const double drift = (sim.state().position - start).norm();
    const double weight = hmmwv().mass * kGravity;
    v.require(drift < 1e-3, fmt::format("drift {:.3g} m", drift));
    v.require(std::abs(normal - weight) <= 0.01 * weight, fmt::format("normal sum {:.1f} N vs weight {:.1f} N", normal, weight));
  }
  const double deg = kPi / 180.0;
  for (double mu : {0.3, 0.5, 0.8, 1.0}) {
    const double critical = std::atan(mu);
    // Holding is judged over 10 s once the landing transient after spawn has died out.
    const double hold = slide_speed(critical - 2.0 * deg, mu, 3.0, 13.0);
    const double slide = slide_speed(critical + 2.0 * deg, mu, 0.25, 0.5);
    v.require(std::abs(hold) < 5e-4, fmt::format("mu {}: creeps {:.2g} m/s below the cone", mu, hold));
    v.require(slide > 0.2, fmt::format("mu {}: only {:.2g} m/s above the cone", mu, slide));
  }
  {
    ScmParams p{0.0, 2e5, 1.0, 0.0, 1e4, 0.5, SoilLevel::Medium};
    v.require(scm_pressure(0.0, p, 0.3) == 0.0, "pressure at zero sinkage");
    v.require(std::abs(scm_pressure(0.05, p, 0.3) - 1e4) < 1e-8, "k_phi z example");
    p.k_c = 1e3;
    p.k_phi = 1.5e5;
    for (double n : {0.5, 1.0, 1.3}) {
      p.n_exp = n;
      const double ratio = scm_pressure(0.08, p, 0.2) / scm_pressure(0.04, p, 0.2);
      v.require(std::abs(ratio - std::pow(2.0, n)) < 1e-12, fmt::format("power law n = {}", n));
    }
  }
  {
    Rng rng(2024);
    int less = 0;
    for (int trial = 0; trial < 100; ++trial) {
      ScmParams p = SemanticsTable::defaults().soil(static_cast<SoilLevel>(rng.uniform_int(0, 2)));
      p.hardening = rng.uniform(1.0, 20.0);
      p.damping = rng.uniform(5e3, 5e4);
      const double load = rng.uniform(2e3, 2e4);
      const int steps = rng.uniform_int(20, 200);
      SoilState soil;
      auto pass = [&] {
        const double before = soil.sinkage(0);
        for (int i = 0; i < steps; ++i) {
          soil.press(0, load, p, 0.32, 0.47, 0.005);
          soil.advance();
        }
        return soil.sinkage(0) - before;
      };
      const double first = pass();
      soil.advance();
      soil.advance();
      less += first > 0.0 && pass() < first;
    }
    v.require(less == 100, fmt::format("hardening held in {}/100 trials", less));
  }
  const double took = seconds_since(t0);
  v.require(took < 60.0, fmt::format("took {:.1f} s", took));
  if (v.pass) v.detail = fmt::format("equilibrium, friction cone +-2 deg, Bekker checks, hardening 100/100 ({:.1f} s)", took);
  return v;
}

// 5 -------------------------------------------------------------------------
Verdict planner() {
  Verdict v;
  int mismatches = 0, collisions = 0, checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto env = generate(900 + seed, std::nullopt, seed % 2 ? ObstacleDensity::Dense : ObstacleDensity::Medium);
    const auto grid = planning_grid(env.heightfield, env.obstacles.obstacles, env.path_clearance);
    for (const auto& t : env.tasks) {
      const GridCell s{static_cast<int>(std::lround(t.start.x())), static_cast<int>(std::lround(t.start.y()))};
      const GridCell g{static_cast<int>(std::lround(t.goal.x())), static_cast<int>(std::lround(t.goal.y()))};
      const auto path = astar(grid, s, g);
      const double oracle = test::dijkstra_cost(grid, s, g);
      mismatches += !path || std::abs(path->cost() - oracle) > 1e-9 * oracle;
      ++checked;
      for (std::size_t i = 0; i + 1 < t.global_path.size(); ++i) {
        for (const auto& o : env.obstacles.obstacles) {
          const double d = test::segment_point_distance(t.global_path[i], t.global_path[i + 1], o.center);
          collisions += d < o.footprint_radius + env.path_clearance - 1e-9;
        }
      }
    }
  }
  v.require(mismatches == 0, fmt::format("A* differs from Dijkstra on {}/{} tasks", mismatches, checked));
  v.require(collisions == 0, fmt::format("{} path segments violate the inflation", collisions));

  const auto w = mppi_weights(std::vector<double>{0.0, std::log(2.0)}, 1.0);
  v.require(std::abs(w[0] - 2.0 / 3.0) < 1e-12 && std::abs(w[1] - 1.0 / 3.0) < 1e-12, "softmax {2/3, 1/3}");
  Rng rng(31);
  double worst_sum = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> c(static_cast<std::size_t>(rng.uniform_int(1, 1024)));
    for (double& x : c) x = rng.uniform(0.0, 1e4);
    double sum = 0.0;
    for (double x : mppi_weights(c, rng.uniform(1e-3, 10.0))) sum += x;
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  v.require(worst_sum <= 1e-12, fmt::format("weights sum off by {:.3g}", worst_sum));

  int improved = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    MppiSampling s;
    s.rollouts = 512;
    s.lambda = 0.1;
    s.seed = seed;
    std::vector<MppiControl> nominal(15, MppiControl::Zero());
    const SequenceCost cost = [](std::span<const MppiControl> u, int) {
      double c = 0.0;
      for (std::size_t t = 0; t < u.size(); ++t) c += (u[t] - MppiControl(0.5 * std::sin(0.3 * t), -0.4)).squaredNorm();
      return c;
    };
    double first = 0.0, last = 0.0;
    for (int it = 0; it < 20; ++it) {
      s.iteration = static_cast<std::uint64_t>(it);
      const auto r = mppi_iterate(s, nominal, cost, true);
      double mean = 0.0;
      for (double c : r.costs) mean += c;
      mean /= static_cast<double>(r.costs.size());
      (it == 0 ? first : last) = mean;
    }
    improved += last < first;
  }
  v.require(improved >= 95, fmt::format("MPPI improved on {}/100 seeds", improved));
  if (v.pass) {
    v.detail = fmt::format("A* = Dijkstra on {} tasks, paths clear, weights exact, MPPI improved {}/100", checked, improved);
  }
  return v;
}

// 6 -------------------------------------------------------------------------
Verdict desk_benchmark() {
  Verdict v;
  const auto t0 = Clock::now();
  std::map<ElevationLevel, std::vector<EnvironmentSpec>> suite;
  for (auto level : kElevationLevels) {
    for (std::uint64_t i = 0; i < 10; ++i) suite[level].push_back(generate(1000 + i, level));
  }
  std::string table;
  for (const auto& name : controller_names()) {
    std::map<ElevationLevel, GroupMetrics> m;
    for (auto level : kElevationLevels) {
      BenchmarkOptions opt;
      opt.controller = name;
      m[level] = run_benchmark(suite[level], opt).report.overall;
    }
    const auto& lo = m[ElevationLevel::Low];
    const auto& mid = m[ElevationLevel::Medium];
    const auto& hi = m[ElevationLevel::High];
    if (!table.empty()) table += "; ";
    table += fmt::format("{} sr {:.2f}/{:.2f}/{:.2f} roll {:.3f}/{:.3f}/{:.3f} pitch {:.3f}/{:.3f}/{:.3f}", name,
                         lo.success_rate, mid.success_rate, hi.success_rate, lo.roll.mean, mid.roll.mean, hi.roll.mean,
                         lo.pitch.mean, mid.pitch.mean, hi.pitch.mean);
    v.require(lo.roll.mean < mid.roll.mean && mid.roll.mean < hi.roll.mean, name + ": |roll| not increasing");
    v.require(lo.pitch.mean < mid.pitch.mean && mid.pitch.mean < hi.pitch.mean, name + ": |pitch| not increasing");
    if (name == "pid") {
      v.require(lo.success_rate >= 0.8, fmt::format("pid Low success {:.2f}", lo.success_rate));
      v.require(lo.success_rate > hi.success_rate, "pid Low not above High");
    }
  }
  const double took = seconds_since(t0);
  v.require(took < 1800.0, fmt::format("took {:.1f} s", took));
  v.detail = (v.pass ? "" : v.detail + " | ") + table + fmt::format(" ({:.1f} s)", took);
  return v;
}

// 7 -------------------------------------------------------------------------
Verdict datasets() {
  Verdict v;
  {
    const auto env = test::flat_env();
    ExplorationConfig cfg;
    cfg.seed = 4;
    cfg.duration = 60.0;
    cfg.first_pose = Eigen::Vector3d(64, 64, 0.0);
    std::stringstream out;
    record_random_exploration(env, hmmwv(), cfg, out);
    double worst = 0.0;
    for (const auto& r : read_log_lines(out)) {
      if (r.at("type") != "step" || r.at("t").get<double>() <= 5.0) continue;
      const auto& lv = r.at("linear_velocity");
      worst = std::max(worst, std::abs(std::hypot(lv[0].get<double>(), lv[1].get<double>()) - 2.0));
    }
    v.require(worst <= 0.3, fmt::format("exploration speed off by {:.2f} m/s", worst));
  }
  {
    const auto env = test::custom_env([](double x, double y) { return 14.0 * std::sin(x / 6.0) * std::cos(y / 7.0); });
    ExplorationConfig cfg;
    cfg.seed = 2;
    cfg.duration = 120.0;
    cfg.target_speed = 6.0;
    std::stringstream out;
    record_random_exploration(env, hmmwv(), cfg, out);
    const auto recs = read_log_lines(out);
    // Terminal step time and length of every failure trial, read off the stream directly.
    std::vector<std::pair<double, std::size_t>> expected;
    std::vector<double> times;
    for (const auto& r : recs) {
      const std::string type = r.at("type");
      if (type == "initial") times.clear();
      if (type == "step") times.push_back(r.at("t").get<double>());
      if (type == "outcome") {
        const auto o = parse_outcome(r.at("outcome").get<std::string>());
        if ((o == Outcome::Rollover || o == Outcome::Stuck) && !times.empty()) {
          std::size_t n = 0;
          for (double t : times) n += t > times.back() - 10.0 + 1e-9;
          expected.emplace_back(times.back(), n);
        }
      }
    }
    const auto clips = extract_failures(recs);
    bool exact = clips.size() == expected.size() && !clips.empty();
    for (std::size_t i = 0; exact && i < clips.size(); ++i) {
      exact = clips[i].end_time == expected[i].first && clips[i].records.back().at("t").get<double>() == expected[i].first &&
              clips[i].records.size() == expected[i].second &&
              clips[i].records.size() == std::min<std::size_t>(100, static_cast<std::size_t>(std::lround(expected[i].first * 10)));
    }
    v.require(exact, fmt::format("{} clips vs {} failure trials, boundaries inexact", clips.size(), expected.size()));
  }
  {
    const auto env = generate(61, ElevationLevel::Medium);
    RlSession direct({env});
    std::ostringstream requests;
    std::vector<Transition> expected;
    const Observation first = direct.reset(0, 2, 5);
    requests << nlohmann::json{{"op", "reset"}, {"env_id", 0}, {"task_id", 2}, {"seed", 5}}.dump() << '\n';
    for (int k = 0; k < 50; ++k) {
      const Action a{std::sin(0.3 * k), 0.7, 0.0};
      expected.push_back(direct.step(a));
      requests << nlohmann::json{{"op", "step"}, {"action", {a.steering, a.throttle, a.braking}}}.dump() << '\n';
      if (expected.back().done) break;
    }
    RlSession served({env});
    std::istringstream in(requests.str());
    std::stringstream out;
    serve_protocol(served, in, out);
    std::vector<nlohmann::json> replies;
    for (std::string line; std::getline(out, line);) replies.push_back(nlohmann::json::parse(line));
    bool same = replies.size() == expected.size() + 1 && observation_from_json(replies[0].at("observation")) == first;
    for (std::size_t k = 0; same && k < expected.size(); ++k) {
      same = transition_from_json(replies[k + 1].at("transition")) == expected[k];
    }
    v.require(same, "protocol transitions differ from the in-process API");
  }
  if (v.pass) v.detail = "exploration speed 2 +- 0.3 m/s, clip boundaries exact, protocol round trip identical";
  return v;
}

// 8 -------------------------------------------------------------------------
Verdict throughput() {
  Verdict v;
  auto env = generate(1234, ElevationLevel::Medium, ObstacleDensity::Sparse);
  for (auto& p : env.semantics.patches) {
    p.semantic_class = SemanticClass::Concrete;
    p.scm.reset();
    p.friction = 0.8;
    p.restitution = kRigidRestitution;
  }
  double simulated = 0.0;
  const auto t0 = Clock::now();
  for (int task = 0; task < kTaskCount; ++task) {
    auto pid = make_controller("pid", ControllerContext{hmmwv()});
    EpisodeConfig cfg;
    cfg.log_every_step = false;
    simulated += run_episode(env, task, *pid, hmmwv(), cfg).duration + cfg.settle_time;
  }
  const double wall = seconds_since(t0);
  const double rtf = simulated / wall;
  v.require(rtf >= 1.0, fmt::format("real-time factor {:.2f}", rtf));
  v.detail = fmt::format("real-time factor {:.1f} ({:.0f} simulated s in {:.2f} wall s, one thread)", rtf, simulated, wall);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"determinism", determinism},
      {"generator constraints", generator_constraints},
      {"elevation statistics", elevation_statistics},
      {"physics", physics},
      {"planner", planner},
      {"desk-scale benchmark", desk_benchmark},
      {"datasets", datasets},
      {"throughput", throughput},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("threw: ") + e.what();
    }
    failed += !v.pass;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
