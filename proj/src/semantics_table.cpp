#include "ridge/semantics_table.hpp"

#include <cmath>
#include <fstream>

namespace ridge {

namespace {

constexpr std::array<std::string_view, 3> kLevelNames = {"soft", "medium", "hard"};

nlohmann::json scm_to_json(const ScmParams& p) {
  return {{"k_c", p.k_c},
          {"k_phi", p.k_phi},
          {"n_exp", p.n_exp},
          {"hardening", p.hardening},
          {"damping", p.damping},
          {"traction", p.traction}};
}

ScmParams scm_from_json(const nlohmann::json& j, SoilLevel level) {
  ScmParams p;
  p.k_c = j.at("k_c").get<double>();
  p.k_phi = j.at("k_phi").get<double>();
  p.n_exp = j.at("n_exp").get<double>();
  p.hardening = j.at("hardening").get<double>();
  p.damping = j.at("damping").get<double>();
  p.traction = j.at("traction").get<double>();
  p.level = level;
  if (!(p.k_phi > 0.0) || p.n_exp < 0.5 || p.n_exp > 2.0 || p.hardening < 0.0 || !(p.damping > 0.0)) {
    throw ConfigError("soil level '" + std::string(to_string(level)) + "' violates k_phi > 0, n in [0.5, 2], hardening >= 0, damping > 0");
  }
  return p;
}

}  // namespace

SemanticsTable SemanticsTable::defaults() {
  SemanticsTable t;
  t.class_weights.fill(1.0);
  auto set = [&](SemanticClass c, double mean, double sd) {
    t.friction[static_cast<std::size_t>(c)] = {mean, sd};
  };
  set(SemanticClass::Concrete, 0.90, 0.05);
  set(SemanticClass::Rock, 0.80, 0.05);
  set(SemanticClass::Gravel, 0.60, 0.08);
  set(SemanticClass::Dirt, 0.55, 0.08);
  set(SemanticClass::Wood, 0.50, 0.05);
  set(SemanticClass::Grass, 0.45, 0.08);
  set(SemanticClass::Clay, 0.40, 0.08);
  for (auto& w : t.soil_level_weights) w = {1.0, 1.0, 1.0};
  t.soil_levels[0] = {1.0e3, 1.5e5, 1.1, 3.0, 2.0e4, 0.45, SoilLevel::Soft};
  t.soil_levels[1] = {5.0e3, 6.0e5, 1.0, 5.0, 4.0e4, 0.55, SoilLevel::Medium};
  t.soil_levels[2] = {2.0e4, 2.0e6, 0.9, 8.0, 8.0e4, 0.65, SoilLevel::Hard};
  return t;
}

SemanticsTable SemanticsTable::from_json(const nlohmann::json& j) {
  SemanticsTable t = defaults();
  if (j.contains("friction_clamp")) {
    t.friction_min = j["friction_clamp"].at(0).get<double>();
    t.friction_max = j["friction_clamp"].at(1).get<double>();
  }
  if (j.contains("classes")) {
    for (const auto& [name, rec] : j["classes"].items()) {
      const auto c = static_cast<std::size_t>(parse_semantic_class(name));
      if (rec.contains("weight")) t.class_weights[c] = rec["weight"].get<double>();
      if (rec.contains("friction_mean")) t.friction[c].mean = rec["friction_mean"].get<double>();
      if (rec.contains("friction_std")) t.friction[c].stddev = rec["friction_std"].get<double>();
      if (rec.contains("soil_level_weights")) {
        for (std::size_t k = 0; k < 3; ++k) t.soil_level_weights[c][k] = rec["soil_level_weights"].at(k).get<double>();
      }
    }
  }
  if (j.contains("soil_levels")) {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto key = std::string(kLevelNames[k]);
      if (j["soil_levels"].contains(key)) {
        t.soil_levels[k] = scm_from_json(j["soil_levels"][key], static_cast<SoilLevel>(k));
      }
    }
  }
  double total = 0.0;
  for (double w : t.class_weights) {
    if (w < 0.0) throw ConfigError("class weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("class weights sum to zero");
  return t;
}

SemanticsTable SemanticsTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open semantics config " + path.string());
  return from_json(nlohmann::json::parse(in));
}

nlohmann::json SemanticsTable::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < kSemanticClassCount; ++c) {
    nlohmann::json rec = {{"weight", class_weights[c]}};
    if (is_deformable(static_cast<SemanticClass>(c))) {
      rec["soil_level_weights"] = soil_level_weights[c];
    } else {
      rec["friction_mean"] = friction[c].mean;
      rec["friction_std"] = friction[c].stddev;
    }
    classes[std::string(to_string(static_cast<SemanticClass>(c)))] = rec;
  }
  nlohmann::json levels = nlohmann::json::object();
  for (std::size_t k = 0; k < 3; ++k) levels[std::string(kLevelNames[k])] = scm_to_json(soil_levels[k]);
  return {{"classes", classes},
          {"soil_levels", levels},
          {"friction_clamp", {friction_min, friction_max}}};
}

ScmParams SemanticsTable::soil(SoilLevel level, double scale) const {
  ScmParams p = soil_levels[static_cast<std::size_t>(level)];
  if (scale != 1.0) {
    // Similitude: contact pressure grows linearly with length scale.
    p.k_phi *= std::pow(scale, 1.0 - p.n_exp);
    p.k_c *= std::pow(scale, 2.0 - p.n_exp);
    p.hardening /= scale;
    p.damping *= std::pow(scale, 2.5);
  }
  return p;
}

}  // namespace ridge
