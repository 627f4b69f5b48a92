#include "ccrn/model_io.hpp"

#include <fstream>

#include "ccrn/errors.hpp"

namespace ccrn {

namespace {

struct Value {
  double approx;
  std::optional<Rational> exact;
};

Value read_value(const nlohmann::json& v, const std::string& what) {
  if (v.is_number()) return {v.get<double>(), std::nullopt};
  if (v.is_string()) {
    try {
      Rational r = parse_rational(v.get<std::string>());
      return {r.convert_to<double>(), r};
    } catch (const DomainError& e) {
      throw ConfigError(what + ": " + e.what());
    }
  }
  throw ConfigError(what + " must be a number or a numeric string");
}

template <std::size_t N>
void read_masses(const nlohmann::json& j, const char* key, std::array<Value, N>& out) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != N)
    throw ConfigError(std::string("model field '") + key + "' must be an array of " + std::to_string(N) + " masses");
  for (std::size_t i = 0; i < N; ++i) out[i] = read_value(j[key][i], std::string(key) + "[" + std::to_string(i) + "]");
}

template <std::size_t N>
bool all_exact(const std::array<Value, N>& vs) {
  for (const auto& v : vs)
    if (!v.exact) return false;
  return true;
}

}  // namespace

ErasureModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model must be a JSON object");
  const std::string kind = j.value("kind", "");
  try {
    if (kind == "independent") {
      std::array<Value, 5> e;
      const char* keys[] = {"e12", "e13", "e14", "e23", "e24"};
      for (int i = 0; i < 5; ++i) {
        if (!j.contains(keys[i])) throw ConfigError(std::string("independent model is missing '") + keys[i] + "'");
        e[i] = read_value(j[keys[i]], keys[i]);
      }
      if (all_exact(e)) return ErasureModel::independent_exact(*e[0].exact, *e[1].exact, *e[2].exact, *e[3].exact, *e[4].exact);
      return ErasureModel::independent(e[0].approx, e[1].approx, e[2].approx, e[3].approx, e[4].approx);
    }
    if (kind == "joint") {
      std::array<Value, 8> n1;
      std::array<Value, 4> n2;
      read_masses(j, "node1", n1);
      read_masses(j, "node2", n2);
      if (all_exact(n1) && all_exact(n2)) {
        ErasureModel::ExactNode1Pmf x1;
        ErasureModel::ExactNode2Pmf x2;
        for (int i = 0; i < 8; ++i) x1[i] = *n1[i].exact;
        for (int i = 0; i < 4; ++i) x2[i] = *n2[i].exact;
        return ErasureModel::joint_exact(x1, x2);
      }
      ErasureModel::Node1Pmf p1;
      ErasureModel::Node2Pmf p2;
      for (int i = 0; i < 8; ++i) p1[i] = n1[i].approx;
      for (int i = 0; i < 4; ++i) p2[i] = n2[i].approx;
      return ErasureModel::joint(p1, p2);
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
  throw ConfigError("model 'kind' must be \"independent\" or \"joint\"");
}

ErasureModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("model file " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

nlohmann::json model_to_json(const ErasureModel& m) {
  nlohmann::json j;
  j["kind"] = "joint";
  j["node1"] = m.node1_joint();
  j["node2"] = m.node2_joint();
  return j;
}

}  // namespace ccrn
