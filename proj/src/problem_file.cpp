#include "rareevent/problem_file.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <memory>
#include <sstream>

#include "rareevent/expression.hpp"

namespace rareevent {

using nlohmann::json;

Problem parse_problem_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("problem file: ") + e.what());
  }
  try {
    Problem p;
    p.name = doc.value("name", std::string("custom"));
    const json& marginals = doc.at("marginals");
    if (!marginals.is_array() || marginals.empty()) throw ConfigError("problem file: 'marginals' must be a non-empty array");
    std::vector<NormalMarginal> list;
    for (const json& m : marginals) {
      if (!m.contains("normal")) throw ConfigError("problem file: only normal marginals are supported");
      const json& n = m.at("normal");
      list.emplace_back(n.at("mean").get<double>(), n.at("sd").get<double>());
    }
    p.input = InputDistribution(std::move(list));
    p.threshold = doc.at("threshold").get<double>();
    const std::string dir = doc.value("direction", std::string("above"));
    if (dir == "above") {
      p.direction = Direction::Above;
    } else if (dir == "below") {
      p.direction = Direction::Below;
    } else {
      throw ConfigError("problem file: direction must be 'above' or 'below'");
    }
    auto expr = std::make_shared<const Expression>(Expression::parse(doc.at("limit_state").get<std::string>(), p.dim()));
    p.limit_state = [expr](std::span<const double> x) { return expr->evaluate(x); };
    validate(p);
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem file: ") + e.what());
  }
}

Problem load_problem_file(const std::string& path, std::string* source) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (source) *source = text;
  return parse_problem_json(text);
}

}  // namespace rareevent
