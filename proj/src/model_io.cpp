#include "remrate/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "remrate/common.hpp"

namespace remrate::model {

SourceSpec load_model_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("model file: JSON parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("cov_x") || !j.contains("noise_var"))
    throw InvalidInput("model file: expected keys \"cov_x\" and \"noise_var\"");

  std::vector<std::vector<double>> rows;
  try {
    rows = j.at("cov_x").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput("model file: cov_x must be an array of numeric rows");
  }
  std::vector<double> noise;
  try {
    noise = j.at("noise_var").get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput("model file: noise_var must be a numeric array");
  }

  return SourceSpec(SymMatrix::from_rows(rows, 1e-12), std::move(noise));
}

SourceSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("model file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_model_json(ss.str());
}

}  // namespace remrate::model
