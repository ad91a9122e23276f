#include "firank/schema.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "firank/error.hpp"

namespace firank {

void FeatureSchema::validate() const {
  for (int64_t v : categorical_vocab_sizes) {
    if (v < 1) throw ConfigError("schema: vocab sizes must be >= 1");
  }
  if (dense_count < 0) throw ConfigError("schema: dense_count must be >= 0");
  if (dense_count > 0) {
    if (dense_group_count < 1) {
      throw ConfigError("schema: dense_group_count must be >= 1 when dense features exist");
    }
    if (dense_group_count > dense_count) {
      throw ConfigError("schema: dense_group_count must be <= dense_count");
    }
  } else if (dense_group_count != 0) {
    throw ConfigError("schema: dense_group_count must be 0 without dense features");
  }
  if (task_count < 1) throw ConfigError("schema: task_count must be >= 1");
  if (model_dim < 1) throw ConfigError("schema: model_dim must be >= 1");
}

FeatureSchema schema_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema: invalid JSON: ") + e.what());
  }
  FeatureSchema s;
  try {
    s.categorical_vocab_sizes = j.at("categorical_vocab_sizes").get<std::vector<int64_t>>();
    s.dense_count = j.at("dense_count").get<int64_t>();
    s.dense_group_count = j.at("dense_group_count").get<int64_t>();
    s.task_count = j.at("task_count").get<int64_t>();
    s.model_dim = j.at("model_dim").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema: missing or mistyped field: ") + e.what());
  }
  s.validate();
  return s;
}

std::string schema_to_json(const FeatureSchema& s) {
  nlohmann::json j;
  j["categorical_vocab_sizes"] = s.categorical_vocab_sizes;
  j["dense_count"] = s.dense_count;
  j["dense_group_count"] = s.dense_group_count;
  j["task_count"] = s.task_count;
  j["model_dim"] = s.model_dim;
  return j.dump(2) + "\n";
}

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("schema: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return schema_from_json(ss.str());
}

void save_schema(const std::string& path, const FeatureSchema& s) {
  std::ofstream out(path);
  if (!out) throw DataError("schema: cannot write " + path);
  out << schema_to_json(s);
}

}  // namespace firank
