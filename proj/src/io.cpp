#include "relu_lab/io.hpp"

#include <json.hpp>

namespace relu_lab::io {

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["seed"] = seed;
  j["artifacts"] = artifacts;
  j["duration_seconds"] = duration_seconds;
  std::ofstream out(path);
  if (!out) throw ParamError("cannot open manifest file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace relu_lab::io
