// SPDX-License-Identifier: Apache-2.0
#include "cxgan/cli/json_config.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>

namespace cxgan::cli {

namespace {

using nlohmann::json;

std::string scalar(const std::string &key, const json &v) {
  if (v.is_string())
    return v.get<std::string>();
  if (v.is_boolean())
    return v.get<bool>() ? "true" : "false";
  if (v.is_number()) // shortest round-trip form
    return v.dump();
  throw CLI::ConfigError(key + ": unsupported value " + v.dump());
}

} // namespace

void apply_json_config(CLI::App &app, const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CLI::ConfigError("cannot read config file " + path.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw CLI::ConfigError(path.string() + ": expected one JSON object");

  for (const auto &[key, value] : doc.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option *opt = app.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config" || name == "help")
      throw CLI::ConfigError(path.string() + ": unknown key '" + key + "' for " + app.get_name());
    if (opt->count() > 0)
      continue; // the command line wins
    std::vector<std::string> inputs;
    if (value.is_array()) {
      for (const auto &v : value)
        inputs.push_back(scalar(key, v));
    } else {
      inputs.push_back(scalar(key, value));
    }
    for (const auto &s : inputs)
      opt->add_result(s);
    opt->run_callback();
  }
}

} // namespace cxgan::cli
