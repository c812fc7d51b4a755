// Stand-in proxy trainer speaking the subprocess protocol:
//
//   quadratic_trainer [--fail-on ID] --manifest M --config C --valset V
//
// The valset is a JSON object mapping document ids to a utility in [0, 1].
// The "loss" is base + (1 - mean utility of the manifest)^2, so manifests
// full of useful documents score lower. Prints one JSON line on stdout.
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>

#include "json.hpp"

namespace {

int fail(const std::string& message) {
  std::cerr << "quadratic_trainer: " << message << '\n';
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  std::string manifest, config, valset, fail_on;
  double base = 2.0;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const std::string value = argv[i + 1];
    if (flag == "--manifest") manifest = value;
    else if (flag == "--config") config = value;
    else if (flag == "--valset") valset = value;
    else if (flag == "--fail-on") fail_on = value;
    else if (flag == "--base") base = std::strtod(value.c_str(), nullptr);
    else return fail("unknown flag " + flag);
  }
  if (manifest.empty() || config.empty()) return fail("--manifest and --config are required");
  if (!fail_on.empty() && manifest.find(fail_on) != std::string::npos) return fail("injected failure");

  std::ifstream cfg(config);
  if (!cfg) return fail("cannot read config " + config);
  nlohmann::json proxy;
  try {
    cfg >> proxy;
  } catch (const nlohmann::json::exception& e) {
    return fail(std::string("bad config: ") + e.what());
  }

  std::unordered_map<std::string, double> utility;
  if (!valset.empty()) {
    std::ifstream in(valset);
    if (!in) return fail("cannot read valset " + valset);
    try {
      nlohmann::json v;
      in >> v;
      for (const auto& [id, u] : v.items()) utility[id] = u.get<double>();
    } catch (const nlohmann::json::exception& e) {
      return fail(std::string("bad valset: ") + e.what());
    }
  }

  std::ifstream in(manifest);
  if (!in) return fail("cannot read manifest " + manifest);
  std::string id;
  double total = 0.0;
  std::uint64_t n = 0;
  while (std::getline(in, id)) {
    if (id.empty()) continue;
    auto it = utility.find(id);
    total += it == utility.end() ? 0.0 : it->second;
    ++n;
  }
  const double mean = n ? total / static_cast<double>(n) : 0.0;
  const double loss = base + (1.0 - mean) * (1.0 - mean);

  nlohmann::json out;
  out["loss"] = loss;
  out["steps"] = n;
  std::cout << out.dump() << '\n';
  return 0;
}
