// Copyright 2026 The RankForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scripted evaluator process speaking the line-delimited JSON protocol.
//
//   --ref a=75,b=174     reference ranks; score0 = prod (r / ref)^0.1
//   --stage NAME=VALUE   fixed accuracy for a stage (repeatable)
//   --transcript FILE    append every request line to FILE
//   --handshake bad|none wrong or missing greeting
//   --hang-after N       stop answering after N responses
//   --error-on N         answer request number N with an error

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "json.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  std::map<std::string, double> ref;
  std::map<std::string, double> fixed;
  std::string transcript, handshake = "ok";
  long hang_after = -1, error_on = -1;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i], value = argv[i + 1];
    if (flag == "--ref" || flag == "--stage") {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        (flag == "--ref" ? ref : fixed)[item.substr(0, eq)] =
            std::stod(item.substr(eq + 1));
      }
    } else if (flag == "--transcript") {
      transcript = value;
    } else if (flag == "--handshake") {
      handshake = value;
    } else if (flag == "--hang-after") {
      hang_after = std::stol(value);
    } else if (flag == "--error-on") {
      error_on = std::stol(value);
    }
  }

  if (handshake == "ok") {
    std::cout << R"({"protocol":"rankforge-eval","version":1})" << std::endl;
  } else if (handshake == "bad") {
    std::cout << R"({"protocol":"something-else","version":7})" << std::endl;
  }

  long served = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (!transcript.empty()) {
      std::ofstream(transcript, std::ios::app) << line << '\n';
    }
    if (hang_after >= 0 && served >= hang_after) {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    json req = json::parse(line, nullptr, false);
    json resp;
    if (req.is_discarded() || !req.contains("id")) {
      resp = {{"id", nullptr}, {"error", "malformed request"}};
    } else {
      resp["id"] = req["id"];
      ++served;
      if (served == error_on) {
        resp["error"] = "scripted failure";
      } else {
        const std::string stage = req.value("stage", "score0");
        if (auto it = fixed.find(stage); it != fixed.end()) {
          resp["accuracy"] = it->second;
        } else {
          double acc = 1.0;
          for (auto& [name, r] : req["ranks"].items()) {
            const double base = ref.count(name) ? ref[name] : 1000.0;
            acc *= std::pow(r.get<double>() / base, 0.1);
          }
          resp["accuracy"] = acc;
        }
      }
    }
    std::cout << resp.dump() << std::endl;
  }
  return 0;
}
