// Test evaluator for the line protocol. Replies loss = ||x||_inf.
//
//   --mode ok       well-formed replies (default)
//   --mode nan      "loss":"NaN"
//   --mode garbage  a line that is not JSON
//   --mode crash    exits without replying
//   --mode sleep    never replies
//   --after N       behave normally for the first N requests

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "json.hpp"

int main(int argc, char** argv) {
  std::string mode = "ok";
  long after = 0;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--mode") mode = argv[i + 1];
    if (flag == "--after") after = std::atol(argv[i + 1]);
  }
  std::ios::sync_with_stdio(false);
  std::string line;
  long served = 0;
  while (std::getline(std::cin, line)) {
    const auto req = nlohmann::json::parse(line);
    const auto id = req.at("id").get<std::uint64_t>();
    double loss = 0.0;
    for (const auto& v : req.at("point")) loss = std::max(loss, std::abs(v.get<double>()));
    const bool misbehave = served >= after && mode != "ok";
    ++served;
    if (misbehave && mode == "crash") return 3;
    if (misbehave && mode == "sleep") std::this_thread::sleep_for(std::chrono::hours(1));
    if (misbehave && mode == "garbage") {
      std::cout << "loss is " << loss << std::endl;
      continue;
    }
    nlohmann::ordered_json reply;
    reply["id"] = id;
    if (misbehave && mode == "nan") {
      reply["loss"] = "NaN";
    } else {
      reply["loss"] = loss;
    }
    std::cout << reply.dump() << std::endl;
  }
  return 0;
}
