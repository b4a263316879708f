#include "blie/trace.hpp"

#include <cmath>

#include "blie/error.hpp"
#include "json.hpp"

namespace blie {

namespace {

using ojson = nlohmann::ordered_json;

ojson cube_json(const std::optional<Cube>& cube) {
  if (!cube) return nullptr;
  return ojson{{"level", cube->level()}, {"coords", cube->coords()}};
}

}  // namespace

std::size_t BatchRecord::survivors() const noexcept {
  std::size_t n = 0;
  for (const auto& a : arms) n += a.survived ? 1 : 0;
  return n;
}

double BatchRecord::edge() const noexcept { return level ? std::ldexp(1.0, -*level) : 0.0; }

std::string trace_to_json(const RunTrace& trace, int indent) {
  ojson j;
  j["algorithm"] = trace.algorithm;
  j["total_budget"] = trace.total_budget;
  j["total_spent"] = trace.total_spent;
  j["executor_batches"] = trace.executor_batches;
  j["stop_reason"] = trace.stop_reason;
  j["projected_grid_point"] = trace.projected_grid_point ? ojson(*trace.projected_grid_point) : ojson(nullptr);
  j["cleanup_budget"] = trace.cleanup_budget;
  j["leftover"] = trace.leftover;
  j["output"] = trace.output;
  j["output_loss"] = trace.output_loss;
  j["simple_regret"] = trace.simple_regret ? ojson(*trace.simple_regret) : ojson(nullptr);
  j["notes"] = trace.notes;
  ojson batches = ojson::array();
  for (const auto& b : trace.batches) {
    ojson jb;
    jb["index"] = b.index;
    jb["label"] = b.label;
    jb["level"] = b.level ? ojson(*b.level) : ojson(nullptr);
    jb["edge"] = b.edge();
    jb["budget_per_arm"] = b.budget_per_arm;
    jb["cost"] = b.cost;
    jb["grid_point"] = b.grid_point;
    jb["survivors"] = b.survivors();
    ojson arms = ojson::array();
    for (const auto& a : b.arms) {
      arms.push_back(ojson{{"cube", cube_json(a.cube)},
                           {"arm", a.arm},
                           {"budget", a.budget},
                           {"prior_budget", a.prior_budget},
                           {"loss", a.loss},
                           {"survived", a.survived}});
    }
    jb["arms"] = std::move(arms);
    batches.push_back(std::move(jb));
  }
  j["batches"] = std::move(batches);
  ojson cands = ojson::array();
  for (const auto& c : trace.candidates)
    cands.push_back(ojson{{"cube", cube_json(c.cube)}, {"arm", c.arm}, {"budget", c.budget}, {"loss", c.loss}});
  j["candidates"] = std::move(cands);
  j["output_index"] = trace.output_index;
  return j.dump(indent);
}

std::size_t argmin_candidate(const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto& b = candidates[best];
    if (c.loss < b.loss) {
      best = i;
    } else if (c.loss == b.loss && c.cube && b.cube && *c.cube < *b.cube) {
      best = i;
    }
  }
  return best;
}

}  // namespace blie
