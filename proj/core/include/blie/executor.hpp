#pragma once

// Batched evaluation. A batch is a set of (arm, budget) requests that runs to
// completion before any loss is returned to the caller; nothing streams.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "blie/geometry.hpp"
#include "blie/instance.hpp"

namespace blie {

struct EvalRequest {
  std::uint64_t request_id = 0;
  Point point;
  std::uint64_t cumulative_budget = 0;
  std::uint64_t prior_budget = 0;  // budget the arm already received (top-ups)
};

struct EvalResult {
  std::uint64_t request_id = 0;
  double loss = 0.0;
  std::uint64_t wall_time_ms = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;

  // Called once per batch before any evaluate() with the slot count in use.
  virtual void prepare(std::size_t /*parallelism*/) {}
  // Slots in [0, parallelism) are never used by two threads at once.
  virtual EvalResult evaluate(const EvalRequest& request, std::size_t slot) = 0;
};

class InProcessBackend final : public Backend {
 public:
  explicit InProcessBackend(const Instance& instance) : instance_(instance) {}

  EvalResult evaluate(const EvalRequest& request, std::size_t slot) override;

 private:
  const Instance& instance_;
};

// Runs every request, up to `parallelism` at a time, and returns results in
// request order. Fails as a whole: duplicate ids or malformed requests raise
// invalid-argument, a non-finite loss raises invalid-loss naming the request.
std::vector<EvalResult> run_batch(std::span<const EvalRequest> requests, Backend& backend,
                                  std::size_t parallelism);

// Logical core count, overridden by BLIE_PARALLELISM when set.
std::size_t default_parallelism();

// Per-run dispatcher: numbers requests, counts batches and consumed budget.
class Executor {
 public:
  struct Query {
    Point point;
    std::uint64_t cumulative_budget = 0;
    std::uint64_t prior_budget = 0;
  };

  explicit Executor(Backend& backend, std::size_t parallelism = 1);

  // One batch. Errors are re-raised with the batch index prepended.
  std::vector<double> evaluate(std::vector<Query> queries);

  std::size_t batches() const noexcept { return batches_; }
  // Sum of (cumulative - prior) over every request issued so far.
  std::uint64_t consumed() const noexcept { return consumed_; }
  std::size_t parallelism() const noexcept { return parallelism_; }

 private:
  Backend& backend_;
  std::size_t parallelism_;
  std::uint64_t next_id_ = 1;
  std::size_t batches_ = 0;
  std::uint64_t consumed_ = 0;
};

}  // namespace blie
