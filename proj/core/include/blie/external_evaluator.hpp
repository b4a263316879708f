#pragma once

// Subprocess evaluator: one persistent worker per parallel slot, speaking
// newline-delimited JSON over the worker's stdin/stdout.
//
//   request:  {"id":1,"point":[0.5],"budget":10,"prior_budget":0}
//   response: {"id":1,"loss":0.5}
//
// prior_budget > 0 marks a top-up of an arm already trained to prior_budget.
// Worker stderr is inherited.

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "blie/executor.hpp"

namespace blie {

struct ExternalSpec {
  std::vector<std::string> command;  // argv; command[0] is looked up in PATH
  std::string working_dir;           // empty: inherit
  std::chrono::milliseconds timeout{std::chrono::seconds(3600)};  // per request
};

std::string encode_request(const EvalRequest& request);
// Parses one response line. A non-finite or non-numeric loss ("NaN") raises
// invalid-loss; anything else that is not exactly {"id":<int>,"loss":<number>}
// raises protocol-violation.
EvalResult decode_response(const std::string& line, std::uint64_t expected_id);

class ExternalBackend final : public Backend {
 public:
  explicit ExternalBackend(ExternalSpec spec);
  ~ExternalBackend() override;

  ExternalBackend(const ExternalBackend&) = delete;
  ExternalBackend& operator=(const ExternalBackend&) = delete;

  void prepare(std::size_t parallelism) override;
  EvalResult evaluate(const EvalRequest& request, std::size_t slot) override;

  // Workers currently alive.
  std::size_t live_workers() const;
  const ExternalSpec& spec() const noexcept { return spec_; }

 private:
  struct Worker;

  ExternalSpec spec_;
  std::vector<std::unique_ptr<Worker>> workers_;
};

}  // namespace blie
