#include "blie/executor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_set>

#include "blie/error.hpp"

namespace blie {

EvalResult InProcessBackend::evaluate(const EvalRequest& request, std::size_t /*slot*/) {
  const auto start = std::chrono::steady_clock::now();
  EvalResult result;
  result.request_id = request.request_id;
  result.loss = instance_.loss(request.point, request.cumulative_budget);
  result.wall_time_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
  return result;
}

namespace {

void validate(std::span<const EvalRequest> requests) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(requests.size());
  for (const auto& r : requests) {
    if (!seen.insert(r.request_id).second)
      throw Error(ErrorKind::InvalidArgument, "duplicate request id " + std::to_string(r.request_id));
    if (r.cumulative_budget <= r.prior_budget)
      throw Error(ErrorKind::InvalidArgument,
                  "request " + std::to_string(r.request_id) + " must have cumulative budget > prior budget");
    if (r.point.empty()) throw Error(ErrorKind::InvalidArgument, "request " + std::to_string(r.request_id) + " has no point");
    for (double v : r.point) {
      if (!(v >= 0.0 && v <= 1.0))
        throw Error(ErrorKind::InvalidArgument,
                    "request " + std::to_string(r.request_id) + " has a coordinate outside [0,1]");
    }
  }
}

void check_result(const EvalRequest& request, const EvalResult& result) {
  if (result.request_id != request.request_id)
    throw Error(ErrorKind::ProtocolViolation, "result id " + std::to_string(result.request_id) +
                                                  " does not match request " + std::to_string(request.request_id));
  if (!std::isfinite(result.loss))
    throw Error(ErrorKind::InvalidLoss, "request " + std::to_string(request.request_id) + " returned a non-finite loss");
}

}  // namespace

std::vector<EvalResult> run_batch(std::span<const EvalRequest> requests, Backend& backend,
                                  std::size_t parallelism) {
  if (parallelism == 0) throw Error(ErrorKind::InvalidArgument, "parallelism must be positive");
  validate(requests);
  std::vector<EvalResult> results(requests.size());
  if (requests.empty()) return results;

  const std::size_t workers = std::min(parallelism, requests.size());
  backend.prepare(workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) {
      results[i] = backend.evaluate(requests[i], 0);
      check_result(requests[i], results[i]);
    }
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t slot = 0; slot < workers; ++slot) {
      pool.emplace_back([&, slot] {
        while (!failed.load(std::memory_order_relaxed)) {
          const std::size_t i = next.fetch_add(1);
          if (i >= requests.size()) return;
          try {
            results[i] = backend.evaluate(requests[i], slot);
            check_result(requests[i], results[i]);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            failed = true;
            return;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

std::size_t default_parallelism() {
  if (const char* env = std::getenv("BLIE_PARALLELISM")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

Executor::Executor(Backend& backend, std::size_t parallelism) : backend_(backend), parallelism_(parallelism) {
  if (parallelism_ == 0) throw Error(ErrorKind::InvalidArgument, "parallelism must be positive");
}

std::vector<double> Executor::evaluate(std::vector<Query> queries) {
  const std::size_t index = batches_ + 1;
  std::vector<EvalRequest> requests;
  requests.reserve(queries.size());
  std::uint64_t cost = 0;
  for (auto& q : queries) {
    cost += q.cumulative_budget - std::min(q.cumulative_budget, q.prior_budget);
    requests.push_back({next_id_++, std::move(q.point), q.cumulative_budget, q.prior_budget});
  }
  std::vector<EvalResult> results;
  try {
    results = run_batch(requests, backend_, parallelism_);
  } catch (const Error& e) {
    throw Error(e.kind(), "batch " + std::to_string(index) + ": " + e.detail());
  }
  ++batches_;
  consumed_ += cost;
  std::vector<double> losses(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) losses[i] = results[i].loss;
  return losses;
}

}  // namespace blie
