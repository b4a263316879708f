#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "blie/error.hpp"
#include "blie/executor.hpp"
#include "blie/external_evaluator.hpp"

using namespace blie;

namespace {

std::vector<EvalRequest> random_requests(std::size_t count, std::size_t dim, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<EvalRequest> out;
  for (std::size_t i = 0; i < count; ++i) {
    Point x(dim);
    for (auto& v : x) v = uniform01(rng);
    out.push_back({i + 1, std::move(x), 1 + rng() % 1000, 0});
  }
  return out;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

ExternalSpec stub(std::vector<std::string> extra = {}) {
  ExternalSpec s;
  s.command = {BLIE_STUB_EVALUATOR};
  s.command.insert(s.command.end(), extra.begin(), extra.end());
  s.timeout = std::chrono::seconds(20);
  return s;
}

class ConstantBackend final : public Backend {
 public:
  explicit ConstantBackend(double v) : v_(v) {}
  EvalResult evaluate(const EvalRequest& r, std::size_t) override { return {r.request_id, v_, 0}; }

 private:
  double v_;
};

}  // namespace

TEST(RunBatch, EmptyBatch) {
  const auto inst = toy_instance(ToyVariant::Mu1, 2, 0.1, 1);
  InProcessBackend backend(*inst);
  EXPECT_TRUE(run_batch({}, backend, 4).empty());
}

TEST(RunBatch, ParallelismDoesNotChangeResults) {
  const auto inst = toy_instance(ToyVariant::Mu1, 3, 0.1, 1);
  const auto reqs = random_requests(300, 3, 5);
  InProcessBackend backend(*inst);
  const auto one = run_batch(reqs, backend, 1);
  const auto inst2 = toy_instance(ToyVariant::Mu1, 3, 0.1, 1);
  InProcessBackend backend2(*inst2);
  const auto eight = run_batch(reqs, backend2, 8);
  ASSERT_EQ(one.size(), eight.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].request_id, reqs[i].request_id);
    EXPECT_EQ(eight[i].request_id, reqs[i].request_id);
    EXPECT_EQ(one[i].loss, eight[i].loss);
  }
  // Re-running the same batch is idempotent.
  const auto again = run_batch(reqs, backend2, 3);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(again[i].loss, one[i].loss);
}

TEST(RunBatch, RejectsDuplicateIdsAndBadRequests) {
  const auto inst = toy_instance(ToyVariant::Mu1, 1, 0.1, 1);
  InProcessBackend backend(*inst);
  std::vector<EvalRequest> dup{{1, {0.5}, 2, 0}, {1, {0.4}, 2, 0}};
  EXPECT_EQ(kind_of([&] { run_batch(dup, backend, 1); }), ErrorKind::InvalidArgument);
  std::vector<EvalRequest> topup{{1, {0.5}, 2, 2}};
  EXPECT_EQ(kind_of([&] { run_batch(topup, backend, 1); }), ErrorKind::InvalidArgument);
  std::vector<EvalRequest> outside{{1, {1.5}, 2, 0}};
  EXPECT_EQ(kind_of([&] { run_batch(outside, backend, 1); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { run_batch(topup, backend, 0); }), ErrorKind::InvalidArgument);
}

TEST(RunBatch, NonFiniteLossNamesTheRequest) {
  ConstantBackend nan_backend(std::nan(""));
  std::vector<EvalRequest> reqs{{7, {0.5}, 2, 0}};
  try {
    run_batch(reqs, nan_backend, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidLoss);
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

TEST(Executor, CountsBatchesAndBudget) {
  const auto inst = toy_instance(ToyVariant::Mu1, 1, 0.1, 1);
  InProcessBackend backend(*inst);
  Executor ex(backend, 2);
  ex.evaluate({{{0.1}, 10, 0}, {{0.2}, 10, 0}});
  ex.evaluate({{{0.1}, 25, 10}});
  EXPECT_EQ(ex.batches(), 2u);
  EXPECT_EQ(ex.consumed(), 35u);
}

TEST(Executor, ErrorsCarryTheBatchIndex) {
  ConstantBackend inf_backend(INFINITY);
  Executor ex(inf_backend, 1);
  try {
    ex.evaluate({{{0.1}, 1, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidLoss);
    EXPECT_EQ(std::string(e.what()).rfind("invalid-loss: batch 1:", 0), 0u) << e.what();
  }
}

TEST(DefaultParallelism, EnvironmentOverride) {
  ::setenv("BLIE_PARALLELISM", "3", 1);
  EXPECT_EQ(default_parallelism(), 3u);
  ::unsetenv("BLIE_PARALLELISM");
  EXPECT_GE(default_parallelism(), 1u);
}

TEST(Protocol, RequestEncodingIsExact) {
  EXPECT_EQ(encode_request({1, {0.5}, 10, 0}), R"({"id":1,"point":[0.5],"budget":10,"prior_budget":0})");
  EXPECT_EQ(encode_request({2, {0.25, 1.0}, 20, 10}), R"({"id":2,"point":[0.25,1.0],"budget":20,"prior_budget":10})");
}

TEST(Protocol, ResponseDecoding) {
  EXPECT_DOUBLE_EQ(decode_response(R"({"id":1,"loss":0.5})", 1).loss, 0.5);
  EXPECT_DOUBLE_EQ(decode_response(R"({"loss":2,"id":3})", 3).loss, 2.0);
  EXPECT_EQ(kind_of([] { decode_response(R"({"id":1,"loss":"NaN"})", 1); }), ErrorKind::InvalidLoss);
  EXPECT_EQ(kind_of([] { decode_response("loss 0.5", 1); }), ErrorKind::ProtocolViolation);
  EXPECT_EQ(kind_of([] { decode_response(R"({"id":2,"loss":0.5})", 1); }), ErrorKind::ProtocolViolation);
  EXPECT_EQ(kind_of([] { decode_response(R"({"id":1,"loss":0.5,"x":1})", 1); }), ErrorKind::ProtocolViolation);
  EXPECT_EQ(kind_of([] { decode_response(R"({"id":1})", 1); }), ErrorKind::ProtocolViolation);
  EXPECT_EQ(kind_of([] { decode_response(R"([1,0.5])", 1); }), ErrorKind::ProtocolViolation);
  EXPECT_EQ(kind_of([] { decode_response(R"({"id":1,"loss":NaN})", 1); }), ErrorKind::ProtocolViolation);
}

TEST(External, RoundTripThroughStub) {
  ExternalBackend backend(stub());
  const auto res = run_batch(std::vector<EvalRequest>{{1, {0.5}, 10, 0}}, backend, 1);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0].request_id, 1u);
  EXPECT_EQ(res[0].loss, 0.5);
  // A top-up on the same worker.
  const auto top = run_batch(std::vector<EvalRequest>{{2, {0.5}, 20, 10}}, backend, 1);
  EXPECT_EQ(top[0].loss, 0.5);
  EXPECT_EQ(backend.live_workers(), 1u);
}

TEST(External, MatchesInProcessBitForBit) {
  const auto reqs = random_requests(100, 3, 99);
  ExternalBackend ext(stub());
  CertifiedInstance ref(InstanceInfo{"sup", 3, 1.0, 2.0, NoiseMode::Certified, Point(3, 0.0), 0.0, 0.0},
                        LimitLoss::sup_norm_power(1.0), Adversary::None, 0);
  InProcessBackend local(ref);
  const auto a = run_batch(reqs, ext, 4);
  const auto b = run_batch(reqs, local, 1);
  for (std::size_t i = 0; i < reqs.size(); ++i) EXPECT_EQ(a[i].loss, b[i].loss);
  EXPECT_EQ(ext.live_workers(), 4u);
}

TEST(External, NanLossIsInvalidLoss) {
  ExternalBackend backend(stub({"--mode", "nan"}));
  EXPECT_EQ(kind_of([&] { run_batch(std::vector<EvalRequest>{{1, {0.5}, 1, 0}}, backend, 1); }),
            ErrorKind::InvalidLoss);
}

TEST(External, GarbageIsProtocolViolation) {
  ExternalBackend backend(stub({"--mode", "garbage"}));
  EXPECT_EQ(kind_of([&] { run_batch(std::vector<EvalRequest>{{1, {0.5}, 1, 0}}, backend, 1); }),
            ErrorKind::ProtocolViolation);
}

TEST(External, CrashIsBatchFailed) {
  ExternalBackend backend(stub({"--mode", "crash", "--after", "1"}));
  const std::vector<EvalRequest> reqs{{1, {0.5}, 1, 0}, {2, {0.25}, 1, 0}};
  try {
    run_batch(reqs, backend, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BatchFailed);
    EXPECT_NE(std::string(e.what()).find("exited with status 3"), std::string::npos) << e.what();
  }
  // The dead worker is replaced on the next batch.
  const auto ok = run_batch(std::vector<EvalRequest>{{3, {0.125}, 1, 0}}, backend, 1);
  EXPECT_EQ(ok[0].loss, 0.125);
}

TEST(External, SlowWorkerTimesOut) {
  ExternalSpec spec = stub({"--mode", "sleep"});
  spec.timeout = std::chrono::milliseconds(200);
  ExternalBackend backend(spec);
  EXPECT_EQ(kind_of([&] { run_batch(std::vector<EvalRequest>{{1, {0.5}, 1, 0}}, backend, 1); }), ErrorKind::Timeout);
}

TEST(External, MissingCommandIsSpawnFailure) {
  ExternalSpec spec;
  spec.command = {"/nonexistent/blie-evaluator"};
  ExternalBackend backend(spec);
  EXPECT_EQ(kind_of([&] { run_batch(std::vector<EvalRequest>{{1, {0.5}, 1, 0}}, backend, 1); }),
            ErrorKind::SpawnFailed);
}

TEST(External, BadWorkingDirectoryIsSpawnFailure) {
  ExternalSpec spec = stub();
  spec.working_dir = "/nonexistent/dir";
  ExternalBackend backend(spec);
  EXPECT_EQ(kind_of([&] { run_batch(std::vector<EvalRequest>{{1, {0.5}, 1, 0}}, backend, 1); }),
            ErrorKind::SpawnFailed);
}
