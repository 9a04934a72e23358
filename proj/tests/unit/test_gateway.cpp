#include <gtest/gtest.h>

#include "stayinsight/backends.hpp"
#include "stayinsight/error.hpp"
#include "stayinsight/gateway.hpp"

using namespace stayinsight;
using nlohmann::json;
using std::chrono::seconds;

namespace {

struct Rig {
  std::shared_ptr<SimulatedClock> clock = std::make_shared<SimulatedClock>();
  std::shared_ptr<MockBackend> mock = std::make_shared<MockBackend>();
  std::shared_ptr<AuditLog> audit = std::make_shared<AuditLog>();
  std::shared_ptr<Gateway> gw;

  explicit Rig(GatewayOptions opt = {}) {
    gw = std::make_shared<Gateway>(std::make_shared<ModelRegistry>(ModelRegistry::seeded()), clock, opt);
    gw->set_default_backend(mock);
    gw->set_audit_log(audit);
  }
};

CompletionRequest req(const std::string& model, std::size_t prompt_chars = 400, std::string purpose = "query") {
  CompletionRequest r;
  r.model_id = model;
  r.system_text = "sys";
  r.user_text = std::string(prompt_chars - 3, 'u');
  r.purpose = std::move(purpose);
  return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::Io;
}

class FakeTransport : public HttpTransport {
 public:
  HttpReply next{200, ""};
  std::vector<HttpCall> calls;
  HttpReply post(const HttpCall& call, Duration) override {
    calls.push_back(call);
    return next;
  }
  HttpReply get(const std::string&, Duration) override { return {404, ""}; }
};

}  // namespace

TEST(Gateway, MockCallIsAccountedAndAudited) {
  Rig rig;
  const auto r = rig.gw->complete(req("gpt-4o", 52000));
  EXPECT_EQ(r.input_tokens, 13000u);
  EXPECT_EQ(r.cost, Usd::parse("0.0325") + Usd::parse("10").scaled(static_cast<std::int64_t>(r.output_tokens), 1'000'000));
  EXPECT_EQ(rig.gw->call_count(), 1u);
  ASSERT_EQ(rig.audit->line_count(), 1u);
  const json line = json::parse(rig.audit->lines()[0]);
  EXPECT_EQ(line["model"], "gpt-4o");
  EXPECT_EQ(line["status"], "ok");
  EXPECT_EQ(line["cost_usd"], r.cost.to_string());
}

TEST(Gateway, MockModelsResolveOutsideTheRegistry) {
  Rig rig;
  EXPECT_EQ(rig.gw->resolve("mock-8k").prompt_window, 8192u);
  EXPECT_FALSE(rig.gw->registry().contains("mock"));
  EXPECT_EQ(code_of([&] { rig.gw->complete(req("nope")); }), ErrorCode::UnknownModel);
}

TEST(Gateway, OverflowIsRejectedBeforeDispatch) {
  Rig rig;
  EXPECT_EQ(code_of([&] { rig.gw->complete(req("gpt-4", 4 * 8192 + 4)); }), ErrorCode::ContextOverflow);
  EXPECT_EQ(rig.gw->call_count(), 0u);
  EXPECT_NO_THROW(rig.gw->complete(req("gpt-4", 4 * 8192)));
}

TEST(Gateway, TimeoutAndInjectedFailures) {
  Rig rig;
  rig.mock->set_delay("llama-3.2-3b", seconds(61));
  const auto t0 = rig.clock->now();
  EXPECT_EQ(code_of([&] { rig.gw->complete(req("llama-3.2-3b")); }), ErrorCode::Timeout);
  EXPECT_LE(rig.clock->now() - t0, seconds(60));
  rig.mock->set_failure("gpt-4o", Error(ErrorCode::ProviderError, "boom"));
  EXPECT_EQ(code_of([&] { rig.gw->complete(req("gpt-4o")); }), ErrorCode::ProviderError);
  EXPECT_EQ(json::parse(rig.audit->lines().back())["status"], "error");
  EXPECT_EQ(code_of([&] {
              auto r = req("gpt-4o");
              r.temperature = 3;
              rig.gw->complete(r);
            }),
            ErrorCode::InvalidArgument);
}

TEST(Gateway, PurposeSpecificDelays) {
  Rig rig;
  rig.mock->set_delay("gpt-4", "summary", seconds(10));
  rig.mock->set_delay("gpt-4", "query", seconds(8));
  EXPECT_EQ(rig.gw->complete(req("gpt-4", 400, "summary")).latency, seconds(10));
  EXPECT_EQ(rig.gw->complete(req("gpt-4", 400, "query")).latency, seconds(8));
}

TEST(Gateway, WaitsForGeminiPermitOnSimulatedClock) {
  Rig rig;
  const auto t0 = rig.clock->now();
  for (int i = 0; i < 15; ++i) rig.gw->complete(req("gemini-1.5-flash"));
  EXPECT_EQ(rig.clock->now(), t0);
  rig.gw->complete(req("gemini-1.5-flash"));
  EXPECT_EQ(rig.clock->now() - t0, seconds(60));
  EXPECT_EQ(rig.gw->call_count(), 16u);
}

TEST(Gateway, RateLimitedWhenNotWaiting) {
  GatewayOptions opt;
  opt.wait_for_permit = false;
  Rig rig(opt);
  for (int i = 0; i < 15; ++i) rig.gw->complete(req("gemini-1.5-flash"));
  try {
    rig.gw->complete(req("gemini-1.5-flash"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RateLimited);
    EXPECT_TRUE(e.retriable());
  }
  EXPECT_EQ(rig.gw->call_count(), 15u);
}

TEST(Mock, ReplyIsDeterministicAndSelfDescribing) {
  CompletionRequest r;
  r.model_id = "mock";
  r.purpose = "summary";
  r.system_text = "Output language: el\n";
  r.user_text = "Review 2024-01-01 | score 9.0/10\n+ a\n\nReview 2024-01-02 | score 7.0/10\n+ b\n\n";
  const std::string a = MockBackend::render(mock_profile("mock"), r);
  EXPECT_EQ(a, MockBackend::render(mock_profile("mock"), r));
  EXPECT_EQ(a.rfind("[mock] model=mock purpose=summary hash=", 0), 0u);
  EXPECT_NE(a.find(" blocks=2 language=el\n"), std::string::npos);
  EXPECT_EQ(count_review_blocks(r.user_text), 2u);
  EXPECT_EQ(find_language_directive(r.system_text), "el");
}

TEST(WireAdapters, ParseProviderPayloads) {
  const auto o = OpenAiChatAdapter().parse(
      R"({"id":"chatcmpl-1","choices":[{"message":{"role":"assistant","content":"hi"}}],"usage":{"prompt_tokens":12,"completion_tokens":3}})");
  EXPECT_EQ(o.text, "hi");
  EXPECT_EQ(o.input_tokens, 12u);
  EXPECT_EQ(o.output_tokens, 3u);
  const auto a = AnthropicMessagesAdapter().parse(
      R"({"id":"msg_1","content":[{"type":"text","text":"a"},{"type":"text","text":"b"}],"usage":{"input_tokens":5,"output_tokens":2}})");
  EXPECT_EQ(a.text, "ab");
  EXPECT_EQ(a.input_tokens, 5u);
  const auto g = GeminiGenerateAdapter().parse(
      R"({"candidates":[{"content":{"parts":[{"text":"g"}]}}],"usageMetadata":{"promptTokenCount":7,"candidatesTokenCount":1}})");
  EXPECT_EQ(g.text, "g");
  EXPECT_EQ(g.output_tokens, 1u);
  EXPECT_THROW(OpenAiChatAdapter().parse("{}"), Error);
  EXPECT_THROW(GeminiGenerateAdapter().parse("not json"), Error);
}

TEST(WireAdapters, BuildRequests) {
  const ModelRegistry reg = ModelRegistry::seeded();
  CompletionRequest r;
  r.system_text = "S";
  r.user_text = "U";
  r.max_output_tokens = 99;
  const HttpCall o1 = OpenAiChatAdapter().build(reg.lookup("o1-mini"), r, "k");
  const json b = json::parse(o1.body);
  EXPECT_EQ(b["messages"].size(), 1u);
  EXPECT_FALSE(b.contains("temperature"));
  EXPECT_EQ(b["max_completion_tokens"], 99);
  const HttpCall c = AnthropicMessagesAdapter().build(reg.lookup("claude-3.5-sonnet"), r, "k");
  EXPECT_EQ(json::parse(c.body)["system"], "S");
  const HttpCall g = GeminiGenerateAdapter().build(reg.lookup("gemini-1.5-flash"), r, "k");
  EXPECT_NE(g.path.find(":generateContent"), std::string::npos);
}

TEST(HttpBackend, MapsStatusesAndUsage) {
  auto transport = std::make_shared<FakeTransport>();
  ::setenv("STAYINSIGHT_TEST_KEY", "secret", 1);
  HttpBackend backend(std::make_unique<OpenAiChatAdapter>(), transport, "STAYINSIGHT_TEST_KEY");
  SimulatedClock clock;
  const ModelProfile p = ModelRegistry::seeded().lookup("gpt-4o");
  CompletionRequest r;
  transport->next = {200, R"({"choices":[{"message":{"content":"ok"}}],"usage":{"prompt_tokens":4,"completion_tokens":1}})"};
  EXPECT_EQ(backend.complete(p, r, clock, clock.now() + seconds(60)).text, "ok");
  EXPECT_EQ(transport->calls.back().headers.front().second, "Bearer secret");
  transport->next = {429, "slow down"};
  try {
    backend.complete(p, r, clock, clock.now() + seconds(60));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProviderError);
    EXPECT_EQ(e.upstream_status(), 429);
    EXPECT_TRUE(e.retriable());
  }
  ::unsetenv("STAYINSIGHT_TEST_KEY");
  EXPECT_EQ(code_of([&] { backend.complete(p, r, clock, clock.now() + seconds(60)); }), ErrorCode::ProviderError);
}
