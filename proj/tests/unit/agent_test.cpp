// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/agent.hpp>
#include <claimcheck/error.hpp>

#include <doctest.h>
#include <test_support.hpp>

#include <functional>

using namespace claimcheck;

namespace
{

// Answers with whatever the callback returns and keeps every request.
class CallbackProvider final: public ModelProvider
{
  public:
    explicit CallbackProvider(std::function<ModelResponse(const ModelRequest&)> respond)
      : _respond(std::move(respond))
    {
    }

    ModelResponse complete(const ModelRequest& request) override
    {
        requests.push_back(request);
        return _respond(request);
    }

    std::vector<ModelRequest> requests;

  private:
    std::function<ModelResponse(const ModelRequest&)> _respond;
};

ModelResponse answer(std::string text, Usage usage = { 5, 2 })
{
    return { ChatMessage::assistant(std::move(text)), usage };
}

ModelResponse call(std::string tool, nlohmann::json arguments, std::string id = "c1")
{
    return { ChatMessage::assistant("", { ToolCall { std::move(id), std::move(tool), std::move(arguments) } }), { 7, 1 } };
}

std::size_t assistant_turns_since_user(const ModelRequest& request)
{
    auto count = std::size_t { 0 };
    for (auto it = request.messages.rbegin(); it != request.messages.rend() && it->role != Role::User; ++it)
        if (it->role == Role::Assistant)
            ++count;
    return count;
}

struct EchoTools
{
    std::vector<std::string> order;
    std::shared_ptr<ToolRegistry> registry = std::make_shared<ToolRegistry>();

    EchoTools()
    {
        for (auto name: { "alpha", "beta" })
            registry->register_tool({ name, "echo", { { "text" } } },
                                    [this, name](const nlohmann::json& args, InvocationContext&) -> ToolResult {
                                        order.push_back(name);
                                        return { std::string(name) + ":" + args["text"].get<std::string>() };
                                    });
    }
};

AgentSpec make_spec(std::shared_ptr<ModelProvider> provider, std::shared_ptr<const ToolRegistry> tools)
{
    auto spec = AgentSpec {};
    spec.name = "worker";
    spec.instructions = "Do the work.";
    spec.output_contract = "Reply in one line.";
    spec.tools = std::move(tools);
    spec.provider = std::move(provider);
    spec.model_id = "small";
    spec.max_turns = 4;
    return spec;
}

} // namespace

TEST_CASE("agent runs tools until the model answers")
{
    auto tools = EchoTools {};
    auto provider = std::make_shared<CallbackProvider>([](const ModelRequest& request) {
        if (assistant_turns_since_user(request) == 0)
            return call("alpha", { { "text", "x" } });
        return answer("done");
    });
    auto trace = RunTrace {};
    auto run = run_agent(make_spec(provider, tools.registry), "go", &trace);

    CHECK(run.complete);
    CHECK(run.final_text == "done");
    CHECK(run.turn_count == 2);
    CHECK(run.usage == Usage { 12, 3 });
    REQUIRE(run.messages.size() == 5);
    CHECK(run.messages[0].role == Role::System);
    CHECK(run.messages[0].content == "Do the work.\n\n# Output\n\nReply in one line.");
    CHECK(run.messages[1] == ChatMessage::user("go"));
    CHECK(run.messages[3] == ChatMessage::tool("c1", "alpha:x"));
    REQUIRE(run.tool_invocations.size() == 1);
    CHECK(run.tool_invocations[0].outcome.content == "alpha:x");
    CHECK(trace.usage_by_model().at("small") == Usage { 12, 3 });
    // The second request carries the tool result.
    CHECK(provider->requests[1].messages.back() == ChatMessage::tool("c1", "alpha:x"));
    CHECK(provider->requests[0].tools.size() == 2);
}

TEST_CASE("tool calls in one turn run in listed order")
{
    auto tools = EchoTools {};
    auto provider = std::make_shared<CallbackProvider>([](const ModelRequest& request) {
        if (assistant_turns_since_user(request) > 0)
            return answer("ok");
        auto calls = std::vector<ToolCall> { { "b", "beta", { { "text", "1" } } }, { "a", "alpha", { { "text", "2" } } },
                                             { "u", "nope", nlohmann::json::object() } };
        return ModelResponse { ChatMessage::assistant("", calls), {} };
    });
    auto run = run_agent(make_spec(provider, tools.registry), "go");

    CHECK(tools.order == std::vector<std::string> { "beta", "alpha" });
    REQUIRE(run.tool_invocations.size() == 3);
    CHECK(run.messages[3].tool_call_id == "b");
    CHECK(run.messages[4].tool_call_id == "a");
    // Unknown tools are reported back to the model, not thrown.
    CHECK(run.tool_invocations[2].outcome.is_error);
    CHECK(run.complete);
}

TEST_CASE("turn budget exhaustion returns a partial run")
{
    auto tools = EchoTools {};
    auto provider =
        std::make_shared<CallbackProvider>([](const ModelRequest&) { return call("alpha", { { "text", "again" } }); });
    auto spec = make_spec(provider, tools.registry);
    spec.max_turns = 3;
    auto run = run_agent(spec, "loop");

    CHECK_FALSE(run.complete);
    CHECK(run.turn_count == 3);
    CHECK(provider->requests.size() == 3);
    CHECK(run.final_text.empty());
    CHECK(run.failure == "agent worker exhausted its turn budget of 3 turns without a final answer");
    CHECK(run.tool_invocations.size() == 3);
}

TEST_CASE("agent spec is checked before any model call")
{
    auto tools = EchoTools {};
    auto provider = std::make_shared<CallbackProvider>([](const ModelRequest&) { return answer("x"); });

    auto spec = make_spec(provider, tools.registry);
    spec.max_turns = 0;
    CHECK_THROWS_AS((void)run_agent(spec, "go"), Error);

    spec = make_spec(nullptr, tools.registry);
    CHECK_THROWS_WITH_AS((void)run_agent(spec, "go"), "agent worker: no model provider bound", Error);

    spec = make_spec(provider, nullptr);
    CHECK_THROWS_AS((void)run_agent(spec, "go"), Error);

    spec = make_spec(provider, tools.registry);
    spec.model_id.clear();
    CHECK_THROWS_AS((void)run_agent(spec, "go"), Error);
    CHECK(provider->requests.empty());
}

TEST_CASE("empty input needs an explicit kickoff")
{
    auto tools = EchoTools {};
    auto provider = std::make_shared<CallbackProvider>([](const ModelRequest&) { return answer("summary"); });
    auto spec = make_spec(provider, tools.registry);

    CHECK_THROWS_WITH_AS((void)run_agent(spec, "  \n"), "agent worker requires nonempty input", Error);
    CHECK(provider->requests.empty());

    spec.allow_empty_input = true;
    spec.kickoff = "Start.";
    auto run = run_agent(spec, "");
    CHECK(run.messages[1] == ChatMessage::user("Start."));
    CHECK(run.input.empty());
}

TEST_CASE("runs are reproducible for the same input")
{
    auto tools = EchoTools {};
    auto provider = std::make_shared<CallbackProvider>([](const ModelRequest& request) {
        if (assistant_turns_since_user(request) == 0)
            return call("beta", { { "text", request.messages[1].content } });
        return answer("seen " + request.messages.back().content);
    });
    auto spec = make_spec(provider, tools.registry);
    auto first = run_agent(spec, "same");
    auto second = run_agent(spec, "same");
    CHECK(first == second);
    CHECK(first.final_text == "seen beta:same");
}

TEST_CASE("continue_run appends a user message and keeps the remaining budget")
{
    auto tools = EchoTools {};
    auto provider = std::make_shared<CallbackProvider>([](const ModelRequest& request) {
        return answer(request.messages.back().content == "again" ? "second" : "first");
    });
    auto spec = make_spec(provider, tools.registry);
    spec.max_turns = 2;
    auto run = run_agent(spec, "go");
    continue_run(spec, run, "again");
    CHECK(run.final_text == "second");
    CHECK(run.turn_count == 2);
    CHECK(run.messages.size() == 5);

    continue_run(spec, run, "again");
    CHECK_FALSE(run.complete);
    CHECK(provider->requests.size() == 2);
}

TEST_CASE("render_input lists parameters in schema order")
{
    auto schema = ToolSchema { "ask", "", { { "question" }, { "context_hint" }, { "limit", ParamKind::Integer, false } } };
    CHECK(render_input(schema, { { "context_hint", "Seattle, WA" }, { "question", "Which tables?" } })
          == "question:\nWhich tables?\n\ncontext_hint:\nSeattle, WA");
    CHECK(render_input(schema, { { "question", "q" }, { "context_hint", "h" }, { "limit", 3 } })
          == "question:\nq\n\ncontext_hint:\nh\n\nlimit:\n3");
    CHECK(render_input(ToolSchema { "none" }, nlohmann::json::object()).empty());
}

TEST_CASE("wrapped agents start from a fresh history on every invocation")
{
    auto tools = EchoTools {};
    auto inner = std::make_shared<CallbackProvider>([](const ModelRequest& request) {
        if (assistant_turns_since_user(request) == 0)
            return call("alpha", { { "text", "secret" } });
        return answer("answer to " + request.messages[1].content);
    });
    auto innerSpec = make_spec(inner, tools.registry);
    innerSpec.name = "helper";

    auto outerTools = std::make_shared<ToolRegistry>();
    outerTools->register_tool({ "helper", "ask the helper", { { "question" } } },
                              as_tool(innerSpec, { "helper", "", { { "question" } } }));

    auto outer = std::make_shared<CallbackProvider>([](const ModelRequest& request) {
        auto turn = assistant_turns_since_user(request);
        if (turn == 0)
            return call("helper", { { "question", "first" } }, "h1");
        if (turn == 1)
            return call("helper", { { "question", "second" } }, "h2");
        return answer("final");
    });
    auto outerSpec = make_spec(outer, outerTools);
    outerSpec.name = "lead";

    auto trace = RunTrace {};
    auto run = run_agent(outerSpec, "claim", &trace);
    REQUIRE(run.complete);

    // Each helper invocation sees only its system prompt and its own input.
    REQUIRE(inner->requests.size() == 4);
    CHECK(inner->requests[0].messages.size() == 2);
    CHECK(inner->requests[2].messages.size() == 2);
    CHECK(inner->requests[2].messages[1] == ChatMessage::user("question:\nsecond"));

    // The lead sees the helper's final answer and nothing of its tool traffic.
    for (const auto& message: run.messages)
        CHECK(message.content.find("alpha:secret") == std::string::npos);
    CHECK(run.messages[3] == ChatMessage::tool("h1", "answer to question:\nfirst"));

    auto nested = trace.nested();
    REQUIRE(nested.size() == 2);
    CHECK(nested[0].tool == "helper");
    CHECK(nested[0].arguments == nlohmann::json { { "question", "first" } });
    CHECK(nested[0].run.tool_invocations.size() == 1);
    CHECK(nested[1].outcome.content == "answer to question:\nsecond");

    auto usage = trace.usage_by_model();
    CHECK(usage.at("small") == Usage { 7 + 7 + 5 + 2 * (7 + 5), 1 + 1 + 2 + 2 * (1 + 2) });
}

TEST_CASE("wrapped agent failures come back as error results")
{
    auto tools = EchoTools {};
    auto looping =
        std::make_shared<CallbackProvider>([](const ModelRequest&) { return call("alpha", { { "text", "x" } }); });
    auto spec = make_spec(looping, tools.registry);
    spec.max_turns = 2;
    auto invoker = as_tool(spec, { "worker", "", { { "question" } } });

    auto trace = RunTrace {};
    auto context = InvocationContext { &trace };
    auto result = invoker({ { "question", "q" } }, context);
    CHECK(result.is_error);
    CHECK(result.content == "error: agent worker exhausted its turn budget of 2 turns without a final answer");
    REQUIRE(trace.nested().size() == 1);
    CHECK_FALSE(trace.nested()[0].run.complete);

    auto throwing = std::make_shared<CallbackProvider>(
        [](const ModelRequest&) -> ModelResponse { throw ModelError(ModelError::Kind::Transport, "connection reset"); });
    auto failing = as_tool(make_spec(throwing, tools.registry), { "worker", "", { { "question" } } });
    result = failing({ { "question", "q" } }, context);
    CHECK(result.is_error);
    CHECK(result.content.find("connection reset") != std::string::npos);
}

TEST_CASE("finish hook shapes the tool result")
{
    auto tools = EchoTools {};
    auto provider = std::make_shared<CallbackProvider>([](const ModelRequest&) { return answer("raw"); });
    auto invoker = as_tool(make_spec(provider, tools.registry), { "worker", "", { { "question" } } },
                           [](const AgentRun& run) { return ToolResult { "[" + run.final_text + "]" }; });
    auto context = InvocationContext {};
    CHECK(invoker({ { "question", "q" } }, context).content == "[raw]");
}
