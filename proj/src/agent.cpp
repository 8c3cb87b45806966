// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/agent.hpp>
#include <claimcheck/error.hpp>

namespace claimcheck
{

void AgentSpec::check() const
{
    if (name.empty())
        throw Error("agent has no name");
    if (max_turns < 1)
        throw Error("agent " + name + ": max_turns must be at least 1");
    if (!provider)
        throw Error("agent " + name + ": no model provider bound");
    if (model_id.empty())
        throw Error("agent " + name + ": no model id bound");
    if (!tools)
        throw Error("agent " + name + ": no tool registry bound");
}

std::string AgentSpec::system_prompt() const
{
    if (output_contract.empty())
        return instructions;
    return instructions + "\n\n# Output\n\n" + output_contract;
}

void RunTrace::record(NestedRun nested)
{
    auto lock = std::scoped_lock(_mutex);
    _nested.push_back(std::move(nested));
}

void RunTrace::add_usage(const std::string& model_id, const Usage& usage)
{
    auto lock = std::scoped_lock(_mutex);
    _usage[model_id] += usage;
}

std::vector<NestedRun> RunTrace::nested() const
{
    auto lock = std::scoped_lock(_mutex);
    return _nested;
}

std::map<std::string, Usage> RunTrace::usage_by_model() const
{
    auto lock = std::scoped_lock(_mutex);
    return _usage;
}

namespace
{

void drive(const AgentSpec& spec, AgentRun& run, RunTrace* trace)
{
    auto context = InvocationContext { trace };
    auto schemas = spec.tools->schemas();
    while (run.turn_count < spec.max_turns)
    {
        auto request = ModelRequest { spec.name, spec.model_id, run.messages, schemas, spec.sampling };
        auto response = spec.provider->complete(request);
        ++run.turn_count;
        run.usage += response.usage;
        if (trace)
            trace->add_usage(spec.model_id, response.usage);

        auto calls = response.message.tool_calls;
        run.messages.push_back(std::move(response.message));
        if (calls.empty())
        {
            run.final_text = run.messages.back().content;
            run.complete = true;
            run.failure.clear();
            return;
        }
        for (const auto& call: calls)
        {
            auto outcome = spec.tools->invoke(call, context);
            run.messages.push_back(ChatMessage::tool(call.id, outcome.content));
            run.tool_invocations.push_back({ call, std::move(outcome) });
        }
    }
    run.complete = false;
    run.final_text.clear();
    run.failure = "agent " + spec.name + " exhausted its turn budget of " + std::to_string(spec.max_turns)
                  + " turns without a final answer";
}

} // namespace

AgentRun run_agent(const AgentSpec& spec, const std::string& input, RunTrace* trace)
{
    spec.check();
    auto blank = input.find_first_not_of(" \t\r\n") == std::string::npos;
    if (blank && !spec.allow_empty_input)
        throw Error("agent " + spec.name + " requires nonempty input");

    auto run = AgentRun { spec.name, input };
    auto user = blank ? spec.kickoff : input;
    if (user.empty())
        throw Error("agent " + spec.name + " has no kickoff message for empty input");
    run.messages = { ChatMessage::system(spec.system_prompt()), ChatMessage::user(std::move(user)) };
    drive(spec, run, trace);
    return run;
}

void continue_run(const AgentSpec& spec, AgentRun& run, const std::string& message, RunTrace* trace)
{
    spec.check();
    run.messages.push_back(ChatMessage::user(message));
    run.complete = false;
    drive(spec, run, trace);
}

std::string render_input(const ToolSchema& schema, const nlohmann::json& arguments)
{
    auto text = std::string {};
    for (const auto& param: schema.parameters)
    {
        if (!arguments.contains(param.name))
            continue;
        const auto& value = arguments[param.name];
        if (!text.empty())
            text += "\n\n";
        text += param.name + ":\n" + (value.is_string() ? value.get<std::string>() : value.dump());
    }
    return text;
}

ToolInvoker as_tool(AgentSpec spec, ToolSchema input_schema, FinishHook finish)
{
    spec.check();
    return [spec = std::move(spec), schema = std::move(input_schema),
            finish = std::move(finish)](const nlohmann::json& arguments, InvocationContext& context) -> ToolResult {
        auto nested = NestedRun { schema.name, arguments };
        auto result = ToolResult {};
        try
        {
            nested.run = run_agent(spec, render_input(schema, arguments), context.trace);
            if (!nested.run.complete)
                result = { "error: " + nested.run.failure, true };
            else if (finish)
                result = finish(nested.run);
            else
                result = { nested.run.final_text, false };
        }
        catch (const std::exception& e)
        {
            nested.run.agent = spec.name;
            nested.run.failure = e.what();
            result = { std::string("error: ") + e.what(), true };
        }
        if (context.trace)
        {
            nested.outcome = { {}, result.content, result.is_error };
            context.trace->record(std::move(nested));
        }
        return result;
    };
}

} // namespace claimcheck
