// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/model.hpp>
#include <claimcheck/tools.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace claimcheck
{

struct AgentSpec
{
    std::string name;
    std::string instructions;
    // Appended to the instructions under an "Output" heading.
    std::string output_contract;
    std::shared_ptr<const ToolRegistry> tools;
    std::shared_ptr<ModelProvider> provider;
    std::string model_id;
    Sampling sampling;
    int max_turns = 15;
    // Agents whose contract takes no input get this user message instead.
    bool allow_empty_input = false;
    std::string kickoff;

    /// Throws Error unless max_turns >= 1 and a provider, model and tool
    /// registry are bound.
    void check() const;
    [[nodiscard]] std::string system_prompt() const;
};

struct ToolInvocation
{
    ToolCall call;
    ToolOutcome outcome;

    bool operator==(const ToolInvocation&) const = default;
};

struct AgentRun
{
    std::string agent;
    std::string input;
    std::vector<ChatMessage> messages;
    std::vector<ToolInvocation> tool_invocations;
    std::string final_text;
    Usage usage;
    int turn_count = 0;
    bool complete = false;
    std::string failure;

    bool operator==(const AgentRun&) const = default;
};

/// One finished invocation of an agent wrapped as a tool.
struct NestedRun
{
    std::string tool;
    nlohmann::json arguments;
    AgentRun run;
    ToolOutcome outcome;
};

/// Collects nested runs and per-model token usage across one top-level run.
/// Thread safe.
class RunTrace
{
  public:
    void record(NestedRun nested);
    void add_usage(const std::string& model_id, const Usage& usage);

    [[nodiscard]] std::vector<NestedRun> nested() const;
    [[nodiscard]] std::map<std::string, Usage> usage_by_model() const;

  private:
    mutable std::mutex _mutex;
    std::vector<NestedRun> _nested;
    std::map<std::string, Usage> _usage;
};

/// Complete, run the requested tools in listed order, append their outcomes,
/// repeat until the model answers without tool calls or the turn budget is
/// spent. An exhausted budget gives back the partial run with complete=false.
/// Provider errors propagate.
[[nodiscard]] AgentRun run_agent(const AgentSpec& spec, const std::string& input, RunTrace* trace = nullptr);

/// Appends a user message to a finished run and keeps going within whatever
/// is left of the turn budget.
void continue_run(const AgentSpec& spec, AgentRun& run, const std::string& message, RunTrace* trace = nullptr);

/// Turns the run of a wrapped agent into the tool result handed to the caller.
using FinishHook = std::function<ToolResult(const AgentRun& run)>;

/// "name:\nvalue" blocks in parameter order, separated by blank lines. An
/// empty parameter list yields an empty string.
[[nodiscard]] std::string render_input(const ToolSchema& schema, const nlohmann::json& arguments);

/// Wraps an agent as a tool. Every invocation starts from a fresh history.
/// Incomplete runs and any exception become error results; the nested run is
/// recorded into the caller's trace.
[[nodiscard]] ToolInvoker as_tool(AgentSpec spec, ToolSchema input_schema, FinishHook finish = {});

} // namespace claimcheck
