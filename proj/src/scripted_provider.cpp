// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/model.hpp>

#include <fstream>

namespace claimcheck
{

ScriptedProvider::ScriptedProvider(nlohmann::json script)
{
    if (!script.is_object() || !script.contains("agents") || !script["agents"].is_object())
        throw Error("script must be an object with an `agents` map");
    for (const auto& [agent, conversations]: script["agents"].items())
    {
        auto& list = _agents[agent];
        for (const auto& c: conversations)
        {
            auto conversation = Conversation { Conversation::Match::Any, {}, {} };
            if (c.contains("user"))
                conversation = { Conversation::Match::Exact, c["user"].get<std::string>(), {} };
            else if (c.contains("user_contains"))
                conversation = { Conversation::Match::Contains, c["user_contains"].get<std::string>(), {} };
            auto turn = 0;
            for (const auto& step: c.at("steps"))
            {
                auto message = ChatMessage::assistant(step.value("content", ""));
                auto i = 0;
                for (const auto& call: step.value("tool_calls", nlohmann::json::array()))
                {
                    auto parsed = tool_call_from_json(call);
                    if (parsed.id.empty())
                        parsed.id = "call_" + std::to_string(turn) + "_" + std::to_string(i);
                    message.tool_calls.push_back(std::move(parsed));
                    ++i;
                }
                auto response = ModelResponse { std::move(message) };
                if (step.contains("usage"))
                {
                    response.usage.input_tokens = step["usage"].value("input_tokens", std::int64_t { 0 });
                    response.usage.output_tokens = step["usage"].value("output_tokens", std::int64_t { 0 });
                }
                conversation.steps.push_back(std::move(response));
                ++turn;
            }
            list.push_back(std::move(conversation));
        }
    }
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::string& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw Error("cannot read script " + path);
    try
    {
        return std::make_shared<ScriptedProvider>(nlohmann::json::parse(in));
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error("script " + path + ": " + e.what());
    }
}

ModelResponse ScriptedProvider::complete(const ModelRequest& request)
{
    check_request(request);
    auto lastUser = request.messages.end();
    for (auto it = request.messages.begin(); it != request.messages.end(); ++it)
        if (it->role == Role::User)
            lastUser = it;
    if (lastUser == request.messages.end())
        throw ModelError(ModelError::Kind::ScriptMiss, "script miss: request for agent `" + request.agent + "` has no user message");

    auto step = static_cast<std::size_t>(
        std::count_if(lastUser, request.messages.end(), [](const ChatMessage& m) { return m.role == Role::Assistant; }));

    auto agent = _agents.find(request.agent);
    if (agent == _agents.end())
        throw ModelError(ModelError::Kind::ScriptMiss, "script miss: no script for agent `" + request.agent + "`");

    const Conversation* chosen = nullptr;
    for (auto mode: { Conversation::Match::Exact, Conversation::Match::Contains, Conversation::Match::Any })
    {
        for (const auto& c: agent->second)
        {
            if (c.match != mode)
                continue;
            auto hit = mode == Conversation::Match::Any || (mode == Conversation::Match::Exact && c.pattern == lastUser->content)
                       || (mode == Conversation::Match::Contains && lastUser->content.find(c.pattern) != std::string::npos);
            if (hit)
            {
                chosen = &c;
                break;
            }
        }
        if (chosen)
            break;
    }
    if (!chosen)
    {
        auto preview = lastUser->content.substr(0, 80);
        throw ModelError(ModelError::Kind::ScriptMiss,
                         "script miss: agent `" + request.agent + "` has no conversation for input \"" + preview + "\"");
    }
    if (step >= chosen->steps.size())
        throw ModelError(ModelError::Kind::ScriptMiss, "script miss: agent `" + request.agent + "` has no step "
                                                           + std::to_string(step) + " for this conversation");
    return chosen->steps[step];
}

} // namespace claimcheck
