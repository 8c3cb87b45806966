// SPDX-License-Identifier: Apache-2.0
#include <httplib.h>

#include <claimcheck/error.hpp>
#include <claimcheck/model.hpp>

#include <cstdlib>
#include <thread>

namespace claimcheck
{

RemoteOptions remote_options_from_env()
{
    auto options = RemoteOptions {};
    const char* key = std::getenv("CLAIMCHECK_API_KEY");
    if (!key || !*key)
        throw ModelError(ModelError::Kind::Credentials, "missing environment variable CLAIMCHECK_API_KEY");
    options.api_key = key;
    if (const char* url = std::getenv("CLAIMCHECK_BASE_URL"); url && *url)
        options.base_url = url;
    return options;
}

RemoteProvider::RemoteProvider(RemoteOptions options): _options(std::move(options))
{
    while (!_options.base_url.empty() && _options.base_url.back() == '/')
        _options.base_url.pop_back();
}

nlohmann::json RemoteProvider::request_body(const ModelRequest& request, bool with_temperature)
{
    auto messages = nlohmann::json::array();
    for (const auto& m: request.messages)
    {
        auto json = nlohmann::json { { "role", to_string(m.role) } };
        if (m.role == Role::Assistant && !m.tool_calls.empty())
        {
            json["content"] = m.content.empty() ? nlohmann::json(nullptr) : nlohmann::json(m.content);
            json["tool_calls"] = nlohmann::json::array();
            for (const auto& call: m.tool_calls)
                json["tool_calls"].push_back({ { "id", call.id },
                                               { "type", "function" },
                                               { "function",
                                                 { { "name", call.tool },
                                                   { "arguments", call.arguments.is_string() ? call.arguments.get<std::string>()
                                                                                             : call.arguments.dump() } } } });
        }
        else
        {
            json["content"] = m.content;
        }
        if (m.tool_call_id)
            json["tool_call_id"] = *m.tool_call_id;
        messages.push_back(std::move(json));
    }

    auto body = nlohmann::json {
        { "model", request.model_id },
        { "messages", std::move(messages) },
        { "max_completion_tokens", request.sampling.max_output_tokens },
    };
    if (with_temperature)
        body["temperature"] = request.sampling.temperature;
    if (!request.tools.empty())
    {
        body["tools"] = nlohmann::json::array();
        for (const auto& tool: request.tools)
            body["tools"].push_back(tool.to_json());
    }
    return body;
}

ModelResponse RemoteProvider::parse_response(const nlohmann::json& body)
{
    if (body.contains("error") && !body["error"].is_null())
        throw ModelError(ModelError::Kind::Provider, "provider error: " + body["error"].value("message", body["error"].dump()));
    if (!body.contains("choices") || body["choices"].empty())
        throw ModelError(ModelError::Kind::Provider, "provider response has no choices");

    const auto& message = body["choices"][0].at("message");
    auto response = ModelResponse { ChatMessage::assistant({}) };
    if (message.contains("content") && message["content"].is_string())
        response.message.content = message["content"].get<std::string>();
    if (message.contains("tool_calls") && message["tool_calls"].is_array())
    {
        for (const auto& call: message["tool_calls"])
        {
            auto parsed = ToolCall { call.value("id", ""), call.at("function").at("name").get<std::string>() };
            auto raw = call["function"].value("arguments", "{}");
            // Unparseable arguments are kept as a string; the registry reports
            // them back to the model as an error.
            parsed.arguments = nlohmann::json::parse(raw, nullptr, false);
            if (parsed.arguments.is_discarded())
                parsed.arguments = raw;
            response.message.tool_calls.push_back(std::move(parsed));
        }
    }
    if (body.contains("usage") && body["usage"].is_object())
    {
        response.usage.input_tokens = body["usage"].value("prompt_tokens", std::int64_t { 0 });
        response.usage.output_tokens = body["usage"].value("completion_tokens", std::int64_t { 0 });
    }
    return response;
}

ModelResponse RemoteProvider::complete(const ModelRequest& request)
{
    check_request(request);

    auto schemeEnd = _options.base_url.find("://");
    auto pathStart = _options.base_url.find('/', schemeEnd == std::string::npos ? 0 : schemeEnd + 3);
    auto origin = _options.base_url.substr(0, pathStart);
    auto path = (pathStart == std::string::npos ? std::string {} : _options.base_url.substr(pathStart)) + "/chat/completions";

    auto client = httplib::Client(origin);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(_options.timeout);
    client.set_write_timeout(std::chrono::seconds(60));
    client.set_bearer_token_auth(_options.api_key);

    auto lastError = std::string {};
    auto attempt = 0;
    while (attempt < _options.max_attempts)
    {
        bool withTemperature;
        {
            auto lock = std::scoped_lock(_mutex);
            withTemperature = !_noTemperature.contains(request.model_id);
        }
        auto body = request_body(request, withTemperature).dump();
        auto result = client.Post(path, body, "application/json");
        ++attempt;

        if (!result)
        {
            lastError = "transport error: " + httplib::to_string(result.error());
        }
        else if (result->status == 200)
        {
            auto parsed = nlohmann::json::parse(result->body, nullptr, false);
            if (parsed.is_discarded())
                throw ModelError(ModelError::Kind::Provider, "provider returned malformed JSON");
            return parse_response(parsed);
        }
        else
        {
            auto parsed = nlohmann::json::parse(result->body, nullptr, false);
            auto message = std::string {};
            auto param = std::string {};
            if (!parsed.is_discarded() && parsed.contains("error") && parsed["error"].is_object())
            {
                message = parsed["error"].value("message", "");
                if (parsed["error"].contains("param") && parsed["error"]["param"].is_string())
                    param = parsed["error"]["param"].get<std::string>();
            }
            if (message.empty())
                message = result->body.substr(0, 500);

            // Some models only accept their default temperature. Drop the
            // parameter for that model and resend without spending an attempt.
            if (result->status == 400 && withTemperature && param == "temperature")
            {
                auto lock = std::scoped_lock(_mutex);
                _noTemperature.insert(request.model_id);
                --attempt;
                continue;
            }
            lastError = "HTTP " + std::to_string(result->status) + ": " + message;
            if (result->status != 429 && result->status < 500)
                throw ModelError(ModelError::Kind::Provider, "provider error: " + lastError);
        }
        if (attempt < _options.max_attempts)
            std::this_thread::sleep_for(_options.initial_backoff * (1 << (attempt - 1)));
    }
    throw ModelError(ModelError::Kind::Transport,
                     "model request failed after " + std::to_string(_options.max_attempts) + " attempts: " + lastError);
}

} // namespace claimcheck
