// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/hash.hpp>
#include <claimcheck/model.hpp>

#include <sstream>

namespace claimcheck
{

std::string_view to_string(Role role)
{
    switch (role)
    {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "user";
}

Role parse_role(std::string_view text)
{
    if (text == "system")
        return Role::System;
    if (text == "user")
        return Role::User;
    if (text == "assistant")
        return Role::Assistant;
    if (text == "tool")
        return Role::Tool;
    throw Error("unknown message role: " + std::string(text));
}

void check_request(const ModelRequest& request)
{
    auto fail = [](const std::string& message) { throw ModelError(ModelError::Kind::Provider, "invalid request: " + message); };
    if (request.messages.empty())
        fail("no messages");
    if (request.messages.front().role != Role::System)
        fail("first message must be the system message");
    for (const auto& m: request.messages)
    {
        if (m.role == Role::Tool && !m.tool_call_id)
            fail("tool message without tool_call_id");
        if (m.role != Role::Assistant && !m.tool_calls.empty())
            fail("tool calls on a non-assistant message");
    }
}

std::string fingerprint(const ModelRequest& request)
{
    // Length-prefixed fields keep the encoding unambiguous.
    auto buffer = std::string {};
    auto field = [&](std::string_view text) {
        buffer += std::to_string(text.size());
        buffer += ':';
        buffer += text;
    };
    field("v1");
    field(request.model_id);
    for (const auto& m: request.messages)
    {
        field(to_string(m.role));
        field(m.content);
        if (m.tool_call_id)
            field(*m.tool_call_id);
        for (const auto& call: m.tool_calls)
        {
            field(call.id);
            field(call.tool);
            field(call.arguments.dump());
        }
        field("|");
    }
    for (const auto& tool: request.tools)
        field(tool.name);
    return sha256_hex(buffer);
}

nlohmann::json to_json(const ToolCall& call)
{
    return { { "id", call.id }, { "name", call.tool }, { "arguments", call.arguments } };
}

ToolCall tool_call_from_json(const nlohmann::json& json)
{
    auto call = ToolCall {};
    call.id = json.value("id", "");
    call.tool = json.at("name").get<std::string>();
    call.arguments = json.contains("arguments") ? json.at("arguments") : nlohmann::json::object();
    return call;
}

nlohmann::json to_json(const ChatMessage& message)
{
    auto json = nlohmann::json { { "role", to_string(message.role) }, { "content", message.content } };
    if (!message.tool_calls.empty())
    {
        json["tool_calls"] = nlohmann::json::array();
        for (const auto& call: message.tool_calls)
            json["tool_calls"].push_back(to_json(call));
    }
    if (message.tool_call_id)
        json["tool_call_id"] = *message.tool_call_id;
    return json;
}

ChatMessage message_from_json(const nlohmann::json& json)
{
    auto message = ChatMessage {};
    message.role = parse_role(json.at("role").get<std::string>());
    if (json.contains("content") && !json["content"].is_null())
        message.content = json["content"].get<std::string>();
    if (json.contains("tool_calls"))
        for (const auto& call: json["tool_calls"])
            message.tool_calls.push_back(tool_call_from_json(call));
    if (json.contains("tool_call_id"))
        message.tool_call_id = json["tool_call_id"].get<std::string>();
    return message;
}

nlohmann::json to_json(const ModelResponse& response)
{
    return { { "message", to_json(response.message) },
             { "usage", { { "input_tokens", response.usage.input_tokens }, { "output_tokens", response.usage.output_tokens } } } };
}

ModelResponse response_from_json(const nlohmann::json& json)
{
    auto response = ModelResponse { message_from_json(json.at("message")) };
    if (json.contains("usage"))
    {
        response.usage.input_tokens = json["usage"].value("input_tokens", std::int64_t { 0 });
        response.usage.output_tokens = json["usage"].value("output_tokens", std::int64_t { 0 });
    }
    if (response.message.role != Role::Assistant)
        throw Error("model response must carry an assistant message");
    return response;
}

// --- transcripts --------------------------------------------------------

std::string meta_line(const TranscriptMeta& meta)
{
    return nlohmann::json {
        { "type", "meta" },
        { "format_version", 1 },
        { "created_at", meta.created_at },
        { "models", { { "verifier", meta.verifier_model }, { "expert", meta.expert_model } } },
        { "claim", { { "text", meta.claim }, { "context", meta.context } } },
    }
        .dump();
}

std::string entry_line(const TranscriptEntry& entry)
{
    return nlohmann::json {
        { "type", "entry" },
        { "index", entry.index },
        { "agent", entry.agent },
        { "model", entry.model_id },
        { "fingerprint", entry.fingerprint },
        { "response", to_json(entry.response) },
    }
        .dump();
}

Transcript parse_transcript(std::string_view text)
{
    auto transcript = Transcript {};
    auto in = std::istringstream(std::string(text));
    auto lineNo = 0;
    auto haveMeta = false;
    for (std::string line; std::getline(in, line);)
    {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            auto json = nlohmann::json::parse(line);
            auto type = json.at("type").get<std::string>();
            if (type == "meta")
            {
                transcript.meta.created_at = json.value("created_at", "");
                transcript.meta.verifier_model = json.at("models").value("verifier", "");
                transcript.meta.expert_model = json.at("models").value("expert", "");
                transcript.meta.claim = json.at("claim").value("text", "");
                transcript.meta.context = json.at("claim").value("context", "");
                haveMeta = true;
            }
            else if (type == "entry")
            {
                auto entry = TranscriptEntry {};
                entry.index = json.at("index").get<std::size_t>();
                entry.agent = json.value("agent", "");
                entry.model_id = json.value("model", "");
                entry.fingerprint = json.at("fingerprint").get<std::string>();
                entry.response = response_from_json(json.at("response"));
                if (entry.index != transcript.entries.size())
                    throw Error("entry index " + std::to_string(entry.index) + " out of sequence");
                transcript.entries.push_back(std::move(entry));
            }
            else
            {
                throw Error("unknown record type `" + type + "`");
            }
        }
        catch (const std::exception& e)
        {
            throw Error("transcript line " + std::to_string(lineNo) + ": " + e.what());
        }
    }
    if (!haveMeta)
        throw Error("transcript has no meta record");
    return transcript;
}

Transcript load_transcript(const std::string& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error("cannot read transcript " + path);
    auto text = std::string(std::istreambuf_iterator<char>(in), {});
    return parse_transcript(text);
}

TranscriptWriter::TranscriptWriter(const std::string& path, const TranscriptMeta& meta):
    _out(path, std::ios::binary | std::ios::trunc)
{
    if (!_out)
        throw Error("cannot write transcript " + path);
    _out << meta_line(meta) << '\n';
    _out.flush();
}

void TranscriptWriter::append(TranscriptEntry entry)
{
    auto lock = std::scoped_lock(_mutex);
    entry.index = _count++;
    _out << entry_line(entry) << '\n';
    _out.flush();
}

std::size_t TranscriptWriter::size() const
{
    auto lock = std::scoped_lock(_mutex);
    return _count;
}

RecordingProvider::RecordingProvider(std::shared_ptr<ModelProvider> inner, std::shared_ptr<TranscriptWriter> writer):
    _inner(std::move(inner)), _writer(std::move(writer))
{
}

ModelResponse RecordingProvider::complete(const ModelRequest& request)
{
    // Held across the call so that entry order matches request order.
    auto lock = std::scoped_lock(_mutex);
    auto response = _inner->complete(request);
    _writer->append({ 0, fingerprint(request), request.agent, request.model_id, response });
    return response;
}

ReplayProvider::ReplayProvider(Transcript transcript): _transcript(std::move(transcript))
{
}

ModelResponse ReplayProvider::complete(const ModelRequest& request)
{
    check_request(request);
    auto actual = fingerprint(request);
    auto lock = std::scoped_lock(_mutex);
    if (_next >= _transcript.entries.size())
        throw ModelError(ModelError::Kind::ReplayMiss,
                         "replay miss at entry " + std::to_string(_next) + ": transcript exhausted (actual fingerprint "
                             + actual + ")");
    const auto& entry = _transcript.entries[_next];
    if (entry.fingerprint != actual)
        throw ModelError(ModelError::Kind::ReplayMiss,
                         "replay miss at entry " + std::to_string(_next) + ": expected fingerprint " + entry.fingerprint
                             + ", actual " + actual);
    ++_next;
    return entry.response;
}

std::size_t ReplayProvider::consumed() const
{
    auto lock = std::scoped_lock(_mutex);
    return _next;
}

} // namespace claimcheck
