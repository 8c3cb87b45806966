// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/tools.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace claimcheck
{

enum class Role
{
    System,
    User,
    Assistant,
    Tool,
};

[[nodiscard]] std::string_view to_string(Role role);
[[nodiscard]] Role parse_role(std::string_view text);

struct ChatMessage
{
    Role role = Role::User;
    std::string content;
    std::vector<ToolCall> tool_calls;
    std::optional<std::string> tool_call_id;

    static ChatMessage system(std::string content) { return { Role::System, std::move(content) }; }
    static ChatMessage user(std::string content) { return { Role::User, std::move(content) }; }
    static ChatMessage assistant(std::string content, std::vector<ToolCall> calls = {})
    {
        return { Role::Assistant, std::move(content), std::move(calls) };
    }
    static ChatMessage tool(std::string call_id, std::string content)
    {
        return { Role::Tool, std::move(content), {}, std::move(call_id) };
    }

    bool operator==(const ChatMessage&) const = default;
};

struct Sampling
{
    double temperature = 0;
    int max_output_tokens = 4096;
};

struct ModelRequest
{
    // Name of the agent issuing the request. Used for routing scripted
    // responses and labelling transcripts; not part of the fingerprint.
    std::string agent;
    std::string model_id;
    std::vector<ChatMessage> messages;
    std::vector<ToolSchema> tools;
    Sampling sampling;
};

struct Usage
{
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    Usage& operator+=(const Usage& other)
    {
        input_tokens += other.input_tokens;
        output_tokens += other.output_tokens;
        return *this;
    }

    bool operator==(const Usage&) const = default;
};

struct ModelResponse
{
    ChatMessage message;
    Usage usage;

    bool operator==(const ModelResponse&) const = default;
};

/// Throws ModelError(Provider) when the request breaks the message invariants:
/// nonempty, system first, tool messages carry ids, tool calls only on
/// assistant messages.
void check_request(const ModelRequest& request);

/// Hex SHA-256 over model id, message roles and contents (including tool-call
/// names, arguments and ids) and the offered tool names. Sampling parameters
/// and the agent label are left out.
[[nodiscard]] std::string fingerprint(const ModelRequest& request);

[[nodiscard]] nlohmann::json to_json(const ToolCall& call);
[[nodiscard]] ToolCall tool_call_from_json(const nlohmann::json& json);
[[nodiscard]] nlohmann::json to_json(const ChatMessage& message);
[[nodiscard]] ChatMessage message_from_json(const nlohmann::json& json);
[[nodiscard]] nlohmann::json to_json(const ModelResponse& response);
[[nodiscard]] ModelResponse response_from_json(const nlohmann::json& json);

class ModelProvider
{
  public:
    virtual ~ModelProvider() = default;

    /// Safe to call concurrently.
    virtual ModelResponse complete(const ModelRequest& request) = 0;
};

// --- scripted -----------------------------------------------------------

/// Canned responses keyed on (agent, last user message). Within a
/// conversation the step is the number of assistant turns after the last user
/// message, so the provider is stateless and fully determined by the request.
///
/// Script document:
///   {"agents": {"<agent>": [
///       {"user": "<exact text>" | "user_contains": "<text>" | neither,
///        "steps": [{"content": "...", "tool_calls": [{"name", "arguments", "id"?}],
///                   "usage": {"input_tokens", "output_tokens"}?}, ...]}]}}
/// Exact matches win over substring matches, which win over catch-alls.
class ScriptedProvider final: public ModelProvider
{
  public:
    explicit ScriptedProvider(nlohmann::json script);
    static std::shared_ptr<ScriptedProvider> from_file(const std::string& path);

    ModelResponse complete(const ModelRequest& request) override;

  private:
    struct Conversation
    {
        enum class Match
        {
            Exact,
            Contains,
            Any,
        } match;
        std::string pattern;
        std::vector<ModelResponse> steps;
    };

    std::map<std::string, std::vector<Conversation>> _agents;
};

// --- remote -------------------------------------------------------------

struct RemoteOptions
{
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff { 1000 };
    std::chrono::seconds timeout { 300 };
};

/// Reads CLAIMCHECK_API_KEY (required) and CLAIMCHECK_BASE_URL (optional).
/// Throws ModelError(Credentials) naming the missing variable.
[[nodiscard]] RemoteOptions remote_options_from_env();

/// Chat-completions client with tool calling. Transport failures, 429 and 5xx
/// responses are retried with exponential backoff up to max_attempts.
class RemoteProvider final: public ModelProvider
{
  public:
    explicit RemoteProvider(RemoteOptions options);

    ModelResponse complete(const ModelRequest& request) override;

    [[nodiscard]] static nlohmann::json request_body(const ModelRequest& request, bool with_temperature);
    [[nodiscard]] static ModelResponse parse_response(const nlohmann::json& body);

  private:
    RemoteOptions _options;
    std::mutex _mutex;
    std::set<std::string> _noTemperature;
};

// --- transcripts --------------------------------------------------------

struct TranscriptMeta
{
    std::string created_at;
    std::string verifier_model;
    std::string expert_model;
    std::string claim;
    std::string context;

    bool operator==(const TranscriptMeta&) const = default;
};

struct TranscriptEntry
{
    std::size_t index = 0;
    std::string fingerprint;
    std::string agent;
    std::string model_id;
    ModelResponse response;

    bool operator==(const TranscriptEntry&) const = default;
};

struct Transcript
{
    TranscriptMeta meta;
    std::vector<TranscriptEntry> entries;
};

/// Line-delimited: a meta record, then one record per model response.
[[nodiscard]] Transcript load_transcript(const std::string& path);
[[nodiscard]] Transcript parse_transcript(std::string_view text);
[[nodiscard]] std::string meta_line(const TranscriptMeta& meta);
[[nodiscard]] std::string entry_line(const TranscriptEntry& entry);

/// Appends one line per entry as responses arrive.
class TranscriptWriter
{
  public:
    TranscriptWriter(const std::string& path, const TranscriptMeta& meta);

    void append(TranscriptEntry entry);
    [[nodiscard]] std::size_t size() const;

  private:
    mutable std::mutex _mutex;
    std::ofstream _out;
    std::size_t _count = 0;
};

/// Forwards to an inner provider and records every response.
class RecordingProvider final: public ModelProvider
{
  public:
    RecordingProvider(std::shared_ptr<ModelProvider> inner, std::shared_ptr<TranscriptWriter> writer);

    ModelResponse complete(const ModelRequest& request) override;

  private:
    std::shared_ptr<ModelProvider> _inner;
    std::shared_ptr<TranscriptWriter> _writer;
    std::mutex _mutex;
};

/// Serves a transcript in order. A request whose fingerprint differs from the
/// next entry, or a request past the end, is a replay miss.
class ReplayProvider final: public ModelProvider
{
  public:
    explicit ReplayProvider(Transcript transcript);

    ModelResponse complete(const ModelRequest& request) override;

    [[nodiscard]] std::size_t consumed() const;
    [[nodiscard]] const Transcript& transcript() const noexcept { return _transcript; }

  private:
    Transcript _transcript;
    mutable std::mutex _mutex;
    std::size_t _next = 0;
};

} // namespace claimcheck
