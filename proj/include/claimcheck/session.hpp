// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/model.hpp>

#include <memory>
#include <optional>
#include <string>

namespace claimcheck
{

enum class Mode
{
    Live,
    Record,
    Replay,
};

[[nodiscard]] std::string_view to_string(Mode mode);
[[nodiscard]] std::optional<Mode> parse_mode(std::string_view text);

struct ProviderSetup
{
    Mode mode = Mode::Replay;
    // Transcript to write (record) or read (replay).
    std::string transcript;
    // Canned responses to use instead of the remote endpoint in live and
    // record mode.
    std::string script;
    TranscriptMeta meta;
};

struct ProviderHandle
{
    std::shared_ptr<ModelProvider> provider;
    std::shared_ptr<ReplayProvider> replay;
    std::shared_ptr<TranscriptWriter> writer;
};

/// Live talks to the endpoint (or the script), record does the same and
/// writes every response to the transcript, replay serves the transcript and
/// never touches the network. Throws ModelError(Credentials) when the endpoint
/// is needed and not configured, and Error for missing files.
[[nodiscard]] ProviderHandle make_provider(const ProviderSetup& setup);

/// Current UTC time as 2026-01-31T12:00:00Z.
[[nodiscard]] std::string utc_timestamp();

} // namespace claimcheck
