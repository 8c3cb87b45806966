// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/session.hpp>

#include <chrono>
#include <ctime>

namespace claimcheck
{

std::string_view to_string(Mode mode)
{
    switch (mode)
    {
        case Mode::Live: return "live";
        case Mode::Record: return "record";
        case Mode::Replay: return "replay";
    }
    return "replay";
}

std::optional<Mode> parse_mode(std::string_view text)
{
    for (auto mode: { Mode::Live, Mode::Record, Mode::Replay })
        if (text == to_string(mode))
            return mode;
    return std::nullopt;
}

std::string utc_timestamp()
{
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm parts {};
    gmtime_r(&now, &parts);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buffer;
}

ProviderHandle make_provider(const ProviderSetup& setup)
{
    auto handle = ProviderHandle {};
    if (setup.mode == Mode::Replay)
    {
        if (setup.transcript.empty())
            throw Error("replay mode requires a transcript");
        handle.replay = std::make_shared<ReplayProvider>(load_transcript(setup.transcript));
        handle.provider = handle.replay;
        return handle;
    }

    auto inner = std::shared_ptr<ModelProvider> {};
    if (!setup.script.empty())
        inner = ScriptedProvider::from_file(setup.script);
    else
        inner = std::make_shared<RemoteProvider>(remote_options_from_env());

    if (setup.mode == Mode::Live)
    {
        handle.provider = std::move(inner);
        return handle;
    }
    if (setup.transcript.empty())
        throw Error("record mode requires a transcript path");
    handle.writer = std::make_shared<TranscriptWriter>(setup.transcript, setup.meta);
    handle.provider = std::make_shared<RecordingProvider>(std::move(inner), handle.writer);
    return handle;
}

} // namespace claimcheck
