// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace claimcheck
{

class Error: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent toolbox configuration. Line and column are
/// 1-based and zero when the problem has no source position.
class ConfigError: public Error
{
  public:
    ConfigError(std::string message, int line = 0, int column = 0, std::string identifier = {});

    [[nodiscard]] int line() const noexcept { return _line; }
    [[nodiscard]] int column() const noexcept { return _column; }
    [[nodiscard]] const std::string& identifier() const noexcept { return _identifier; }

  private:
    int _line;
    int _column;
    std::string _identifier;
};

class ReadOnlyViolation: public Error
{
  public:
    using Error::Error;
};

class ConnectionError: public Error
{
  public:
    using Error::Error;
};

/// Error reported by a database engine. The engine's text is kept verbatim in
/// what(), prefixed by the dialect name.
class SqlError: public Error
{
  public:
    SqlError(std::string dialect, const std::string& message):
        Error("error (" + dialect + "): " + message), _dialect(std::move(dialect))
    {
    }

    [[nodiscard]] const std::string& dialect() const noexcept { return _dialect; }

  private:
    std::string _dialect;
};

class UnknownTable: public Error
{
  public:
    explicit UnknownTable(const std::string& table): Error("unknown table: " + table) {}
};

class ModelError: public Error
{
  public:
    enum class Kind
    {
        Transport,
        Provider,
        ReplayMiss,
        ScriptMiss,
        Credentials,
    };

    ModelError(Kind kind, const std::string& message): Error(message), _kind(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return _kind; }
    [[nodiscard]] bool retryable() const noexcept { return _kind == Kind::Transport; }

  private:
    Kind _kind;
};

class EvidenceError: public Error
{
  public:
    using Error::Error;
};

class VerdictParseError: public Error
{
  public:
    using Error::Error;
};

class VerificationError: public Error
{
  public:
    using Error::Error;
};

} // namespace claimcheck
