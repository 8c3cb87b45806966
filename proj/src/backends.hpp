// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/datasource.hpp>

#include <string>

namespace claimcheck::detail
{

std::unique_ptr<Connection> open_sqlite(const SourceDecl& decl);
std::unique_ptr<Connection> open_postgres(const SourceDecl& decl);
std::unique_ptr<Connection> open_mysql(const SourceDecl& decl);

/// Resolves `password_env`; empty when the source declares no secret.
std::string secret_from_env(const SourceDecl& decl);

/// Shortest text that round-trips the double.
std::string format_double(double value);

/// Splits an optional `schema.` qualifier off a table identifier.
std::pair<std::string, std::string> split_qualified(std::string_view table);

/// dlopen wrapper for client libraries that are present at runtime only.
class SharedLibrary
{
  public:
    SharedLibrary(std::initializer_list<const char*> candidates, const char* envOverride);
    ~SharedLibrary();

    SharedLibrary(const SharedLibrary&) = delete;
    SharedLibrary& operator=(const SharedLibrary&) = delete;

    [[nodiscard]] bool loaded() const noexcept { return _handle != nullptr; }
    [[nodiscard]] const std::string& error() const noexcept { return _error; }

    template <typename Fn>
    Fn symbol(const char* name) const
    {
        return reinterpret_cast<Fn>(raw_symbol(name));
    }

  private:
    void* raw_symbol(const char* name) const;

    void* _handle = nullptr;
    std::string _error;
};

} // namespace claimcheck::detail
