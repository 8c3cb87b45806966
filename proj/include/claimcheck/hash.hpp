// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace claimcheck
{

/// Lowercase hex SHA-256 digest.
[[nodiscard]] std::string sha256_hex(std::string_view data);

/// Digest of a file's bytes. Throws Error when the file cannot be read.
[[nodiscard]] std::string file_sha256(const std::string& path);

} // namespace claimcheck
