// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/hash.hpp>

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <memory>

namespace claimcheck
{

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (!EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr))
        throw Error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    auto out = std::string {};
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i)
    {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string file_sha256(const std::string& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path);
    auto bytes = std::string(std::istreambuf_iterator<char>(in), {});
    return sha256_hex(bytes);
}

} // namespace claimcheck
