#ifndef ICL_DIGEST_HPP_
#define ICL_DIGEST_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace icl
{
    std::string sha256_hex(std::string_view data);
    std::string sha256_file(const std::filesystem::path& path);

    // splitmix64 finalizer; used to derive independent RNG streams from a master seed.
    std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
    std::uint64_t seed_from_digest(std::string_view hex_digest);
}  // namespace icl

#endif  // ICL_DIGEST_HPP_
