#include "icl/digest.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "icl/errors.hpp"

namespace icl
{
    namespace
    {
        struct Sha256
        {
            std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

            Sha256()
            {
                if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
                    throw Error("sha256 initialization failed");
            }

            void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx.get(), data, n); }

            std::string hex()
            {
                std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
                unsigned int len = 0;
                EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
                static constexpr char digits[] = "0123456789abcdef";
                std::string out;
                out.reserve(len * 2);
                for (unsigned int i = 0; i < len; ++i)
                {
                    out.push_back(digits[md[i] >> 4]);
                    out.push_back(digits[md[i] & 0xF]);
                }
                return out;
            }
        };
    }  // namespace

    std::string sha256_hex(std::string_view data)
    {
        Sha256 h;
        h.update(data.data(), data.size());
        return h.hex();
    }

    std::string sha256_file(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw DataError("cannot read " + path.string());
        Sha256 h;
        std::array<char, 1 << 16> buf{};
        while (in)
        {
            in.read(buf.data(), buf.size());
            h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
        }
        return h.hex();
    }

    std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
    {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_from_digest(std::string_view hex_digest)
    {
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < 16 && i < hex_digest.size(); ++i)
        {
            char c = hex_digest[i];
            int d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : 0;
            v = (v << 4) | static_cast<std::uint64_t>(d);
        }
        return v;
    }
}  // namespace icl
