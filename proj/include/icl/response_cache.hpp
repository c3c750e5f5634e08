#ifndef ICL_RESPONSE_CACHE_HPP_
#define ICL_RESPONSE_CACHE_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "icl/backend.hpp"

namespace icl
{
    // Content-addressed store of backend responses: <dir>/<first two hex>/<key>.json.
    class ResponseCache
    {
      public:
        explicit ResponseCache(std::filesystem::path dir);

        // SHA-256 of the canonical JSON of (model_id, prompt, sorted candidate tokens).
        static std::string key(const ScoreRequest& request);
        static std::string serialize(const ScoreResponse& response);

        std::filesystem::path path_for(const std::string& key) const;

        // Corrupt entries are deleted and reported as misses.
        std::optional<ScoreResponse> get(const ScoreRequest& request) const;
        std::optional<std::string> get_raw(const std::string& key) const;

        // Write-to-temp then rename, so readers never observe a partial entry.
        void put(const ScoreRequest& request, const ScoreResponse& response) const;

        struct Stats
        {
            std::size_t entries = 0;
            std::size_t bytes = 0;
        };
        Stats stats() const;

        const std::filesystem::path& dir() const { return dir_; }

      private:
        std::filesystem::path dir_;
    };
}  // namespace icl

#endif  // ICL_RESPONSE_CACHE_HPP_
