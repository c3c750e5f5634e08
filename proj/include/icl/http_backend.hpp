#ifndef ICL_HTTP_BACKEND_HPP_
#define ICL_HTTP_BACKEND_HPP_

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/backend.hpp"
#include "icl/response_cache.hpp"

namespace icl
{
    struct HttpConfig
    {
        std::string base_url;  // scheme://host[:port][/prefix]
        std::string model_id;
        std::string api_key;   // falls back to $ICL_API_KEY when empty
        int top_k = 20;
        double floor_logprob = -20.0;
        std::string cache_dir;
        bool bypass_cache = false;
        int max_attempts = 5;
        double backoff_base_seconds = 1.0;
        double backoff_factor = 2.0;
        int timeout_seconds = 60;
    };

    HttpConfig http_config_from_json(const nlohmann::json& j);

    // Client for an OpenAI-compatible POST /v1/completions endpoint.
    class HttpBackend : public Backend
    {
      public:
        explicit HttpBackend(HttpConfig config);

        ScoreResponse score(const ScoreRequest& request) override;
        std::string model_id() const override { return config_.model_id; }

        // Sampled continuation; used for generated reordering probes. Never cached.
        std::string complete(const std::string& prompt, int max_tokens, double temperature,
                             const std::vector<std::string>& stop);

        std::size_t network_calls() const { return network_calls_.load(); }
        const HttpConfig& config() const { return config_; }
        const ResponseCache* cache() const { return cache_.get(); }

      private:
        nlohmann::json post_with_retry(const nlohmann::json& body);

        HttpConfig config_;
        std::string host_;
        std::string path_prefix_;
        std::unique_ptr<ResponseCache> cache_;
        std::atomic<std::size_t> network_calls_{0};
    };

    // Reads choices[0].logprobs.top_logprobs[0]; tokens outside the list get floor_logprob.
    ScoreResponse extract_candidate_logprobs(const nlohmann::json& completion,
                                             const std::vector<std::string>& candidates, double floor_logprob);
}  // namespace icl

#endif  // ICL_HTTP_BACKEND_HPP_
