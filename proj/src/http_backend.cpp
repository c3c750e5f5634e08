#include "icl/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "icl/errors.hpp"

namespace icl
{
    HttpConfig http_config_from_json(const nlohmann::json& j)
    {
        HttpConfig c;
        try
        {
            c.base_url = j.at("base_url").get<std::string>();
            c.model_id = j.at("model_id").get<std::string>();
            c.api_key = j.value("api_key", c.api_key);
            c.top_k = j.value("top_k", c.top_k);
            c.floor_logprob = j.value("floor_logprob", c.floor_logprob);
            c.cache_dir = j.value("cache_dir", c.cache_dir);
            c.bypass_cache = j.value("bypass_cache", c.bypass_cache);
            c.max_attempts = j.value("max_attempts", c.max_attempts);
            c.backoff_base_seconds = j.value("backoff_base_seconds", c.backoff_base_seconds);
            c.backoff_factor = j.value("backoff_factor", c.backoff_factor);
            c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("http backend config: ") + e.what());
        }
        return c;
    }

    ScoreResponse extract_candidate_logprobs(const nlohmann::json& completion,
                                             const std::vector<std::string>& candidates, double floor_logprob)
    {
        ScoreResponse resp;
        resp.source = ScoreSource::live;
        try
        {
            const auto& top = completion.at("choices").at(0).at("logprobs").at("top_logprobs").at(0);
            for (const auto& token : candidates)
            {
                double lp = floor_logprob;
                if (auto it = top.find(token); it != top.end())
                    lp = it->get<double>();
                if (!std::isfinite(lp))
                    lp = floor_logprob;
                resp.logprobs[token] = lp;
            }
        }
        catch (const nlohmann::json::exception& e)
        {
            throw BackendError(std::string("malformed completion response: ") + e.what());
        }
        return resp;
    }

    HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config))
    {
        if (config_.api_key.empty())
            if (const char* env = std::getenv("ICL_API_KEY"))
                config_.api_key = env;
        if (config_.max_attempts < 1)
            throw ConfigError("http backend: max_attempts must be >= 1");

        auto scheme = config_.base_url.find("://");
        if (scheme == std::string::npos)
            throw ConfigError("http backend: base_url needs a scheme: " + config_.base_url);
        auto slash = config_.base_url.find('/', scheme + 3);
        host_ = config_.base_url.substr(0, slash);
        path_prefix_ = slash == std::string::npos ? "" : config_.base_url.substr(slash);
        while (!path_prefix_.empty() && path_prefix_.back() == '/')
            path_prefix_.pop_back();
        if (path_prefix_.size() >= 3 && path_prefix_.substr(path_prefix_.size() - 3) == "/v1")
            path_prefix_.resize(path_prefix_.size() - 3);

        if (!config_.bypass_cache)
        {
            if (config_.cache_dir.empty())
                throw ConfigError("http backend: cache_dir is required unless bypass_cache is set");
            cache_ = std::make_unique<ResponseCache>(config_.cache_dir);
        }
    }

    nlohmann::json HttpBackend::post_with_retry(const nlohmann::json& body)
    {
        const std::string payload = body.dump();
        double delay = config_.backoff_base_seconds;
        int last_status = 0;
        std::string last_error;
        for (int attempt = 1; attempt <= config_.max_attempts; ++attempt)
        {
            httplib::Client client(host_);
            client.set_connection_timeout(config_.timeout_seconds, 0);
            client.set_read_timeout(config_.timeout_seconds, 0);
            httplib::Headers headers;
            if (!config_.api_key.empty())
                headers.emplace("Authorization", "Bearer " + config_.api_key);

            ++network_calls_;
            auto res = client.Post(path_prefix_ + "/v1/completions", headers, payload, "application/json");
            if (res)
            {
                last_status = res->status;
                if (res->status == 200)
                {
                    try
                    {
                        return nlohmann::json::parse(res->body);
                    }
                    catch (const nlohmann::json::exception& e)
                    {
                        throw BackendError(std::string("completion response is not JSON: ") + e.what(), attempt,
                                           res->status);
                    }
                }
                if (res->status == 401 || res->status == 403)
                    throw AuthError("authentication rejected (HTTP " + std::to_string(res->status) + ")", attempt,
                                    res->status);
                if (res->status != 429 && res->status < 500)
                    throw BackendError("completion request failed with HTTP " + std::to_string(res->status), attempt,
                                       res->status);
                last_error = "HTTP " + std::to_string(res->status);
            }
            else
            {
                last_error = httplib::to_string(res.error());
            }
            if (attempt < config_.max_attempts)
            {
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
                delay *= config_.backoff_factor;
            }
        }
        throw BackendError("completion request failed after " + std::to_string(config_.max_attempts) +
                               " attempts: " + last_error,
                           config_.max_attempts, last_status);
    }

    ScoreResponse HttpBackend::score(const ScoreRequest& request)
    {
        request.validate();
        if (cache_)
            if (auto hit = cache_->get(request))
                return *hit;

        nlohmann::json body{{"model", request.model_id.empty() ? config_.model_id : request.model_id},
                            {"prompt", request.prompt},
                            {"max_tokens", 1},
                            {"logprobs", config_.top_k},
                            {"temperature", 0}};
        auto resp = extract_candidate_logprobs(post_with_retry(body), request.candidate_tokens, config_.floor_logprob);
        if (cache_)
            cache_->put(request, resp);
        return resp;
    }

    std::string HttpBackend::complete(const std::string& prompt, int max_tokens, double temperature,
                                      const std::vector<std::string>& stop)
    {
        nlohmann::json body{{"model", config_.model_id},
                            {"prompt", prompt},
                            {"max_tokens", max_tokens},
                            {"temperature", temperature}};
        if (!stop.empty())
            body["stop"] = stop;
        auto j = post_with_retry(body);
        try
        {
            return j.at("choices").at(0).at("text").get<std::string>();
        }
        catch (const nlohmann::json::exception& e)
        {
            throw BackendError(std::string("malformed completion response: ") + e.what());
        }
    }
}  // namespace icl
