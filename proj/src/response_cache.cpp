#include "icl/response_cache.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "icl/digest.hpp"
#include "icl/errors.hpp"

namespace fs = std::filesystem;

namespace icl
{
    namespace
    {
        std::optional<ScoreResponse> parse_entry(const std::string& raw)
        {
            try
            {
                auto j = nlohmann::json::parse(raw);
                ScoreResponse resp;
                resp.source = ScoreSource::cache;
                for (auto it = j.at("logprobs").begin(); it != j.at("logprobs").end(); ++it)
                {
                    if (!it.value().is_number())
                        return std::nullopt;
                    resp.logprobs[it.key()] = it.value().get<double>();
                }
                return resp;
            }
            catch (const nlohmann::json::exception&)
            {
                return std::nullopt;
            }
        }
    }  // namespace

    ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::string ResponseCache::key(const ScoreRequest& request)
    {
        auto tokens = request.candidate_tokens;
        std::sort(tokens.begin(), tokens.end());
        nlohmann::json canonical{
            {"candidate_tokens", tokens}, {"model_id", request.model_id}, {"prompt", request.prompt}};
        return sha256_hex(canonical.dump());
    }

    std::string ResponseCache::serialize(const ScoreResponse& response)
    {
        nlohmann::json j;
        j["logprobs"] = nlohmann::json::object();
        for (const auto& [token, lp] : response.logprobs)
            j["logprobs"][token] = lp;
        return j.dump();
    }

    fs::path ResponseCache::path_for(const std::string& key) const { return dir_ / key.substr(0, 2) / (key + ".json"); }

    std::optional<std::string> ResponseCache::get_raw(const std::string& key) const
    {
        std::ifstream in(path_for(key), std::ios::binary);
        if (!in)
            return std::nullopt;
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::optional<ScoreResponse> ResponseCache::get(const ScoreRequest& request) const
    {
        auto k = key(request);
        auto raw = get_raw(k);
        if (!raw)
            return std::nullopt;
        auto resp = parse_entry(*raw);
        if (!resp)
        {
            std::error_code ec;
            fs::remove(path_for(k), ec);
            return std::nullopt;
        }
        return resp;
    }

    void ResponseCache::put(const ScoreRequest& request, const ScoreResponse& response) const
    {
        static std::atomic<unsigned long> counter{0};
        auto k = key(request);
        auto target = path_for(k);
        fs::create_directories(target.parent_path());
        std::ostringstream tmp_name;
        tmp_name << k << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
        auto tmp = target.parent_path() / tmp_name.str();
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw Error("cannot write cache entry " + tmp.string());
            out << serialize(response);
        }
        fs::rename(tmp, target);
    }

    ResponseCache::Stats ResponseCache::stats() const
    {
        Stats s;
        if (!fs::exists(dir_))
            return s;
        for (const auto& entry : fs::recursive_directory_iterator(dir_))
        {
            if (!entry.is_regular_file() || entry.path().extension() != ".json")
                continue;
            ++s.entries;
            s.bytes += static_cast<std::size_t>(entry.file_size());
        }
        return s;
    }
}  // namespace icl
