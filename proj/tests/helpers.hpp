#ifndef ICL_TESTS_HELPERS_HPP_
#define ICL_TESTS_HELPERS_HPP_

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "icl/backend.hpp"
#include "icl/synthetic_backend.hpp"
#include "icl/types.hpp"

namespace icl::testing
{
    // Backend whose logprobs come from a callback; counts calls.
    class FunctionBackend : public Backend
    {
      public:
        using Fn = std::function<std::map<std::string, double>(const ScoreRequest&)>;
        explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}

        ScoreResponse score(const ScoreRequest& r) override
        {
            ++calls;
            return {fn_(r), ScoreSource::synthetic};
        }
        std::string model_id() const override { return "function"; }

        std::atomic<int> calls{0};

      private:
        Fn fn_;
    };

    inline TaskSpec binary_task()
    {
        TaskSpec t;
        t.name = "sentiment";
        t.label_names = {"negative", "positive"};
        t.proxy_tokens = {" negative", " positive"};
        t.template_ = "Review: {text}\nSentiment: {label}";
        return t;
    }

    inline TaskSpec labeled_task(std::size_t labels)
    {
        TaskSpec t;
        t.name = "task" + std::to_string(labels);
        for (std::size_t i = 0; i < labels; ++i)
        {
            t.label_names.push_back("l" + std::to_string(i));
            t.proxy_tokens.push_back(" l" + std::to_string(i));
        }
        return t;
    }

    // Cue words "c<label>_<j>".
    inline SyntheticParams cue_params(std::size_t labels, std::size_t cues_per_label = 4)
    {
        SyntheticParams p;
        for (std::size_t y = 0; y < labels; ++y)
        {
            std::set<std::string> cues;
            for (std::size_t j = 0; j < cues_per_label; ++j)
                cues.insert("c" + std::to_string(y) + "_" + std::to_string(j));
            p.cue_lexicon.push_back(cues);
        }
        return p;
    }

    // Fresh directory under the system temp dir, removed on destruction.
    class TempDir
    {
      public:
        TempDir()
        {
            std::random_device rd;
            path_ = std::filesystem::temp_directory_path() / ("icl-test-" + std::to_string(rd()) + std::to_string(rd()));
            std::filesystem::create_directories(path_);
        }
        ~TempDir()
        {
            std::error_code ec;
            std::filesystem::remove_all(path_, ec);
        }
        TempDir(const TempDir&) = delete;
        TempDir& operator=(const TempDir&) = delete;

        const std::filesystem::path& path() const { return path_; }
        std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

      private:
        std::filesystem::path path_;
    };

    inline Example ex(std::string id, std::string text, std::optional<int> label)
    {
        return Example{std::move(id), std::move(text), label};
    }
}  // namespace icl::testing

#endif  // ICL_TESTS_HELPERS_HPP_
