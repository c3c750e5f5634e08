#ifndef ICL_BACKEND_HPP_
#define ICL_BACKEND_HPP_

#include <map>
#include <string>
#include <vector>

namespace icl
{
    struct ScoreRequest
    {
        std::string prompt;
        std::vector<std::string> candidate_tokens;
        std::string model_id;

        // Non-empty, pairwise distinct candidate tokens.
        void validate() const;
    };

    enum class ScoreSource
    {
        live,
        cache,
        synthetic
    };

    const char* to_string(ScoreSource source);

    struct ScoreResponse
    {
        std::map<std::string, double> logprobs;
        ScoreSource source = ScoreSource::live;
    };

    // Next-token scorer. Implementations must tolerate concurrent callers.
    class Backend
    {
      public:
        virtual ~Backend() = default;

        virtual ScoreResponse score(const ScoreRequest& request) = 0;
        virtual std::string model_id() const = 0;
    };
}  // namespace icl

#endif  // ICL_BACKEND_HPP_
