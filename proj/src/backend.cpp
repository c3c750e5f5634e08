#include "icl/backend.hpp"

#include <set>

#include "icl/errors.hpp"

namespace icl
{
    void ScoreRequest::validate() const
    {
        if (candidate_tokens.empty())
            throw UsageError("score request without candidate tokens");
        std::set<std::string> distinct(candidate_tokens.begin(), candidate_tokens.end());
        if (distinct.size() != candidate_tokens.size())
            throw UsageError("score request candidate tokens must be distinct");
    }

    const char* to_string(ScoreSource source)
    {
        switch (source)
        {
            case ScoreSource::live: return "live";
            case ScoreSource::cache: return "cache";
            case ScoreSource::synthetic: return "synthetic";
        }
        return "unknown";
    }
}  // namespace icl
