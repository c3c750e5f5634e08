#include "icl/synthetic_backend.hpp"

#include <algorithm>
#include <cmath>

#include "icl/errors.hpp"
#include "icl/text.hpp"

namespace icl
{
    void SyntheticParams::validate(std::size_t label_count) const
    {
        if (!(recency > 0.0 && recency <= 1.0))
            throw ConfigError("synthetic recency must lie in (0, 1]");
        if (cue_lexicon.size() > label_count)
            throw ConfigError("synthetic cue lexicon has more entries than labels");
        if (!label_bias.empty() && label_bias.size() != label_count)
            throw ConfigError("synthetic label_bias must have one entry per label");
        std::set<std::string> seen;
        for (const auto& cues : cue_lexicon)
            for (const auto& w : cues)
                if (!seen.insert(w).second)
                    throw ConfigError("cue word '" + w + "' assigned to more than one label");
    }

    SyntheticParams synthetic_params_from_json(const nlohmann::json& j)
    {
        SyntheticParams p;
        try
        {
            for (const auto& cues : j.at("cue_lexicon"))
            {
                std::set<std::string> words;
                for (const auto& w : cues)
                {
                    auto toks = word_tokens(w.get<std::string>());
                    if (toks.size() != 1)
                        throw ConfigError("cue entry must be a single word: " + w.get<std::string>());
                    words.insert(toks.front());
                }
                p.cue_lexicon.push_back(std::move(words));
            }
            p.cue_weight = j.value("cue_weight", p.cue_weight);
            p.demo_weight = j.value("demo_weight", p.demo_weight);
            p.recency = j.value("recency", p.recency);
            if (j.contains("label_bias"))
                p.label_bias = j.at("label_bias").get<std::vector<double>>();
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("synthetic params: ") + e.what());
        }
        return p;
    }

    nlohmann::json to_json(const SyntheticParams& p)
    {
        nlohmann::json cues = nlohmann::json::array();
        for (const auto& set : p.cue_lexicon)
            cues.push_back(std::vector<std::string>(set.begin(), set.end()));
        return {{"cue_lexicon", cues},
                {"cue_weight", p.cue_weight},
                {"demo_weight", p.demo_weight},
                {"recency", p.recency},
                {"label_bias", p.label_bias}};
    }

    std::vector<double> synthetic_log_scores(const SyntheticParams& params, std::span<const LabeledText> demos,
                                             std::string_view test_text, std::size_t label_count)
    {
        std::vector<double> score(label_count, 0.0);
        for (const auto& word : word_tokens(test_text))
            for (std::size_t y = 0; y < params.cue_lexicon.size(); ++y)
                if (params.cue_lexicon[y].count(word))
                    score[y] += params.cue_weight;

        const std::size_t m = demos.size();
        for (std::size_t i = 0; i < m; ++i)
        {
            auto y = demos[i].label;
            if (y < 0 || static_cast<std::size_t>(y) >= label_count)
                throw ContractViolation("synthetic demonstration label out of range");
            score[static_cast<std::size_t>(y)] += params.demo_weight * std::pow(params.recency, double(m - 1 - i));
        }
        for (std::size_t y = 0; y < params.label_bias.size() && y < label_count; ++y)
            score[y] += params.label_bias[y];
        return score;
    }

    ClassProbabilities synthetic_score(const SyntheticParams& params, std::span<const LabeledText> demos,
                                       std::string_view test_text, std::size_t label_count)
    {
        return ClassProbabilities::from_log_scores(synthetic_log_scores(params, demos, test_text, label_count));
    }

    SyntheticBackend::SyntheticBackend(TaskSpec task, SyntheticParams params, std::string model_id) :
        task_(std::move(task)), params_(std::move(params)), model_id_(std::move(model_id))
    {
        task_.validate();
        params_.validate(task_.label_count());
    }

    ScoreResponse SyntheticBackend::score(const ScoreRequest& request)
    {
        request.validate();
        auto parsed = parse_prompt(request.prompt, task_);
        if (!parsed)
            throw BackendError("synthetic backend could not parse prompt for task '" + task_.name + "'");
        auto scores = synthetic_log_scores(params_, parsed->demonstrations, parsed->query, task_.label_count());
        double hi = *std::max_element(scores.begin(), scores.end());
        double lse = 0.0;
        for (double s : scores)
            lse += std::exp(s - hi);
        lse = hi + std::log(lse);

        ScoreResponse resp;
        resp.source = ScoreSource::synthetic;
        for (const auto& token : request.candidate_tokens)
        {
            int idx = -1;
            for (std::size_t y = 0; y < task_.proxy_tokens.size(); ++y)
                if (task_.proxy_tokens[y] == token)
                    idx = static_cast<int>(y);
            if (idx < 0)
                throw BackendError("synthetic backend: unknown candidate token '" + token + "'");
            resp.logprobs[token] = scores[static_cast<std::size_t>(idx)] - lse;
        }
        return resp;
    }
}  // namespace icl
