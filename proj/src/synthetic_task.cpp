#include "icl/synthetic_task.hpp"

#include <random>
#include <set>

#include "icl/digest.hpp"
#include "icl/errors.hpp"

namespace icl
{
    namespace
    {
        std::string pseudo_word(std::mt19937_64& rng)
        {
            static constexpr const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t",
                                                     "v", "z", "br", "tr", "st", "pl", "gr", "sh"};
            static constexpr const char* vowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ee"};
            std::uniform_int_distribution<int> syl(2, 3);
            std::uniform_int_distribution<std::size_t> on(0, std::size(onsets) - 1), vo(0, std::size(vowels) - 1);
            std::string w;
            for (int i = syl(rng); i > 0; --i)
                w += std::string(onsets[on(rng)]) + vowels[vo(rng)];
            return w;
        }
    }  // namespace

    SyntheticTaskConfig synthetic_task_config_from_json(const nlohmann::json& j)
    {
        SyntheticTaskConfig c;
        try
        {
            c.name = j.value("name", c.name);
            c.label_names = j.value("label_names", c.label_names);
            c.examples = j.value("examples", c.examples);
            c.cues_per_label = j.value("cues_per_label", c.cues_per_label);
            c.filler_vocabulary = j.value("filler_vocabulary", c.filler_vocabulary);
            c.cue_count_weights = j.value("cue_count_weights", c.cue_count_weights);
            c.distractor_rate = j.value("distractor_rate", c.distractor_rate);
            c.min_filler = j.value("min_filler", c.min_filler);
            c.max_filler = j.value("max_filler", c.max_filler);
            c.class_weights = j.value("class_weights", c.class_weights);
            c.cue_weight = j.value("cue_weight", c.cue_weight);
            c.demo_weight = j.value("demo_weight", c.demo_weight);
            c.recency = j.value("recency", c.recency);
            c.label_bias = j.value("label_bias", c.label_bias);
            c.seed = j.value("seed", c.seed);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("synthetic task: ") + e.what());
        }
        return c;
    }

    nlohmann::json to_json(const SyntheticTaskConfig& c)
    {
        return {{"name", c.name},
                {"label_names", c.label_names},
                {"examples", c.examples},
                {"cues_per_label", c.cues_per_label},
                {"filler_vocabulary", c.filler_vocabulary},
                {"cue_count_weights", c.cue_count_weights},
                {"distractor_rate", c.distractor_rate},
                {"min_filler", c.min_filler},
                {"max_filler", c.max_filler},
                {"class_weights", c.class_weights},
                {"cue_weight", c.cue_weight},
                {"demo_weight", c.demo_weight},
                {"recency", c.recency},
                {"label_bias", c.label_bias},
                {"seed", c.seed}};
    }

    SyntheticTask make_synthetic_task(const SyntheticTaskConfig& config)
    {
        const std::size_t L = config.label_names.size();
        if (L < 2)
            throw ConfigError("synthetic task needs at least two labels");
        if (config.min_filler > config.max_filler || config.cue_count_weights.empty())
            throw ConfigError("synthetic task: bad filler range or cue weights");
        if (!config.class_weights.empty() && config.class_weights.size() != L)
            throw ConfigError("synthetic task: class_weights must have one entry per label");

        std::mt19937_64 rng(mix_seed(config.seed, 0x5eed));
        SyntheticTask out;
        out.task.name = config.name;
        out.task.label_names = config.label_names;
        for (const auto& n : config.label_names)
            out.task.proxy_tokens.push_back(" " + n);
        out.task.template_ = "Input: {text}\nLabel: {label}";
        out.task.separator = "\n\n";

        std::set<std::string> used(config.label_names.begin(), config.label_names.end());
        used.insert("input");
        used.insert("label");
        used.insert("n");
        used.insert("a");
        auto fresh = [&] {
            for (;;)
            {
                auto w = pseudo_word(rng);
                if (used.insert(w).second)
                    return w;
            }
        };
        std::vector<std::vector<std::string>> cues(L);
        out.params.cue_lexicon.resize(L);
        for (std::size_t y = 0; y < L; ++y)
            for (std::size_t i = 0; i < config.cues_per_label; ++i)
            {
                cues[y].push_back(fresh());
                out.params.cue_lexicon[y].insert(cues[y].back());
            }
        std::vector<std::string> filler;
        for (std::size_t i = 0; i < config.filler_vocabulary; ++i)
            filler.push_back(fresh());
        out.params.cue_weight = config.cue_weight;
        out.params.demo_weight = config.demo_weight;
        out.params.recency = config.recency;
        out.params.label_bias = config.label_bias;

        const std::vector<double> class_weights =
            config.class_weights.empty() ? std::vector<double>(L, 1.0) : config.class_weights;
        std::discrete_distribution<int> label_dist(class_weights.begin(), class_weights.end());
        std::discrete_distribution<int> cue_count(config.cue_count_weights.begin(), config.cue_count_weights.end());
        std::uniform_int_distribution<std::size_t> filler_len(config.min_filler, config.max_filler);
        std::uniform_int_distribution<std::size_t> filler_pick(0, filler.empty() ? 0 : filler.size() - 1);
        std::uniform_int_distribution<std::size_t> cue_pick(0, config.cues_per_label ? config.cues_per_label - 1 : 0);
        std::uniform_int_distribution<std::size_t> other_label(0, L - 2);
        std::bernoulli_distribution distract(config.distractor_rate);

        std::vector<Example> examples;
        for (std::size_t i = 0; i < config.examples; ++i)
        {
            const int y = label_dist(rng);
            std::vector<std::string> words;
            for (std::size_t f = filler_len(rng); f > 0 && !filler.empty(); --f)
                words.push_back(filler[filler_pick(rng)]);
            auto insert_at = [&](std::string w) {
                std::uniform_int_distribution<std::size_t> pos(0, words.size());
                words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos(rng)), std::move(w));
            };
            if (config.cues_per_label)
            {
                for (int c = cue_count(rng); c > 0; --c)
                    insert_at(cues[static_cast<std::size_t>(y)][cue_pick(rng)]);
                if (distract(rng))
                {
                    std::size_t o = other_label(rng);
                    if (o >= static_cast<std::size_t>(y))
                        ++o;
                    insert_at(cues[o][cue_pick(rng)]);
                }
            }
            if (words.empty())
                words.push_back(fresh());
            std::string text;
            for (std::size_t w = 0; w < words.size(); ++w)
                text += (w ? " " : "") + words[w];
            examples.push_back({std::to_string(i), std::move(text), y});
        }
        out.dataset = make_dataset(out.task, std::move(examples));
        return out;
    }
}  // namespace icl
