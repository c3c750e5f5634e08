#include "icl/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icl/errors.hpp"
#include "icl/http_backend.hpp"
#include "icl/prompt.hpp"
#include "icl/text.hpp"

namespace icl
{
    namespace
    {
        std::vector<Example> remaining_of(std::span<const Example> pool, const DemonstrationSequence& seq)
        {
            std::vector<Example> out;
            for (const auto& e : pool)
                if (!seq.contains(e.id))
                    out.push_back(e);
            return out;
        }

        // Index of the best score; ties resolved by lowest id.
        std::size_t best_candidate(const std::vector<Example>& cands, const std::vector<double>& scores)
        {
            std::size_t best = 0;
            for (std::size_t i = 1; i < cands.size(); ++i)
                if (scores[i] > scores[best] || (scores[i] == scores[best] && id_less(cands[i].id, cands[best].id)))
                    best = i;
            return best;
        }

        void check_unique_ids(std::span<const Example> pool)
        {
            std::vector<std::string> ids;
            for (const auto& e : pool)
                ids.push_back(e.id);
            std::sort(ids.begin(), ids.end());
            if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
                throw UsageError("selection pool contains duplicate ids");
        }

        Example reveal(const Example& e, const Labeler& labeler)
        {
            Example out = e;
            out.label = labeler(e);
            return out;
        }
    }  // namespace

    nlohmann::json to_json(const SelectionResult& r)
    {
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : r.steps)
            steps.push_back({{"candidates", s.candidate_ids}, {"scores", s.scores}, {"chosen", s.chosen_id}});
        return {{"ids", r.sequence.ids()},
                {"labels", r.sequence.labels()},
                {"steps", steps},
                {"terminal_reason", r.terminal_reason == TerminalReason::budget ? "budget" : "early_stop"},
                {"sample_scores", r.sample_scores},
                {"evaluations", r.evaluations}};
    }

    SelectionResult select_learned(const TrainedPolicy& policy, std::span<const Example> pool, const Labeler& labeler,
                                   const Classifier& clf, std::size_t k)
    {
        if (pool.empty())
            throw UsageError("learned selection from an empty pool");
        if (clf.label_count() > policy.features.l_max)
            throw ConfigError("task has more labels than the policy's feature width");
        if (policy.network.input_dim() != policy.features.input_dim())
            throw ConfigError("policy network does not match its featurization");
        check_unique_ids(pool);

        SelectionResult out;
        out.terminal_reason = TerminalReason::budget;
        while (out.sequence.size() < k)
        {
            auto cands = remaining_of(pool, out.sequence);
            if (cands.empty())
                break;
            auto actions = candidate_action_features(clf, out.sequence, cands, policy.features);
            auto state = featurize_state(out.sequence.size(), policy.features);

            StepLog log;
            std::vector<double> q(cands.size());
            for (std::size_t i = 0; i < cands.size(); ++i)
            {
                q[i] = policy.q_value(state, actions[i]);
                log.candidate_ids.push_back(cands[i].id);
                log.scores.push_back(q[i]);
            }
            const double q_end = policy.q_value(state, actions.back());
            log.candidate_ids.push_back(kEndOfPrompt);
            log.scores.push_back(q_end);

            std::size_t best = best_candidate(cands, q);
            if (q_end > q[best])
            {
                log.chosen_id = kEndOfPrompt;
                out.steps.push_back(std::move(log));
                out.terminal_reason = TerminalReason::early_stop;
                break;
            }
            log.chosen_id = cands[best].id;
            out.steps.push_back(std::move(log));
            out.sequence.items.push_back(reveal(cands[best], labeler));
        }
        return out;
    }

    SelectionResult select_random(std::span<const Example> pool, std::size_t k, std::mt19937_64& rng,
                                  const Labeler& labeler)
    {
        if (k > pool.size())
            throw UsageError("cannot draw " + std::to_string(k) + " examples from a pool of " +
                             std::to_string(pool.size()));
        std::vector<Example> remaining(pool.begin(), pool.end());
        SelectionResult out;
        for (std::size_t i = 0; i < k; ++i)
        {
            std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
            std::size_t idx = pick(rng);
            StepLog log;
            log.chosen_id = remaining[idx].id;
            out.steps.push_back(std::move(log));
            out.sequence.items.push_back(reveal(remaining[idx], labeler));
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(idx));
        }
        return out;
    }

    SelectionResult select_max_entropy(std::span<const Example> pool, const Classifier& clf, std::size_t k,
                                       const Labeler& labeler)
    {
        if (pool.empty())
            throw UsageError("max-entropy selection from an empty pool");
        check_unique_ids(pool);
        SelectionResult out;
        while (out.sequence.size() < k)
        {
            auto cands = remaining_of(pool, out.sequence);
            if (cands.empty())
                break;
            std::vector<std::string> texts;
            for (const auto& c : cands)
                texts.push_back(c.text);
            auto preds = clf.predict_all(out.sequence, texts);
            StepLog log;
            std::vector<double> h(cands.size());
            for (std::size_t i = 0; i < cands.size(); ++i)
            {
                h[i] = preds[i].entropy();
                log.candidate_ids.push_back(cands[i].id);
                log.scores.push_back(h[i]);
            }
            std::size_t best = best_candidate(cands, h);
            log.chosen_id = cands[best].id;
            out.steps.push_back(std::move(log));
            out.sequence.items.push_back(reveal(cands[best], labeler));
        }
        return out;
    }

    SelectionResult select_best_of_n(std::span<const Example> pool, std::span<const Example> reward_set,
                                     const Classifier& clf, std::size_t k, std::size_t n, std::mt19937_64& rng)
    {
        if (n == 0)
            throw UsageError("best-of-n needs n >= 1");
        SelectionResult best;
        double best_score = -1.0;
        std::vector<double> scores;
        for (std::size_t i = 0; i < n; ++i)
        {
            auto sample = select_random(pool, k, rng);
            double acc = clf.accuracy(sample.sequence, reward_set);
            scores.push_back(acc);
            if (acc > best_score)
            {
                best_score = acc;
                best = std::move(sample);
            }
        }
        best.sample_scores = std::move(scores);
        best.evaluations = n;
        return best;
    }

    SelectionResult select_greedy_oracle(std::span<const Example> pool, std::span<const Example> reward_set,
                                         const Classifier& clf, std::size_t k)
    {
        if (pool.empty())
            throw UsageError("greedy-oracle selection from an empty pool");
        check_unique_ids(pool);
        SelectionResult out;
        while (out.sequence.size() < k)
        {
            auto cands = remaining_of(pool, out.sequence);
            if (cands.empty())
                break;
            StepLog log;
            std::vector<double> acc(cands.size());
            for (std::size_t i = 0; i < cands.size(); ++i)
            {
                if (!cands[i].label)
                    throw UsageError("greedy-oracle needs a labeled pool");
                acc[i] = clf.accuracy(out.sequence.appended(cands[i]), reward_set);
                ++out.evaluations;
                log.candidate_ids.push_back(cands[i].id);
                log.scores.push_back(acc[i]);
            }
            std::size_t best = best_candidate(cands, acc);
            log.chosen_id = cands[best].id;
            out.steps.push_back(std::move(log));
            out.sequence.items.push_back(cands[best]);
        }
        return out;
    }

    double global_entropy(const Classifier& clf, const DemonstrationSequence& seq,
                          std::span<const std::string> probe_texts)
    {
        std::vector<double> hist(clf.label_count(), 0.0);
        for (const auto& p : clf.predict_all(seq, probe_texts))
            hist[static_cast<std::size_t>(p.argmax())] += 1.0;
        double h = 0.0;
        const double n = static_cast<double>(probe_texts.size());
        for (double c : hist)
            if (c > 0.0)
                h -= (c / n) * std::log(c / n);
        return h;
    }

    ReorderResult reorder_global_entropy(const DemonstrationSequence& seq, std::span<const std::string> probe_texts,
                                         const Classifier& clf)
    {
        if (probe_texts.empty())
            throw UsageError("reordering needs a non-empty probe set");
        if (seq.size() > 4)
            throw UsageError("reordering enumerates at most 4 demonstrations");
        std::vector<std::size_t> perm(seq.size());
        std::iota(perm.begin(), perm.end(), 0);

        ReorderResult out;
        bool first = true;
        do
        {
            DemonstrationSequence candidate;
            for (std::size_t i : perm)
                candidate.items.push_back(seq.items[i]);
            double h = global_entropy(clf, candidate, probe_texts);
            out.entropies.push_back(h);
            if (first || h > out.entropy)
            {
                out.entropy = h;
                out.permutation = perm;
                out.sequence = std::move(candidate);
                first = false;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return out;
    }

    std::vector<std::string> generate_probe_texts(HttpBackend& backend, const DemonstrationSequence& seq,
                                                  const TaskSpec& task, std::size_t n, int max_tokens)
    {
        // Prompt ends right where a new input text would begin.
        std::string prompt = render_prompt(seq, task, "");
        auto cut = task.template_.find("{text}");
        std::string prefix = task.template_.substr(0, cut);
        prompt = prompt.substr(0, prompt.size() - render_query(task, "").size()) + prefix;

        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i)
        {
            auto text = backend.complete(prompt, max_tokens, 1.0, {"\n"});
            auto trimmed = std::string(trim(text));
            if (!trimmed.empty())
                out.push_back(trimmed);
        }
        if (out.empty())
            throw BackendError("probe generation produced no usable text");
        return out;
    }

    double validate_swapped(const TrainedPolicy& policy, const Classifier& clf, std::span<const Example> train_set,
                            std::span<const Example> reward_set, std::size_t k)
    {
        auto picked = select_learned(policy, reward_set, gold_labeler(), clf, k);
        return clf.accuracy(picked.sequence, train_set);
    }
}  // namespace icl
