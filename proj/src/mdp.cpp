#include "icl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "icl/digest.hpp"
#include "icl/errors.hpp"
#include "icl/parallel.hpp"

namespace icl
{
    Labeler gold_labeler()
    {
        return [](const Example& e) {
            if (!e.label)
                throw UsageError("example '" + e.id + "' has no gold label to reveal");
            return *e.label;
        };
    }

    StepResult step(const SelectionState& state, const SelectionAction& action, std::span<const Example> pool,
                    const Labeler& labeler)
    {
        if (state.terminated)
            throw ContractViolation("step on a terminated episode");
        StepResult out{state, std::nullopt};
        out.next.cached_score.reset();
        if (action.is_terminal())
        {
            out.next.terminated = true;
            return out;
        }
        if (state.chosen.size() >= state.budget)
            throw ContractViolation("selection budget exhausted; only the terminal action is legal");
        const Example& cand = *action.candidate;
        bool in_pool = std::any_of(pool.begin(), pool.end(), [&](const Example& e) { return e.id == cand.id; });
        if (!in_pool)
            throw ContractViolation("candidate '" + cand.id + "' is not in the pool");
        if (state.chosen.contains(cand.id))
            throw ContractViolation("candidate '" + cand.id + "' already chosen");

        Example labeled = cand;
        labeled.label = labeler(cand);
        out.revealed_label = labeled.label;
        out.next.chosen.items.push_back(std::move(labeled));
        return out;
    }

    std::vector<FeatureVector> candidate_action_features(const Classifier& clf, const DemonstrationSequence& seq,
                                                         std::span<const Example> remaining,
                                                         const FeatureConfig& features)
    {
        std::vector<std::string> texts;
        texts.reserve(remaining.size());
        for (const auto& e : remaining)
            texts.push_back(e.text);
        std::vector<FeatureVector> out;
        out.reserve(remaining.size() + 1);
        for (const auto& p : clf.predict_all(seq, texts))
            out.push_back(featurize_action(p, features.mode, features.l_max));
        out.push_back(terminal_action_features(features.l_max));
        return out;
    }

    Trajectory generate_episode(const EpisodeSpec& spec, std::mt19937_64& rng)
    {
        if (!spec.classifier)
            throw UsageError("episode generation needs a classifier");
        if (spec.budget == 0)
            throw UsageError("episode budget must be positive");
        if (spec.pool.size() < spec.budget)
            throw UsageError("pool of " + std::to_string(spec.pool.size()) + " examples is smaller than budget " +
                             std::to_string(spec.budget));
        const Classifier& clf = *spec.classifier;
        const auto labeler = gold_labeler();

        Trajectory traj;
        std::vector<Example> remaining(spec.pool.begin(), spec.pool.end());
        SelectionState state;
        state.budget = spec.budget;
        double f_prev = spec.zero_shot_score ? *spec.zero_shot_score : clf.accuracy(state.chosen, spec.reward_set);
        traj.initial_score = f_prev;

        auto actions = std::make_shared<const std::vector<FeatureVector>>(
            candidate_action_features(clf, state.chosen, remaining, spec.features));

        while (!state.done())
        {
            std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
            std::size_t idx = pick(rng);
            Example chosen = remaining[idx];

            auto next = step(state, SelectionAction::pick(chosen), spec.pool, labeler).next;
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(idx));
            double f_next = clf.accuracy(next.chosen, spec.reward_set);

            Transition t;
            t.state = featurize_state(state.step_index(), spec.features);
            t.actions = actions;
            t.taken = idx;
            t.reward = shaped_reward(f_prev, f_next);
            t.next_state = featurize_state(next.step_index(), spec.features);
            t.done = next.done();
            t.task = clf.task().name;
            if (!t.done)
            {
                actions = std::make_shared<const std::vector<FeatureVector>>(
                    candidate_action_features(clf, next.chosen, remaining, spec.features));
                t.next_actions = actions;
            }
            traj.transitions.push_back(std::move(t));
            traj.chosen_ids.push_back(chosen.id);
            f_prev = f_next;
            state = std::move(next);
        }
        traj.final_score = f_prev;
        return traj;
    }

    std::vector<Transition> generate_offline_dataset(std::size_t n_episodes, const EpisodeSpec& spec,
                                                     std::uint64_t master_seed, int jobs)
    {
        if (n_episodes == 0)
            throw UsageError("at least one episode is required");
        EpisodeSpec shared = spec;
        if (!shared.zero_shot_score)
            shared.zero_shot_score = spec.classifier->accuracy(DemonstrationSequence{}, spec.reward_set);

        std::vector<Trajectory> episodes(n_episodes);
        parallel_for(n_episodes, jobs, [&](std::size_t e) {
            std::mt19937_64 rng(mix_seed(master_seed, e));
            episodes[e] = generate_episode(shared, rng);
        });

        std::vector<Transition> out;
        out.reserve(n_episodes * spec.budget);
        for (auto& ep : episodes)
            for (auto& t : ep.transitions)
                out.push_back(std::move(t));
        return out;
    }

    namespace
    {
        nlohmann::json transition_to_json(const Transition& t)
        {
            nlohmann::json j{{"task", t.task},
                             {"state", t.state},
                             {"action", t.action()},
                             {"taken", t.taken},
                             {"actions", *t.actions},
                             {"reward", t.reward},
                             {"next_state", t.next_state},
                             {"next_actions", t.next_actions ? *t.next_actions : std::vector<FeatureVector>{}},
                             {"done", t.done}};
            return j;
        }

        Transition transition_from_json(const nlohmann::json& j)
        {
            Transition t;
            t.task = j.value("task", std::string{});
            t.state = j.at("state").get<FeatureVector>();
            t.actions = std::make_shared<const std::vector<FeatureVector>>(
                j.at("actions").get<std::vector<FeatureVector>>());
            t.taken = j.at("taken").get<std::size_t>();
            t.reward = j.at("reward").get<double>();
            t.next_state = j.at("next_state").get<FeatureVector>();
            auto next = j.at("next_actions").get<std::vector<FeatureVector>>();
            t.done = j.at("done").get<bool>();
            if (!next.empty())
                t.next_actions = std::make_shared<const std::vector<FeatureVector>>(std::move(next));
            if (t.taken >= t.actions->size())
                throw DataError("transition 'taken' index out of range");
            if (j.contains("action") && j.at("action").get<FeatureVector>() != t.action())
                throw DataError("transition 'action' disagrees with actions[taken]");
            if (!std::isfinite(t.reward))
                throw DataError("transition reward is not finite");
            if (t.done != (t.next_actions == nullptr))
                throw DataError("transition must carry next actions exactly when not done");
            return t;
        }
    }  // namespace

    void write_transitions(const std::filesystem::path& path, const std::vector<Transition>& transitions,
                           const FeatureConfig& features)
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot write " + path.string());
        nlohmann::json header{{"schema", "icl-select/transitions"},
                              {"version", kTransitionSchemaVersion},
                              {"features", to_json(features)},
                              {"count", transitions.size()}};
        out << header.dump() << '\n';
        for (const auto& t : transitions)
            out << transition_to_json(t).dump() << '\n';
    }

    std::vector<Transition> read_transitions(const std::filesystem::path& path, FeatureConfig* features)
    {
        std::ifstream in(path);
        if (!in)
            throw DataError("cannot read " + path.string());
        std::string line;
        if (!std::getline(in, line))
            throw DataError(path.string() + ": empty transitions file");
        std::vector<Transition> out;
        std::size_t lineno = 1;
        try
        {
            auto header = nlohmann::json::parse(line);
            if (header.value("schema", "") != "icl-select/transitions")
                throw DataError(path.string() + ": not a transitions file");
            if (header.value("version", 0) != kTransitionSchemaVersion)
                throw DataError(path.string() + ": unsupported transitions schema version");
            if (features)
                *features = feature_config_from_json(header.at("features"));
            while (std::getline(in, line))
            {
                ++lineno;
                if (line.empty())
                    continue;
                out.push_back(transition_from_json(nlohmann::json::parse(line)));
            }
        }
        catch (const nlohmann::json::exception& e)
        {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        return out;
    }

    std::string transitions_digest(const std::vector<Transition>& transitions)
    {
        std::string buf;
        for (const auto& t : transitions)
            buf += transition_to_json(t).dump() + '\n';
        return sha256_hex(buf);
    }

    ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed)
    {
        if (capacity_ == 0)
            throw UsageError("replay buffer capacity must be positive");
    }

    void ReplayBuffer::push(Transition t)
    {
        if (items_.size() < capacity_)
        {
            items_.push_back(std::move(t));
            return;
        }
        items_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }

    const Transition& ReplayBuffer::at(std::size_t i) const
    {
        if (i >= items_.size())
            throw UsageError("replay buffer index out of range");
        return items_[(head_ + i) % items_.size()];
    }

    std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch_size)
    {
        if (batch_size == 0 || items_.size() < batch_size)
            throw UsageError("replay buffer holds " + std::to_string(items_.size()) + " transitions; cannot sample " +
                             std::to_string(batch_size));
        std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
        std::vector<const Transition*> batch;
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i)
            batch.push_back(&items_[pick(rng_)]);
        return batch;
    }
}  // namespace icl
