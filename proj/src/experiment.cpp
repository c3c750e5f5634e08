#include "icl/experiment.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "icl/classifier.hpp"
#include "icl/digest.hpp"
#include "icl/errors.hpp"
#include "icl/http_backend.hpp"
#include "icl/mdp.hpp"
#include "icl/parallel.hpp"
#include "icl/selectors.hpp"
#include "icl/stats.hpp"

namespace icl
{
    const char* to_string(Setting s)
    {
        switch (s)
        {
            case Setting::seen_examples: return "seen_examples";
            case Setting::new_examples: return "new_examples";
            case Setting::new_task: return "new_task";
        }
        return "?";
    }

    const char* to_string(Method m)
    {
        switch (m)
        {
            case Method::random: return "random";
            case Method::max_entropy: return "max-entropy";
            case Method::reordering: return "reordering";
            case Method::best_of_n: return "best-of-n";
            case Method::greedy_oracle: return "greedy-oracle";
            case Method::learned: return "learned";
        }
        return "?";
    }

    Setting setting_from_string(const std::string& s)
    {
        for (auto v : {Setting::seen_examples, Setting::new_examples, Setting::new_task})
            if (s == to_string(v))
                return v;
        throw UsageError("unknown setting '" + s + "'");
    }

    Method method_from_string(const std::string& s)
    {
        if (s == "best-of-10")
            return Method::best_of_n;
        for (auto v : {Method::random, Method::max_entropy, Method::reordering, Method::best_of_n,
                       Method::greedy_oracle, Method::learned})
            if (s == to_string(v))
                return v;
        throw UsageError("unknown method '" + s + "'");
    }

    bool is_oracle(Method m) { return m == Method::best_of_n || m == Method::greedy_oracle; }

    FeatureConfig ExperimentOptions::features() const
    {
        FeatureConfig f;
        f.mode = feature_mode ? *feature_mode
                              : (setting == Setting::new_task ? FeatureMode::sorted_padded : FeatureMode::raw_padded);
        f.l_max = l_max;
        f.budget = k;
        f.normalize_step = normalize_step;
        return f;
    }

    nlohmann::json to_json(const ExperimentOptions& o)
    {
        nlohmann::json j{{"setting", to_string(o.setting)},
                         {"method", to_string(o.method)},
                         {"seeds", o.seeds},
                         {"k", o.k},
                         {"sizes", to_json(o.sizes)},
                         {"calibrate", o.calibrate},
                         {"target_task", o.target_task},
                         {"episodes", o.episodes},
                         {"features", to_json(o.features())},
                         {"train", to_json(o.train)},
                         {"best_of_n", o.best_of_n},
                         {"probe_size", o.probe_size},
                         {"probe_mode", o.probe_mode == ProbeMode::generated ? "generated" : "unlabeled_slice"}};
        if (o.grid)
            j["grid"] = to_json(*o.grid);
        if (o.policy)
            j["policy_digest"] = sha256_hex(to_json(*o.policy).dump());
        return j;
    }

    std::vector<double> ExperimentReport::accuracies() const
    {
        std::vector<double> out;
        for (const auto& r : runs)
            out.push_back(r.accuracy);
        return out;
    }

    nlohmann::json to_json(const ExperimentReport& r)
    {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& s : r.runs)
        {
            nlohmann::json j{{"seed", s.seed},
                             {"accuracy", s.accuracy},
                             {"ids", s.ids},
                             {"labels", s.labels},
                             {"terminal_reason", s.terminal_reason}};
            if (s.validation)
                j["validation"] = *s.validation;
            if (s.chosen_config)
                j["chosen_config"] = to_json(*s.chosen_config);
            runs.push_back(j);
        }
        nlohmann::json j{{"setting", to_string(r.setting)},
                         {"method", to_string(r.method)},
                         {"task", r.task},
                         {"runs", runs},
                         {"accuracies", r.accuracies()},
                         {"mean", r.mean},
                         {"stddev", r.stddev},
                         {"config_digest", r.config_digest},
                         {"audit", {{"passed", r.audit_passed}, {"prompts", r.audited_prompts}}}};
        j["ci95_half_width"] = r.ci_half_width ? nlohmann::json(*r.ci_half_width) : nlohmann::json(nullptr);
        return j;
    }

    std::string to_markdown(const ExperimentReport& r)
    {
        std::ostringstream out;
        out.setf(std::ios::fixed);
        out.precision(1);
        out << "| task | setting | method | mean acc. (%) | 95% CI (+/-) | std |\n";
        out << "|---|---|---|---|---|---|\n";
        out << "| " << r.task << " | " << to_string(r.setting) << " | " << to_string(r.method) << " | "
            << 100.0 * r.mean << " | ";
        if (r.ci_half_width)
            out << 100.0 * *r.ci_half_width;
        else
            out << "n/a";
        out << " | " << 100.0 * r.stddev << " |\n\n";
        out << "| seed | accuracy (%) | selected ids |\n|---|---|---|\n";
        for (const auto& s : r.runs)
        {
            out << "| " << s.seed << " | " << 100.0 * s.accuracy << " | ";
            for (std::size_t i = 0; i < s.ids.size(); ++i)
                out << (i ? ", " : "") << s.ids[i];
            out << " |\n";
        }
        return out.str();
    }

    namespace
    {
        std::vector<Example> strip_labels(std::vector<Example> xs)
        {
            for (auto& e : xs)
                e.label.reset();
            return xs;
        }

        Labeler dataset_labeler(const Dataset& d)
        {
            auto index = std::make_shared<std::map<std::string, int>>();
            for (const auto& e : d.examples)
                if (e.label)
                    (*index)[e.id] = *e.label;
            return [index](const Example& e) {
                auto it = index->find(e.id);
                if (it == index->end())
                    throw UsageError("no gold label for example '" + e.id + "'");
                return it->second;
            };
        }

        void check_options(const std::vector<TaskResources>& tasks, const ExperimentOptions& o)
        {
            if (tasks.empty())
                throw UsageError("experiment needs at least one task");
            if (o.target_task >= tasks.size())
                throw UsageError("target task index out of range");
            if (o.k == 0)
                throw UsageError("k must be positive");
            if (o.setting == Setting::new_task && is_oracle(o.method))
                throw UsageError(std::string("oracle method '") + to_string(o.method) +
                                 "' needs labeled examples and cannot run in the new_task setting");
            if (o.setting == Setting::new_task && tasks.size() < 2 && o.method == Method::learned && !o.policy)
                throw UsageError("new_task training needs at least one task besides the target");
            if (o.setting != Setting::seen_examples && o.sizes.unlabeled == 0)
                throw UsageError(std::string("setting '") + to_string(o.setting) +
                                 "' needs a non-empty unlabeled split");
        }

        TrainedPolicy obtain_policy(const ExperimentOptions& o, const std::vector<TaskSplit>& splits,
                                    std::uint64_t seed, SeedOutcome& outcome)
        {
            if (o.policy)
                return *o.policy;
            const auto training = training_tasks(o, splits.size());
            const auto dataset = offline_dataset(splits, training, o, seed);
            TrainingConfig base = o.train;
            base.seed = mix_seed(seed, 300 + o.train.seed);
            if (!o.grid)
                return train(base, dataset, o.features()).policy;
            auto result = grid_search(
                o.grid->enumerate(base), dataset, o.features(),
                [&](const TrainedPolicy& p) { return swapped_validation(p, splits, training, o.k); });
            outcome.validation = result.best.policy.provenance.value("validation", 0.0);
            outcome.chosen_config = result.best_config;
            return std::move(result.best.policy);
        }
    }  // namespace

    std::vector<TaskSplit> prepare_tasks(const std::vector<TaskResources>& tasks, const ExperimentOptions& o,
                                         std::uint64_t seed, std::vector<PromptAudit>* audits)
    {
        if (audits && audits->size() != tasks.size())
            throw ContractViolation("one audit per task expected");
        std::vector<TaskSplit> out(tasks.size());
        for (std::size_t t = 0; t < tasks.size(); ++t)
        {
            auto& v = out[t];
            const auto& d = tasks[t].dataset;
            auto splits = make_splits(d, o.sizes, seed);
            v.resources = &tasks[t];
            v.train = d.subset(splits["train"]);
            v.reward = d.subset(splits["reward"]);
            v.unlabeled = d.subset(splits["unlabeled"]);
            v.test = d.subset(splits["test"]);
            v.test_ids = std::set<std::string>(splits["test"].begin(), splits["test"].end());
            v.classifier = std::make_unique<Classifier>(*tasks[t].backend, d.task, o.calibrate,
                                                        audits ? &(*audits)[t] : nullptr);
        }
        return out;
    }

    std::vector<std::size_t> training_tasks(const ExperimentOptions& o, std::size_t task_count)
    {
        std::vector<std::size_t> out;
        if (o.setting != Setting::new_task)
            return {o.target_task};
        for (std::size_t t = 0; t < task_count; ++t)
            if (t != o.target_task)
                out.push_back(t);
        return out;
    }

    std::vector<Transition> offline_dataset(const std::vector<TaskSplit>& splits,
                                            const std::vector<std::size_t>& training, const ExperimentOptions& o,
                                            std::uint64_t seed, int jobs)
    {
        if (training.empty())
            throw UsageError("no training tasks");
        std::vector<Transition> dataset;
        for (std::size_t n = 0; n < training.size(); ++n)
        {
            const auto& v = splits.at(training[n]);
            std::size_t count = o.episodes / training.size() + (n < o.episodes % training.size() ? 1 : 0);
            if (count == 0)
                continue;
            EpisodeSpec spec{v.train, v.reward, v.classifier.get(), o.features(), o.k, std::nullopt};
            auto part = generate_offline_dataset(count, spec, mix_seed(seed, 200 + training[n]), jobs);
            dataset.insert(dataset.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        }
        return dataset;
    }

    double swapped_validation(const TrainedPolicy& policy, const std::vector<TaskSplit>& splits,
                              const std::vector<std::size_t>& training, std::size_t k)
    {
        double total = 0.0;
        for (std::size_t t : training)
            total += validate_swapped(policy, *splits.at(t).classifier, splits.at(t).train, splits.at(t).reward, k);
        return total / static_cast<double>(training.size());
    }

    SeedRun run_seed(const std::vector<TaskResources>& tasks, const ExperimentOptions& o, std::uint64_t seed)
    {
        check_options(tasks, o);
        std::vector<PromptAudit> audits(tasks.size());
        auto splits = prepare_tasks(tasks, o, seed, &audits);
        auto& target = splits[o.target_task];
        const Dataset& target_data = tasks[o.target_task].dataset;
        const bool unlabeled_pool = o.setting != Setting::seen_examples;
        const std::vector<Example>& labeled_pool = unlabeled_pool ? target.unlabeled : target.train;
        const std::vector<Example> pool = unlabeled_pool ? strip_labels(target.unlabeled) : target.train;
        const Labeler labeler = dataset_labeler(target_data);
        std::mt19937_64 rng(mix_seed(seed, 100));

        SeedRun run;
        run.outcome.seed = seed;
        SelectionResult& sel = run.selection;
        switch (o.method)
        {
            case Method::random: sel = select_random(pool, o.k, rng, labeler); break;
            case Method::max_entropy: sel = select_max_entropy(pool, *target.classifier, o.k, labeler); break;
            case Method::reordering:
            {
                sel = select_random(pool, o.k, rng, labeler);
                std::vector<std::string> probes;
                if (o.probe_mode == ProbeMode::generated)
                {
                    auto* http = dynamic_cast<HttpBackend*>(tasks[o.target_task].backend.get());
                    if (!http)
                        throw UsageError("generated probes need an HTTP backend");
                    probes = generate_probe_texts(*http, sel.sequence, target_data.task, o.probe_size);
                }
                else
                {
                    for (const auto& e : target.unlabeled)
                        if (!sel.sequence.contains(e.id) && probes.size() < o.probe_size)
                            probes.push_back(e.text);
                }
                if (probes.empty())
                    throw UsageError("reordering needs at least one probe text");
                sel.sequence = reorder_global_entropy(sel.sequence, probes, *target.classifier).sequence;
                break;
            }
            case Method::best_of_n:
                sel = select_best_of_n(labeled_pool, target.reward, *target.classifier, o.k, o.best_of_n, rng);
                break;
            case Method::greedy_oracle:
                sel = select_greedy_oracle(labeled_pool, target.reward, *target.classifier, o.k);
                break;
            case Method::learned:
            {
                auto policy = obtain_policy(o, splits, seed, run.outcome);
                sel = select_learned(policy, pool, labeler, *target.classifier, o.k);
                break;
            }
        }

        run.outcome.accuracy = target.classifier->accuracy(sel.sequence, target.test);
        run.outcome.ids = sel.sequence.ids();
        run.outcome.labels = sel.sequence.labels();
        run.outcome.terminal_reason = sel.terminal_reason == TerminalReason::budget ? "budget" : "early_stop";

        // Every demonstration that reached any prompt of any task must stay outside that task's test split.
        run.audit_passed = true;
        for (std::size_t t = 0; t < tasks.size(); ++t)
        {
            for (const auto& id : audits[t].ids())
                if (splits[t].test_ids.count(id))
                    run.audit_passed = false;
            run.audited_prompts += audits[t].prompt_count();
        }
        return run;
    }

    ExperimentReport run_setting(const std::vector<TaskResources>& tasks, const ExperimentOptions& o)
    {
        check_options(tasks, o);
        if (o.seeds.empty())
            throw UsageError("experiment needs at least one seed");

        std::vector<SeedRun> runs(o.seeds.size());
        parallel_for(o.seeds.size(), o.jobs, [&](std::size_t i) { runs[i] = run_seed(tasks, o, o.seeds[i]); });

        ExperimentReport report;
        report.setting = o.setting;
        report.method = o.method;
        report.task = tasks[o.target_task].dataset.task.name;
        report.audit_passed = true;
        for (auto& r : runs)
        {
            report.runs.push_back(std::move(r.outcome));
            report.audit_passed = report.audit_passed && r.audit_passed;
            report.audited_prompts += r.audited_prompts;
        }
        auto accs = report.accuracies();
        auto ci = confidence_interval(accs);
        report.mean = ci.mean;
        report.ci_half_width = ci.half_width;
        report.stddev = sample_stddev(accs);

        nlohmann::json digest_src{{"options", to_json(o)}};
        for (const auto& t : tasks)
            digest_src["tasks"].push_back({{"digest", t.dataset.digest}, {"model", t.backend->model_id()}});
        report.config_digest = sha256_hex(digest_src.dump());

        if (!report.audit_passed)
            throw Error("leakage audit failed: a test-split example appeared in a demonstration");
        return report;
    }

    std::vector<SweepRow> unlabeled_size_sweep(const std::vector<std::size_t>& sizes,
                                               const std::vector<TaskResources>& tasks, ExperimentOptions options)
    {
        if (sizes.empty())
            throw UsageError("sweep needs at least one size");
        options.setting = Setting::new_task;
        std::vector<SweepRow> rows;
        for (std::size_t size : sizes)
        {
            options.sizes.unlabeled = size;
            auto report = run_setting(tasks, options);
            rows.push_back({size, report.mean, report.ci_half_width});
        }
        return rows;
    }

    std::string sweep_csv(const std::vector<SweepRow>& rows)
    {
        std::ostringstream out;
        out.precision(10);
        out << "size,mean,ci\n";
        for (const auto& r : rows)
        {
            out << r.size << ',' << r.mean << ',';
            if (r.ci_half_width)
                out << *r.ci_half_width;
            out << '\n';
        }
        return out.str();
    }
}  // namespace icl
