#include "icl/classifier.hpp"

#include <cmath>

#include "icl/errors.hpp"

namespace icl
{
    ClassProbabilities predict(Backend& backend, const DemonstrationSequence& seq, const TaskSpec& task,
                               std::string_view test_text, const std::optional<ClassProbabilities>& calibration_prior)
    {
        ScoreRequest req{render_prompt(seq, task, test_text), task.proxy_tokens, backend.model_id()};
        auto resp = backend.score(req);

        std::vector<double> scores;
        scores.reserve(task.label_count());
        for (const auto& token : task.proxy_tokens)
        {
            auto it = resp.logprobs.find(token);
            if (it == resp.logprobs.end())
                throw BackendError("backend response lacks proxy token '" + token + "'");
            scores.push_back(it->second);
        }
        auto p = ClassProbabilities::from_log_scores(scores);
        if (calibration_prior)
            return apply_calibration(p, *calibration_prior);
        return p;
    }

    ClassProbabilities estimate_content_free_prior(Backend& backend, const DemonstrationSequence& seq,
                                                   const TaskSpec& task)
    {
        if (task.content_free_inputs.empty())
            throw ConfigError("task '" + task.name + "' has no content-free inputs");
        std::vector<double> sum(task.label_count(), 0.0);
        for (const auto& input : task.content_free_inputs)
        {
            auto p = predict(backend, seq, task, input);
            for (std::size_t y = 0; y < sum.size(); ++y)
                sum[y] += p[y];
        }
        for (double& s : sum)
            s /= static_cast<double>(task.content_free_inputs.size());
        return ClassProbabilities::normalized(std::move(sum));
    }

    ClassProbabilities apply_calibration(const ClassProbabilities& p, const ClassProbabilities& prior)
    {
        if (p.size() != prior.size())
            throw UsageError("calibration prior and prediction differ in label count");
        std::vector<double> q(p.size());
        for (std::size_t y = 0; y < p.size(); ++y)
        {
            if (!(prior[y] > kMinPrior) || !std::isfinite(prior[y]))
                throw NumericError("calibration prior entry is not strictly positive");
            q[y] = p[y] / prior[y];
        }
        return ClassProbabilities::normalized(std::move(q));
    }

    double accuracy(Backend& backend, const DemonstrationSequence& seq, const TaskSpec& task,
                    std::span<const Example> eval_set, bool calibrated)
    {
        return Classifier(backend, task, calibrated).accuracy(seq, eval_set);
    }

    void PromptAudit::record(const DemonstrationSequence& seq)
    {
        std::lock_guard lock(mutex_);
        ++prompts_;
        for (const auto& e : seq.items)
            ids_.insert(e.id);
    }

    std::set<std::string> PromptAudit::ids() const
    {
        std::lock_guard lock(mutex_);
        return ids_;
    }

    std::size_t PromptAudit::prompt_count() const
    {
        std::lock_guard lock(mutex_);
        return prompts_;
    }

    Classifier::Classifier(Backend& backend, TaskSpec task, bool calibrate, PromptAudit* audit) :
        backend_(&backend), task_(std::move(task)), calibrate_(calibrate), audit_(audit)
    {
        task_.validate();
    }

    std::optional<ClassProbabilities> Classifier::prior_for(const DemonstrationSequence& seq) const
    {
        if (!calibrate_)
            return std::nullopt;
        if (audit_)
            audit_->record(seq);
        return estimate_content_free_prior(*backend_, seq, task_);
    }

    ClassProbabilities Classifier::predict(const DemonstrationSequence& seq, std::string_view text) const
    {
        auto prior = prior_for(seq);
        if (audit_)
            audit_->record(seq);
        return icl::predict(*backend_, seq, task_, text, prior);
    }

    std::vector<ClassProbabilities> Classifier::predict_all(const DemonstrationSequence& seq,
                                                            std::span<const std::string> texts) const
    {
        auto prior = prior_for(seq);
        if (audit_)
            audit_->record(seq);
        std::vector<ClassProbabilities> out;
        out.reserve(texts.size());
        for (const auto& t : texts)
            out.push_back(icl::predict(*backend_, seq, task_, t, prior));
        return out;
    }

    double Classifier::accuracy(const DemonstrationSequence& seq, std::span<const Example> eval_set) const
    {
        if (eval_set.empty())
            throw UsageError("accuracy requires a non-empty evaluation set");
        auto prior = prior_for(seq);
        if (audit_)
            audit_->record(seq);
        std::size_t correct = 0;
        for (const auto& e : eval_set)
        {
            if (!e.label)
                throw UsageError("evaluation example '" + e.id + "' is unlabeled");
            if (icl::predict(*backend_, seq, task_, e.text, prior).argmax() == *e.label)
                ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(eval_set.size());
    }
}  // namespace icl
