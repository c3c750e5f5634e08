#include "icl/analysis.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "icl/digest.hpp"
#include "icl/errors.hpp"
#include "icl/prompt.hpp"
#include "icl/text.hpp"

namespace icl
{
    std::size_t BreakdownTable::total() const
    {
        std::size_t n = 0;
        for (const auto& r : rows)
            n += r.count;
        return n;
    }

    namespace
    {
        BreakdownTable bucketize(std::string key, std::size_t first, std::size_t last,
                                 std::span<const RunRecord> runs, auto bucket_of)
        {
            std::vector<std::vector<double>> groups(last - first + 1);
            for (const auto& r : runs)
            {
                std::size_t b = bucket_of(r);
                if (b < first || b > last)
                    throw UsageError("bucket " + std::to_string(b) + " outside " + std::to_string(first) + ".." +
                                     std::to_string(last));
                groups[b - first].push_back(r.accuracy);
            }
            BreakdownTable table{std::move(key), {}};
            for (std::size_t i = 0; i < groups.size(); ++i)
            {
                BreakdownRow row{first + i, groups[i].size(), std::nullopt, std::nullopt};
                if (!groups[i].empty())
                    row.mean = mean(groups[i]);
                if (groups[i].size() >= 2)
                    row.stddev = sample_stddev(groups[i]);
                table.rows.push_back(row);
            }
            return table;
        }

        std::string fmt(const std::optional<double>& v)
        {
            if (!v)
                return "";
            std::ostringstream s;
            s.precision(10);
            s << *v;
            return s.str();
        }
    }  // namespace

    BreakdownTable balance_breakdown(std::span<const RunRecord> runs, std::size_t label_count, std::size_t k)
    {
        if (label_count != 2)
            throw UsageError("label-balance breakdown needs a binary task");
        return bucketize("positives", 0, k, runs, [](const RunRecord& r) {
            std::size_t n = 0;
            for (const auto& e : r.sequence.items)
                n += e.label.value_or(0) == 1;
            return n;
        });
    }

    BreakdownTable coverage_breakdown(std::span<const RunRecord> runs, std::size_t label_count, std::size_t k)
    {
        if (k == 0 || label_count == 0)
            throw UsageError("coverage breakdown needs k >= 1 and at least one label");
        return bucketize("distinct_labels", 1, std::min(k, label_count), runs, [](const RunRecord& r) {
            std::set<int> labels;
            for (const auto& e : r.sequence.items)
                if (e.label)
                    labels.insert(*e.label);
            return labels.size();
        });
    }

    std::string breakdown_csv(const BreakdownTable& table)
    {
        std::ostringstream out;
        out << table.key << ",count,mean_accuracy,stddev\n";
        for (const auto& r : table.rows)
            out << r.bucket << ',' << r.count << ',' << fmt(r.mean) << ',' << fmt(r.stddev) << '\n';
        return out.str();
    }

    std::string breakdown_markdown(const BreakdownTable& table)
    {
        std::ostringstream out;
        out.setf(std::ios::fixed);
        out.precision(1);
        out << "| " << table.key << " | count | mean acc. (%) | std (%) |\n|---|---|---|---|\n";
        for (const auto& r : table.rows)
        {
            out << "| " << r.bucket << " | " << r.count << " | ";
            if (r.mean)
                out << 100.0 * *r.mean;
            else
                out << "-";
            out << " | ";
            if (r.stddev)
                out << 100.0 * *r.stddev;
            else
                out << "-";
            out << " |\n";
        }
        return out.str();
    }

    std::size_t demonstration_word_count(const DemonstrationSequence& seq, const TaskSpec& task)
    {
        std::size_t words = 0;
        for (const auto& e : seq.items)
        {
            if (!e.label)
                throw ContractViolation("demonstration '" + e.id + "' has no label");
            words += split_whitespace(render_demonstration(task, e.text, task.label_names.at(*e.label))).size();
        }
        return words;
    }

    Correlation length_correlation(std::span<const RunRecord> runs, const TaskSpec& task)
    {
        std::vector<double> x, y;
        for (const auto& r : runs)
        {
            x.push_back(static_cast<double>(demonstration_word_count(r.sequence, task)));
            y.push_back(r.accuracy);
        }
        return pearson_r(x, y);
    }

    nlohmann::json to_json(const Correlation& c) { return {{"r", c.r}, {"p", c.p_value}, {"n", c.n}}; }

    std::vector<RunRecord> random_sequence_study(const Classifier& clf, std::span<const Example> pool,
                                                 std::span<const Example> eval_set, std::size_t k, std::size_t n,
                                                 std::uint64_t seed)
    {
        if (pool.size() < k)
            throw UsageError("pool smaller than k");
        std::vector<RunRecord> out;
        std::vector<std::size_t> idx(pool.size());
        for (std::size_t run = 0; run < n; ++run)
        {
            std::mt19937_64 rng(mix_seed(seed, run));
            for (std::size_t i = 0; i < idx.size(); ++i)
                idx[i] = i;
            DemonstrationSequence seq;
            for (std::size_t i = 0; i < k; ++i)
            {
                std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
                std::swap(idx[i], idx[pick(rng)]);
                seq.items.push_back(pool[idx[i]]);
            }
            double acc = clf.accuracy(seq, eval_set);
            out.push_back({std::move(seq), acc});
        }
        return out;
    }

    std::vector<std::string> feature_names(const FeatureConfig& features)
    {
        std::vector<std::string> names{"step"};
        for (std::size_t i = 0; i < features.l_max; ++i)
            names.push_back("prob_" + std::to_string(i));
        names.push_back("entropy");
        names.push_back("is_terminal");
        return names;
    }

    std::vector<Coefficient> linear_coefficients(std::span<const TrainedPolicy> policies)
    {
        if (policies.empty())
            throw UsageError("no policies given");
        const FeatureConfig& features = policies.front().features;
        auto names = feature_names(features);
        std::vector<std::vector<double>> columns(names.size());
        for (const auto& p : policies)
        {
            if (p.network.hidden_layer_count() != 0 || p.network.layers.size() != 1)
                throw UsageError("linear coefficients need a policy without hidden layers");
            if (!(p.features == features))
                throw UsageError("policies use different feature layouts");
            const auto& layer = p.network.layers.front();
            if (layer.in != names.size() || layer.out != 1)
                throw UsageError("linear layer shape does not match the feature layout");
            for (std::size_t i = 0; i < names.size(); ++i)
                columns[i].push_back(layer.weights[i]);
        }
        std::vector<Coefficient> out;
        for (std::size_t i = 0; i < names.size(); ++i)
            out.push_back({names[i], mean(columns[i]), sample_stddev(columns[i])});
        return out;
    }

    std::string coefficients_csv(const std::vector<Coefficient>& coefficients)
    {
        std::ostringstream out;
        out.precision(12);
        out << "feature,mean,stddev\n";
        for (const auto& c : coefficients)
            out << c.name << ',' << c.mean << ',' << c.stddev << '\n';
        return out.str();
    }
}  // namespace icl
