#include "icl/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "icl/digest.hpp"
#include "icl/errors.hpp"

namespace icl
{
    const Example& Dataset::by_id(const std::string& id) const
    {
        for (const auto& e : examples)
            if (e.id == id)
                return e;
        throw UsageError("dataset '" + task.name + "' has no example '" + id + "'");
    }

    std::vector<Example> Dataset::subset(const std::vector<std::string>& ids) const
    {
        std::map<std::string, const Example*> index;
        for (const auto& e : examples)
            index[e.id] = &e;
        std::vector<Example> out;
        out.reserve(ids.size());
        for (const auto& id : ids)
        {
            auto it = index.find(id);
            if (it == index.end())
                throw UsageError("dataset '" + task.name + "' has no example '" + id + "'");
            out.push_back(*it->second);
        }
        return out;
    }

    std::string dataset_digest(const std::vector<Example>& examples)
    {
        std::string buf;
        for (const auto& e : examples)
        {
            nlohmann::json row{{"id", e.id}, {"text", e.text}};
            row["label"] = e.label ? nlohmann::json(*e.label) : nlohmann::json(nullptr);
            buf += row.dump() + '\n';
        }
        return sha256_hex(buf);
    }

    Dataset make_dataset(const TaskSpec& task, std::vector<Example> examples)
    {
        task.validate();
        for (const auto& e : examples)
            validate_example(e, task);
        Dataset d{task, std::move(examples), {}};
        d.digest = dataset_digest(d.examples);
        return d;
    }

    Dataset load_dataset(const std::filesystem::path& path, const TaskSpec& task)
    {
        std::ifstream in(path);
        if (!in)
            throw DataError("cannot read dataset " + path.string());
        std::vector<Example> examples;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            auto where = path.string() + ":" + std::to_string(lineno);
            Example e;
            e.id = std::to_string(examples.size());
            try
            {
                auto j = nlohmann::json::parse(line);
                e.text = j.at("text").get<std::string>();
                if (j.contains("label") && !j.at("label").is_null())
                    e.label = j.at("label").get<int>();
            }
            catch (const nlohmann::json::exception& ex)
            {
                throw DataError(where + ": malformed row: " + ex.what());
            }
            try
            {
                validate_example(e, task);
            }
            catch (const ConfigError& ex)
            {
                throw DataError(where + ": " + ex.what());
            }
            examples.push_back(std::move(e));
        }
        return make_dataset(task, std::move(examples));
    }

    void write_dataset(const std::filesystem::path& path, const Dataset& dataset)
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot write " + path.string());
        for (const auto& e : dataset.examples)
        {
            nlohmann::json row{{"text", e.text}};
            if (e.label)
                row["label"] = *e.label;
            out << row.dump() << '\n';
        }
    }

    nlohmann::json to_json(const SplitSizes& s)
    {
        return {{"train", s.train}, {"reward", s.reward}, {"unlabeled", s.unlabeled}, {"test", s.test}};
    }

    SplitSizes split_sizes_from_json(const nlohmann::json& j, SplitSizes s)
    {
        try
        {
            s.train = j.value("train", s.train);
            s.reward = j.value("reward", s.reward);
            s.unlabeled = j.value("unlabeled", s.unlabeled);
            s.test = j.value("test", s.test);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("split sizes: ") + e.what());
        }
        return s;
    }

    SplitMap make_splits(const Dataset& dataset, const SplitSizes& sizes, std::uint64_t seed)
    {
        if (sizes.total() > dataset.examples.size())
            throw UsageError("requested splits need " + std::to_string(sizes.total()) + " examples; dataset '" +
                             dataset.task.name + "' has " + std::to_string(dataset.examples.size()));
        std::vector<std::string> ids;
        ids.reserve(dataset.examples.size());
        for (const auto& e : dataset.examples)
            ids.push_back(e.id);
        std::mt19937_64 rng(mix_seed(seed_from_digest(dataset.digest), seed));
        // Explicit Fisher-Yates keeps the permutation independent of the standard library.
        for (std::size_t i = ids.size(); i > 1; --i)
        {
            std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(ids[i - 1], ids[j]);
        }

        SplitMap out;
        auto it = ids.begin();
        auto carve = [&](const char* name, std::size_t n) {
            out[name] = std::vector<std::string>(it, it + static_cast<std::ptrdiff_t>(n));
            it += static_cast<std::ptrdiff_t>(n);
        };
        carve("train", sizes.train);
        carve("reward", sizes.reward);
        carve("unlabeled", sizes.unlabeled);
        carve("test", sizes.test);
        return out;
    }
}  // namespace icl
