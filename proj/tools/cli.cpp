#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "icl/analysis.hpp"
#include "icl/digest.hpp"
#include "icl/errors.hpp"
#include "icl/http_backend.hpp"
#include "icl/mdp.hpp"
#include "icl/synthetic_backend.hpp"
#include "icl/synthetic_task.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace icl::cli
{
    namespace
    {
        constexpr const char* kManifest = "manifest.json";

        json read_json_file(const fs::path& path)
        {
            std::ifstream in(path);
            if (!in)
                throw ConfigError("cannot read " + path.string());
            try
            {
                return json::parse(in);
            }
            catch (const json::exception& e)
            {
                throw ConfigError(path.string() + ": " + e.what());
            }
        }

        void write_text(const fs::path& path, const std::string& text)
        {
            auto tmp = path;
            tmp += ".tmp";
            {
                std::ofstream out(tmp, std::ios::binary);
                if (!out)
                    throw Error("cannot write " + path.string());
                out << text;
            }
            fs::rename(tmp, path);
        }

        fs::path resolve(const fs::path& base, const std::string& p)
        {
            fs::path path(p);
            return path.is_absolute() ? path : base / path;
        }

        std::string utc_now()
        {
            auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            std::tm tm{};
            gmtime_r(&t, &tm);
            std::ostringstream s;
            s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
            return s.str();
        }

        std::shared_ptr<Backend> backend_from_json(const json& j, const TaskSpec& task, const fs::path& base)
        {
            auto type = j.value("type", std::string("synthetic"));
            if (type == "synthetic")
                return std::make_shared<SyntheticBackend>(task, synthetic_params_from_json(j.value("params", json::object())),
                                                          j.value("model_id", std::string("synthetic")));
            if (type == "http")
            {
                auto c = http_config_from_json(j);
                if (c.cache_dir.empty())
                    throw ConfigError("http backend needs a cache_dir");
                c.cache_dir = resolve(base, c.cache_dir).string();
                return std::make_shared<HttpBackend>(c);
            }
            throw ConfigError("unknown backend type '" + type + "'");
        }

        // Everything a command needs from the layered configuration.
        struct Context
        {
            json config;
            fs::path base_dir;
            fs::path run_root;
            ExperimentOptions options;
            std::vector<TaskResources> tasks;
            bool force = false;
        };

        json task_identity(const std::vector<TaskResources>& tasks)
        {
            json out = json::array();
            for (const auto& t : tasks)
                out.push_back({{"name", t.dataset.task.name}, {"digest", t.dataset.digest}, {"model", t.backend->model_id()}});
            return out;
        }

        std::string run_digest(const std::string& command, const Context& ctx, const json& inputs)
        {
            json cfg = ctx.config;
            for (const char* k : {"run_root", "jobs", "commands"})
                cfg.erase(k);
            json src{{"command", command}, {"config", cfg}, {"tasks", task_identity(ctx.tasks)}, {"inputs", inputs}};
            return sha256_hex(src.dump());
        }

        class RunDir
        {
          public:
            RunDir(const Context& ctx, std::string command, std::string digest)
                : command_(std::move(command)), digest_(std::move(digest)),
                  dir_(ctx.run_root / (command_ + "-" + digest_.substr(0, 16)))
            {
                reused_ = !ctx.force && fs::exists(dir_ / kManifest) && verify_run(dir_).empty();
                if (!reused_)
                {
                    fs::remove_all(dir_);
                    fs::create_directories(dir_);
                }
            }

            bool reused() const { return reused_; }
            const fs::path& dir() const { return dir_; }
            fs::path file(const std::string& name) const { return dir_ / name; }
            json stored_summary() const { return read_json_file(dir_ / kManifest).value("summary", json::object()); }

            void finish(const Context& ctx, const std::vector<std::string>& artifacts, const json& summary) const
            {
                json list = json::array();
                for (const auto& name : artifacts)
                    list.push_back({{"path", name},
                                    {"sha256", sha256_file(dir_ / name)},
                                    {"bytes", fs::file_size(dir_ / name)}});
                json backends = json::array();
                for (const auto& t : ctx.tasks)
                    backends.push_back(t.backend->model_id());
                json m{{"schema", "icl-select/manifest"},
                       {"version", 1},
                       {"command", command_},
                       {"config_digest", digest_},
                       {"config", ctx.config},
                       {"seeds", ctx.options.seeds},
                       {"backends", backends},
                       {"created", utc_now()},
                       {"artifacts", list},
                       {"summary", summary}};
                write_text(dir_ / kManifest, m.dump(2) + "\n");
            }

          private:
            std::string command_;
            std::string digest_;
            fs::path dir_;
            bool reused_ = false;
        };

        void report_run(std::ostream& out, const RunDir& run)
        {
            out << (run.reused() ? "reused " : "wrote ") << run.dir().string() << "\n";
        }

        std::uint64_t first_seed(const Context& ctx)
        {
            if (ctx.options.seeds.empty())
                throw UsageError("no seed given");
            return ctx.options.seeds.front();
        }

        std::string training_dataset(const Context& ctx, const std::string& episodes_file, std::vector<Transition>& dataset,
                                     FeatureConfig& features)
        {
            features = ctx.options.features();
            if (!episodes_file.empty())
            {
                dataset = read_transitions(resolve(fs::current_path(), episodes_file), &features);
                if (features.budget != ctx.options.k)
                    throw ConfigError("episodes were generated with k = " + std::to_string(features.budget) +
                                      " but the config asks for k = " + std::to_string(ctx.options.k));
                return sha256_file(episodes_file);
            }
            auto splits = prepare_tasks(ctx.tasks, ctx.options, first_seed(ctx));
            dataset = offline_dataset(splits, training_tasks(ctx.options, ctx.tasks.size()), ctx.options,
                                      first_seed(ctx), ctx.options.jobs);
            return {};
        }

        // ---- commands -------------------------------------------------------------------------------

        int cmd_gen_episodes(Context& ctx, std::ostream& out)
        {
            RunDir run(ctx, "gen-episodes", run_digest("gen-episodes", ctx, json::object()));
            if (!run.reused())
            {
                std::uint64_t seed = first_seed(ctx);
                auto splits = prepare_tasks(ctx.tasks, ctx.options, seed);
                auto dataset = offline_dataset(splits, training_tasks(ctx.options, ctx.tasks.size()), ctx.options, seed,
                                               ctx.options.jobs);
                write_transitions(run.file("episodes.jsonl"), dataset, ctx.options.features());
                run.finish(ctx, {"episodes.jsonl"},
                           {{"transitions", dataset.size()}, {"episodes", ctx.options.episodes}, {"seed", seed}});
            }
            report_run(out, run);
            out << "episodes.jsonl sha256=" << sha256_file(run.file("episodes.jsonl")) << "\n";
            return kExitOk;
        }

        int cmd_train(Context& ctx, const std::string& command, const std::string& episodes_file, std::ostream& out)
        {
            auto& o = ctx.options;
            if (command == "grid-search" && !o.grid)
                o.grid = table5_grid();
            json inputs = json::object();
            if (!episodes_file.empty())
                inputs["episodes"] = sha256_file(episodes_file);
            RunDir run(ctx, command, run_digest(command, ctx, inputs));
            if (o.grid)
                out << "grid: " << o.grid->size() << " combinations\n";
            if (!run.reused())
            {
                std::vector<Transition> dataset;
                FeatureConfig features;
                training_dataset(ctx, episodes_file, dataset, features);
                TrainingConfig base = o.train;
                base.seed = mix_seed(first_seed(ctx), 300 + o.train.seed);
                std::vector<std::string> artifacts{"policy.json", "loss.csv"};
                json summary{{"transitions", dataset.size()}};
                TrainResult result;
                if (o.grid)
                {
                    auto splits = prepare_tasks(ctx.tasks, o, first_seed(ctx));
                    auto training = training_tasks(o, ctx.tasks.size());
                    auto grid = grid_search(
                        o.grid->enumerate(base), dataset, features,
                        [&](const TrainedPolicy& p) { return swapped_validation(p, splits, training, o.k); }, o.jobs);
                    std::ostringstream csv;
                    csv.precision(12);
                    csv << "lr,alpha,target_sync,dropout,validation\n";
                    for (const auto& e : grid.entries)
                        csv << e.config.lr << ',' << e.config.alpha << ',' << e.config.target_sync << ','
                            << e.config.dropout << ',' << e.validation << '\n';
                    write_text(run.file("grid.csv"), csv.str());
                    artifacts.push_back("grid.csv");
                    summary["combinations"] = grid.entries.size();
                    summary["best_config"] = to_json(grid.best_config);
                    summary["validation"] = grid.best.policy.provenance.value("validation", 0.0);
                    result = std::move(grid.best);
                }
                else
                    result = train(base, dataset, features);
                save_policy(run.file("policy.json").string(), result.policy);
                write_text(run.file("loss.csv"), loss_curve_csv(result.curve));
                run.finish(ctx, artifacts, summary);
            }
            report_run(out, run);
            out << run.stored_summary().dump(2) << "\n";
            return kExitOk;
        }

        int cmd_select(Context& ctx, std::ostream& out)
        {
            json inputs = json::object();
            if (ctx.options.policy)
                inputs["policy"] = sha256_hex(to_json(*ctx.options.policy).dump());
            RunDir run(ctx, "select", run_digest("select", ctx, inputs));
            if (!run.reused())
            {
                auto r = run_seed(ctx.tasks, ctx.options, first_seed(ctx));
                if (!r.audit_passed)
                    throw Error("leakage audit failed: a test-split example appeared in a demonstration");
                json j{{"selection", to_json(r.selection)},
                       {"test_accuracy", r.outcome.accuracy},
                       {"seed", r.outcome.seed},
                       {"audit", {{"passed", r.audit_passed}, {"prompts", r.audited_prompts}}}};
                write_text(run.file("selection.json"), j.dump(2) + "\n");
                run.finish(ctx, {"selection.json"}, {{"ids", r.outcome.ids}, {"test_accuracy", r.outcome.accuracy}});
            }
            report_run(out, run);
            out << run.stored_summary().dump(2) << "\n";
            return kExitOk;
        }

        int cmd_eval(Context& ctx, std::ostream& out)
        {
            json inputs = json::object();
            if (ctx.options.policy)
                inputs["policy"] = sha256_hex(to_json(*ctx.options.policy).dump());
            // Oracle and setting checks happen before any run directory is created.
            if (ctx.options.setting == Setting::new_task && is_oracle(ctx.options.method))
                throw UsageError(std::string("oracle method '") + to_string(ctx.options.method) +
                                 "' needs labeled examples and cannot run in the new_task setting");
            RunDir run(ctx, "eval", run_digest("eval", ctx, inputs));
            if (!run.reused())
            {
                auto report = run_setting(ctx.tasks, ctx.options);
                write_text(run.file("report.json"), to_json(report).dump(2) + "\n");
                write_text(run.file("report.md"), to_markdown(report));
                run.finish(ctx, {"report.json", "report.md"},
                           {{"mean", report.mean}, {"stddev", report.stddev}, {"audit_passed", report.audit_passed}});
            }
            report_run(out, run);
            std::ifstream md(run.file("report.md"));
            out << md.rdbuf();
            return kExitOk;
        }

        int cmd_sweep(Context& ctx, std::ostream& out)
        {
            auto sizes = ctx.config.value("sweep_sizes", std::vector<std::size_t>{10, 50, 100, 200});
            RunDir run(ctx, "sweep", run_digest("sweep", ctx, json::object()));
            if (!run.reused())
            {
                auto rows = unlabeled_size_sweep(sizes, ctx.tasks, ctx.options);
                write_text(run.file("sweep.csv"), sweep_csv(rows));
                run.finish(ctx, {"sweep.csv"}, {{"sizes", sizes}});
            }
            report_run(out, run);
            std::ifstream csv(run.file("sweep.csv"));
            out << csv.rdbuf();
            return kExitOk;
        }

        int cmd_analyze(Context& ctx, const std::string& kind, const std::vector<std::string>& policy_files,
                        std::ostream& out)
        {
            json inputs = json::object();
            for (const auto& p : policy_files)
                inputs["policies"].push_back(sha256_file(p));
            inputs["kind"] = kind;
            RunDir run(ctx, "analyze", run_digest("analyze", ctx, inputs));
            if (!run.reused())
            {
                std::vector<std::string> artifacts;
                json summary = json::object();
                if (kind == "coefficients")
                {
                    if (policy_files.empty())
                        throw UsageError("--policies is required for coefficient analysis");
                    std::vector<TrainedPolicy> policies;
                    for (const auto& p : policy_files)
                        policies.push_back(load_policy(p));
                    auto coefficients = linear_coefficients(policies);
                    write_text(run.file("coefficients.csv"), coefficients_csv(coefficients));
                    artifacts.push_back("coefficients.csv");
                    summary["policies"] = policies.size();
                }
                else
                {
                    const auto& o = ctx.options;
                    std::uint64_t seed = first_seed(ctx);
                    auto splits = prepare_tasks(ctx.tasks, o, seed);
                    const auto& target = splits.at(o.target_task);
                    const auto& task = ctx.tasks[o.target_task].dataset.task;
                    auto runs = random_sequence_study(*target.classifier, target.train, target.test, o.k,
                                                      ctx.config.value("analysis_runs", std::size_t{100}), seed);
                    if (kind == "all" || kind == "balance")
                    {
                        if (task.label_count() == 2)
                        {
                            auto t = balance_breakdown(runs, 2, o.k);
                            write_text(run.file("balance.csv"), breakdown_csv(t));
                            write_text(run.file("balance.md"), breakdown_markdown(t));
                            artifacts.insert(artifacts.end(), {"balance.csv", "balance.md"});
                        }
                        else if (kind == "balance")
                            throw UsageError("label-balance breakdown needs a binary task");
                    }
                    if (kind == "all" || kind == "coverage")
                    {
                        auto t = coverage_breakdown(runs, task.label_count(), o.k);
                        write_text(run.file("coverage.csv"), breakdown_csv(t));
                        write_text(run.file("coverage.md"), breakdown_markdown(t));
                        artifacts.insert(artifacts.end(), {"coverage.csv", "coverage.md"});
                    }
                    if (kind == "all" || kind == "length")
                    {
                        auto c = length_correlation(runs, task);
                        write_text(run.file("length.json"), to_json(c).dump(2) + "\n");
                        artifacts.push_back("length.json");
                        summary["length"] = to_json(c);
                    }
                    if (artifacts.empty())
                        throw UsageError("unknown analysis kind '" + kind + "'");
                    summary["runs"] = runs.size();
                }
                run.finish(ctx, artifacts, summary);
            }
            report_run(out, run);
            for (const auto& entry : fs::directory_iterator(run.dir()))
            {
                auto ext = entry.path().extension();
                if (ext == ".md" || ext == ".csv")
                    out << "\n" << entry.path().filename().string() << ":\n"
                        << std::ifstream(entry.path()).rdbuf();
            }
            return kExitOk;
        }

        int cmd_synth_data(Context& ctx, std::ostream& out)
        {
            RunDir run(ctx, "synth-data", run_digest("synth-data", ctx, json::object()));
            if (!run.reused())
            {
                std::vector<std::string> artifacts;
                for (const auto& t : ctx.tasks)
                {
                    const auto& name = t.dataset.task.name;
                    write_dataset(run.file(name + ".jsonl"), t.dataset);
                    write_text(run.file(name + ".task.json"), to_json(t.dataset.task).dump(2) + "\n");
                    artifacts.insert(artifacts.end(), {name + ".jsonl", name + ".task.json"});
                    if (auto* synth = dynamic_cast<SyntheticBackend*>(t.backend.get()))
                    {
                        write_text(run.file(name + ".params.json"), to_json(synth->params()).dump(2) + "\n");
                        artifacts.push_back(name + ".params.json");
                    }
                }
                run.finish(ctx, artifacts, {{"tasks", task_identity(ctx.tasks)}});
            }
            report_run(out, run);
            return kExitOk;
        }
    }  // namespace

    json effective_config(const json& file, const std::string& command, const json& flag_patch)
    {
        if (!file.is_object())
            throw ConfigError("config must be a JSON object");
        json config = file;
        config.erase("commands");
        if (file.contains("commands"))
        {
            const auto& sections = file.at("commands");
            if (!sections.is_object())
                throw ConfigError("'commands' must be an object");
            if (sections.contains(command))
                config.merge_patch(sections.at(command));
        }
        config.merge_patch(flag_patch);
        return config;
    }

    ExperimentOptions options_from_config(const json& j)
    {
        static const std::set<std::string> known{
            "tasks",    "seeds",      "k",          "splits",       "calibrate",  "target_task", "episodes",
            "features", "train",      "grid",       "best_of_n",    "probe_size", "probe_mode",  "setting",
            "method",   "jobs",       "run_root",   "sweep_sizes",  "analysis_runs", "policy",   "description"};
        for (const auto& [key, value] : j.items())
            if (!known.count(key))
                throw ConfigError("unknown config key '" + key + "'");

        ExperimentOptions o;
        try
        {
            o.seeds = j.value("seeds", o.seeds);
            o.k = j.value("k", o.k);
            if (j.contains("splits"))
                o.sizes = split_sizes_from_json(j.at("splits"));
            o.calibrate = j.value("calibrate", o.calibrate);
            o.target_task = j.value("target_task", o.target_task);
            o.episodes = j.value("episodes", o.episodes);
            if (j.contains("features"))
            {
                const auto& f = j.at("features");
                if (f.contains("mode"))
                    o.feature_mode = feature_mode_from_string(f.at("mode").get<std::string>());
                o.l_max = f.value("l_max", o.l_max);
                o.normalize_step = f.value("normalize_step", o.normalize_step);
            }
            if (j.contains("train"))
                o.train = training_config_from_json(j.at("train"));
            if (j.contains("grid") && !j.at("grid").is_null())
                o.grid = grid_from_json(j.at("grid"));
            o.best_of_n = j.value("best_of_n", o.best_of_n);
            o.probe_size = j.value("probe_size", o.probe_size);
            if (j.contains("probe_mode"))
            {
                auto m = j.at("probe_mode").get<std::string>();
                if (m == "generated")
                    o.probe_mode = ProbeMode::generated;
                else if (m == "unlabeled_slice")
                    o.probe_mode = ProbeMode::unlabeled_slice;
                else
                    throw ConfigError("unknown probe_mode '" + m + "'");
            }
            if (j.contains("setting"))
                o.setting = setting_from_string(j.at("setting").get<std::string>());
            if (j.contains("method"))
                o.method = method_from_string(j.at("method").get<std::string>());
            o.jobs = j.value("jobs", o.jobs);
        }
        catch (const json::exception& e)
        {
            throw ConfigError(std::string("config: ") + e.what());
        }
        if (o.jobs < 1)
            throw UsageError("--jobs must be at least 1");
        return o;
    }

    std::vector<TaskResources> tasks_from_config(const json& config, const fs::path& base)
    {
        if (!config.contains("tasks") || !config.at("tasks").is_array() || config.at("tasks").empty())
            throw ConfigError("config needs a non-empty 'tasks' array");
        std::vector<TaskResources> out;
        try
        {
            for (const auto& entry : config.at("tasks"))
            {
                if (entry.contains("synthetic"))
                {
                    auto synth = make_synthetic_task(synthetic_task_config_from_json(entry.at("synthetic")));
                    auto backend = std::make_shared<SyntheticBackend>(synth.task, synth.params,
                                                                      entry.value("model_id", std::string("synthetic")));
                    out.push_back({std::move(synth.dataset), backend});
                    continue;
                }
                const auto& t = entry.at("task");
                TaskSpec task = t.is_string() ? load_task_spec(resolve(base, t.get<std::string>()).string())
                                              : task_spec_from_json(t);
                auto dataset = load_dataset(resolve(base, entry.at("data").get<std::string>()), task);
                auto backend = backend_from_json(entry.at("backend"), task, base);
                out.push_back({std::move(dataset), backend});
            }
        }
        catch (const json::exception& e)
        {
            throw ConfigError(std::string("tasks: ") + e.what());
        }
        return out;
    }

    std::vector<std::string> verify_run(const fs::path& run_dir)
    {
        std::vector<std::string> problems;
        json manifest;
        try
        {
            manifest = read_json_file(run_dir / kManifest);
        }
        catch (const Error& e)
        {
            return {e.what()};
        }
        std::set<std::string> listed;
        for (const auto& a : manifest.value("artifacts", json::array()))
        {
            auto name = a.value("path", std::string());
            listed.insert(name);
            auto path = run_dir / name;
            if (!fs::exists(path))
                problems.push_back("missing " + name);
            else if (sha256_file(path) != a.value("sha256", std::string()))
                problems.push_back("digest drift in " + name);
        }
        for (const auto& entry : fs::recursive_directory_iterator(run_dir))
        {
            if (!entry.is_regular_file())
                continue;
            auto rel = fs::relative(entry.path(), run_dir).generic_string();
            if (rel != kManifest && !listed.count(rel))
                problems.push_back("unlisted file " + rel);
        }
        return problems;
    }

    int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
    {
        CLI::App app{"Active demonstration selection for in-context learning", "icl-select"};
        app.require_subcommand(1);

        std::string config_path, run_root, episodes_file, policy_file, grid, setting, method, kind = "all", cache_dir,
                                                                                        run_dir;
        std::vector<std::uint64_t> seeds;
        std::vector<std::size_t> sizes;
        std::vector<std::string> policy_files;
        std::uint64_t seed = 0;
        std::size_t k = 0, task = 0, count = 0, runs = 0, train_steps = 0, target_sync = 0, batch = 0;
        int jobs = 1, hidden_layers = 0;
        double lr = 0, alpha = 0, dropout = 0;
        bool force = false, calibrate = false;

        auto add_common = [&](CLI::App* sub) {
            sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
            sub->add_option("--run-root", run_root, "Directory holding run directories (default: runs)");
            sub->add_flag("--force", force, "Recompute even when a matching run exists");
            sub->add_option("--jobs", jobs, "Worker threads for seeds, episodes or grid combinations");
            auto* s = sub->add_option("--seed", seed, "Single seed");
            sub->add_option("--seeds", seeds, "Seed list")->excludes(s);
            sub->add_option("--k", k, "Demonstration budget");
            sub->add_option("--task", task, "Index of the target task in the config");
            sub->add_flag("--calibrate", calibrate, "Apply contextual calibration");
            sub->add_option("--setting", setting, "seen_examples | new_examples | new_task");
        };
        auto add_training = [&](CLI::App* sub) {
            sub->add_option("--episodes", episodes_file, "Transitions file from gen-episodes")
                ->check(CLI::ExistingFile);
            sub->add_option("--grid", grid, "table5, none, or a JSON file with lr/alpha/target_sync/dropout lists");
            sub->add_option("--train-steps", train_steps, "Gradient steps per configuration");
            sub->add_option("--batch-size", batch, "Minibatch size");
            sub->add_option("--lr", lr, "Learning rate");
            sub->add_option("--alpha", alpha, "Conservative penalty weight");
            sub->add_option("--target-sync", target_sync, "Steps between target network copies");
            sub->add_option("--dropout", dropout, "Dropout rate");
            sub->add_option("--hidden-layers", hidden_layers, "Hidden layers; 0 gives a linear policy");
        };

        auto* gen = app.add_subcommand("gen-episodes", "Generate behavior-policy transitions");
        add_common(gen);
        gen->add_option("--count", count, "Number of episodes");
        auto* tr = app.add_subcommand("train", "Train a Q-network with conservative Q-learning");
        add_common(tr);
        add_training(tr);
        auto* gs = app.add_subcommand("grid-search", "Train every grid combination, keep the best by swapped validation");
        add_common(gs);
        add_training(gs);
        auto* sel = app.add_subcommand("select", "Select a demonstration sequence for one seed");
        add_common(sel);
        sel->add_option("--method", method, "random | max-entropy | reordering | best-of-n | greedy-oracle | learned");
        sel->add_option("--policy", policy_file, "Trained policy for --method learned")->check(CLI::ExistingFile);
        auto* ev = app.add_subcommand("eval", "Evaluate a method over seeds and report mean and 95% interval");
        add_common(ev);
        ev->add_option("--method", method, "Selection method");
        ev->add_option("--policy", policy_file, "Trained policy for --method learned")->check(CLI::ExistingFile);
        add_training(ev);
        auto* sw = app.add_subcommand("sweep", "New-task accuracy against unlabeled split size");
        add_common(sw);
        sw->add_option("--method", method, "Selection method");
        sw->add_option("--sizes", sizes, "Unlabeled split sizes");
        auto* an = app.add_subcommand("analyze", "Label balance, label coverage, length correlation, coefficients");
        add_common(an);
        an->add_option("--kind", kind, "all | balance | coverage | length | coefficients");
        an->add_option("--runs", runs, "Random sequences to sample");
        an->add_option("--policies", policy_files, "Linear policies for coefficient analysis")
            ->check(CLI::ExistingFile);
        auto* cs = app.add_subcommand("cache-stats", "Entry count and size of a response cache");
        cs->add_option("--cache-dir", cache_dir, "Cache directory")->required();
        auto* vf = app.add_subcommand("verify", "Re-hash the artifacts of a run directory");
        vf->add_option("--run-dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
        auto* sd = app.add_subcommand("synth-data", "Write the configured tasks as JSONL datasets");
        add_common(sd);

        try
        {
            std::vector<std::string> reversed(args.rbegin(), args.rend());
            app.parse(reversed);
        }
        catch (const CLI::ParseError& e)
        {
            return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
        }

        try
        {
            if (cs->parsed())
            {
                ResponseCache cache(cache_dir);
                auto s = cache.stats();
                out << json{{"dir", cache_dir}, {"entries", s.entries}, {"bytes", s.bytes}}.dump(2) << "\n";
                return kExitOk;
            }
            if (vf->parsed())
            {
                auto problems = verify_run(run_dir);
                for (const auto& p : problems)
                    out << p << "\n";
                if (problems.empty())
                    out << "ok\n";
                return problems.empty() ? kExitOk : kExitUsage;
            }

            CLI::App* sub = app.get_subcommands().front();
            const std::string command = sub->get_name();
            auto given = [&](const std::string& flag) {
                auto* opt = sub->get_option_no_throw(flag);
                return opt && opt->count() > 0;
            };

            json patch = json::object();
            if (given("--seed"))
                patch["seeds"] = {seed};
            if (given("--seeds"))
                patch["seeds"] = seeds;
            if (given("--k"))
                patch["k"] = k;
            if (given("--task"))
                patch["target_task"] = task;
            if (given("--calibrate"))
                patch["calibrate"] = true;
            if (given("--jobs"))
                patch["jobs"] = jobs;
            if (given("--setting"))
                patch["setting"] = setting;
            if (given("--method"))
                patch["method"] = method;
            if (given("--count"))
                patch["episodes"] = count;
            if (given("--sizes"))
                patch["sweep_sizes"] = sizes;
            if (given("--runs"))
                patch["analysis_runs"] = runs;
            if (given("--run-root"))
                patch["run_root"] = run_root;
            if (given("--grid"))
            {
                if (grid == "none")
                    patch["grid"] = nullptr;
                else if (grid == "table5")
                    patch["grid"] = grid;
                else
                    patch["grid"] = read_json_file(grid);
            }
            json train_patch = json::object();
            if (given("--train-steps"))
                train_patch["train_steps"] = train_steps;
            if (given("--batch-size"))
                train_patch["batch_size"] = batch;
            if (given("--lr"))
                train_patch["lr"] = lr;
            if (given("--alpha"))
                train_patch["alpha"] = alpha;
            if (given("--target-sync"))
                train_patch["target_sync"] = target_sync;
            if (given("--dropout"))
                train_patch["dropout"] = dropout;
            if (given("--hidden-layers"))
                train_patch["hidden_layers"] = hidden_layers;
            if (!train_patch.empty())
                patch["train"] = train_patch;

            Context ctx;
            fs::path config_file = fs::absolute(config_path);
            ctx.base_dir = config_file.parent_path();
            ctx.config = effective_config(read_json_file(config_file), command, patch);
            ctx.options = options_from_config(ctx.config);
            ctx.run_root = resolve(fs::current_path(), ctx.config.value("run_root", std::string("runs")));
            ctx.force = force;
            if (!policy_file.empty())
                ctx.options.policy = load_policy(policy_file);
            ctx.tasks = tasks_from_config(ctx.config, ctx.base_dir);

            if (command == "gen-episodes")
                return cmd_gen_episodes(ctx, out);
            if (command == "train" || command == "grid-search")
                return cmd_train(ctx, command, episodes_file, out);
            if (command == "select")
                return cmd_select(ctx, out);
            if (command == "eval")
                return cmd_eval(ctx, out);
            if (command == "sweep")
                return cmd_sweep(ctx, out);
            if (command == "analyze")
                return cmd_analyze(ctx, kind, policy_files, out);
            if (command == "synth-data")
                return cmd_synth_data(ctx, out);
            err << "unknown command '" << command << "'\n";
            return kExitUsage;
        }
        catch (const BackendError& e)
        {
            err << "backend error: " << e.what() << "\n";
            return kExitBackend;
        }
        catch (const UsageError& e)
        {
            err << "usage error: " << e.what() << "\n";
            return kExitUsage;
        }
        catch (const ConfigError& e)
        {
            err << "config error: " << e.what() << "\n";
            return kExitUsage;
        }
        catch (const std::exception& e)
        {
            err << "error: " << e.what() << "\n";
            return kExitUsage;
        }
    }
}  // namespace icl::cli
