// Command-line front end: synth, featurize, train, evaluate and the composed
// pipeline, with seeded, file-based handoffs between stages.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stress/error.hpp"
#include "stress/pipeline.hpp"
#include "stress/text.hpp"

namespace {

using nlohmann::json;

std::string json_to_arg(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return stress::text::format_double(v.get<double>());
    return v.dump();
}

// Config-file support: values from --config <json> become arguments injected
// ahead of the user's own flags, so explicit flags always win (options take
// the last value given).
std::vector<std::string> expand_args(int argc, char** argv,
                                     const std::vector<std::string>& subcommands) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") config_path = args[i + 1];
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw stress::Error(stress::Errc::io_error, "cannot open " + config_path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw stress::Error(stress::Errc::bad_config,
                            config_path + ": " + std::string(e.what()));
    }

    std::vector<std::string> globals, locals;
    std::string sub = args.empty() ? "" : args.front();
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        bool is_section =
            std::find(subcommands.begin(), subcommands.end(), it.key()) != subcommands.end();
        if (is_section) {
            if (it.key() != sub) continue;
            for (auto s = it.value().begin(); s != it.value().end(); ++s) {
                locals.push_back("--" + s.key());
                locals.push_back(json_to_arg(s.value()));
            }
        } else {
            globals.push_back("--" + it.key());
            globals.push_back(json_to_arg(it.value()));
        }
    }

    std::vector<std::string> merged;
    if (!args.empty() &&
        std::find(subcommands.begin(), subcommands.end(), sub) != subcommands.end()) {
        merged.push_back(sub);
        merged.insert(merged.end(), locals.begin(), locals.end());
        merged.insert(merged.end(), globals.begin(), globals.end());
        merged.insert(merged.end(), args.begin() + 1, args.end());
    } else {
        merged = std::move(args);
    }
    return merged;
}

void add_synth_options(CLI::App* sub, stress::synth::SynthConfig& cfg, int required_out,
                       std::string* out_dir) {
    sub->add_option("--subjects", cfg.n_subjects, "Number of subjects")
        ->check(CLI::PositiveNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--duration", cfg.duration_s, "Recording length per subject, seconds")
        ->check(CLI::PositiveNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--rate", cfg.sample_rate_hz, "Sample rate, Hz")
        ->check(CLI::PositiveNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--offset-std", cfg.subject_offset_std,
                    "Per-subject resting HR spread, bpm")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--hr-delta", cfg.stress_hr_delta, "HR increase under stress, bpm")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--stress-scr-rate", cfg.stress_scr_rate_hz, "SCR event rate under stress")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--baseline-scr-rate", cfg.baseline_scr_rate_hz,
                    "SCR event rate at baseline")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--noise-std", cfg.noise_std, "Master noise scale, bpm")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--name", cfg.name, "Dataset name")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    auto* out = sub->add_option("--out", *out_dir, "Output directory")
                    ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    if (required_out) out->required();
}

void add_train_cfg_options(CLI::App* sub, stress::nn::TrainConfig& cfg) {
    sub->add_option("--lr", cfg.lr, "Adam learning rate")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--batch-size", cfg.batch_size, "Mini-batch size")
        ->check(CLI::PositiveNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--max-epochs", cfg.max_epochs, "Epoch budget")
        ->check(CLI::PositiveNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--patience", cfg.patience, "Early-stopping patience, epochs")
        ->check(CLI::PositiveNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--val-fraction", cfg.val_fraction, "Validation holdout fraction")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Personalized wearable stress detection pipeline"};
    app.require_subcommand(0, 1);

    std::uint64_t seed = 0;
    int jobs = 1;
    std::string config_path;
    app.add_option("--seed", seed, "Master RNG seed")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("--jobs", jobs, "Worker threads for per-subject stages")
        ->check(CLI::PositiveNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("--config", config_path, "JSON config file; flags override its values")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    stress::cli::SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
    synth->fallthrough();
    add_synth_options(synth, synth_args.cfg, true, &synth_args.out_dir);

    stress::cli::FeaturizeArgs feat_args;
    auto* featurize =
        app.add_subcommand("featurize", "Windowed features from a dataset manifest");
    featurize->fallthrough();
    featurize->add_option("--manifest", feat_args.manifest_path, "Dataset manifest JSON")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    featurize->add_option("--out", feat_args.out_dir, "Output directory")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    featurize->add_option("--window", feat_args.window_len_s, "Window length, seconds")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    featurize->add_option("--step", feat_args.step_s, "Window step, seconds")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    stress::cli::TrainArgs train_args;
    std::string model_name = "mt-nn";
    double fixed_lambda = -1.0, fixed_C = -1.0, fixed_gamma = -1.0;
    auto* train = app.add_subcommand("train", "Split, cross-validate and train one model");
    train->fallthrough();
    train->add_option("--features", train_args.features_path, "Feature CSV")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    train->add_option("--out", train_args.out_dir, "Output directory")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    train->add_option("--model", model_name, "lr | svm-l | svm-rbf | st-nn | mt-nn")
        ->check(CLI::IsMember({"lr", "svm-l", "svm-rbf", "st-nn", "mt-nn"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    train->add_option("--lambda", fixed_lambda, "Fix the L2 strength, skipping CV")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    train->add_option("--C", fixed_C, "Fix the SVM C, skipping CV")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    train->add_option("--gamma", fixed_gamma, "Fix the RBF gamma, skipping CV")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    add_train_cfg_options(train, train_args.cfg);

    stress::cli::EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Test-set metrics for trained checkpoints");
    evaluate->fallthrough();
    evaluate->add_option("--features", eval_args.features_path, "Feature CSV")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    evaluate->add_option("--split", eval_args.split_path, "Split manifest JSON")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    evaluate->add_option("--checkpoint", eval_args.checkpoint_paths, "Checkpoint JSON(s)")
        ->required()
        ->take_all();
    evaluate->add_option("--out", eval_args.out_dir, "Output directory")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    evaluate->add_option("--format", eval_args.formats, "json,csv,md")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

    stress::cli::PipelineArgs pipe_args;
    std::vector<std::string> pipe_models;
    auto* pipeline = app.add_subcommand("pipeline", "synth + featurize + train + evaluate");
    pipeline->fallthrough();
    std::string pipe_out;
    add_synth_options(pipeline, pipe_args.cfg, true, &pipe_out);
    pipeline->add_option("--models", pipe_models, "Model kinds to train (default: all five)")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    pipeline->add_option("--format", pipe_args.formats, "json,csv,md")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    add_train_cfg_options(pipeline, pipe_args.train_cfg);

    std::vector<std::string> merged;
    try {
        merged = expand_args(argc, argv, {"synth", "featurize", "train", "evaluate", "pipeline"});
    } catch (const stress::Error& e) {
        std::cerr << e.what() << '\n';
        return stress::cli::exit_code_for(e);
    }
    std::vector<const char*> cargv;
    cargv.push_back(argv[0]);
    for (const auto& a : merged) cargv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return stress::cli::kExitUsage;
    }

    try {
        if (synth->parsed()) {
            synth_args.cfg.seed = seed;
            synth_args.jobs = jobs;
            return stress::cli::cmd_synth(synth_args, std::cout, std::cerr);
        }
        if (featurize->parsed()) {
            feat_args.jobs = jobs;
            return stress::cli::cmd_featurize(feat_args, std::cout, std::cerr);
        }
        if (train->parsed()) {
            train_args.kind = stress::model::kind_from_name(model_name);
            train_args.cfg.seed = seed;
            if (fixed_lambda >= 0 || fixed_C >= 0 || fixed_gamma >= 0) {
                train_args.skip_cv = true;
                train_args.fixed_hyper.lambda = std::max(fixed_lambda, 0.0);
                train_args.fixed_hyper.C = fixed_C > 0 ? fixed_C : 1.0;
                train_args.fixed_hyper.gamma = fixed_gamma > 0 ? fixed_gamma : 0.1;
            }
            return stress::cli::cmd_train(train_args, std::cout, std::cerr);
        }
        if (evaluate->parsed()) {
            return stress::cli::cmd_evaluate(eval_args, std::cout, std::cerr);
        }
        if (pipeline->parsed()) {
            pipe_args.cfg.seed = seed;
            pipe_args.out_dir = pipe_out;
            pipe_args.jobs = jobs;
            pipe_args.train_cfg.seed = seed;
            if (!pipe_models.empty()) {
                pipe_args.models.clear();
                for (const auto& m : pipe_models)
                    pipe_args.models.push_back(stress::model::kind_from_name(m));
            }
            return stress::cli::cmd_pipeline(pipe_args, std::cout, std::cerr);
        }
    } catch (const stress::Error& e) {
        std::cerr << e.what() << '\n';
        return stress::cli::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }

    std::cout << app.help();
    return stress::cli::kExitUsage;
}
