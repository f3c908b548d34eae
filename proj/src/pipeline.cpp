#include "stress/pipeline.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>

#include <nlohmann/json.hpp>

#include "stress/dataset_io.hpp"
#include "stress/error.hpp"
#include "stress/eval_models.hpp"
#include "stress/features.hpp"

namespace stress::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(Errc::io_error, dir + ": " + ec.message());
    // create_directories reports success for an existing dir; probe
    // writability explicitly so a read-only target fails here, not later.
    fs::path probe = fs::path(dir) / ".write_probe";
    std::ofstream f(probe);
    if (!f) raise(Errc::io_error, dir + " is not writable");
    f.close();
    fs::remove(probe, ec);
}

void write_run_record(const std::string& out_dir, const std::string& command, const json& cfg) {
    json j;
    j["tool"] = "stresskit";
    j["version"] = "0.1.0";
    j["command"] = command;
    j["config"] = cfg;
    std::ofstream out(fs::path(out_dir) / "run.json");
    if (!out) raise(Errc::io_error, out_dir + "/run.json not writable");
    out << j.dump(2) << '\n';
}

json synth_cfg_json(const synth::SynthConfig& c) {
    return json{{"name", c.name},
                {"n_subjects", c.n_subjects},
                {"duration_s", c.duration_s},
                {"sample_rate_hz", c.sample_rate_hz},
                {"seed", c.seed},
                {"subject_offset_std", c.subject_offset_std},
                {"stress_hr_delta", c.stress_hr_delta},
                {"stress_scr_rate_hz", c.stress_scr_rate_hz},
                {"baseline_scr_rate_hz", c.baseline_scr_rate_hz},
                {"noise_std", c.noise_std}};
}

json train_cfg_json(const nn::TrainConfig& c) {
    return json{{"lr", c.lr},          {"beta1", c.beta1},
                {"beta2", c.beta2},    {"eps", c.eps},
                {"l2_lambda", c.l2_lambda}, {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs}, {"patience", c.patience},
                {"val_fraction", c.val_fraction}, {"seed", c.seed}};
}

}  // namespace

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case Errc::bad_config:
        case Errc::bad_window_params:
        case Errc::unsupported_format:
            return kExitUsage;
        case Errc::io_error:
        case Errc::empty_file:
        case Errc::missing_channel:
        case Errc::malformed_row:
        case Errc::bad_rate:
            return kExitIo;
        case Errc::task_missing_head:
            return kExitMismatch;
        default:
            return kExitTrain;
    }
}

std::string features_meta_path(const std::string& features_path) {
    fs::path p(features_path);
    p.replace_extension(".meta.json");
    return p.string();
}

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
    try {
        ensure_dir(args.out_dir);
        std::string manifest = synth::generate_dataset(args.cfg, args.out_dir, args.jobs);
        out << manifest << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "synth: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int cmd_featurize(const FeaturizeArgs& args, std::ostream& out, std::ostream& err) {
    DatasetManifest manifest;
    try {
        manifest = io::load_manifest(args.manifest_path);
        ensure_dir(args.out_dir);
    } catch (const Error& e) {
        err << "featurize: " << e.what() << '\n';
        return exit_code_for(e);
    }

    out << "featurize: window=" << args.window_len_s << "s step=" << args.step_s << "s dataset="
        << manifest.name << '\n';

    struct SubjectResult {
        std::vector<FeatureVector> windows;
        std::size_t dropped = 0;
        std::string error;
    };
    const std::size_t n = manifest.subjects.size();
    std::vector<SubjectResult> results(n);
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, args.jobs);
    std::vector<std::future<void>> futures;
    for (int w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&]() {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    auto [rec, spans] = io::load_and_prepare(manifest, manifest.subjects[i]);
                    results[i].windows = feat::featurize_subject(
                        rec, spans, args.window_len_s, args.step_s, &results[i].dropped);
                } catch (const std::exception& e) {
                    results[i].error = e.what();
                }
            }
        }));
    }
    for (auto& f : futures) f.get();

    WindowedDataset ds;
    ds.window_len_s = args.window_len_s;
    ds.step_s = args.step_s;
    json meta_subjects = json::object();
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& id = manifest.subjects[i].subject_id;
        if (!results[i].error.empty()) {
            err << "featurize: skipping " << id << ": " << results[i].error << '\n';
            continue;
        }
        bool has_baseline = false, has_stress = false;
        for (const auto& w : results[i].windows) {
            if (w.label == 0) has_baseline = true;
            else has_stress = true;
        }
        if (results[i].windows.empty() || !has_baseline) {
            err << "featurize: skipping " << id << ": no "
                << (results[i].windows.empty() ? "windows" : "baseline windows") << '\n';
            continue;
        }
        (void)has_stress;
        out << "featurize: " << id << " windows=" << results[i].windows.size()
            << " dropped=" << results[i].dropped << '\n';
        meta_subjects[id] = {{"windows", results[i].windows.size()},
                             {"dropped", results[i].dropped}};
        ds.subject_ids.push_back(id);
        ds.windows.push_back(std::move(results[i].windows));
    }
    if (ds.subject_ids.empty()) {
        err << "featurize: no subject produced usable windows\n";
        return kExitIo;
    }

    try {
        auto [normalized, stats] = feat::baseline_normalize(ds);
        const std::string features_path = (fs::path(args.out_dir) / "features.csv").string();
        feat::save_features(normalized, features_path);
        feat::save_baseline_stats(stats,
                                  (fs::path(args.out_dir) / "baseline_stats.json").string());
        json meta;
        meta["dataset"] = manifest.name;
        meta["window_len_s"] = args.window_len_s;
        meta["step_s"] = args.step_s;
        meta["normalized"] = true;
        meta["subjects"] = meta_subjects;
        std::ofstream mf(features_meta_path(features_path));
        if (!mf) raise(Errc::io_error, "cannot write features meta");
        mf << meta.dump(2) << '\n';
    } catch (const Error& e) {
        err << "featurize: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}

namespace {

std::string dataset_name_for(const std::string& features_path) {
    std::ifstream in(features_meta_path(features_path));
    if (!in) return "unknown";
    try {
        json j;
        in >> j;
        return j.value("dataset", "unknown");
    } catch (const json::exception&) {
        return "unknown";
    }
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
    try {
        WindowedDataset ds = feat::load_features(args.features_path);
        ensure_dir(args.out_dir);
        const std::string dataset = dataset_name_for(args.features_path);

        eval::SplitManifest split = eval::make_split(ds, args.cfg.seed);
        split.dataset = dataset;

        model::Hyper hyper = args.fixed_hyper;
        eval::CvResult cv;
        if (!args.skip_cv) {
            cv = eval::run_cv(args.kind, ds, split, eval::default_grid(args.kind), args.cfg);
            hyper = cv.best;
            json jcv = json::array();
            for (const auto& cand : cv.candidates)
                jcv.push_back({{"lambda", cand.hyper.lambda},
                               {"C", cand.hyper.C},
                               {"gamma", cand.hyper.gamma},
                               {"fold_f1", cand.fold_f1},
                               {"mean_f1", cand.mean_f1}});
            std::ofstream cf(fs::path(args.out_dir) /
                             ("cv_" + model::kind_name(args.kind) + ".json"));
            cf << jcv.dump(2) << '\n';
        }

        model::Checkpoint ckpt = eval::train_final(args.kind, ds, split, hyper, args.cfg);
        ckpt.dataset = dataset;
        ckpt.seed = args.cfg.seed;

        const std::string ckpt_path =
            (fs::path(args.out_dir) / ("checkpoint_" + model::kind_name(args.kind) + ".json"))
                .string();
        model::save_checkpoint(ckpt, ckpt_path);
        eval::save_split(split, (fs::path(args.out_dir) / "split.json").string());
        out << "train: " << model::kind_name(args.kind) << " dataset=" << dataset
            << " seed=" << args.cfg.seed << " lambda=" << hyper.lambda << " C=" << hyper.C
            << " gamma=" << hyper.gamma << '\n';
        out << ckpt_path << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "train: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
    try {
        for (const auto& f : args.formats)
            if (f != "json" && f != "csv" && f != "md")
                raise(Errc::unsupported_format, f);

        WindowedDataset ds = feat::load_features(args.features_path);
        eval::SplitManifest split = eval::load_split(args.split_path);
        std::vector<model::Checkpoint> models;
        for (const auto& p : args.checkpoint_paths) {
            model::Checkpoint ckpt = model::load_checkpoint(p);
            if (ckpt.seed != split.seed || ckpt.dataset != split.dataset) {
                err << "evaluate: checkpoint " << p << " (dataset=" << ckpt.dataset
                    << ", seed=" << ckpt.seed << ") does not match split (dataset="
                    << split.dataset << ", seed=" << split.seed << ")\n";
                return kExitMismatch;
            }
            models.push_back(std::move(ckpt));
        }

        eval::MetricsReport report = eval::evaluate_all(models, ds, split);
        ensure_dir(args.out_dir);
        for (const auto& f : args.formats) {
            if (f == "json")
                eval::save_report_json(report, (fs::path(args.out_dir) / "report.json").string());
            else if (f == "csv")
                eval::save_report_csv(report, (fs::path(args.out_dir) / "report.csv").string());
            else {
                std::ofstream md(fs::path(args.out_dir) / "report.md");
                md << eval::render_report_markdown(report);
            }
        }
        out << eval::render_report_markdown(report);
        return kExitOk;
    } catch (const Error& e) {
        err << "evaluate: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int cmd_pipeline(const PipelineArgs& args, std::ostream& out, std::ostream& err) {
    const fs::path root(args.out_dir);

    SynthArgs synth_args{args.cfg, (root / "data").string(), args.jobs};
    int rc = cmd_synth(synth_args, out, err);
    if (rc != kExitOk) return rc;

    FeaturizeArgs feat_args;
    feat_args.manifest_path = (root / "data" / "manifest.json").string();
    feat_args.out_dir = (root / "features").string();
    feat_args.jobs = args.jobs;
    rc = cmd_featurize(feat_args, out, err);
    if (rc != kExitOk) return rc;

    std::vector<std::string> ckpts;
    for (model::Kind kind : args.models) {
        TrainArgs train_args;
        train_args.features_path = (root / "features" / "features.csv").string();
        train_args.out_dir = (root / "models").string();
        train_args.kind = kind;
        train_args.cfg = args.train_cfg;
        train_args.cfg.seed = args.cfg.seed;
        rc = cmd_train(train_args, out, err);
        if (rc != kExitOk) return rc;
        ckpts.push_back((root / "models" / ("checkpoint_" + model::kind_name(kind) + ".json"))
                            .string());
    }

    EvaluateArgs eval_args;
    eval_args.features_path = (root / "features" / "features.csv").string();
    eval_args.split_path = (root / "models" / "split.json").string();
    eval_args.checkpoint_paths = ckpts;
    eval_args.out_dir = (root / "report").string();
    eval_args.formats = args.formats;
    rc = cmd_evaluate(eval_args, out, err);
    if (rc != kExitOk) return rc;

    try {
        json cfg = synth_cfg_json(args.cfg);
        cfg["train_config"] = train_cfg_json(args.train_cfg);
        json names = json::array();
        for (model::Kind k : args.models) names.push_back(model::kind_name(k));
        cfg["models"] = names;
        write_run_record(args.out_dir, "pipeline", cfg);
    } catch (const Error& e) {
        err << "pipeline: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}

}  // namespace stress::cli
