#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stress/checkpoint.hpp"
#include "stress/error.hpp"
#include "stress/nncore.hpp"
#include "stress/synth.hpp"

namespace stress::cli {

// Exit-code taxonomy, fixed for scriptability.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitTrain = 4;
inline constexpr int kExitMismatch = 5;

int exit_code_for(const Error& e);

struct SynthArgs {
    synth::SynthConfig cfg;
    std::string out_dir;
    int jobs = 1;
};

struct FeaturizeArgs {
    std::string manifest_path;
    std::string out_dir;
    double window_len_s = 30.0;
    double step_s = 15.0;
    int jobs = 1;
};

struct TrainArgs {
    std::string features_path;
    std::string out_dir;
    model::Kind kind = model::Kind::mt_nn;
    nn::TrainConfig cfg;  // cfg.seed is the split + training seed
    bool skip_cv = false; // train with cfg.l2_lambda / fixed hyper instead of the grid
    model::Hyper fixed_hyper;
};

struct EvaluateArgs {
    std::string features_path;
    std::string split_path;
    std::vector<std::string> checkpoint_paths;
    std::string out_dir;
    std::vector<std::string> formats = {"json", "csv", "md"};
};

struct PipelineArgs {
    synth::SynthConfig cfg;
    std::string out_dir;
    std::vector<model::Kind> models = {model::Kind::lr, model::Kind::svm_linear,
                                       model::Kind::svm_rbf, model::Kind::st_nn,
                                       model::Kind::mt_nn};
    nn::TrainConfig train_cfg;
    std::vector<std::string> formats = {"json", "csv", "md"};
    int jobs = 1;
};

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);
int cmd_featurize(const FeaturizeArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);
int cmd_pipeline(const PipelineArgs& args, std::ostream& out, std::ostream& err);

// Path of the metadata sidecar written next to a feature CSV.
std::string features_meta_path(const std::string& features_path);

}  // namespace stress::cli
