#pragma once

#include <stdexcept>
#include <string>

namespace stress {

// Error codes for every failure mode the pipeline can raise. Tests match on
// the code, not the message text.
enum class Errc {
    // dataset_io
    missing_channel,
    malformed_row,
    empty_file,
    bad_rate,
    too_few_markers,
    all_samples_invalid,
    // features
    bad_window_params,
    insufficient_samples,
    no_baseline_windows,
    already_normalized,
    // nncore
    unknown_task,
    shape_mismatch,
    task_too_small,
    non_finite_loss,
    // baselines
    single_class_data,
    no_convergence,
    dim_mismatch,
    untrained_model,
    // eval
    subject_too_small,
    empty_matrix,
    task_missing_head,
    unsupported_format,
    // synth / cli
    bad_config,
    io_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace stress
