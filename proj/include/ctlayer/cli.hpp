#pragma once

#include "ctlayer/ct_core.hpp"
#include "ctlayer/fingerprint.hpp"
#include "ctlayer/imageops.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctlayer::cli {

// Bad command line; maps to exit status 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --help was given; what() holds the rendered help text.
class HelpRequested : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command {
    ct_score,
    ct_curve,
    fp_build,
    fp_match,
    fp_eval,
    fp_baseline,
    sim_heatmap,
    aug_rotate,
    aug_downup,
    aug_shuffle,
    aug_bg_gauss,
    aug_bg_image,
};

const char* command_name(Command command);

struct RunConfig {
    Command command = Command::ct_curve;

    // C_T inputs and knobs.
    std::string train;
    std::string test;
    std::string gen;
    EmbeddingFormat input_format = EmbeddingFormat::cte1;
    std::size_t layer = 0;
    std::string label;
    CtConfig ct;

    // Outputs.
    std::string out;
    std::string json_out;
    std::string diagnostics_out;
    std::string summary_out;
    std::string svg_out;

    // Fingerprinting.
    std::string db;
    std::string manifest;
    std::string query;
    MatchMetric metric = MatchMetric::combined;
    bool use_baseline = false;
    std::string embeddings;
    std::string reference;

    // Augmentation.
    std::vector<std::string> images;
    std::string out_dir;
    std::string masks;
    std::vector<std::string> backgrounds;
    std::optional<double> angle;
    RotateMode rotate_mode = RotateMode::right_angle;
    std::size_t factor = 2;
    std::size_t grid = 4;
    std::optional<std::vector<std::size_t>> perm;
    double noise_mean = 0.5;
    double noise_std = 0.25;

    std::uint64_t seed = 0;
    unsigned threads = 1;
};

// argv without the program name, e.g. {"ct", "curve", "--train", ...}.
RunConfig parse_args(const std::vector<std::string>& args);

// Exit status: 0 success, 1 validation error, 2 data error.
int execute(const RunConfig& config);

// parse_args + execute with help/usage handling; used by the executable.
int run(const std::vector<std::string>& args);

}  // namespace ctlayer::cli
