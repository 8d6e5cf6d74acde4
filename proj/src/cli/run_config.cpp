#include "ctlayer/cli.hpp"

#include "ctlayer/error.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <string_view>

namespace ctlayer::cli {

const char* command_name(Command command) {
    switch (command) {
        case Command::ct_score: return "ct score";
        case Command::ct_curve: return "ct curve";
        case Command::fp_build: return "fp build";
        case Command::fp_match: return "fp match";
        case Command::fp_eval: return "fp eval";
        case Command::fp_baseline: return "fp baseline";
        case Command::sim_heatmap: return "sim heatmap";
        case Command::aug_rotate: return "aug rotate";
        case Command::aug_downup: return "aug downup";
        case Command::aug_shuffle: return "aug shuffle";
        case Command::aug_bg_gauss: return "aug bg-gauss";
        case Command::aug_bg_image: return "aug bg-image";
    }
    return "?";
}

namespace {

// String-valued knobs that need custom validation after parsing.
struct RawOptions {
    std::string format = "cte1";
    std::string metric = "combined";
    std::string mode = "right";
    std::string perm;
    std::optional<std::size_t> tau;
    bool no_tie_correction = false;
};

void add_ct_inputs(CLI::App* sub, RunConfig& cfg, RawOptions& raw) {
    sub->add_option("--train", cfg.train, "Training-set embeddings")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--test", cfg.test, "Held-out test embeddings")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--gen", cfg.gen, "Generated-sample embeddings")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--format", raw.format, "Input format: cte1 or csv (single layer)")
        ->capture_default_str();
    sub->add_option("--k", cfg.ct.k, "KMeans cell count")->capture_default_str();
    sub->add_option("--tau-p", cfg.ct.tau_p, "Minimum test samples per cell")
        ->capture_default_str();
    sub->add_option("--tau-q", cfg.ct.tau_q, "Minimum generated samples per cell")
        ->capture_default_str();
    sub->add_option("--tau", raw.tau, "Set both --tau-p and --tau-q");
    sub->add_option("--max-iters", cfg.ct.max_iters, "Lloyd iteration cap")
        ->capture_default_str();
    sub->add_option("--tol", cfg.ct.tol, "Centroid shift tolerance")->capture_default_str();
    sub->add_option("--n-init", cfg.ct.n_init, "KMeans++ restarts")->capture_default_str();
    sub->add_flag("--no-tie-correction", raw.no_tie_correction,
                  "Use the variance without the tie term");
    sub->add_option("--label", cfg.label, "Curve label (default: generated file stem)");
}

std::vector<std::size_t> parse_perm(std::string_view text) {
    std::vector<std::size_t> perm;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view field = text.substr(0, comma);
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            throw UsageError("--perm must be a comma-separated list of tile indices");
        }
        perm.push_back(v);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return perm;
}

const CLI::App* deepest_parsed(const CLI::App* app) {
    for (const CLI::App* sub : app->get_subcommands()) {
        if (sub->parsed()) return deepest_parsed(sub);
    }
    return app;
}

}  // namespace

RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig cfg;
    RawOptions raw;

    CLI::App app{"Layer-wise data-copying scores and generative-model fingerprinting", "ctlayer"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", cfg.seed, "Seed for every stochastic step")->capture_default_str();
    app.add_option("--threads", cfg.threads, "Worker threads (outputs do not depend on it)")
        ->capture_default_str();

    std::vector<std::pair<CLI::App*, Command>> leaves;
    auto leaf = [&](CLI::App* parent, const char* name, const char* help, Command cmd) {
        CLI::App* sub = parent->add_subcommand(name, help);
        sub->fallthrough();
        leaves.emplace_back(sub, cmd);
        return sub;
    };

    CLI::App* ct = app.add_subcommand("ct", "C_T scores over embedding triples");
    ct->require_subcommand(1);
    ct->fallthrough();
    CLI::App* fp = app.add_subcommand("fp", "Fingerprint database and matching");
    fp->require_subcommand(1);
    fp->fallthrough();
    CLI::App* sim = app.add_subcommand("sim", "Curve similarity analysis");
    sim->require_subcommand(1);
    sim->fallthrough();
    CLI::App* aug = app.add_subcommand("aug", "Augmented datasets from source images");
    aug->require_subcommand(1);
    aug->fallthrough();

    // ct score
    CLI::App* ct_score = leaf(ct, "score", "C_T score of one layer", Command::ct_score);
    add_ct_inputs(ct_score, cfg, raw);
    ct_score->add_option("--layer", cfg.layer, "Layer index")->capture_default_str();
    ct_score->add_option("--out", cfg.diagnostics_out, "Diagnostics JSON path");

    // ct curve
    CLI::App* ct_curve = leaf(ct, "curve", "Per-layer C_T curve", Command::ct_curve);
    add_ct_inputs(ct_curve, cfg, raw);
    ct_curve->add_option("--out", cfg.out, "Curve CSV path (layer,ct)")->required();
    ct_curve->add_option("--json", cfg.json_out, "Curve JSON path");
    ct_curve->add_option("--diagnostics", cfg.diagnostics_out, "Per-cell diagnostics JSON path");
    ct_curve->add_option("--svg", cfg.svg_out, "Line plot SVG path");

    // fp build
    CLI::App* fp_build = leaf(fp, "build", "Build a fingerprint database", Command::fp_build);
    fp_build->add_option("--manifest", cfg.manifest,
                         "CSV: label,architecture,curve[,baseline]")
        ->required()
        ->check(CLI::ExistingFile);
    fp_build->add_option("--out", cfg.out, "Database JSON path")->required();

    // fp match
    CLI::App* fp_match = leaf(fp, "match", "Match one query against the db", Command::fp_match);
    fp_match->add_option("--db", cfg.db, "Database JSON")->required()->check(CLI::ExistingFile);
    fp_match->add_option("--query", cfg.query, "Query curve (.json/.csv) or baseline JSON")
        ->required()
        ->check(CLI::ExistingFile);
    fp_match->add_option("--metric", raw.metric, "l2, cosine or combined")->capture_default_str();
    fp_match->add_flag("--baseline", cfg.use_baseline, "Match baseline features instead");
    fp_match->add_option("--out", cfg.out, "Match result JSON path");

    // fp eval
    CLI::App* fp_eval = leaf(fp, "eval", "Matching accuracy over labelled queries",
                             Command::fp_eval);
    fp_eval->add_option("--db", cfg.db, "Database JSON")->required()->check(CLI::ExistingFile);
    fp_eval->add_option("--queries", cfg.manifest, "CSV: label,architecture,curve[,baseline]")
        ->required()
        ->check(CLI::ExistingFile);
    fp_eval->add_option("--metric", raw.metric, "l2, cosine or combined")->capture_default_str();
    fp_eval->add_flag("--baseline", cfg.use_baseline, "Evaluate the statistical baseline");
    fp_eval->add_option("--out", cfg.out, "Report JSON path");

    // fp baseline
    CLI::App* fp_baseline = leaf(fp, "baseline", "Mean/std/Frechet baseline features",
                                 Command::fp_baseline);
    fp_baseline->add_option("--images", cfg.images, "PNG files or one directory")
        ->required()
        ->check(CLI::ExistingPath);
    fp_baseline->add_option("--embeddings", cfg.embeddings, "Dataset embeddings")
        ->required()
        ->check(CLI::ExistingFile);
    fp_baseline->add_option("--reference", cfg.reference, "Reference embeddings")
        ->required()
        ->check(CLI::ExistingFile);
    fp_baseline->add_option("--format", raw.format, "Embedding format")->capture_default_str();
    fp_baseline->add_option("--out", cfg.out, "Features JSON path")->required();

    // sim heatmap
    CLI::App* heat = leaf(sim, "heatmap", "Pairwise cosine similarity of curves",
                          Command::sim_heatmap);
    auto* heat_db = heat->add_option("--db", cfg.db, "Database JSON")->check(CLI::ExistingFile);
    auto* heat_manifest = heat->add_option("--manifest", cfg.manifest, "Curve manifest CSV")
                              ->check(CLI::ExistingFile);
    heat_db->excludes(heat_manifest);
    heat->add_option("--out", cfg.out, "Heatmap CSV path")->required();
    heat->add_option("--summary", cfg.summary_out, "intra/inter mean JSON path");
    heat->add_option("--svg", cfg.svg_out, "Heatmap SVG path");

    // aug *
    auto add_aug_io = [&](CLI::App* sub) {
        sub->add_option("--images", cfg.images, "PNG files or one directory")
            ->required()
            ->check(CLI::ExistingPath);
        sub->add_option("--out-dir", cfg.out_dir, "Output directory")->required();
        sub->add_option("--manifest", cfg.manifest,
                        "Manifest CSV path (default: <out-dir>/manifest.csv)");
    };
    CLI::App* rot = leaf(aug, "rotate", "Rotated copies", Command::aug_rotate);
    add_aug_io(rot);
    rot->add_option("--angle", cfg.angle, "Angle in degrees (default: random of 90/180/270)");
    rot->add_option("--mode", raw.mode, "right or bilinear")->capture_default_str();

    CLI::App* du = leaf(aug, "downup", "Downsample then upsample", Command::aug_downup);
    add_aug_io(du);
    du->add_option("--factor", cfg.factor, "Pooling factor")->capture_default_str();

    CLI::App* sh = leaf(aug, "shuffle", "Shuffle square patches", Command::aug_shuffle);
    add_aug_io(sh);
    sh->add_option("--grid", cfg.grid, "Patches per side")->capture_default_str();
    sh->add_option("--perm", raw.perm, "Fixed permutation, e.g. 3,1,2,0");

    CLI::App* bgg = leaf(aug, "bg-gauss", "Gaussian-noise backgrounds", Command::aug_bg_gauss);
    add_aug_io(bgg);
    bgg->add_option("--masks", cfg.masks, "Directory of masks named like the images")
        ->required()
        ->check(CLI::ExistingDirectory);
    bgg->add_option("--mean", cfg.noise_mean, "Noise mean in [0,1] units")->capture_default_str();
    bgg->add_option("--std", cfg.noise_std, "Noise std in [0,1] units")->capture_default_str();

    CLI::App* bgi = leaf(aug, "bg-image", "Real-image backgrounds", Command::aug_bg_image);
    add_aug_io(bgi);
    bgi->add_option("--masks", cfg.masks, "Directory of masks named like the images")
        ->required()
        ->check(CLI::ExistingDirectory);
    bgi->add_option("--backgrounds", cfg.backgrounds, "Background PNG files or one directory")
        ->required()
        ->check(CLI::ExistingPath);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(deepest_parsed(&app)->help());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    bool found = false;
    for (const auto& [sub, cmd] : leaves) {
        if (sub->parsed()) {
            cfg.command = cmd;
            found = true;
        }
    }
    if (!found) throw UsageError("a subcommand is required");

    try {
        cfg.input_format = parse_embedding_format(raw.format);
    } catch (const Error&) {
        throw UsageError("--format must be one of {cte1,csv}, got '" + raw.format + "'");
    }
    try {
        cfg.metric = parse_metric(raw.metric);
    } catch (const Error&) {
        throw UsageError("--metric must be one of {l2,cosine,combined}, got '" + raw.metric + "'");
    }
    if (raw.mode == "right") {
        cfg.rotate_mode = RotateMode::right_angle;
    } else if (raw.mode == "bilinear") {
        cfg.rotate_mode = RotateMode::bilinear;
    } else {
        throw UsageError("--mode must be one of {right,bilinear}, got '" + raw.mode + "'");
    }
    if (raw.tau) {
        cfg.ct.tau_p = *raw.tau;
        cfg.ct.tau_q = *raw.tau;
    }
    cfg.ct.tie_correction = !raw.no_tie_correction;
    cfg.ct.seed = cfg.seed;
    cfg.ct.threads = cfg.threads;
    if (!raw.perm.empty()) cfg.perm = parse_perm(raw.perm);

    if (cfg.ct.k < 1) throw UsageError("k must be >= 1");
    if (cfg.ct.tau_p < 1) throw UsageError("tau-p must be >= 1");
    if (cfg.ct.tau_q < 1) throw UsageError("tau-q must be >= 1");
    if (cfg.ct.max_iters < 1) throw UsageError("max-iters must be >= 1");
    if (!(cfg.ct.tol >= 0.0)) throw UsageError("tol must be >= 0");
    if (cfg.ct.n_init < 1) throw UsageError("n-init must be >= 1");
    if (cfg.threads < 1) throw UsageError("threads must be >= 1");
    if (cfg.factor < 1) throw UsageError("factor must be >= 1");
    if (cfg.grid < 1) throw UsageError("grid must be >= 1");
    if (!(cfg.noise_std >= 0.0)) throw UsageError("std must be >= 0");
    if (cfg.command == Command::sim_heatmap && cfg.db.empty() && cfg.manifest.empty()) {
        throw UsageError("sim heatmap needs --db or --manifest");
    }
    constexpr double kRightAngles[] = {0.0, 90.0, 180.0, 270.0};
    if (cfg.command == Command::aug_rotate && cfg.angle &&
        cfg.rotate_mode == RotateMode::right_angle &&
        std::find(std::begin(kRightAngles), std::end(kRightAngles), *cfg.angle) ==
            std::end(kRightAngles)) {
        throw UsageError("--angle must be one of {0,90,180,270} in right-angle mode");
    }
    return cfg;
}

}  // namespace ctlayer::cli
