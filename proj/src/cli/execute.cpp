#include "ctlayer/cli.hpp"

#include "ctlayer/ct_io.hpp"
#include "ctlayer/error.hpp"
#include "ctlayer/rng.hpp"
#include "svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace ctlayer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

EmbeddingSet load_set(const std::string& path, EmbeddingFormat format) {
    EmbeddingSet set = load_embedding_set(path, format);
    set.label = fs::path(path).stem().string();
    return set;
}

std::vector<std::string> expand_images(const std::vector<std::string>& inputs) {
    if (inputs.size() == 1 && fs::is_directory(inputs.front())) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(inputs.front())) {
            if (entry.is_regular_file() && entry.path().extension() == ".png") {
                files.push_back(entry.path().string());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw Error(ErrorCode::empty_input, "no .png files in '" + inputs.front() + "'");
        }
        return files;
    }
    return inputs;
}

struct ManifestRow {
    std::string label;
    std::string architecture;
    std::string curve_path;
    std::string baseline_path;
};

std::vector<ManifestRow> read_manifest(const std::string& path) {
    const std::string text = read_text_file(path);
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute()) return p;
        return (base / p).string();
    };
    std::vector<ManifestRow> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.emplace_back();
        if (line_no == 1 && !fields.empty() && fields[0] == "label") continue;
        if (fields.size() < 3 || fields.size() > 4) {
            throw Error(ErrorCode::parse_error,
                        path + ": line " + std::to_string(line_no) +
                            " needs label,architecture,curve[,baseline]");
        }
        rows.push_back({fields[0], fields[1], resolve(fields[2]),
                        fields.size() == 4 ? resolve(fields[3]) : std::string{}});
    }
    if (rows.empty()) throw Error(ErrorCode::empty_input, path + ": manifest has no rows");
    return rows;
}

std::vector<double> load_features(const std::string& path) {
    try {
        const json j = json::parse(read_text_file(path));
        if (j.is_array()) return j.get<std::vector<double>>();
        return j.at("features").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, path + ": invalid features JSON: " + e.what());
    }
}

std::vector<LabeledCurve> curves_from_manifest(const std::string& path) {
    std::vector<LabeledCurve> curves;
    for (const ManifestRow& row : read_manifest(path)) {
        LabeledCurve c;
        c.label = row.label;
        c.architecture = row.architecture;
        c.curve = load_curve(row.curve_path).scores;
        if (!row.baseline_path.empty()) c.baseline_features = load_features(row.baseline_path);
        curves.push_back(std::move(c));
    }
    return curves;
}

void write_json(const std::string& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json match_to_json(const FingerprintDb& db, const MatchResult& m) {
    json candidates = json::array();
    for (const auto& c : m.candidates) {
        candidates.push_back({{"label", c.label},
                              {"l2", c.l2},
                              {"cosine", c.cosine},
                              {"l2_rank", c.l2_rank},
                              {"cosine_rank", c.cosine_rank},
                              {"rank_sum", c.rank_sum}});
    }
    return {{"metric", to_string(m.metric)},
            {"predicted_label", m.predicted_label},
            {"predicted_architecture", db.entries[m.predicted_index].architecture},
            {"candidates", std::move(candidates)}};
}

CtConfig ct_config(const RunConfig& cfg) {
    CtConfig c = cfg.ct;
    c.seed = cfg.seed;
    c.threads = cfg.threads;
    return c;
}

int run_ct_score(const RunConfig& cfg) {
    const EmbeddingSet train = load_set(cfg.train, cfg.input_format);
    const EmbeddingSet test = load_set(cfg.test, cfg.input_format);
    const EmbeddingSet gen = load_set(cfg.gen, cfg.input_format);
    const ValidatedTriple triple = validate_triple(train, test, gen);
    if (cfg.layer >= triple.shape.layer_count) {
        throw Error(ErrorCode::invalid_argument,
                    "layer " + std::to_string(cfg.layer) + " out of range (L = " +
                        std::to_string(triple.shape.layer_count) + ")");
    }
    const CtConfig config = ct_config(cfg);
    CtCurveResult result;
    try {
        LayerDiagnostics diag =
            ct_layer(train.layers[cfg.layer], test.layers[cfg.layer], gen.layers[cfg.layer], config);
        diag.layer = cfg.layer;
        result.curve.scores.push_back(diag.ct);
        result.layers.push_back(std::move(diag));
    } catch (const Error& e) {
        throw Error(e.code(), "layer " + std::to_string(cfg.layer) + ": " + e.what());
    }
    result.curve.label = cfg.label.empty() ? gen.label : cfg.label;
    result.curve.train_count = triple.shape.train_count;
    result.curve.test_count = triple.shape.test_count;
    result.curve.gen_count = triple.shape.gen_count;
    if (!cfg.diagnostics_out.empty()) {
        write_file_atomic(cfg.diagnostics_out, diagnostics_to_json(result, config));
    }
    std::cout << format_number(result.layers.front().ct) << "\n";
    return 0;
}

int run_ct_curve(const RunConfig& cfg) {
    const EmbeddingSet train = load_set(cfg.train, cfg.input_format);
    const EmbeddingSet test = load_set(cfg.test, cfg.input_format);
    const EmbeddingSet gen = load_set(cfg.gen, cfg.input_format);
    const CtConfig config = ct_config(cfg);
    const CtCurveResult result =
        ct_curve(train, test, gen, config, cfg.label.empty() ? gen.label : cfg.label);
    write_file_atomic(cfg.out, curve_to_csv(result.curve));
    if (!cfg.json_out.empty()) write_file_atomic(cfg.json_out, curve_to_json(result.curve));
    if (!cfg.diagnostics_out.empty()) {
        write_file_atomic(cfg.diagnostics_out, diagnostics_to_json(result, config));
    }
    if (!cfg.svg_out.empty()) {
        write_file_atomic(cfg.svg_out, curve_svg(result.curve.label, result.curve.scores));
    }
    for (std::size_t l = 0; l < result.curve.scores.size(); ++l) {
        std::cout << "layer " << l << " ct " << format_number(result.curve.scores[l]) << "\n";
    }
    return 0;
}

int run_fp_build(const RunConfig& cfg) {
    const FingerprintDb db = build_db(curves_from_manifest(cfg.manifest));
    write_file_atomic(cfg.out, db_to_json(db));
    std::cout << "entries " << db.entries.size() << " layers " << db.layer_count << "\n";
    return 0;
}

FingerprintDb load_db(const std::string& path) {
    try {
        return db_from_json(read_text_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

int run_fp_match(const RunConfig& cfg) {
    const FingerprintDb db = load_db(cfg.db);
    MatchResult m;
    std::string query_label;
    if (cfg.use_baseline) {
        m = match_baseline(db, load_features(cfg.query), cfg.metric);
        query_label = fs::path(cfg.query).stem().string();
    } else {
        const CtCurve q = load_curve(cfg.query);
        m = match_curve(db, q.scores, cfg.metric);
        query_label = q.label;
    }
    if (!cfg.out.empty()) {
        json j = match_to_json(db, m);
        j["query"] = query_label;
        write_json(cfg.out, j);
    }
    std::cout << m.predicted_label << "\n";
    return 0;
}

int run_fp_eval(const RunConfig& cfg) {
    const FingerprintDb db = load_db(cfg.db);
    std::vector<Query> queries;
    for (const ManifestRow& row : read_manifest(cfg.manifest)) {
        Query q{row.label, row.architecture, {}};
        if (cfg.use_baseline) {
            if (row.baseline_path.empty()) {
                throw Error(ErrorCode::empty_input,
                            "query '" + row.label + "' has no baseline features column");
            }
            q.values = load_features(row.baseline_path);
        } else {
            q.values = load_curve(row.curve_path).scores;
        }
        queries.push_back(std::move(q));
    }
    const AccuracyReport report = cfg.use_baseline
                                      ? eval_baseline_accuracy(db, queries, cfg.metric)
                                      : eval_accuracy(db, queries, cfg.metric);
    if (!cfg.out.empty()) {
        json rows = json::array();
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const auto& m = report.matches[i];
            const auto& predicted_arch = db.entries[m.predicted_index].architecture;
            rows.push_back({{"label", queries[i].label},
                            {"architecture", queries[i].architecture},
                            {"predicted_label", m.predicted_label},
                            {"predicted_architecture", predicted_arch},
                            {"correct", predicted_arch == queries[i].architecture}});
        }
        write_json(cfg.out, {{"metric", to_string(cfg.metric)},
                             {"features", cfg.use_baseline ? "baseline" : "ct_curve"},
                             {"accuracy", report.accuracy},
                             {"correct", report.correct},
                             {"total", report.total},
                             {"queries", std::move(rows)}});
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "accuracy %.3f (%zu/%zu)\n", report.accuracy, report.correct,
                  report.total);
    std::cout << buf;
    return 0;
}

int run_fp_baseline(const RunConfig& cfg) {
    std::vector<Image> images;
    for (const std::string& path : expand_images(cfg.images)) images.push_back(read_png(path));
    const EmbeddingSet emb = load_set(cfg.embeddings, cfg.input_format);
    const EmbeddingSet ref = load_set(cfg.reference, cfg.input_format);
    const auto features = baseline_features(images, emb.layers.back(), ref.layers.back());
    write_json(cfg.out, {{"names", {"mean_r", "mean_g", "mean_b", "std_r", "std_g", "std_b",
                                    "frechet"}},
                         {"features", features}});
    for (double f : features) std::cout << format_number(f) << "\n";
    return 0;
}

int run_sim_heatmap(const RunConfig& cfg) {
    std::vector<LabeledCurve> curves;
    if (!cfg.db.empty()) {
        curves = load_db(cfg.db).entries;
    } else {
        curves = curves_from_manifest(cfg.manifest);
    }
    const Heatmap h = cosine_heatmap(curves, {});
    write_file_atomic(cfg.out, heatmap_to_csv(h));
    if (!cfg.summary_out.empty()) write_file_atomic(cfg.summary_out, heatmap_summary_json(h));
    if (!cfg.svg_out.empty()) write_file_atomic(cfg.svg_out, heatmap_svg(h));
    std::cout << "intra_mean " << (h.intra_mean ? format_number(*h.intra_mean) : "null")
              << " inter_mean " << (h.inter_mean ? format_number(*h.inter_mean) : "null") << "\n";
    return 0;
}

const char* mode_name(RotateMode mode) {
    return mode == RotateMode::right_angle ? "right" : "bilinear";
}

void write_png_atomic(const Image& img, const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp";
    write_png(img, tmp.string());
    fs::rename(tmp, path);
}

int run_aug(const RunConfig& cfg) {
    const auto inputs = expand_images(cfg.images);
    fs::create_directories(cfg.out_dir);
    std::vector<std::string> backgrounds;
    if (cfg.command == Command::aug_bg_image) backgrounds = expand_images(cfg.backgrounds);

    std::string manifest = "source,transform,params,seed,output_path\n";
    const char* transform = "";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::uint64_t seed = image_seed(cfg.seed, i);
        const fs::path source(inputs[i]);
        const Image img = read_png(source.string());
        Image out;
        std::string params;
        switch (cfg.command) {
            case Command::aug_rotate: {
                transform = "rotate";
                const double angle = cfg.angle ? *cfg.angle : random_right_angle(seed);
                out = rotate(img, angle, cfg.rotate_mode);
                params = "angle=" + format_number(angle) + ";mode=" + mode_name(cfg.rotate_mode);
                break;
            }
            case Command::aug_downup:
                transform = "downup";
                out = down_up(img, cfg.factor);
                params = "factor=" + std::to_string(cfg.factor);
                break;
            case Command::aug_shuffle: {
                transform = "shuffle";
                const auto perm = cfg.perm ? *cfg.perm : random_permutation(cfg.grid * cfg.grid, seed);
                out = shuffle_patches(img, cfg.grid, perm);
                params = "grid=" + std::to_string(cfg.grid) + ";perm=";
                for (std::size_t t = 0; t < perm.size(); ++t) {
                    params += (t ? "-" : "") + std::to_string(perm[t]);
                }
                break;
            }
            case Command::aug_bg_gauss: {
                transform = "bg-gauss";
                const Mask mask = read_mask_png((fs::path(cfg.masks) / source.filename()).string());
                const Image bg = gaussian_background(img.width(), img.height(), cfg.noise_mean,
                                                     cfg.noise_std, seed);
                out = composite_background(img, mask, bg);
                params = "mean=" + format_number(cfg.noise_mean) +
                         ";std=" + format_number(cfg.noise_std);
                break;
            }
            case Command::aug_bg_image: {
                transform = "bg-image";
                const Mask mask = read_mask_png((fs::path(cfg.masks) / source.filename()).string());
                Rng rng(seed);
                const std::string& bg_path = backgrounds[rng.uniform_index(backgrounds.size())];
                const Image bg = cover_resize(read_png(bg_path), img.width(), img.height());
                out = composite_background(img, mask, bg);
                params = "background=" + fs::path(bg_path).filename().string();
                break;
            }
            default:
                throw UsageError("not an augmentation command");
        }
        const fs::path dest = fs::path(cfg.out_dir) / source.filename();
        write_png_atomic(out, dest);
        manifest += source.string() + "," + transform + "," + params + "," +
                    std::to_string(seed) + "," + dest.string() + "\n";
    }
    const std::string manifest_path =
        cfg.manifest.empty() ? (fs::path(cfg.out_dir) / "manifest.csv").string() : cfg.manifest;
    write_file_atomic(manifest_path, manifest);
    std::cout << "wrote " << inputs.size() << " images to " << cfg.out_dir << "\n";
    return 0;
}

}  // namespace

int execute(const RunConfig& config) {
    try {
        switch (config.command) {
            case Command::ct_score: return run_ct_score(config);
            case Command::ct_curve: return run_ct_curve(config);
            case Command::fp_build: return run_fp_build(config);
            case Command::fp_match: return run_fp_match(config);
            case Command::fp_eval: return run_fp_eval(config);
            case Command::fp_baseline: return run_fp_baseline(config);
            case Command::sim_heatmap: return run_sim_heatmap(config);
            case Command::aug_rotate:
            case Command::aug_downup:
            case Command::aug_shuffle:
            case Command::aug_bg_gauss:
            case Command::aug_bg_image: return run_aug(config);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error [" << command_name(config.command) << "] (" << to_string(e.code())
                  << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error [" << command_name(config.command) << "]: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

int run(const std::vector<std::string>& args) {
    RunConfig config;
    try {
        config = parse_args(args);
    } catch (const HelpRequested& help) {
        std::cout << help.what();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return 1;
    }
    return execute(config);
}

}  // namespace ctlayer::cli
