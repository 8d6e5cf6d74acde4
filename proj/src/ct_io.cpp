#include "ctlayer/ct_io.hpp"

#include "ctlayer/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ctlayer {

using nlohmann::json;

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw Error(ErrorCode::invalid_argument, "cannot format number");
    return std::string(buf, ptr);
}

std::string curve_to_csv(const CtCurve& curve) {
    std::string out = "layer,ct\n";
    for (std::size_t l = 0; l < curve.scores.size(); ++l) {
        out += std::to_string(l);
        out += ',';
        out += format_number(curve.scores[l]);
        out += '\n';
    }
    return out;
}

std::string curve_to_json(const CtCurve& curve) {
    json j;
    j["label"] = curve.label;
    j["scores"] = curve.scores;
    return j.dump(2) + "\n";
}

std::string diagnostics_to_json(const CtCurveResult& result, const CtConfig& config) {
    json j;
    j["label"] = result.curve.label;
    j["config"] = {{"k", config.k},
                   {"seed", config.seed},
                   {"tau_p", config.tau_p},
                   {"tau_q", config.tau_q},
                   {"max_iters", config.max_iters},
                   {"tol", config.tol},
                   {"n_init", config.n_init},
                   {"tie_correction", config.tie_correction}};
    j["sample_counts"] = {{"train", result.curve.train_count},
                          {"test", result.curve.test_count},
                          {"gen", result.curve.gen_count}};
    json layers = json::array();
    for (const LayerDiagnostics& layer : result.layers) {
        json cells = json::array();
        for (const CellStats& c : layer.cells) {
            cells.push_back({{"cell_index", c.cell_index},
                             {"n_test", c.n_test},
                             {"n_gen", c.n_gen},
                             {"weight", c.weight},
                             {"z_u", c.z_u ? json(*c.z_u) : json(nullptr)},
                             {"included", c.included}});
        }
        layers.push_back({{"layer", layer.layer},
                          {"ct", layer.ct},
                          {"kmeans_iterations", layer.kmeans_iterations},
                          {"wcss", layer.wcss},
                          {"cells", std::move(cells)}});
    }
    j["per_layer"] = std::move(layers);
    return j.dump(2) + "\n";
}

CtCurve parse_curve_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("invalid curve JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array()) {
        throw Error(ErrorCode::parse_error, "curve JSON needs a \"scores\" array");
    }
    CtCurve curve;
    if (j.contains("label") && j["label"].is_string()) curve.label = j["label"].get<std::string>();
    for (const json& v : j["scores"]) {
        if (!v.is_number()) throw Error(ErrorCode::parse_error, "non-numeric curve score");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw Error(ErrorCode::non_finite, "non-finite curve score");
        curve.scores.push_back(x);
    }
    if (curve.scores.empty()) throw Error(ErrorCode::empty_input, "curve has no scores");
    return curve;
}

CtCurve parse_curve_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    CtCurve curve;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (line == "layer,ct") continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw Error(ErrorCode::parse_error, "curve CSV row without comma: " + line);
        }
        std::size_t layer = 0;
        double value = 0.0;
        const char* b = line.data();
        const char* e = line.data() + line.size();
        auto r1 = std::from_chars(b, b + comma, layer);
        auto r2 = std::from_chars(b + comma + 1, e, value);
        if (r1.ec != std::errc{} || r1.ptr != b + comma || r2.ec != std::errc{} || r2.ptr != e) {
            throw Error(ErrorCode::parse_error, "invalid curve CSV row: " + line);
        }
        if (layer != curve.scores.size()) {
            throw Error(ErrorCode::parse_error, "curve CSV layers must be 0..L-1 in order");
        }
        if (!std::isfinite(value)) throw Error(ErrorCode::non_finite, "non-finite curve score");
        curve.scores.push_back(value);
    }
    if (curve.scores.empty()) throw Error(ErrorCode::empty_input, "curve has no scores");
    return curve;
}

CtCurve load_curve(const std::string& path) {
    const std::string text = read_text_file(path);
    const std::string ext = std::filesystem::path(path).extension().string();
    try {
        CtCurve curve = ext == ".csv" ? parse_curve_csv(text) : parse_curve_json(text);
        if (curve.label.empty()) curve.label = std::filesystem::path(path).stem().string();
        return curve;
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot open '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorCode::io_error, "failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::io_error, "cannot rename into '" + path + "'");
    }
}

}  // namespace ctlayer
