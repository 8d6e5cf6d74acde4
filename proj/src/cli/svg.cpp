#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ctlayer::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    std::string s = buf;
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 480\" width=\"640\" "
           "height=\"480\" font-family=\"sans-serif\" font-size=\"12\">\n"
           "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle",
                 const std::string& extra = {}) {
    return "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" text-anchor=\"" + anchor +
           "\"" + extra + ">" + escape(s) + "</text>\n";
}

std::string line(double x1, double y1, double x2, double y2, const char* stroke = "black") {
    return "<line x1=\"" + fixed(x1) + "\" y1=\"" + fixed(y1) + "\" x2=\"" + fixed(x2) +
           "\" y2=\"" + fixed(y2) + "\" stroke=\"" + stroke + "\"/>\n";
}

// Diverging blue-white-red for values in [-1, 1].
std::string colour(double v) {
    const double t = std::clamp(v, -1.0, 1.0);
    int r = 255, g = 255, b = 255;
    if (t >= 0) {
        g = b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    } else {
        r = g = static_cast<int>(std::lround(255.0 * (1.0 + t)));
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string curve_svg(const std::string& title, std::span<const double> scores) {
    const double left = 70, right = kWidth - 20, top = 40, bottom = kHeight - 60;
    double lo = scores.empty() ? 0.0 : *std::min_element(scores.begin(), scores.end());
    double hi = scores.empty() ? 1.0 : *std::max_element(scores.begin(), scores.end());
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const std::size_t n = scores.size();
    auto px = [&](std::size_t i) {
        return n <= 1 ? (left + right) / 2 : left + (right - left) * static_cast<double>(i) /
                                                        static_cast<double>(n - 1);
    };
    auto py = [&](double v) { return bottom - (bottom - top) * (v - lo) / (hi - lo); };

    std::string svg = header();
    svg += text(kWidth / 2, 24, title.empty() ? "C_T-Layer curve" : title, "middle",
                " font-size=\"16\"");
    svg += line(left, bottom, right, bottom);
    svg += line(left, top, left, bottom);
    for (std::size_t i = 0; i < n; ++i) {
        svg += line(px(i), bottom, px(i), bottom + 5);
        svg += text(px(i), bottom + 18, std::to_string(i));
    }
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        svg += line(left - 5, py(v), left, py(v));
        svg += text(left - 8, py(v) + 4, fixed(v), "end");
    }
    if (lo < 0 && hi > 0) svg += line(left, py(0.0), right, py(0.0), "#bbbbbb");
    svg += text((left + right) / 2, kHeight - 20, "layer");
    svg += text(18, (top + bottom) / 2, "C_T score", "middle",
                " transform=\"rotate(-90 18 " + fixed((top + bottom) / 2) + ")\"");
    std::string points;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) points += ' ';
        points += fixed(px(i)) + "," + fixed(py(scores[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"" + points +
           "\"/>\n";
    for (std::size_t i = 0; i < n; ++i) {
        svg += "<circle cx=\"" + fixed(px(i)) + "\" cy=\"" + fixed(py(scores[i])) +
               "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string heatmap_svg(const Heatmap& heatmap) {
    const std::size_t n = heatmap.labels.size();
    const double left = 150, top = 110, size = 340;
    const double cell = n ? size / static_cast<double>(n) : size;
    std::string svg = header();
    svg += text(kWidth / 2, 24, "Pairwise cosine similarity", "middle", " font-size=\"16\"");
    for (std::size_t i = 0; i < n; ++i) {
        const double y = top + cell * static_cast<double>(i);
        svg += text(left - 6, y + cell / 2 + 4, heatmap.labels[i], "end");
        const double x = left + cell * static_cast<double>(i) + cell / 2;
        svg += text(x, top - 6, heatmap.labels[i], "start",
                    " transform=\"rotate(-60 " + fixed(x) + " " + fixed(top - 6) + ")\"");
        for (std::size_t j = 0; j < n; ++j) {
            const double v = heatmap.similarity[i][j];
            svg += "<rect x=\"" + fixed(left + cell * static_cast<double>(j)) + "\" y=\"" +
                   fixed(y) + "\" width=\"" + fixed(cell) + "\" height=\"" + fixed(cell) +
                   "\" fill=\"" + colour(v) + "\" stroke=\"white\"/>\n";
            if (n <= 12) {
                svg += text(left + cell * (static_cast<double>(j) + 0.5), y + cell / 2 + 4,
                            fixed(v), "middle", " font-size=\"10\"");
            }
        }
    }
    // Colour bar from -1 to 1.
    const double bar_x = left + size + 30;
    for (int k = 0; k < 20; ++k) {
        const double v = 1.0 - 2.0 * (k + 0.5) / 20.0;
        svg += "<rect x=\"" + fixed(bar_x) + "\" y=\"" + fixed(top + size * k / 20.0) +
               "\" width=\"16\" height=\"" + fixed(size / 20.0) + "\" fill=\"" + colour(v) +
               "\"/>\n";
    }
    svg += text(bar_x + 22, top + 4, "1", "start");
    svg += text(bar_x + 22, top + size / 2 + 4, "0", "start");
    svg += text(bar_x + 22, top + size + 4, "-1", "start");
    if (heatmap.intra_mean && heatmap.inter_mean) {
        svg += text(kWidth / 2, kHeight - 14,
                    "intra " + fixed(*heatmap.intra_mean, 3) + "   inter " +
                        fixed(*heatmap.inter_mean, 3));
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace ctlayer::cli
