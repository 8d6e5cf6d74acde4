#pragma once

#include "ctlayer/fingerprint.hpp"

#include <span>
#include <string>

namespace ctlayer::cli {

// Fixed 640x480 viewBox plots.
std::string curve_svg(const std::string& title, std::span<const double> scores);
std::string heatmap_svg(const Heatmap& heatmap);

}  // namespace ctlayer::cli
