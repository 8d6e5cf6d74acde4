#pragma once

#include "ctlayer/ct_core.hpp"

#include <string>
#include <string_view>

namespace ctlayer {

// Shortest decimal text that round-trips the double.
std::string format_number(double value);

// "layer,ct" header followed by one row per layer.
std::string curve_to_csv(const CtCurve& curve);
// {"label": ..., "scores": [...]}
std::string curve_to_json(const CtCurve& curve);
// {"label", "config", "per_layer": [{"layer", "ct", "cells": [...]}]}
std::string diagnostics_to_json(const CtCurveResult& result, const CtConfig& config);

CtCurve parse_curve_json(std::string_view text);
CtCurve parse_curve_csv(std::string_view text);
// Chooses the parser by extension (.json or .csv).
CtCurve load_curve(const std::string& path);

std::string read_text_file(const std::string& path);
// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace ctlayer
