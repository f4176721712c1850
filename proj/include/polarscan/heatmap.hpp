#pragma once

#include <filesystem>

#include "polarscan/forward_model.hpp"

namespace polarscan {

// Writes a binary PPM (P6) heatmap, one pixel per cell, time running down
// and traces across. The colormap is a symmetric blue-white-red diverging
// map centered at 0 and scaled to max|value|, so negating the radargram
// swaps the red and blue channels pixel-exactly. An all-zero grid renders
// uniform white.
void render_heatmap(const Radargram& r, const std::filesystem::path& out_path);

}  // namespace polarscan
