#include "polarscan/heatmap.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include "polarscan/errors.hpp"

namespace polarscan {

void render_heatmap(const Radargram& r, const std::filesystem::path& out_path) {
  double peak = 0.0;
  for (double v : r.values) {
    if (!std::isfinite(v)) throw ShapeError("render_heatmap: non-finite value");
    peak = std::max(peak, std::fabs(v));
  }

  const int width = r.n_traces;
  const int height = r.n_time;
  std::vector<unsigned char> pix(static_cast<size_t>(width) * height * 3);
  for (int t = 0; t < height; ++t) {
    for (int i = 0; i < width; ++i) {
      const double v = peak > 0.0 ? r.at(i, t) / peak : 0.0;  // [-1, 1]
      const double m = 1.0 - std::fabs(v);
      // v > 0 fades white -> red, v < 0 fades white -> blue; the two arms
      // mirror exactly so sign flips swap the channels.
      const double red = v >= 0.0 ? 1.0 : m;
      const double green = m;
      const double blue = v <= 0.0 ? 1.0 : m;
      const size_t o = (static_cast<size_t>(t) * width + i) * 3;
      pix[o + 0] = static_cast<unsigned char>(std::lround(255.0 * red));
      pix[o + 1] = static_cast<unsigned char>(std::lround(255.0 * green));
      pix[o + 2] = static_cast<unsigned char>(std::lround(255.0 * blue));
    }
  }

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path.string());
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pix.data()),
            static_cast<std::streamsize>(pix.size()));
  if (!out) throw IoError("short write: " + out_path.string());
}

}  // namespace polarscan
