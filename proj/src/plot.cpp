#include "gmvae/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gmvae {
namespace {

constexpr double kWidth = 640, kHeight = 480, kMargin = 50;
constexpr std::array<std::array<double, 3>, 3> kStops = {{{0x44, 0x01, 0x54},
                                                          {0x21, 0x91, 0x8c},
                                                          {0xfd, 0xe7, 0x25}}};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string hex(const std::array<std::uint8_t, 3>& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

}  // namespace

std::array<std::uint8_t, 3> ramp_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const std::size_t seg = t < 0.5 ? 0 : 1;
  const double local = seg == 0 ? t / 0.5 : (t - 0.5) / 0.5;
  std::array<std::uint8_t, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    const double v = kStops[seg][c] + local * (kStops[seg + 1][c] - kStops[seg][c]);
    out[c] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

std::string render_scatter_svg(const EmbeddingTable& table, ColorBy color_by) {
  const std::size_t n = table.size();
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1, rmin = 0, rmax = 1;
  if (n > 0) {
    xmin = xmax = table.pcs(0, 0);
    ymin = ymax = table.pcs(0, 1);
    rmin = rmax = table.re[0];
    for (std::size_t i = 0; i < n; ++i) {
      xmin = std::min(xmin, table.pcs(i, 0));
      xmax = std::max(xmax, table.pcs(i, 0));
      ymin = std::min(ymin, table.pcs(i, 1));
      ymax = std::max(ymax, table.pcs(i, 1));
      rmin = std::min(rmin, table.re[i]);
      rmax = std::max(rmax, table.re[i]);
    }
  }
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;
  const double yspan = ymax > ymin ? ymax - ymin : 1.0;
  const double rspan = rmax > rmin ? rmax - rmin : 1.0;
  auto px = [&](double x) { return kMargin + (x - xmin) / xspan * (kWidth - 2 * kMargin); };
  auto py = [&](double y) { return kHeight - kMargin - (y - ymin) / yspan * (kHeight - 2 * kMargin); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"#ffffff\"/>\n"
     << "<g stroke=\"#333333\" stroke-width=\"1\">\n"
     << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
     << "\" y2=\"" << kHeight - kMargin << "\"/>\n"
     << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
     << kHeight - kMargin << "\"/>\n"
     << "</g>\n"
     << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">pc1</text>\n"
     << "<text x=\"15\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
     << kHeight / 2 << ")\">pc2</text>\n"
     << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 15 << "\">" << fmt(xmin) << "</text>\n"
     << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 15
     << "\" text-anchor=\"end\">" << fmt(xmax) << "</text>\n"
     << "<text x=\"" << kMargin - 5 << "\" y=\"" << kHeight - kMargin << "\" text-anchor=\"end\">"
     << fmt(ymin) << "</text>\n"
     << "<text x=\"" << kMargin - 5 << "\" y=\"" << kMargin + 4 << "\" text-anchor=\"end\">"
     << fmt(ymax) << "</text>\n"
     << "</g>\n";

  os << "<g stroke=\"none\" fill-opacity=\"0.85\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string color =
        color_by == ColorBy::Cluster
            ? std::string(kClusterPalette[table.cluster[i] % kClusterPalette.size()])
            : hex(ramp_color((table.re[i] - rmin) / rspan));
    os << "<circle cx=\"" << fmt(px(table.pcs(i, 0))) << "\" cy=\"" << fmt(py(table.pcs(i, 1)))
       << "\" r=\"3\" fill=\"" << color << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace gmvae
