#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ldsim/app/commands.hpp"

namespace ldsim::app {
namespace {

constexpr double kPanelW = 260, kPanelH = 300, kMargin = 40, kHalfWidth = 28;
constexpr int kGrid = 64;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Gaussian KDE on [lo, hi] with Silverman's bandwidth, normalized to peak 1.
std::vector<double> density(const std::vector<double>& v, double lo, double hi) {
  std::vector<double> d(kGrid, 0.0);
  if (v.empty()) return d;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / std::max(1.0, n - 1));
  const double h = std::max(1.06 * sd * std::pow(n, -0.2), 1e-3 * (hi - lo) + 1e-9);
  for (int g = 0; g < kGrid; ++g) {
    const double y = lo + (hi - lo) * g / (kGrid - 1);
    for (double x : v) d[g] += std::exp(-0.5 * (y - x) * (y - x) / (h * h));
  }
  const double peak = *std::max_element(d.begin(), d.end());
  if (peak > 0)
    for (double& x : d) x /= peak;
  return d;
}

}  // namespace

std::string violin_svg(const std::vector<std::string>& methods,
                       const std::vector<std::string>& metrics,
                       const std::vector<std::vector<std::vector<double>>>& values) {
  static const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"};
  const double width = kPanelW * static_cast<double>(metrics.size());
  const double height = kPanelH + 2 * kMargin;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
    << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    double lo = 1e300, hi = -1e300;
    for (const auto& v : values[m])
      for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    if (!(hi > lo)) {
      lo -= 0.05;
      hi += 0.05;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double x0 = kPanelW * static_cast<double>(m);
    auto ypix = [&](double y) { return kMargin + kPanelH * (1.0 - (y - lo) / (hi - lo)); };
    s << "<g>\n<text x=\"" << fmt(x0 + kPanelW / 2) << "\" y=\"" << fmt(kMargin / 2)
      << "\" text-anchor=\"middle\">" << escape(metrics[m]) << "</text>\n";
    s << "<line x1=\"" << fmt(x0 + kMargin) << "\" y1=\"" << fmt(kMargin) << "\" x2=\""
      << fmt(x0 + kMargin) << "\" y2=\"" << fmt(kMargin + kPanelH) << "\" stroke=\"#333\"/>\n";
    for (double t : {lo + pad, (lo + hi) / 2, hi - pad})
      s << "<text x=\"" << fmt(x0 + kMargin - 4) << "\" y=\"" << fmt(ypix(t) + 4)
        << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    const double slot = (kPanelW - kMargin - 10) / static_cast<double>(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto& v = values[m][k];
      const double cx = x0 + kMargin + slot * (static_cast<double>(k) + 0.5);
      const std::vector<double> d = density(v, lo, hi);
      s << "<polygon fill=\"" << kColors[k % 5] << "\" fill-opacity=\"0.6\" stroke=\""
        << kColors[k % 5] << "\" points=\"";
      for (int g = 0; g < kGrid; ++g)
        s << fmt(cx + kHalfWidth * d[g]) << ',' << fmt(ypix(lo + (hi - lo) * g / (kGrid - 1)))
          << ' ';
      for (int g = kGrid - 1; g >= 0; --g)
        s << fmt(cx - kHalfWidth * d[g]) << ',' << fmt(ypix(lo + (hi - lo) * g / (kGrid - 1)))
          << (g ? " " : "");
      s << "\"/>\n";
      if (!v.empty()) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        s << "<line x1=\"" << fmt(cx - kHalfWidth) << "\" y1=\"" << fmt(ypix(mean)) << "\" x2=\""
          << fmt(cx + kHalfWidth) << "\" y2=\"" << fmt(ypix(mean))
          << "\" stroke=\"#000\" stroke-width=\"1.5\"/>\n";
      }
      s << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(kMargin + kPanelH + 16)
        << "\" text-anchor=\"middle\">" << escape(methods[k]) << "</text>\n";
    }
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace ldsim::app
