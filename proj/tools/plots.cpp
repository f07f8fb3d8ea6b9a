#include "plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace capspace::cli::plots {

namespace {

constexpr double W = 640, H = 420, L = 60, R = 20, T = 40, B = 50;

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string open(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(W) + "\" height=\"" + f2(H) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + f2(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) + "</text>\n";
}

std::string axes(double x0, double x1, double y0, double y1, const std::string& xl, const std::string& yl) {
  std::string s;
  s += "<line x1=\"" + f2(L) + "\" y1=\"" + f2(H - B) + "\" x2=\"" + f2(W - R) + "\" y2=\"" + f2(H - B) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + f2(L) + "\" y1=\"" + f2(T) + "\" x2=\"" + f2(L) + "\" y2=\"" + f2(H - B) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = L + (W - L - R) * i / 4.0;
    const double fy = H - B - (H - T - B) * i / 4.0;
    s += "<text x=\"" + f2(fx) + "\" y=\"" + f2(H - B + 16) + "\" text-anchor=\"middle\">" +
         tick(x0 + (x1 - x0) * i / 4.0) + "</text>\n";
    s += "<text x=\"" + f2(L - 6) + "\" y=\"" + f2(fy + 4) + "\" text-anchor=\"end\">" + tick(y0 + (y1 - y0) * i / 4.0) +
         "</text>\n";
  }
  s += "<text x=\"" + f2((L + W - R) / 2) + "\" y=\"" + f2(H - 12) + "\" text-anchor=\"middle\">" + escape(xl) + "</text>\n";
  s += "<text x=\"16\" y=\"" + f2((T + H - B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       f2((T + H - B) / 2) + ")\">" + escape(yl) + "</text>\n";
  return s;
}

std::string placeholder(const std::string& title, std::string* warning) {
  if (warning) *warning = "no data for '" + title + "'; wrote an empty placeholder";
  return open(title) + "<text x=\"" + f2(W / 2) + "\" y=\"" + f2(H / 2) +
         "\" text-anchor=\"middle\" fill=\"gray\">no data</text>\n</svg>\n";
}

}  // namespace

Histogram histogram(const std::vector<double>& values, int max_bins) {
  Histogram h;
  if (values.empty()) return h;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  const int bins = hi > lo ? static_cast<int>(std::min<std::size_t>(values.size(), static_cast<std::size_t>(max_bins))) : 1;
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  for (int i = 0; i <= bins; ++i) h.edges.push_back(lo + (hi - lo) * i / bins);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

std::string histogram_svg(const std::vector<double>& values, const std::string& title, const std::string& xlabel,
                          std::string* warning) {
  if (values.empty()) return placeholder(title, warning);
  const Histogram h = histogram(values);
  const double top = static_cast<double>(*std::max_element(h.counts.begin(), h.counts.end()));
  std::string s = open(title) + axes(h.edges.front(), h.edges.back(), 0, top, xlabel, "count");
  const double bw = (W - L - R) / static_cast<double>(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double bh = (H - T - B) * static_cast<double>(h.counts[i]) / top;
    s += "<rect class=\"bar\" x=\"" + f2(L + bw * static_cast<double>(i)) + "\" y=\"" + f2(H - B - bh) + "\" width=\"" +
         f2(bw * 0.95) + "\" height=\"" + f2(bh) + "\" fill=\"#3b6ea5\"/>\n";
  }
  return s + "</svg>\n";
}

std::string heatmap_svg(const Matrix& m, const std::string& title, int max_cells, std::string* warning) {
  if (m.rows() == 0) return placeholder(title, warning);
  const Eigen::Index n = m.rows();
  const Eigen::Index cells = std::min<Eigen::Index>(n, max_cells);
  Matrix agg = Matrix::Zero(cells, cells);
  Matrix cnt = Matrix::Zero(cells, cells);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index a = i * cells / n, b = j * cells / n;
      agg(a, b) += m(i, j);
      cnt(a, b) += 1;
    }
  agg = agg.cwiseQuotient(cnt);
  const double top = agg.maxCoeff() > 0 ? agg.maxCoeff() : 1.0;
  const double side = std::min(W - L - R, H - T - B);
  const double cs = side / static_cast<double>(cells);
  std::string s = open(title);
  for (Eigen::Index a = 0; a < cells; ++a)
    for (Eigen::Index b = 0; b < cells; ++b) {
      const double v = std::clamp(agg(a, b) / top, 0.0, 1.0);
      const int r = static_cast<int>(255 - 230 * v), g = static_cast<int>(255 - 190 * v), bl = static_cast<int>(255 - 100 * v);
      char col[16];
      std::snprintf(col, sizeof col, "#%02x%02x%02x", r, g, bl);
      s += "<rect x=\"" + f2(L + cs * static_cast<double>(b)) + "\" y=\"" + f2(T + cs * static_cast<double>(a)) +
           "\" width=\"" + f2(cs + 0.05) + "\" height=\"" + f2(cs + 0.05) + "\" fill=\"" + col + "\"/>\n";
    }
  s += "<text x=\"" + f2(L + side + 10) + "\" y=\"" + f2(T + 12) + "\">max " + tick(top) + "</text>\n";
  s += "<text x=\"" + f2(L + side / 2) + "\" y=\"" + f2(T + side + 16) +
       "\" text-anchor=\"middle\">products, ascending PCI</text>\n";
  return s + "</svg>\n";
}

std::string scatter_svg(const std::vector<Point>& pts, const std::string& title, const std::string& xlabel,
                        const std::string& ylabel, std::string* warning) {
  if (pts.empty()) return placeholder(title, warning);
  double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  if (x1 <= x0) { x0 -= 0.5; x1 += 0.5; }
  if (y1 <= y0) { y0 -= 0.5; y1 += 0.5; }
  auto px = [&](double x) { return L + (W - L - R) * (x - x0) / (x1 - x0); };
  auto py = [&](double y) { return H - B - (H - T - B) * (y - y0) / (y1 - y0); };
  std::string s = open(title) + axes(x0, x1, y0, y1, xlabel, ylabel);
  for (const auto& p : pts) {
    s += "<circle cx=\"" + f2(px(p.x)) + "\" cy=\"" + f2(py(p.y)) + "\" r=\"3\" fill=\"#3b6ea5\" fill-opacity=\"0.7\"/>\n";
    if (!p.label.empty())
      s += "<text x=\"" + f2(px(p.x) + 4) + "\" y=\"" + f2(py(p.y) - 4) + "\" font-size=\"9\">" + escape(p.label) + "</text>\n";
  }
  // least-squares line
  if (pts.size() >= 2) {
    double mx = 0, my = 0;
    for (const auto& p : pts) { mx += p.x; my += p.y; }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0, sxx = 0;
    for (const auto& p : pts) { sxy += (p.x - mx) * (p.y - my); sxx += (p.x - mx) * (p.x - mx); }
    if (sxx > 0) {
      const double b = sxy / sxx, a = my - b * mx;
      s += "<line x1=\"" + f2(px(x0)) + "\" y1=\"" + f2(py(a + b * x0)) + "\" x2=\"" + f2(px(x1)) + "\" y2=\"" +
           f2(py(a + b * x1)) + "\" stroke=\"#c0392b\" stroke-dasharray=\"4 3\"/>\n";
    }
  }
  return s + "</svg>\n";
}

}  // namespace capspace::cli::plots
