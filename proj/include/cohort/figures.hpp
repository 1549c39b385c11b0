#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cohort/common.hpp"
#include "cohort/stats.hpp"

namespace cohort::fig {

inline std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// --- tiny raster canvas + PNG encoder ---------------------------------------

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
};

class Canvas {
 public:
  Canvas(int width, int height, Rgb bg = {255, 255, 255})
      : width_(width), height_(height), pixels_(size_t(width) * height, bg) {}

  int width() const { return width_; }
  int height() const { return height_; }

  void set(int x, int y, Rgb c) {
    if (x >= 0 && x < width_ && y >= 0 && y < height_) pixels_[size_t(y) * width_ + x] = c;
  }

  void fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y, c);
  }

  void line(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      for (int ox = -thickness / 2; ox <= thickness / 2; ++ox)
        for (int oy = -thickness / 2; oy <= thickness / 2; ++oy) set(x0 + ox, y0 + oy, c);
      if (x0 == x1 && y0 == y1) break;
      int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }

  // filled area between a polyline and the baseline, one column at a time
  void fill_under(const std::vector<std::pair<int, int>>& pts, int baseline_y, Rgb c) {
    for (size_t i = 1; i < pts.size(); ++i) {
      auto [xa, ya] = pts[i - 1];
      auto [xb, yb] = pts[i];
      if (xb == xa) continue;
      for (int x = std::min(xa, xb); x <= std::max(xa, xb); ++x) {
        double t = double(x - xa) / double(xb - xa);
        int y = int(std::lround(ya + t * (yb - ya)));
        for (int yy = y; yy <= baseline_y; ++yy) set(x, yy, c);
      }
    }
  }

  void write_png(const std::string& path) const {
    // filter byte 0 per scanline, RGB8
    std::vector<uint8_t> raw;
    raw.reserve(size_t(height_) * (1 + size_t(width_) * 3));
    for (int y = 0; y < height_; ++y) {
      raw.push_back(0);
      for (int x = 0; x < width_; ++x) {
        const Rgb& p = pixels_[size_t(y) * width_ + x];
        raw.push_back(p.r);
        raw.push_back(p.g);
        raw.push_back(p.b);
      }
    }
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 9) != Z_OK)
      throw Error(errc::io_error, "png compression failed");
    compressed.resize(bound);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::io_error, "cannot write " + path);
    auto be32 = [](uint32_t v) {
      return std::string{char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    };
    auto chunk = [&](const char* type, const std::string& data) {
      out << be32(uint32_t(data.size())) << type << data;
      std::string crc_input = std::string(type) + data;
      uint32_t crc = uint32_t(
          crc32(0, reinterpret_cast<const Bytef*>(crc_input.data()), uInt(crc_input.size())));
      out << be32(crc);
    };
    out << "\x89PNG\r\n\x1a\n";
    std::string ihdr = be32(uint32_t(width_)) + be32(uint32_t(height_));
    ihdr += std::string{8, 2, 0, 0, 0};  // bit depth 8, colour type RGB
    chunk("IHDR", ihdr);
    chunk("IDAT", std::string(compressed.begin(), compressed.end()));
    chunk("IEND", "");
  }

 private:
  int width_, height_;
  std::vector<Rgb> pixels_;
};

// --- SVG helpers -------------------------------------------------------------

class Svg {
 public:
  Svg(int width, int height) : width_(width), height_(height) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
             "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
             std::to_string(width) + " " + std::to_string(height) + "\">\n";
    body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  void line(double x0, double y0, double x1, double y1, const std::string& color,
            double width = 1.0, const std::string& dash = "") {
    body_ += "<line x1=\"" + fmt(x0, 2) + "\" y1=\"" + fmt(y0, 2) + "\" x2=\"" + fmt(x1, 2) +
             "\" y2=\"" + fmt(y1, 2) + "\" stroke=\"" + color + "\" stroke-width=\"" +
             fmt(width, 2) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += "/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double width = 2.0) {
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt(width, 2) +
             "\" points=\"";
    for (const auto& [x, y] : pts) body_ += fmt(x, 2) + "," + fmt(y, 2) + " ";
    body_ += "\"/>\n";
  }

  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill,
               double opacity = 1.0) {
    body_ += "<polygon fill=\"" + fill + "\" fill-opacity=\"" + fmt(opacity, 2) + "\" points=\"";
    for (const auto& [x, y] : pts) body_ += fmt(x, 2) + "," + fmt(y, 2) + " ";
    body_ += "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 12,
            const std::string& anchor = "start") {
    body_ += "<text x=\"" + fmt(x, 2) + "\" y=\"" + fmt(y, 2) + "\" font-family=\"sans-serif\"" +
             " font-size=\"" + std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + s +
             "</text>\n";
  }

  void write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::io_error, "cannot write " + path);
    out << body_ << "</svg>\n";
  }

 private:
  int width_, height_;
  std::string body_;
};

// --- the two report figures ---------------------------------------------------

struct DecadePoint {
  std::string decade_label;
  double missing_pct = 0.0;  // fraction in [0,1]
};

// Area chart of missing-school share by entry decade, written as .svg and
// .png with a .csv data sidecar. Throws on empty input.
inline void emit_decade_figure(const std::vector<DecadePoint>& points, const std::string& stem) {
  if (points.empty()) throw Error(errc::io_error, "no decade data to plot");
  const int W = 720, H = 480, ml = 70, mr = 30, mt = 40, mb = 60;
  const double px = ml, pw = W - ml - mr, py = mt, ph = H - mt - mb;
  auto xpos = [&](size_t i) {
    return points.size() == 1 ? px + pw / 2 : px + pw * double(i) / double(points.size() - 1);
  };
  auto ypos = [&](double frac) { return py + ph * (1.0 - frac); };

  Svg svg(W, H);
  svg.text(W / 2.0, 24, "Share of records with missing school type, by entry decade", 14, "middle");
  for (int g = 0; g <= 4; ++g) {
    double frac = g / 4.0;
    svg.line(px, ypos(frac), px + pw, ypos(frac), "#dddddd", 1);
    svg.text(px - 8, ypos(frac) + 4, fmt(frac * 100, 0) + "%", 11, "end");
  }
  std::vector<std::pair<double, double>> poly;
  poly.emplace_back(xpos(0), ypos(0));
  for (size_t i = 0; i < points.size(); ++i) poly.emplace_back(xpos(i), ypos(points[i].missing_pct));
  poly.emplace_back(xpos(points.size() - 1), ypos(0));
  svg.polygon(poly, "#4477aa", 0.35);
  std::vector<std::pair<double, double>> lin(poly.begin() + 1, poly.end() - 1);
  svg.polyline(lin, "#225588", 2.5);
  for (size_t i = 0; i < points.size(); ++i) {
    svg.text(xpos(i), py + ph + 18, points[i].decade_label, 11, "middle");
    svg.text(xpos(i), ypos(points[i].missing_pct) - 8, fmt(points[i].missing_pct * 100, 1) + "%",
             10, "middle");
  }
  svg.line(px, py + ph, px + pw, py + ph, "#333333", 1.5);
  svg.line(px, py, px, py + ph, "#333333", 1.5);
  svg.write(stem + ".svg");

  Canvas canvas(W, H);
  std::vector<std::pair<int, int>> ipts;
  for (size_t i = 0; i < points.size(); ++i)
    ipts.emplace_back(int(xpos(i)), int(ypos(points[i].missing_pct)));
  canvas.fill_under(ipts, int(py + ph), {170, 198, 224});
  for (size_t i = 1; i < ipts.size(); ++i)
    canvas.line(ipts[i - 1].first, ipts[i - 1].second, ipts[i].first, ipts[i].second, {34, 85, 136}, 3);
  canvas.line(int(px), int(py + ph), int(px + pw), int(py + ph), {51, 51, 51}, 2);
  canvas.line(int(px), int(py), int(px), int(py + ph), {51, 51, 51}, 2);
  canvas.write_png(stem + ".png");

  std::ofstream csv(stem + ".csv", std::ios::binary);
  if (!csv) throw Error(errc::io_error, "cannot write " + stem + ".csv");
  csv << "decade,missing_pct\n";
  for (const auto& p : points) csv << p.decade_label << "," << fmt(p.missing_pct, 6) << "\n";
}

// ROC curve with the AUC annotated, same three outputs.
inline void emit_roc_figure(const stats::RocCurve& roc, const std::string& stem) {
  if (roc.points.empty()) throw Error(errc::io_error, "no roc data to plot");
  const int W = 520, H = 520, m = 60;
  const double pw = W - 2 * m, ph = H - 2 * m;
  auto X = [&](double fpr) { return m + pw * fpr; };
  auto Y = [&](double tpr) { return m + ph * (1.0 - tpr); };

  Svg svg(W, H);
  svg.text(W / 2.0, 24, "ROC curve", 14, "middle");
  svg.line(X(0), Y(0), X(1), Y(1), "#999999", 1, "6,4");  // chance diagonal
  std::vector<std::pair<double, double>> pts;
  for (const auto& [fpr, tpr] : roc.points) pts.emplace_back(X(fpr), Y(tpr));
  svg.polyline(pts, "#bb4433", 2.5);
  svg.line(X(0), Y(0), X(1), Y(0), "#333333", 1.5);
  svg.line(X(0), Y(0), X(0), Y(1), "#333333", 1.5);
  svg.text(W / 2.0, H - 16, "false positive rate", 12, "middle");
  svg.text(X(0.55), Y(0.12), "AUC = " + fmt(roc.auc, 4), 13);
  for (int g = 0; g <= 4; ++g) {
    double f = g / 4.0;
    svg.text(X(f), Y(0) + 18, fmt(f, 2), 10, "middle");
    svg.text(X(0) - 6, Y(f) + 4, fmt(f, 2), 10, "end");
  }
  svg.write(stem + ".svg");

  Canvas canvas(W, H);
  canvas.line(int(X(0)), int(Y(0)), int(X(1)), int(Y(1)), {153, 153, 153}, 1);
  for (size_t i = 1; i < roc.points.size(); ++i)
    canvas.line(int(X(roc.points[i - 1].first)), int(Y(roc.points[i - 1].second)),
                int(X(roc.points[i].first)), int(Y(roc.points[i].second)), {187, 68, 51}, 3);
  canvas.line(int(X(0)), int(Y(0)), int(X(1)), int(Y(0)), {51, 51, 51}, 2);
  canvas.line(int(X(0)), int(Y(0)), int(X(0)), int(Y(1)), {51, 51, 51}, 2);
  canvas.write_png(stem + ".png");

  std::ofstream csv(stem + ".csv", std::ios::binary);
  if (!csv) throw Error(errc::io_error, "cannot write " + stem + ".csv");
  csv << "false_positive_rate,true_positive_rate\n";
  for (const auto& [fpr, tpr] : roc.points) csv << fmt(fpr, 8) << "," << fmt(tpr, 8) << "\n";
  csv << "# auc," << fmt(roc.auc, 8) << "\n";
}

}  // namespace cohort::fig
