// Copyright 2026 The vqid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "vqid/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vqid/error.h"

namespace vqid {

namespace {

std::string escape_xml(const std::string &s) {
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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string label_color(const std::string &label, std::size_t index) {
  static const std::map<std::string, std::string> quality = {
      {"normal", "#1f77b4"}, {"breathy", "#2ca02c"}, {"fry", "#d62728"},
      {"twang", "#ff7f0e"},  {"hyponasal", "#9467bd"}};
  auto it = quality.find(label);
  if (it != quality.end()) return it->second;
  static const char *palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[index % 10];
}

std::string render_scatter_svg(const std::vector<ScatterPoint> &points, const std::string &title,
                               const std::string &x_label, const std::string &y_label) {
  const double w = 640, h = 480, left = 60, right = 150, top = 40, bottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!points.empty()) {
    x0 = x1 = points[0].x;
    y0 = y1 = points[0].y;
    for (const auto &p : points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  double px = 0.05 * std::max(x1 - x0, 1e-9), py = 0.05 * std::max(y1 - y0, 1e-9);
  x0 -= px;
  x1 += px;
  y0 -= py;
  y1 += py;
  auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * (w - left - right); };
  auto sy = [&](double v) { return h - bottom - (v - y0) / (y1 - y0) * (h - top - bottom); };

  std::set<std::string> label_set;
  for (const auto &p : points) label_set.insert(p.label);
  std::vector<std::string> labels(label_set.begin(), label_set.end());
  std::map<std::string, std::string> color;
  for (std::size_t i = 0; i < labels.size(); ++i) color[labels[i]] = label_color(labels[i], i);

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">" << escape_xml(title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w - left - right
    << "\" height=\"" << h - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double vx = x0 + (x1 - x0) * i / 4.0, vy = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << fmt(sx(vx)) << "\" y=\"" << h - bottom + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(vx)
      << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << fmt(sy(vy) + 3)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(vy)
      << "</text>\n";
  }
  o << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
    << escape_xml(x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (top + h - bottom) / 2 << "\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (top + h - bottom) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
  for (const auto &p : points) {
    o << "<circle cx=\"" << fmt(sx(p.x)) << "\" cy=\"" << fmt(sy(p.y)) << "\" r=\"3.5\" fill=\""
      << color[p.label] << "\" fill-opacity=\"0.8\"/>\n";
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double ly = top + 10 + 18.0 * static_cast<double>(i);
    o << "<circle cx=\"" << w - right + 16 << "\" cy=\"" << ly << "\" r=\"5\" fill=\""
      << color[labels[i]] << "\"/>\n";
    o << "<text x=\"" << w - right + 26 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(labels[i])
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_pgm(const std::filesystem::path &path, const Eigen::MatrixXd &image, double lo,
               double hi) {
  if (image.rows() < 1 || image.cols() < 1) throw UsageError("cannot write an empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  std::string row(static_cast<std::size_t>(image.cols()), '\0');
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      double v = std::clamp((image(r, c) - lo) / span, 0.0, 1.0);
      row[static_cast<std::size_t>(c)] = static_cast<char>(std::lround(255.0 * v));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace vqid
