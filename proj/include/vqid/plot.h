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

#ifndef VQID_PLOT_H_
#define VQID_PLOT_H_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace vqid {

struct ScatterPoint {
  double x = 0.0, y = 0.0;
  std::string label;
};

// Standalone SVG scatter plot with one colour per label and a legend.
std::string render_scatter_svg(const std::vector<ScatterPoint> &points, const std::string &title,
                               const std::string &x_label, const std::string &y_label);

// Colour for a label: fixed hues for the voice qualities, a palette otherwise.
std::string label_color(const std::string &label, std::size_t index);

// Binary greyscale PGM. Values map linearly from [lo, hi] to [0, 255],
// clamped; row 0 of `image` is drawn at the top.
void write_pgm(const std::filesystem::path &path, const Eigen::MatrixXd &image, double lo,
               double hi);

void write_text_file(const std::filesystem::path &path, const std::string &text);

}  // namespace vqid

#endif  // VQID_PLOT_H_
