#pragma once

#include <string>

#include <Eigen/Dense>

#include "pprviz/visualize.hpp"

namespace pprviz {

/// Circles with radius proportional to sqrt(leaf count) and straight
/// super-edges; arrowheads only on edges without a reverse partner.
std::string layout_to_svg(const VisualizationResponse& r, int size_px = 800);

/// "id,label,leaf_count,x,y" rows.
std::string layout_to_csv(const VisualizationResponse& r);

/// Row-major, 17 significant digits.
std::string matrix_to_csv(const Eigen::MatrixXd& m);

}  // namespace pprviz
