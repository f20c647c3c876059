#include "pprviz/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace pprviz {

namespace {

std::string num(double v, int digits = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string layout_to_svg(const VisualizationResponse& r, int size_px) {
  const double margin = 0.1 * size_px;
  const double half = (size_px - 2 * margin) / 2;
  auto px = [&](double v) { return size_px / 2.0 + v * half; };

  std::uint64_t max_leaves = 1;
  for (const auto& c : r.children) max_leaves = std::max(max_leaves, c.leaf_count);
  const double max_radius = 0.4 * margin;
  auto radius = [&](std::uint64_t leaves) {
    return std::max(2.0, max_radius * std::sqrt(static_cast<double>(leaves) / static_cast<double>(max_leaves)));
  };

  std::map<SupernodeId, std::size_t> row;
  for (std::size_t i = 0; i < r.children.size(); ++i) row[r.children[i].id] = i;
  const std::set<std::pair<SupernodeId, SupernodeId>> present(r.super_edges.begin(), r.super_edges.end());

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_px << "\" height=\"" << size_px
     << "\" viewBox=\"0 0 " << size_px << ' ' << size_px << "\">\n";
  os << "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" "
        "markerHeight=\"6\" orient=\"auto-start-reverse\"><path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"#555\"/>"
        "</marker></defs>\n";
  os << "<g stroke=\"#555\" stroke-width=\"1\">\n";
  for (const auto& [a, b] : r.super_edges) {
    const bool mutual = present.count({b, a}) > 0;
    if (mutual && b < a) continue;  // drawn once
    const auto i = static_cast<Eigen::Index>(row.at(a));
    const auto j = static_cast<Eigen::Index>(row.at(b));
    double x1 = px(r.coords(i, 0)), y1 = px(r.coords(i, 1));
    double x2 = px(r.coords(j, 0)), y2 = px(r.coords(j, 1));
    const double len = std::hypot(x2 - x1, y2 - y1);
    if (len > 0) {
      // stop at the circle boundaries so the arrowhead stays visible
      const double ra = radius(r.children[row.at(a)].leaf_count) / len;
      const double rb = radius(r.children[row.at(b)].leaf_count) / len;
      const double dx = x2 - x1, dy = y2 - y1;
      x1 += dx * ra;
      y1 += dy * ra;
      x2 -= dx * rb;
      y2 -= dy * rb;
    }
    os << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2) << '"'
       << (mutual ? "" : " marker-end=\"url(#arrow)\"") << "/>\n";
  }
  os << "</g>\n<g fill=\"#4a7fb5\" stroke=\"#1d3f63\">\n";
  for (std::size_t i = 0; i < r.children.size(); ++i) {
    const auto& c = r.children[i];
    const auto ii = static_cast<Eigen::Index>(i);
    os << "<circle cx=\"" << num(px(r.coords(ii, 0))) << "\" cy=\"" << num(px(r.coords(ii, 1))) << "\" r=\""
       << num(radius(c.leaf_count)) << "\"><title>" << escape_xml(c.label) << " (" << c.leaf_count
       << " leaves)</title></circle>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string layout_to_csv(const VisualizationResponse& r) {
  std::ostringstream os;
  os << "id,label,leaf_count,x,y\n";
  for (std::size_t i = 0; i < r.children.size(); ++i) {
    const auto& c = r.children[i];
    const auto ii = static_cast<Eigen::Index>(i);
    os << c.id << ',' << c.label << ',' << c.leaf_count << ',' << num(r.coords(ii, 0), 17) << ','
       << num(r.coords(ii, 1), 17) << '\n';
  }
  return os.str();
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << num(m(i, j), 17);
    os << '\n';
  }
  return os.str();
}

}  // namespace pprviz
