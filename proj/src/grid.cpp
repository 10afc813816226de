#include "histmap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace histmap {
namespace {

constexpr double kSnapEps = 1e-9;  // cells

void check_value(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument("raster value outside [0,1]");
  }
}

// Marks every cell touched by segment (a, b), sampling at half-cell steps.
// Endpoints are canonicalized so the traced cell set is independent of the
// segment direction.
void trace_segment(Point2 a, Point2 b, const GridSpec& spec, double value,
                   HistoryMap& out) {
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::swap(a, b);
  const double step = 0.5 * std::min(spec.cell_width(), spec.cell_height());
  const double len = distance(a, b);
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    const Point2 p = a + (b - a) * t;
    if (auto cell = spec.cell_of(p)) {
      out.at(cell->first, cell->second) = value;
    }
  }
}

void check_same_spec(const HistoryMap& a, const HistoryMap& b) {
  if (!(a.spec == b.spec)) {
    throw std::invalid_argument("history maps have mismatched grid specs");
  }
}

}  // namespace

void GridSpec::validate() const {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("GridSpec: non-positive dimensions");
  }
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw std::invalid_argument("GridSpec: degenerate extent");
  }
}

std::optional<std::pair<int, int>> GridSpec::cell_of(Point2 p) const {
  const int col = static_cast<int>(std::floor((p.x - x_min) / cell_width()));
  const int row = static_cast<int>(std::floor((p.y - y_min) / cell_height()));
  if (!contains(row, col)) return std::nullopt;
  return std::make_pair(row, col);
}

HistoryMap::HistoryMap(const GridSpec& s)
    : spec(s), cells(static_cast<std::size_t>(s.height) * s.width, 0.0) {
  s.validate();
}

std::size_t HistoryMap::count_above(double threshold) const {
  std::size_t n = 0;
  for (double v : cells) n += v > threshold;
  return n;
}

double HistoryMap::max_value() const {
  double best = 0.0;
  for (double v : cells) best = std::max(best, v);
  return best;
}

HistoryMap rasterize(const MapElement& element, const GridSpec& spec,
                     double value) {
  check_value(value);
  HistoryMap out(spec);
  const std::vector<Point2>& pts = element.vertices();
  const std::size_t n = pts.size();
  const std::size_t segments = element.is_polygon() ? n : n - 1;
  for (std::size_t i = 0; i < segments; ++i) {
    trace_segment(pts[i], pts[(i + 1) % n], spec, value, out);
  }
  return out;
}

HistoryMap rasterize_fill(const Polygon& polygon, const GridSpec& spec,
                          double value) {
  check_value(value);
  HistoryMap out(spec);
  const auto& ring = polygon.ring();
  const std::size_t n = ring.size();
  std::vector<double> crossings;
  for (int row = 0; row < spec.height; ++row) {
    const double y = spec.y_min + (row + 0.5) * spec.cell_height();
    crossings.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = ring[i];
      const Point2 b = ring[(i + 1) % n];
      // Half-open rule in y keeps vertices from double-counting.
      if ((a.y <= y && b.y > y) || (b.y <= y && a.y > y)) {
        crossings.push_back(a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      for (int col = 0; col < spec.width; ++col) {
        const double x = spec.x_min + (col + 0.5) * spec.cell_width();
        if (x >= crossings[k] && x < crossings[k + 1]) out.at(row, col) = value;
      }
    }
  }
  return out;
}

HistoryMap decay_update(const HistoryMap& previous, const HistoryMap& fresh,
                        double lambda) {
  check_same_spec(previous, fresh);
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("decay lambda outside (0,1]");
  }
  HistoryMap out(previous.spec);
  out.last_update_frame = fresh.last_update_frame;
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    out.cells[i] = std::max(lambda * previous.cells[i], fresh.cells[i]);
  }
  return out;
}

HistoryMap decay_update_additive(const HistoryMap& previous,
                                 const HistoryMap& fresh, double lambda) {
  check_same_spec(previous, fresh);
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("decay lambda outside (0,1]");
  }
  HistoryMap out(previous.spec);
  out.last_update_frame = fresh.last_update_frame;
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    out.cells[i] =
        std::clamp(lambda * previous.cells[i] + fresh.cells[i], 0.0, 1.0);
  }
  return out;
}

HistoryMap warp(const HistoryMap& map, const Pose2& pose_prev,
                const Pose2& pose_next) {
  const GridSpec& spec = map.spec;
  HistoryMap out(spec);
  out.last_update_frame = map.last_update_frame;
  // prev-frame coordinates of a point expressed in the next ego frame
  const Pose2 prev_from_next = Pose2::compose(pose_prev.inverse(), pose_next);
  const double cw = spec.cell_width();
  const double ch = spec.cell_height();

  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      const Point2 q = prev_from_next.apply(spec.cell_center(row, col));
      double u = (q.x - spec.x_min) / cw - 0.5;  // fractional column
      double v = (q.y - spec.y_min) / ch - 0.5;  // fractional row
      int c0 = static_cast<int>(std::floor(u));
      int r0 = static_cast<int>(std::floor(v));
      double fu = u - c0;
      double fv = v - r0;
      if (fu < kSnapEps) fu = 0.0;
      if (fu > 1.0 - kSnapEps) {
        ++c0;
        fu = 0.0;
      }
      if (fv < kSnapEps) fv = 0.0;
      if (fv > 1.0 - kSnapEps) {
        ++r0;
        fv = 0.0;
      }
      const auto sample = [&](int r, int c) {
        return spec.contains(r, c) ? map.at(r, c) : 0.0;
      };
      const double value =
          (1.0 - fv) * ((1.0 - fu) * sample(r0, c0) + fu * sample(r0, c0 + 1)) +
          fv * ((1.0 - fu) * sample(r0 + 1, c0) + fu * sample(r0 + 1, c0 + 1));
      out.at(row, col) = value;
    }
  }
  return out;
}

ValidMask valid_mask(const HistoryMap& map, double tau_map) {
  if (!(tau_map >= 0.0 && tau_map <= 1.0)) {
    throw std::invalid_argument("tau_map outside [0,1]");
  }
  ValidMask mask{map.spec, {}};
  for (int row = 0; row < map.spec.height; ++row) {
    for (int col = 0; col < map.spec.width; ++col) {
      if (map.at(row, col) > tau_map) mask.cells.emplace_back(row, col);
    }
  }
  return mask;
}

void write_pgm(const HistoryMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "P5\n" << map.spec.width << " " << map.spec.height << "\n255\n";
  for (double v : map.cells) {
    const int byte = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    out.put(static_cast<char>(byte));
  }

  nlohmann::json sidecar;
  sidecar["grid"] = {{"height", map.spec.height}, {"width", map.spec.width},
                     {"x_range", {map.spec.x_min, map.spec.x_max}},
                     {"y_range", {map.spec.y_min, map.spec.y_max}}};
  sidecar["last_update_frame"] = map.last_update_frame;
  std::ofstream meta(path.string() + ".json");
  meta << sidecar.dump(2) << "\n";
}

}  // namespace histmap
