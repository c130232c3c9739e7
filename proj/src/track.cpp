#include "sacmoe/track.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sacmoe {

namespace {
constexpr double kSampleSpacing = 0.25;  // m, polyline resolution for projection

// advance a pose along one piece by ds (exact arc geometry)
Track::Pose advance(const Track::Pose& p, double curvature, double ds) {
  Track::Pose out = p;
  if (std::abs(curvature) < 1e-12) {
    out.x += ds * std::cos(p.heading);
    out.y += ds * std::sin(p.heading);
  } else {
    const double r = 1.0 / curvature;
    const double dh = ds * curvature;
    out.x += r * (std::sin(p.heading + dh) - std::sin(p.heading));
    out.y += r * (std::cos(p.heading) - std::cos(p.heading + dh));
    out.heading += dh;
  }
  out.curvature = curvature;
  return out;
}
}  // namespace

Track::Track(std::vector<Piece> pieces, double half_width, int regions)
    : pieces_(std::move(pieces)), half_width_(half_width), regions_(regions) {
  if (pieces_.empty() || regions_ < 1) throw std::invalid_argument("track: empty piece list or no regions");
  build();
}

void Track::build() {
  cum_.clear();
  piece_start_.clear();
  Pose p{};  // start line at origin, heading +x
  double s = 0;
  for (const Piece& pc : pieces_) {
    cum_.push_back(s);
    piece_start_.push_back(p);
    p = advance(p, pc.curvature, pc.len);
    s += pc.len;
  }
  length_ = s;

  px_.clear();
  py_.clear();
  ps_.clear();
  const int n = static_cast<int>(std::ceil(length_ / kSampleSpacing));
  for (int i = 0; i < n; ++i) {
    const double si = length_ * i / n;
    Pose q = pose_at(si);
    px_.push_back(q.x);
    py_.push_back(q.y);
    ps_.push_back(si);
  }
  // closure vertex
  px_.push_back(px_.front());
  py_.push_back(py_.front());
  ps_.push_back(length_);
}

double Track::wrap(double s) const {
  s = std::fmod(s, length_);
  if (s < 0) s += length_;
  return s;
}

double Track::progress(double s0, double s1) const {
  double d = wrap(s1) - wrap(s0);
  if (d > length_ / 2) d -= length_;
  if (d <= -length_ / 2) d += length_;
  return d;
}

Track::Pose Track::pose_at(double s) const {
  s = wrap(s);
  size_t i = pieces_.size() - 1;
  for (size_t k = 0; k + 1 < pieces_.size(); ++k) {
    if (s < cum_[k + 1]) {
      i = k;
      break;
    }
  }
  return advance(piece_start_[i], pieces_[i].curvature, s - cum_[i]);
}

Track::Projection Track::project(double x, double y) const {
  double best_d2 = std::numeric_limits<double>::max();
  double best_s = 0;
  for (size_t i = 0; i + 1 < px_.size(); ++i) {
    const double ax = px_[i], ay = py_[i];
    const double bx = px_[i + 1], by = py_[i + 1];
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((x - ax) * dx + (y - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double cx = ax + t * dx, cy = ay + t * dy;
    const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_s = ps_[i] + t * (ps_[i + 1] - ps_[i]);
    }
  }
  Projection out;
  out.s = wrap(best_s);
  Pose p = pose_at(out.s);
  out.heading = p.heading;
  out.curvature = p.curvature;
  // signed offset: + when the point lies left of the centerline tangent
  const double nx = -std::sin(p.heading), ny = std::cos(p.heading);
  out.e_lat = (x - p.x) * nx + (y - p.y) * ny;
  return out;
}

int Track::region_of(double s) const {
  int r = static_cast<int>(wrap(s) / length_ * regions_);
  return std::min(r, regions_ - 1);
}

std::pair<double, double> Track::region_span(int r) const {
  return {length_ * r / regions_, length_ * (r + 1) / regions_};
}

Track Track::track1() {
  // oval: two 14 m straights joined by radius-6 semicircles, 6 regions
  const double r = 6.0, straight = 14.0;
  std::vector<Piece> pieces = {
      {straight, 0.0}, {M_PI * r, 1.0 / r}, {straight, 0.0}, {M_PI * r, 1.0 / r}};
  return Track(pieces, 4.0, 6);
}

Track Track::track2() {
  // longer rounded rectangle with mixed-radius corners, 8 regions; radii must
  // alternate so the loop closes
  const double r1 = 7.0, r2 = 4.5;
  std::vector<Piece> pieces = {
      {22.0, 0.0}, {M_PI / 2 * r1, 1.0 / r1}, {12.0, 0.0}, {M_PI / 2 * r2, 1.0 / r2},
      {22.0, 0.0}, {M_PI / 2 * r1, 1.0 / r1}, {12.0, 0.0}, {M_PI / 2 * r2, 1.0 / r2}};
  return Track(pieces, 4.0, 8);
}

}  // namespace sacmoe
