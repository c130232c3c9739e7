#pragma once

#include <utility>
#include <vector>

namespace sacmoe {

// Closed racing circuit: a centerline built from straight and circular-arc
// pieces, a constant half-width, and a partition into mode regions at fixed
// arc-length fractions. Arc length s runs in [0, length()) from the start
// line, counter-clockwise.
class Track {
 public:
  struct Piece {
    double len = 0;
    double curvature = 0;  // 1/radius, 0 for straights, + = left turn
  };

  struct Pose {
    double x = 0, y = 0;
    double heading = 0;
    double curvature = 0;
  };

  struct Projection {
    double s = 0;          // arc length of nearest centerline point
    double e_lat = 0;      // signed lateral offset, + = left of centerline
    double heading = 0;    // centerline heading at s
    double curvature = 0;  // centerline curvature at s
  };

  Track(std::vector<Piece> pieces, double half_width, int regions);

  // Shipped layouts. Track 1 is the training circuit; Track 2 is a longer,
  // out-of-distribution layout.
  static Track track1();
  static Track track2();

  double length() const { return length_; }
  double half_width() const { return half_width_; }
  int region_count() const { return regions_; }

  Pose pose_at(double s) const;
  Projection project(double x, double y) const;

  double wrap(double s) const;  // into [0, L)
  // signed progress from s0 to s1, shortest way around, in (-L/2, L/2]
  double progress(double s0, double s1) const;

  int region_of(double s) const;
  std::pair<double, double> region_span(int r) const;  // [s0, s1)

 private:
  std::vector<Piece> pieces_;
  std::vector<double> cum_;  // cumulative piece start arc-lengths
  std::vector<Pose> piece_start_;
  double length_ = 0;
  double half_width_ = 0;
  int regions_ = 0;

  // dense polyline for projection
  std::vector<double> px_, py_, ps_;

  void build();
};

}  // namespace sacmoe
