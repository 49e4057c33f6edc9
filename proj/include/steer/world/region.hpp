#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <vector>

namespace steer::world {

using Vec3 = Eigen::Vector3d;

inline constexpr double kMembershipTol = 1e-9;

// {p : normal . p <= offset}, normal of unit length.
struct Halfspace {
  Vec3 normal;
  double offset = 0;
};

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double volume() const;
  bool contains(const Vec3& p, double tol = kMembershipTol) const;
  Box inflated(double margin) const;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvexRegion {
 public:
  ConvexRegion() = default;
  // Normals are rescaled to unit length (offsets with them); a zero normal
  // throws GeometryError.
  explicit ConvexRegion(std::vector<Halfspace> halfspaces);
  static ConvexRegion box(const Vec3& lo, const Vec3& hi);
  static ConvexRegion box(const Box& b) { return box(b.lo, b.hi); }

  const std::vector<Halfspace>& halfspaces() const { return hs_; }
  bool empty_description() const { return hs_.empty(); }

  bool contains(const Vec3& p, double tol = kMembershipTol) const;
  // max_i (n_i . p - b_i); <= 0 inside.
  double violation(const Vec3& p) const;

  ConvexRegion without(std::size_t index) const;

  // Axis-aligned bounds from the region's vertices; empty when the region
  // is empty or unbounded.
  std::optional<Box> bounds() const;
  bool bounded() const;
  bool nonempty() const;

  // Euclidean projection of p onto the region; empty when the region is empty.
  std::optional<Vec3> project(const Vec3& p) const;

 private:
  std::vector<Halfspace> hs_;
};

// Intersection of the two halfspace lists.
ConvexRegion intersection(const ConvexRegion& a, const ConvexRegion& b);

// A point of a and b (projection of a's reference point onto the
// intersection, verified against both membership tests), or empty.
std::optional<Vec3> intersect_nonempty(const ConvexRegion& a, const ConvexRegion& b);

}  // namespace steer::world
