#include "steer/world/region.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "steer/math/qp.hpp"

namespace steer::world {

double Box::volume() const {
  const Vec3 e = extent();
  return std::max(0.0, e.x()) * std::max(0.0, e.y()) * std::max(0.0, e.z());
}

bool Box::contains(const Vec3& p, double tol) const {
  return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
}

Box Box::inflated(double margin) const { return {lo.array() - margin, hi.array() + margin}; }

ConvexRegion::ConvexRegion(std::vector<Halfspace> halfspaces) : hs_(std::move(halfspaces)) {
  for (auto& h : hs_) {
    const double n = h.normal.norm();
    if (!(n > 1e-12) || !std::isfinite(n) || !std::isfinite(h.offset)) {
      throw GeometryError("halfspace normal must be finite and nonzero");
    }
    h.normal /= n;
    h.offset /= n;
  }
}

ConvexRegion ConvexRegion::box(const Vec3& lo, const Vec3& hi) {
  std::vector<Halfspace> hs;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e(k) = 1.0;
    hs.push_back({e, hi(k)});
    hs.push_back({-e, -lo(k)});
  }
  return ConvexRegion(std::move(hs));
}

bool ConvexRegion::contains(const Vec3& p, double tol) const { return violation(p) <= tol; }

double ConvexRegion::violation(const Vec3& p) const {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& h : hs_) v = std::max(v, h.normal.dot(p) - h.offset);
  return v;
}

ConvexRegion ConvexRegion::without(std::size_t index) const {
  ConvexRegion r = *this;
  r.hs_.erase(r.hs_.begin() + static_cast<std::ptrdiff_t>(index));
  return r;
}

std::optional<Vec3> ConvexRegion::project(const Vec3& p) const {
  math::QpProblem qp;
  qp.H = Eigen::Matrix3d::Identity();
  qp.g = -p;
  qp.Ain.resize(static_cast<Eigen::Index>(hs_.size()), 3);
  qp.bin.resize(static_cast<Eigen::Index>(hs_.size()));
  for (std::size_t i = 0; i < hs_.size(); ++i) {
    qp.Ain.row(static_cast<Eigen::Index>(i)) = hs_[i].normal.transpose();
    qp.bin(static_cast<Eigen::Index>(i)) = hs_[i].offset;
  }
  auto r = math::solve_qp(std::move(qp));
  if (!r.ok()) return std::nullopt;
  return Vec3(r.x);
}

bool ConvexRegion::nonempty() const { return project(Vec3::Zero()).has_value(); }

bool ConvexRegion::bounded() const {
  if (hs_.size() < 4) return false;
  // The recession cone {d : n_i . d <= 0} is {0} iff every signed axis
  // projects onto it at the origin.
  std::vector<Halfspace> cone;
  for (const auto& h : hs_) cone.push_back({h.normal, 0.0});
  ConvexRegion k(std::move(cone));
  for (int axis = 0; axis < 3; ++axis) {
    for (double s : {1.0, -1.0}) {
      Vec3 d = Vec3::Zero();
      d(axis) = s;
      auto q = k.project(d);
      if (!q || q->norm() > 1e-9) return false;
    }
  }
  return true;
}

std::optional<Box> ConvexRegion::bounds() const {
  if (!bounded()) return std::nullopt;
  std::optional<Box> out;
  const std::size_t m = hs_.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (std::size_t k = j + 1; k < m; ++k) {
        Eigen::Matrix3d A;
        A.row(0) = hs_[i].normal.transpose();
        A.row(1) = hs_[j].normal.transpose();
        A.row(2) = hs_[k].normal.transpose();
        if (std::abs(A.determinant()) < 1e-12) continue;
        const Vec3 v = A.partialPivLu().solve(Vec3(hs_[i].offset, hs_[j].offset, hs_[k].offset));
        if (!contains(v, 1e-9)) continue;
        if (!out) {
          out = Box{v, v};
        } else {
          out->lo = out->lo.cwiseMin(v);
          out->hi = out->hi.cwiseMax(v);
        }
      }
    }
  }
  return out;
}

ConvexRegion intersection(const ConvexRegion& a, const ConvexRegion& b) {
  std::vector<Halfspace> hs = a.halfspaces();
  hs.insert(hs.end(), b.halfspaces().begin(), b.halfspaces().end());
  return ConvexRegion(std::move(hs));
}

std::optional<Vec3> intersect_nonempty(const ConvexRegion& a, const ConvexRegion& b) {
  // Reference point: a's vertex centroid when available, else the origin.
  Vec3 ref = Vec3::Zero();
  if (auto box = a.bounds()) ref = box->center();
  auto p = intersection(a, b).project(ref);
  if (!p || !a.contains(*p) || !b.contains(*p)) return std::nullopt;
  return p;
}

}  // namespace steer::world
