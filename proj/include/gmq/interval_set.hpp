#pragma once

#include <vector>

namespace gmq {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// Canonical finite union of closed intervals: sorted ascending, pairwise
// disjoint, touching pieces merged, zero-width pieces dropped. This is the
// region algebra all the D/F/G set constructions resolve into. Subtraction
// keeps closed remainders (the removed boundary points carry no mass under
// the piecewise-uniform cell model).
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(Interval iv) { assign({iv}); }
  IntervalSet(double lo, double hi) { assign({{lo, hi}}); }

  static IntervalSet ball(double center, double radius);
  static IntervalSet from_pieces(std::vector<Interval> raw);

  const std::vector<Interval>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }
  std::size_t size() const { return pieces_.size(); }

  double total_length() const;
  // Diameter of the set: hull width (sup - inf). 0 for the empty set.
  double diameter() const;
  Interval hull() const;
  bool contains(double x) const;
  // True if every piece of `other` lies inside a piece of *this, allowing
  // `tol` slack at piece boundaries.
  bool contains(const IntervalSet& other, double tol = 0.0) const;
  double distance_to(double x) const;  // 0 when x is inside

  IntervalSet unite(const IntervalSet& other) const;
  IntervalSet intersect(const IntervalSet& other) const;
  IntervalSet subtract(const IntervalSet& other) const;
  // Closed t-neighborhood (A)_t, t >= 0.
  IntervalSet enlarge(double t) const;

 private:
  std::vector<Interval> pieces_;
  void assign(std::vector<Interval> raw);
};

}  // namespace gmq
