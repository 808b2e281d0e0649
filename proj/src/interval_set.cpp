#include "gmq/interval_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gmq {

IntervalSet IntervalSet::ball(double center, double radius) {
  if (radius <= 0.0) return IntervalSet();
  return IntervalSet(center - radius, center + radius);
}

IntervalSet IntervalSet::from_pieces(std::vector<Interval> raw) {
  IntervalSet s;
  s.assign(std::move(raw));
  return s;
}

void IntervalSet::assign(std::vector<Interval> raw) {
  pieces_.clear();
  raw.erase(std::remove_if(raw.begin(), raw.end(),
                           [](const Interval& iv) { return !(iv.hi > iv.lo); }),
            raw.end());
  std::sort(raw.begin(), raw.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const Interval& iv : raw) {
    if (!pieces_.empty() && iv.lo <= pieces_.back().hi) {
      pieces_.back().hi = std::max(pieces_.back().hi, iv.hi);
    } else {
      pieces_.push_back(iv);
    }
  }
}

double IntervalSet::total_length() const {
  double t = 0.0;
  for (const Interval& iv : pieces_) t += iv.width();
  return t;
}

double IntervalSet::diameter() const {
  if (pieces_.empty()) return 0.0;
  return pieces_.back().hi - pieces_.front().lo;
}

Interval IntervalSet::hull() const {
  if (pieces_.empty()) return {0.0, 0.0};
  return {pieces_.front().lo, pieces_.back().hi};
}

bool IntervalSet::contains(double x) const {
  for (const Interval& iv : pieces_) {
    if (x < iv.lo) return false;
    if (x <= iv.hi) return true;
  }
  return false;
}

bool IntervalSet::contains(const IntervalSet& other, double tol) const {
  for (const Interval& o : other.pieces_) {
    bool covered = false;
    for (const Interval& p : pieces_) {
      if (o.lo >= p.lo - tol && o.hi <= p.hi + tol) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

double IntervalSet::distance_to(double x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Interval& iv : pieces_) {
    if (x < iv.lo) {
      best = std::min(best, iv.lo - x);
    } else if (x > iv.hi) {
      best = std::min(best, x - iv.hi);
    } else {
      return 0.0;
    }
  }
  return best;
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
  std::vector<Interval> raw = pieces_;
  raw.insert(raw.end(), other.pieces_.begin(), other.pieces_.end());
  return from_pieces(std::move(raw));
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
  std::vector<Interval> raw;
  std::size_t i = 0, j = 0;
  while (i < pieces_.size() && j < other.pieces_.size()) {
    const Interval& a = pieces_[i];
    const Interval& b = other.pieces_[j];
    double lo = std::max(a.lo, b.lo);
    double hi = std::min(a.hi, b.hi);
    if (hi > lo) raw.push_back({lo, hi});
    if (a.hi < b.hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return from_pieces(std::move(raw));
}

IntervalSet IntervalSet::subtract(const IntervalSet& other) const {
  std::vector<Interval> raw;
  for (const Interval& a : pieces_) {
    double cursor = a.lo;
    for (const Interval& b : other.pieces_) {
      if (b.hi <= cursor) continue;
      if (b.lo >= a.hi) break;
      if (b.lo > cursor) raw.push_back({cursor, std::min(b.lo, a.hi)});
      cursor = std::max(cursor, b.hi);
      if (cursor >= a.hi) break;
    }
    if (cursor < a.hi) raw.push_back({cursor, a.hi});
  }
  return from_pieces(std::move(raw));
}

IntervalSet IntervalSet::enlarge(double t) const {
  if (t < 0.0) throw std::invalid_argument("IntervalSet::enlarge: negative t");
  std::vector<Interval> raw;
  raw.reserve(pieces_.size());
  for (const Interval& iv : pieces_) raw.push_back({iv.lo - t, iv.hi + t});
  return from_pieces(std::move(raw));
}

}  // namespace gmq
