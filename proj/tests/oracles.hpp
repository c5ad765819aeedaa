#pragma once
// Brute-force reference implementations shared by the unit tests and the
// acceptance binary. Deliberately naive; none of them call into the
// library code they are compared against.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

namespace oracle {

// Unrestricted Damerau-Levenshtein by the full recurrence: the transposition
// branch scans every earlier (k, l) pair with a[k] == b[j] and a[i] == b[l].
inline std::size_t damerau_levenshtein(std::string_view a, std::string_view b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t best = std::min(d[i - 1][j] + 1, d[i][j - 1] + 1);
      best = std::min(best, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1));
      for (std::size_t k = 1; k < i; ++k) {
        if (a[k - 1] != b[j - 1]) continue;
        for (std::size_t l = 1; l < j; ++l) {
          if (a[i - 1] != b[l - 1]) continue;
          best = std::min(best, d[k - 1][l - 1] + (i - k - 1) + 1 + (j - l - 1));
        }
      }
      d[i][j] = best;
    }
  }
  return d[n][m];
}

// Every contiguous window of length >= k+1, mean recomputed from scratch.
inline bool windowed_window_mean(const std::vector<double>& s, std::size_t k, double eps) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + k; j < s.size(); ++j) {
      double sum = 0.0;
      for (std::size_t q = i; q <= j; ++q) sum += s[q];
      if (sum / static_cast<double>(j - i + 1) > eps) return true;
    }
  }
  return false;
}

// Every window of exactly k+1 values, each checked.
inline bool windowed_consecutive(const std::vector<double>& s, std::size_t k, double eps) {
  for (std::size_t i = 0; i + k < s.size(); ++i) {
    bool all = true;
    for (std::size_t q = i; q <= i + k; ++q) all = all && s[q] > eps;
    if (all) return true;
  }
  return false;
}

struct P {
  double x = 0.0;
  double y = 0.0;
};

// Rectangle as centre, heading, half extents.
struct Rect {
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;
  double hl = 1.0;
  double hw = 1.0;

  bool contains(P p, double slack = 0.0) const {
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    const double dx = p.x - cx;
    const double dy = p.y - cy;
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    return std::abs(u) <= hl + slack && std::abs(v) <= hw + slack;
  }

  std::array<P, 4> corners() const {
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    std::array<P, 4> out;
    const int su[4] = {1, -1, -1, 1};
    const int sv[4] = {1, 1, -1, -1};
    for (int i = 0; i < 4; ++i) {
      const double u = su[i] * hl;
      const double v = sv[i] * hw;
      out[i] = {cx + u * c - v * s, cy + u * s + v * c};
    }
    return out;
  }

  Rect moved(double dx, double dy) const {
    Rect r = *this;
    r.cx += dx;
    r.cy += dy;
    return r;
  }
};

// Overlap by rasterizing the bounding box of `a` at `res` metres.
inline bool raster_overlap(const Rect& a, const Rect& b, double res) {
  const auto ca = a.corners();
  double x0 = ca[0].x, x1 = ca[0].x, y0 = ca[0].y, y1 = ca[0].y;
  for (const auto& p : ca) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  for (double x = x0; x <= x1; x += res) {
    for (double y = y0; y <= y1; y += res) {
      if (a.contains({x, y}, 1e-12) && b.contains({x, y}, 1e-12)) return true;
    }
  }
  return false;
}

inline double seg_dist(P p, P a, P b) {
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  const double len2 = ex * ex + ey * ey;
  double t = len2 > 0 ? ((p.x - a.x) * ex + (p.y - a.y) * ey) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * ex), p.y - (a.y + t * ey));
}

// Gap between disjoint rectangles from `samples` boundary points of each,
// measured to the other's edges.
inline double sampled_gap(const Rect& a, const Rect& b, int samples) {
  double best = std::numeric_limits<double>::infinity();
  auto sweep = [&](const Rect& from, const Rect& to) {
    const auto cf = from.corners();
    const auto ct = to.corners();
    const int per_edge = samples / 4;
    for (int e = 0; e < 4; ++e) {
      const P a0 = cf[e];
      const P a1 = cf[(e + 1) % 4];
      for (int q = 0; q <= per_edge; ++q) {
        const double f = static_cast<double>(q) / per_edge;
        const P p{a0.x + f * (a1.x - a0.x), a0.y + f * (a1.y - a0.y)};
        for (int g = 0; g < 4; ++g) best = std::min(best, seg_dist(p, ct[g], ct[(g + 1) % 4]));
      }
    }
  };
  sweep(a, b);
  sweep(b, a);
  return best;
}

inline double orient(P a, P b, P c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

inline bool segments_cross(P p1, P p2, P q1, P q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// Convex overlap: a corner inside the other rectangle or crossing edges.
inline bool rects_overlap(const Rect& a, const Rect& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  for (const auto& p : ca) if (b.contains(p, 1e-12)) return true;
  for (const auto& p : cb) if (a.contains(p, 1e-12)) return true;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (segments_cross(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4])) return true;
    }
  }
  return false;
}

// First time (s) the rectangles overlap when translated at constant
// velocity, stepping `dt`; `cap` when they never do.
inline double stepped_ttc(const Rect& a, P va, const Rect& b, P vb, double dt, double cap) {
  const auto steps = static_cast<long>(std::llround(cap / dt));
  for (long m = 1; m <= steps; ++m) {
    const double t = static_cast<double>(m) * dt;
    if (rects_overlap(a.moved(va.x * t, va.y * t), b.moved(vb.x * t, vb.y * t))) return t;
  }
  return cap;
}

}  // namespace oracle
