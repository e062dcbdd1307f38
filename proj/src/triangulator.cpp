#include "channel_eq/detail/triangulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <unordered_map>
#include <utility>

#include "channel_eq/errors.hpp"

namespace channel_eq::detail {
namespace {

double orient_raw(Vec2 a, Vec2 b, Vec2 c) {
  const long double v = ((long double)b.x - a.x) * ((long double)c.y - a.y) -
                        ((long double)b.y - a.y) * ((long double)c.x - a.x);
  return static_cast<double>(v);
}

// Exactly antisymmetric in (a, b), so walks cannot cycle on a shared edge.
double orient(Vec2 a, Vec2 b, Vec2 c) {
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) return -orient_raw(b, a, c);
  return orient_raw(a, b, c);
}

// Positive when d lies strictly inside the circumcircle of counterclockwise (a, b, c).
long double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const long double adx = (long double)a.x - d.x, ady = (long double)a.y - d.y;
  const long double bdx = (long double)b.x - d.x, bdy = (long double)b.y - d.y;
  const long double cdx = (long double)c.x - d.x, cdy = (long double)c.y - d.y;
  const long double alift = adx * adx + ady * ady;
  const long double blift = bdx * bdx + bdy * bdy;
  const long double clift = cdx * cdx + cdy * cdy;
  return alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) +
         clift * (adx * bdy - ady * bdx);
}

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return {a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

int key_lo(std::uint64_t k) { return static_cast<int>(k >> 32); }
int key_hi(std::uint64_t k) { return static_cast<int>(k & 0xffffffffu); }

constexpr std::uint64_t kNoSegment = std::numeric_limits<std::uint64_t>::max();

class Refiner {
 public:
  Refiner(const Pslg& input, const RefineOptions& options) : input_(input), opt_(options) {}

  Triangulation run() {
    make_super_triangle();
    const int base = 3;
    for (const Vec2& p : input_.points) insert_unconstrained(p);
    std::vector<std::uint64_t> pending;
    std::unordered_map<std::uint64_t, int> pending_tag;
    for (const auto& s : input_.segments) {
      const auto k = edge_key(s.a + base, s.b + base);
      pending.push_back(k);
      pending_tag[k] = s.tag;
    }
    recover_segments(pending, pending_tag);
    prune_exterior();
    index_twins();
    refine();
    return extract();
  }

 private:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> n{-1, -1, -1};
    bool alive = false;
  };

  struct CavityEdge {
    int a, b, outside, owner;
  };

  const Pslg& input_;
  const RefineOptions& opt_;
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::vector<int> vtri_;
  std::unordered_map<std::uint64_t, int> segs_;
  std::deque<std::uint64_t> seg_queue_;
  std::deque<std::pair<int, std::array<int, 3>>> tri_queue_;
  std::vector<unsigned> mark_;
  unsigned stamp_ = 0;
  int last_ = 0;
  bool refining_ = false;
  std::vector<int> cavity_;
  std::vector<CavityEdge> rim_;

  Vec2 P(int i) const { return pts_[i]; }

  int new_tri(int a, int b, int c) {
    int id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
    } else {
      id = static_cast<int>(tris_.size());
      tris_.emplace_back();
      mark_.push_back(0);
    }
    Tri& t = tris_[id];
    t.v = {a, b, c};
    t.n = {-1, -1, -1};
    t.alive = true;
    return id;
  }

  void kill(int t) {
    tris_[t].alive = false;
    free_.push_back(t);
  }

  void make_super_triangle() {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Vec2& p : input_.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double m = std::max({xmax - xmin, ymax - ymin, 1.0});
    pts_.push_back({cx - 40.0 * m, cy - 30.0 * m});
    pts_.push_back({cx + 40.0 * m, cy - 30.0 * m});
    pts_.push_back({cx, cy + 40.0 * m});
    vtri_.assign(3, 0);
    last_ = new_tri(0, 1, 2);
  }

  bool is_segment(int a, int b) const { return segs_.count(edge_key(a, b)) != 0; }

  // Walks toward p. Returns the containing triangle, or -1 when the walk is
  // stopped by a protected segment or the boundary; `blocked` receives it.
  int locate(Vec2 p, int start, bool respect_segments, std::uint64_t* blocked) {
    int t = start;
    if (t < 0 || !tris_[t].alive) t = last_;
    if (!tris_[t].alive) {
      for (std::size_t i = 0; i < tris_.size(); ++i)
        if (tris_[i].alive) {
          t = static_cast<int>(i);
          break;
        }
    }
    const std::size_t cap = 4 * tris_.size() + 100;
    for (std::size_t step = 0; step < cap; ++step) {
      const Tri& T = tris_[t];
      int exit = -1;
      for (int k = 0; k < 3; ++k) {
        const int i = static_cast<int>((k + step) % 3);
        if (orient(P(T.v[(i + 1) % 3]), P(T.v[(i + 2) % 3]), p) < 0.0) {
          exit = i;
          break;
        }
      }
      if (exit < 0) return t;
      const int a = T.v[(exit + 1) % 3], b = T.v[(exit + 2) % 3];
      if ((respect_segments && is_segment(a, b)) || T.n[exit] < 0) {
        if (blocked) *blocked = edge_key(a, b);
        return -1;
      }
      t = T.n[exit];
    }
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      const Tri& T = tris_[i];
      if (!T.alive) continue;
      if (orient(P(T.v[0]), P(T.v[1]), p) >= 0 && orient(P(T.v[1]), P(T.v[2]), p) >= 0 &&
          orient(P(T.v[2]), P(T.v[0]), p) >= 0)
        return static_cast<int>(i);
    }
    if (blocked) *blocked = kNoSegment;
    return -1;
  }

  // Bowyer-Watson cavity of p seeded at t0; never crosses protected segments
  // other than `split`. Fills cavity_ and rim_.
  void build_cavity(Vec2 p, int t0, std::uint64_t split) {
    ++stamp_;
    cavity_.clear();
    cavity_.push_back(t0);
    mark_[t0] = stamp_;
    for (std::size_t k = 0; k < cavity_.size(); ++k) {
      const Tri& T = tris_[cavity_[k]];
      for (int i = 0; i < 3; ++i) {
        const int nb = T.n[i];
        if (nb < 0 || mark_[nb] == stamp_) continue;
        const auto key = edge_key(T.v[(i + 1) % 3], T.v[(i + 2) % 3]);
        if (key != split && segs_.count(key)) continue;
        const Tri& N = tris_[nb];
        if (incircle(P(N.v[0]), P(N.v[1]), P(N.v[2]), p) > 0) {
          mark_[nb] = stamp_;
          cavity_.push_back(nb);
        }
      }
    }
    for (;;) {
      rim_.clear();
      int offender = -1;
      for (int t : cavity_) {
        const Tri& T = tris_[t];
        for (int i = 0; i < 3; ++i) {
          const int nb = T.n[i];
          if (nb >= 0 && mark_[nb] == stamp_) continue;
          const int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
          if (edge_key(a, b) == split) continue;
          if (orient(P(a), P(b), p) <= 0.0 && offender < 0 && t != t0) offender = t;
          rim_.push_back({a, b, nb, t});
        }
      }
      if (offender < 0) return;
      mark_[offender] = 0;
      cavity_.erase(std::find(cavity_.begin(), cavity_.end(), offender));
    }
  }

  // Replaces the current cavity by the fan around the new vertex.
  int commit(Vec2 p, std::uint64_t split) {
    const int pv = static_cast<int>(pts_.size());
    pts_.push_back(p);
    vtri_.push_back(-1);
    if (split != kNoSegment) {
      const int tag = segs_.at(split);
      segs_.erase(split);
      segs_[edge_key(key_lo(split), pv)] = tag;
      segs_[edge_key(pv, key_hi(split))] = tag;
    }
    std::vector<int> created;
    created.reserve(rim_.size());
    for (const CavityEdge& e : rim_) {
      const int t = new_tri(e.a, e.b, pv);
      tris_[t].n[2] = e.outside;
      if (e.outside >= 0) {
        Tri& N = tris_[e.outside];
        for (int j = 0; j < 3; ++j)
          if (N.n[j] == e.owner) N.n[j] = t;
      }
      created.push_back(t);
    }
    for (int t : created) {
      Tri& T = tris_[t];
      for (int u : created) {
        if (tris_[u].v[0] == T.v[1]) T.n[0] = u;
        if (tris_[u].v[1] == T.v[0]) T.n[1] = u;
      }
    }
    for (int t : cavity_) kill(t);
    for (int t : created) {
      for (int j = 0; j < 3; ++j) vtri_[tris_[t].v[j]] = t;
    }
    for (int t : cavity_) {
      for (int j = 0; j < 3; ++j) {
        const int v = tris_[t].v[j];
        if (!tris_[vtri_[v]].alive) throw MeshFailure("triangulator lost a vertex (degenerate cavity)");
      }
    }
    last_ = created.empty() ? last_ : created.front();
    if (refining_) {
      for (int t : created) {
        check_triangle(t);
        check_segments_of(t);
      }
    }
    return pv;
  }

  void insert_unconstrained(Vec2 p) {
    const int t = locate(p, last_, false, nullptr);
    if (t < 0) throw MeshFailure("point outside the bounding triangle");
    for (int v : tris_[t].v)
      if (P(v) == p) return;
    build_cavity(p, t, kNoSegment);
    commit(p, kNoSegment);
  }

  // Triangle containing edge (a, b) and the local index of the opposite vertex.
  std::pair<int, int> find_edge(int a, int b) {
    int t0 = vtri_[a];
    if (t0 < 0 || !tris_[t0].alive) return {-1, -1};
    ++stamp_;
    std::vector<int> stack{t0};
    mark_[t0] = stamp_;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      const Tri& T = tris_[t];
      for (int i = 0; i < 3; ++i) {
        const int x = T.v[(i + 1) % 3], y = T.v[(i + 2) % 3];
        if ((x == a && y == b) || (x == b && y == a)) return {t, i};
      }
      for (int i = 0; i < 3; ++i) {
        if (T.v[i] == a) continue;
        const int nb = T.n[i];  // edges opposite non-a vertices contain a
        if (nb >= 0 && mark_[nb] != stamp_) {
          mark_[nb] = stamp_;
          stack.push_back(nb);
        }
      }
    }
    return {-1, -1};
  }

  void recover_segments(std::vector<std::uint64_t> pending,
                        std::unordered_map<std::uint64_t, int>& tags) {
    std::size_t rounds = 0;
    while (!pending.empty()) {
      if (++rounds > 64) throw MeshFailure("segment recovery did not terminate");
      std::vector<std::uint64_t> next;
      for (const auto k : pending) {
        const int a = key_lo(k), b = key_hi(k);
        if (find_edge(a, b).first >= 0) {
          segs_[k] = tags.at(k);
          continue;
        }
        const Vec2 m = 0.5 * (P(a) + P(b));
        if (norm(P(a) - P(b)) < 2.0 * opt_.min_length)
          throw MeshFailure("segment recovery reached the length floor");
        const int t = locate(m, vtri_[a], false, nullptr);
        if (t < 0) throw MeshFailure("segment midpoint outside triangulation");
        build_cavity(m, t, kNoSegment);
        const int mv = commit(m, kNoSegment);
        const auto k1 = edge_key(a, mv), k2 = edge_key(mv, b);
        tags[k1] = tags[k2] = tags.at(k);
        next.push_back(k1);
        next.push_back(k2);
      }
      pending.swap(next);
    }
  }

  void prune_exterior() {
    ++stamp_;
    std::vector<int> stack;
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      const Tri& T = tris_[i];
      if (T.alive && (T.v[0] < 3 || T.v[1] < 3 || T.v[2] < 3)) {
        mark_[i] = stamp_;
        stack.push_back(static_cast<int>(i));
      }
    }
    for (const Vec2& h : input_.holes) {
      const int t = locate(h, last_, false, nullptr);
      if (t >= 0 && mark_[t] != stamp_) {
        mark_[t] = stamp_;
        stack.push_back(t);
      }
    }
    std::vector<int> dead;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      dead.push_back(t);
      const Tri& T = tris_[t];
      for (int i = 0; i < 3; ++i) {
        const int nb = T.n[i];
        if (nb < 0 || mark_[nb] == stamp_) continue;
        if (is_segment(T.v[(i + 1) % 3], T.v[(i + 2) % 3])) continue;
        mark_[nb] = stamp_;
        stack.push_back(nb);
      }
    }
    for (int t : dead) {
      for (int i = 0; i < 3; ++i) {
        const int nb = tris_[t].n[i];
        if (nb >= 0 && mark_[nb] != stamp_) {
          for (int j = 0; j < 3; ++j)
            if (tris_[nb].n[j] == t) tris_[nb].n[j] = -1;
        }
      }
    }
    for (int t : dead) kill(t);
    std::fill(vtri_.begin(), vtri_.end(), -1);
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      if (!tris_[i].alive) continue;
      for (int v : tris_[i].v) vtri_[v] = static_cast<int>(i);
      last_ = static_cast<int>(i);
    }
  }

  bool is_bad(int t) const {
    const Tri& T = tris_[t];
    const Vec2 a = P(T.v[0]), b = P(T.v[1]), c = P(T.v[2]);
    const double l0 = norm(b - c), l1 = norm(c - a), l2 = norm(a - b);
    const double lmin = std::min({l0, l1, l2});
    const double lmax = std::max({l0, l1, l2});
    const double area2 = orient(a, b, c);
    const double radius = l0 * l1 * l2 / (2.0 * area2);
    if (radius > opt_.max_radius_edge_ratio * lmin) return true;
    const Vec2 centroid = (1.0 / 3.0) * (a + b + c);
    return lmax > opt_.size(centroid);
  }

  void check_triangle(int t) {
    if (is_bad(t)) tri_queue_.emplace_back(t, tris_[t].v);
  }

  // Queues subsegment edges of t whose opposite vertex lies inside the
  // diametral circle.
  void check_segments_of(int t) {
    const Tri& T = tris_[t];
    for (int i = 0; i < 3; ++i) {
      const int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
      if (!is_segment(a, b)) continue;
      const Vec2 q = P(T.v[i]);
      if (dot(P(a) - q, P(b) - q) < 0.0) seg_queue_.push_back(edge_key(a, b));
    }
  }

  bool encroached(std::uint64_t k) {
    const int a = key_lo(k), b = key_hi(k);
    const auto [t, i] = find_edge(a, b);
    if (t < 0) return true;
    const Tri& T = tris_[t];
    auto apex_inside = [&](int v) {
      const Vec2 q = P(v);
      return dot(P(a) - q, P(b) - q) < 0.0;
    };
    if (apex_inside(T.v[i])) return true;
    const int nb = T.n[i];
    if (nb >= 0) {
      for (int v : tris_[nb].v)
        if (v != a && v != b && apex_inside(v)) return true;
    }
    return false;
  }

  void split_segment(std::uint64_t k, bool with_twin = true) {
    const int a = key_lo(k), b = key_hi(k);
    if (norm(P(a) - P(b)) < 2.0 * opt_.min_length)
      throw MeshFailure("boundary refinement reached the length floor");
    const auto [t, i] = find_edge(a, b);
    if (t < 0) throw MeshFailure("subsegment missing from triangulation");
    const bool paired = opt_.twin_map && segs_.at(k) == opt_.twin_tag;
    const Vec2 m = 0.5 * (P(a) + P(b));
    build_cavity(m, t, k);
    const int mv = commit(m, k);
    if (pts_.size() > opt_.max_vertices) throw MeshFailure("vertex budget exhausted");
    if (!paired) return;
    twin_index_[key_of(m)] = mv;
    if (!with_twin) return;
    const auto ta = twin_index_.find(key_of(opt_.twin_map(P(a))));
    const auto tb = twin_index_.find(key_of(opt_.twin_map(P(b))));
    if (ta == twin_index_.end() || tb == twin_index_.end()) return;
    const auto tk = edge_key(ta->second, tb->second);
    if (tk != k && segs_.count(tk)) split_segment(tk, false);
  }

  static std::pair<double, double> key_of(Vec2 p) { return {p.x == 0.0 ? 0.0 : p.x, p.y == 0.0 ? 0.0 : p.y}; }

  void index_twins() {
    if (!opt_.twin_map) return;
    for (const auto& [k, tag] : segs_) {
      if (tag != opt_.twin_tag) continue;
      twin_index_[key_of(P(key_lo(k)))] = key_lo(k);
      twin_index_[key_of(P(key_hi(k)))] = key_hi(k);
    }
  }

  std::map<std::pair<double, double>, int> twin_index_;

  void refine() {
    refining_ = true;
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      if (!tris_[i].alive) continue;
      check_triangle(static_cast<int>(i));
      check_segments_of(static_cast<int>(i));
    }
    std::vector<std::uint64_t> hits;
    for (;;) {
      if (!seg_queue_.empty()) {
        const auto k = seg_queue_.front();
        seg_queue_.pop_front();
        if (segs_.count(k) && encroached(k)) split_segment(k);
        continue;
      }
      if (tri_queue_.empty()) break;
      const auto [t, verts] = tri_queue_.front();
      tri_queue_.pop_front();
      if (!tris_[t].alive || tris_[t].v != verts || !is_bad(t)) continue;
      const Tri& T = tris_[t];
      const Vec2 c = circumcenter(P(T.v[0]), P(T.v[1]), P(T.v[2]));
      const double radius = norm(c - P(T.v[0]));
      if (radius < opt_.min_length) throw MeshFailure("interior refinement reached the length floor");
      std::uint64_t blocked = kNoSegment;
      const int loc = locate(c, t, true, &blocked);
      if (loc < 0) {
        if (blocked == kNoSegment) throw MeshFailure("circumcenter could not be located");
        split_segment(blocked);
        tri_queue_.emplace_back(t, verts);
        continue;
      }
      build_cavity(c, loc, kNoSegment);
      hits.clear();
      for (const CavityEdge& e : rim_) {
        if (!is_segment(e.a, e.b)) continue;
        if (dot(P(e.a) - c, P(e.b) - c) < 0.0) hits.push_back(edge_key(e.a, e.b));
      }
      if (!hits.empty()) {
        for (const auto k : hits)
          if (segs_.count(k)) split_segment(k);
        tri_queue_.emplace_back(t, verts);
        continue;
      }
      commit(c, kNoSegment);
      if (pts_.size() > opt_.max_vertices) throw MeshFailure("vertex budget exhausted");
    }
  }

  Triangulation extract() {
    Triangulation out;
    std::vector<int> remap(pts_.size(), -1);
    auto id = [&](int v) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(out.points.size());
        out.points.push_back(pts_[v]);
      }
      return remap[v];
    };
    for (int v = 3; v < static_cast<int>(pts_.size()); ++v) {
      if (vtri_[v] >= 0 && tris_[vtri_[v]].alive) id(v);
    }
    for (const Tri& T : tris_) {
      if (!T.alive) continue;
      out.triangles.push_back({id(T.v[0]), id(T.v[1]), id(T.v[2])});
      for (int i = 0; i < 3; ++i) {
        if (T.n[i] >= 0) continue;
        const int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
        const auto it = segs_.find(edge_key(a, b));
        if (it == segs_.end()) throw MeshFailure("boundary edge without segment tag");
        out.boundary.push_back({id(a), id(b), it->second});
      }
    }
    return out;
  }
};

}  // namespace

Triangulation refine_pslg(const Pslg& input, const RefineOptions& options) {
  if (!options.size) throw InputError("refine_pslg: size function required");
  Refiner r(input, options);
  return r.run();
}

}  // namespace channel_eq::detail
