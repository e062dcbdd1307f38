#include "channel_eq/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "channel_eq/detail/triangulator.hpp"
#include "channel_eq/errors.hpp"

namespace channel_eq {
namespace {

// Element size growth per unit distance from walls and obstacle.
constexpr double kGradation = 0.3;
// Element layers across the narrowest wall gap.
constexpr double kGapLayers = 4.0;
constexpr double kLengthFloor = 1e-4;
constexpr int kAxisTag = 100;
// Interior constraint lines keeping elements off the extension cutoffs.
constexpr int kInteriorTag = 101;
// Largest tilt from vertical of a diagonal point-symmetry cut.
constexpr double kDiagonalCutTilt = 0.35;

int tag_id(BoundaryTag t) { return static_cast<int>(t); }

struct Line {
  Vec2 a, b;
  int tag;
};

// Closed polygon as a list of lines.
std::vector<Line> loop(const std::vector<Vec2>& verts, const std::vector<int>& tags) {
  std::vector<Line> out;
  for (std::size_t i = 0; i < verts.size(); ++i)
    out.push_back({verts[i], verts[(i + 1) % verts.size()], tags[i]});
  return out;
}

struct PslgBuilder {
  detail::Pslg pslg;
  std::function<double(Vec2)> size;

  int point(Vec2 p) {
    pslg.points.push_back(p);
    return static_cast<int>(pslg.points.size()) - 1;
  }

  // Subdivides [a, b] so that spacing follows the size function.
  void segment(int ia, int ib, int tag) {
    const Vec2 a = pslg.points[ia], b = pslg.points[ib];
    const double len = norm(b - a);
    auto at = [&](double t) { return a + t * (b - a); };
    double smin = 1e300;
    for (int k = 0; k <= 400; ++k) smin = std::min(smin, size(at(k / 400.0)));
    const int samples = std::clamp(static_cast<int>(std::ceil(4.0 * len / smin)), 400, 400000);
    std::vector<double> cum(samples + 1, 0.0);
    for (int k = 0; k < samples; ++k) {
      const double tm = (k + 0.5) / samples;
      cum[k + 1] = cum[k] + (len / samples) / size(at(tm));
    }
    const int n = std::max(1, static_cast<int>(std::ceil(cum.back())));
    int prev = ia;
    int k = 0;
    for (int j = 1; j < n; ++j) {
      const double level = cum.back() * j / n;
      while (cum[k + 1] < level) ++k;
      const double frac = (level - cum[k]) / (cum[k + 1] - cum[k]);
      double t = (k + frac) / samples;
      Vec2 p = at(t);
      // Keep axis-aligned segments exactly on their line.
      if (a.x == b.x) p.x = a.x;
      if (a.y == b.y) p.y = a.y;
      const int ip = point(p);
      pslg.segments.push_back({prev, ip, tag});
      prev = ip;
    }
    pslg.segments.push_back({prev, ib, tag});
  }

  // Adds straight boundary or constraint segments. Shared endpoints are
  // merged, and axis-aligned segments are split at endpoints lying on them.
  void lines(const std::vector<Line>& list) {
    std::vector<Vec2> ends;
    for (const Line& l : list) {
      ends.push_back(l.a);
      ends.push_back(l.b);
    }
    for (const Line& l : list) {
      std::vector<std::pair<double, Vec2>> stops{{0.0, l.a}, {1.0, l.b}};
      const bool vertical = l.a.x == l.b.x, horizontal = l.a.y == l.b.y;
      for (const Vec2& p : ends) {
        double t = -1.0;
        if (vertical && p.x == l.a.x) t = (p.y - l.a.y) / (l.b.y - l.a.y);
        if (horizontal && p.y == l.a.y) t = (p.x - l.a.x) / (l.b.x - l.a.x);
        if (t > 0.0 && t < 1.0) stops.push_back({t, p});
      }
      std::sort(stops.begin(), stops.end(),
                [](const auto& u, const auto& v) { return u.first < v.first; });
      for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
        if (stops[i + 1].second == stops[i].second) continue;
        segment(shared(stops[i].second), shared(stops[i + 1].second), l.tag);
      }
    }
  }

  int shared(Vec2 p) {
    auto [it, inserted] = ids.emplace(std::make_pair(p.x, p.y), 0);
    if (inserted) it->second = point(p);
    return it->second;
  }

  std::map<std::pair<double, double>, int> ids;
};

double zero_sign(double v) { return v == 0.0 ? 0.0 : v; }

struct PointKey {
  double x, y;
  bool operator<(const PointKey& o) const { return x < o.x || (x == o.x && y < o.y); }
};

// Merges `tri` with its reflections (or its point reflection when
// `central`). Axis-tagged segments become interior.
Mesh mirrored_mesh(const detail::Triangulation& tri, bool mirror_x, bool mirror_y, bool central = false) {
  Mesh mesh;
  std::map<PointKey, int> index;
  auto node_id = [&](Vec2 p) {
    p = {zero_sign(p.x), zero_sign(p.y)};
    auto [it, inserted] = index.emplace(PointKey{p.x, p.y}, static_cast<int>(mesh.nodes.size()));
    if (inserted) mesh.nodes.push_back(p);
    return it->second;
  };
  std::vector<std::pair<double, double>> flips{{1.0, 1.0}};
  if (central) flips.push_back({-1.0, -1.0});
  if (mirror_x) flips.push_back({-1.0, 1.0});
  if (mirror_y) {
    const auto n = flips.size();
    for (std::size_t i = 0; i < n; ++i) flips.push_back({flips[i].first, -1.0});
  }
  for (const auto& [sx, sy] : flips) {
    std::vector<int> map(tri.points.size());
    for (std::size_t i = 0; i < tri.points.size(); ++i)
      map[i] = node_id({sx * tri.points[i].x, sy * tri.points[i].y});
    const bool reversed = sx * sy < 0.0;
    for (const auto& t : tri.triangles) {
      if (reversed)
        mesh.triangles.push_back({map[t[0]], map[t[2]], map[t[1]]});
      else
        mesh.triangles.push_back({map[t[0]], map[t[1]], map[t[2]]});
    }
    for (const auto& s : tri.boundary) {
      if (s.tag == kAxisTag || s.tag == kInteriorTag) continue;
      mesh.boundary_edges.push_back({map[s.a], map[s.b], static_cast<BoundaryTag>(s.tag)});
    }
  }
  return mesh;
}

void mirror_in_x2(Mesh& mesh) {
  for (Vec2& p : mesh.nodes) p.y = zero_sign(-p.y);
  for (auto& t : mesh.triangles) std::swap(t[1], t[2]);
}

}  // namespace

std::string to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Wall: return "WALL";
    case BoundaryTag::Inflow: return "INFLOW";
    case BoundaryTag::Outflow: return "OUTFLOW";
    case BoundaryTag::Obstacle: return "OBSTACLE";
  }
  return "?";
}

BoundaryTag parse_tag(const std::string& text) {
  for (BoundaryTag t : kAllTags)
    if (to_string(t) == text) return t;
  throw InputError("unknown boundary tag '" + text + "'");
}

double mesh_size_at(const DomainSpec& spec, double target_h, double grading, Vec2 p) {
  const auto poly = obstacle_polygon(spec.state, spec.d);
  double d_obs = 1e300;
  for (int i = 0; i < 4; ++i) d_obs = std::min(d_obs, segment_distance(p, poly[i], poly[(i + 1) % 4]));
  const double d_wall = std::max(0.0, spec.L - std::abs(p.y));
  double s = target_h;
  s = std::min(s, grading * target_h + kGradation * std::min(d_wall, d_obs));
  s = std::min(s, (d_wall + d_obs) / kGapLayers);
  return s;
}

Mesh generate_mesh(const DomainSpec& spec, double target_h, double grading) {
  validate_state(spec);
  if (!(target_h > 0.0)) throw InputError("target_h must be positive");
  if (!(grading > 0.0 && grading <= 1.0)) throw InputError("grading must lie in (0, 1]");

  const double position = position_of(spec.state);
  if (position < 0.0) {
    DomainSpec canonical = spec;
    canonical.state = make_state(mode_of(spec.state), -position);
    Mesh mesh = generate_mesh(canonical, target_h, grading);
    mirror_in_x2(mesh);
    mesh.domain = spec;
    return mesh;
  }

  const double L = spec.L, X = spec.X, d = spec.d;
  PslgBuilder b;
  b.size = [&](Vec2 p) { return mesh_size_at(spec, target_h, grading, p); };
  const int wall = tag_id(BoundaryTag::Wall), in = tag_id(BoundaryTag::Inflow);
  const int out = tag_id(BoundaryTag::Outflow), obs = tag_id(BoundaryTag::Obstacle);
  bool mirror_x = false, mirror_y = false, central = false;
  Vec2 cut_dir{0.0, 1.0};
  const bool is_translation = mode_of(spec.state) == Mode::Translation;

  // Vertical cutoff lines of the extension fields, and for translations the
  // top of the lower strip (mirrored for negative positions).
  std::vector<double> xs;
  double strip = 0.0;
  if (is_translation) {
    xs = {2.0 * d, 4.0 * d};
    strip = extension_strip_level(L);
  } else if (std::sqrt(1.0 + d * d) < 4.0 * d) {
    xs = {4.0 * d};
  }
  const int cut = kInteriorTag;
  std::vector<Line> lines;
  auto add = [&](std::vector<Line> more) { lines.insert(lines.end(), more.begin(), more.end()); };

  if (spec.symmetrize && position == 0.0) {
    // Quadrant x1 >= 0, x2 >= 0; the obstacle corner (d, 1) is reentrant.
    add(loop({{d, 0.0}, {X, 0.0}, {X, L}, {0.0, L}, {0.0, 1.0}, {d, 1.0}},
             {kAxisTag, out, wall, kAxisTag, obs, obs}));
    for (double x : xs) add({{{x, 0.0}, {x, L}, cut}});
    // The reflection in x2 supplies the lower strip line.
    if (is_translation) add({{{0.0, -strip}, {2.0 * d, -strip}, cut}});
    mirror_x = mirror_y = true;
  } else if (spec.symmetrize && is_translation) {
    const double h = position;
    add(loop({{0.0, -L}, {X, -L}, {X, L}, {0.0, L}, {0.0, h + 1.0}, {d, h + 1.0}, {d, h - 1.0},
              {0.0, h - 1.0}},
             {wall, out, wall, kAxisTag, obs, obs, obs, kAxisTag}));
    for (double x : xs) add({{{x, -L}, {x, L}, cut}});
    add({{{0.0, strip}, {2.0 * d, strip}, cut}});
    mirror_x = true;
  } else if (spec.symmetrize && !is_translation) {
    // Half plane to the right of a cut line through the origin, with the
    // obstacle clipped along it; the point reflection supplies the rest.
    // The cut is vertical unless an obstacle corner sits close to the x2
    // axis, where it would leave a sliver; then it runs along the obstacle
    // diagonal through that corner. The lower cut chain is added below as
    // the exact image of the upper one.
    const auto poly = obstacle_polygon(spec.state, d);
    Vec2 c{1e300, 1.0};
    for (const Vec2& p : poly)
      if (p.y > 0.0 && std::abs(p.x) < std::abs(c.x)) c = p;
    const double tilt = std::atan2(std::abs(c.x), c.y);
    const double wall_hit = L * std::abs(c.x) / c.y;
    const double clearance = xs.empty() ? X : xs.front();
    if (c.y > 0.0 && tilt < kDiagonalCutTilt && wall_hit < 0.5 * clearance) cut_dir = c;
    const Vec2 v = cut_dir;
    auto side = [&](Vec2 p) {
      const double s = v.x * p.y - v.y * p.x;
      return std::abs(s) <= 1e-13 * norm(v) * norm(p) ? 0.0 : s;
    };
    std::vector<Vec2> clip;
    std::vector<double> along;  // signed position of cut points along v, NaN otherwise
    double top = 0.0;
    for (int i = 0; i < 4; ++i) {
      const Vec2 p = poly[i], q = poly[(i + 1) % 4];
      const double sp = side(p), sq = side(q);
      if (sp < 0.0) {
        clip.push_back(p);
        along.push_back(std::nan(""));
      }
      if (sp == 0.0 || (sp != 0.0 && sq != 0.0 && (sp < 0.0) != (sq < 0.0))) {
        const Vec2 x = sp == 0.0 ? p : p + (sp / (sp - sq)) * (q - p);
        const double t = dot(x, v) / dot(v, v);
        top = std::max(top, std::abs(t));
        clip.push_back(x);
        along.push_back(t);
      }
    }
    // Cut points at exactly +-top * v so the two chains are exact images.
    for (std::size_t j = 0; j < clip.size(); ++j)
      if (!std::isnan(along[j])) clip[j] = along[j] > 0.0 ? top * v : Vec2{zero_sign(-(top * v).x), zero_sign(-(top * v).y)};
    const Vec2 upper = top * v;
    const Vec2 wall_top{L * v.x / v.y, L}, wall_bottom{zero_sign(-wall_top.x), -L};
    // Counterclockwise clip runs down the cut from top * v to -top * v.
    std::size_t k = 0;
    while (std::isnan(along[k]) || !(clip[k] == upper)) ++k;
    std::vector<Vec2> verts{wall_bottom, {X, -L}, {X, L}, wall_top};
    std::vector<int> tags{wall, out, wall, kAxisTag};
    for (std::size_t j = 0; j < clip.size(); ++j) {
      verts.push_back(clip[(k + clip.size() - j) % clip.size()]);
      tags.push_back(obs);
    }
    // The closing edge from -top * v down to the wall is the mirrored chain.
    for (std::size_t j = 0; j + 1 < verts.size(); ++j) lines.push_back({verts[j], verts[j + 1], tags[j]});
    for (double x : xs) add({{{x, -L}, {x, L}, cut}});
    central = true;
  } else {
    add(loop({{-X, -L}, {X, -L}, {X, L}, {-X, L}}, {wall, out, wall, in}));
    const auto poly = obstacle_polygon(spec.state, d);
    add(loop({poly.begin(), poly.end()}, {obs, obs, obs, obs}));
    for (double x : xs) {
      add({{{x, -L}, {x, L}, cut}});
      add({{{-x, -L}, {-x, L}, cut}});
    }
    if (is_translation) add({{{-2.0 * d, strip}, {2.0 * d, strip}, cut}});
    b.pslg.holes.push_back(is_translation ? Vec2{0.0, position} : Vec2{0.0, 0.0});
  }
  b.lines(lines);

  detail::RefineOptions opt;
  opt.size = b.size;
  opt.min_length = kLengthFloor;
  if (central) {
    std::vector<detail::Pslg::Segment> upper_chain;
    for (const auto& seg : b.pslg.segments)
      if (seg.tag == kAxisTag) upper_chain.push_back(seg);
    auto image = [](Vec2 p) { return Vec2{zero_sign(-p.x), zero_sign(-p.y)}; };
    for (const auto& seg : upper_chain)
      b.pslg.segments.push_back(
          {b.shared(image(b.pslg.points[seg.b])), b.shared(image(b.pslg.points[seg.a])), kAxisTag});
    opt.twin_tag = kAxisTag;
    opt.twin_map = image;
  }
  detail::Triangulation tri = detail::refine_pslg(b.pslg, opt);
  if (central) {
    std::set<std::pair<double, double>> axis;
    for (const auto& s : tri.boundary)
      if (s.tag == kAxisTag)
        for (int v : {s.a, s.b}) axis.insert({tri.points[v].x, tri.points[v].y});
    for (const auto& [x, y] : axis)
      if (!axis.count({zero_sign(-x), zero_sign(-y)})) throw MeshFailure("axis subdivision lost its point symmetry");
  }
  Mesh mesh = mirrored_mesh(tri, mirror_x, mirror_y, central);
  // Mirrored halves carry no inflow: the reflected outflow side is inflow.
  for (auto& e : mesh.boundary_edges) {
    if (e.tag == BoundaryTag::Outflow && mesh.nodes[e.a].x < 0.0) e.tag = BoundaryTag::Inflow;
  }
  mesh.min_angle_deg = compute_min_angle_deg(mesh);
  mesh.domain = spec;
  return mesh;
}

Mesh rectangle_mesh(double x0, double x1, double y0, double y1, int nx, int ny) {
  if (nx < 1 || ny < 1) throw InputError("rectangle_mesh needs nx, ny >= 1");
  Mesh mesh;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.nodes.push_back({x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny});
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), e = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, e});
      } else {
        mesh.triangles.push_back({a, b, e});
        mesh.triangles.push_back({b, c, e});
      }
    }
  }
  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::Wall});
    mesh.boundary_edges.push_back({id(i + 1, ny), id(i, ny), BoundaryTag::Wall});
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary_edges.push_back({id(nx, j), id(nx, j + 1), BoundaryTag::Outflow});
    mesh.boundary_edges.push_back({id(0, j + 1), id(0, j), BoundaryTag::Inflow});
  }
  mesh.min_angle_deg = compute_min_angle_deg(mesh);
  return mesh;
}

Mesh rectangle_mesh_unstructured(double x0, double x1, double y0, double y1, double h) {
  if (!(h > 0.0) || !(x1 > x0) || !(y1 > y0)) throw InputError("rectangle_mesh_unstructured: bad extent or size");
  PslgBuilder b;
  b.size = [h](Vec2) { return h; };
  b.lines(loop({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}},
               {tag_id(BoundaryTag::Wall), tag_id(BoundaryTag::Outflow), tag_id(BoundaryTag::Wall),
                tag_id(BoundaryTag::Inflow)}));
  detail::RefineOptions opt;
  opt.size = b.size;
  opt.min_length = kLengthFloor;
  Mesh mesh = mirrored_mesh(detail::refine_pslg(b.pslg, opt), false, false);
  mesh.min_angle_deg = compute_min_angle_deg(mesh);
  return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
  Mesh out;
  out.nodes = mesh.nodes;
  out.domain = mesh.domain;
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto [it, inserted] = mid.emplace(key, static_cast<int>(out.nodes.size()));
    if (inserted) out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    return it->second;
  };
  for (const auto& t : mesh.triangles) {
    const int m01 = midpoint(t[0], t[1]), m12 = midpoint(t[1], t[2]), m20 = midpoint(t[2], t[0]);
    out.triangles.push_back({t[0], m01, m20});
    out.triangles.push_back({m01, t[1], m12});
    out.triangles.push_back({m20, m12, t[2]});
    out.triangles.push_back({m01, m12, m20});
  }
  for (const auto& e : mesh.boundary_edges) {
    const int m = midpoint(e.a, e.b);
    out.boundary_edges.push_back({e.a, m, e.tag});
    out.boundary_edges.push_back({m, e.b, e.tag});
  }
  out.min_angle_deg = compute_min_angle_deg(out);
  return out;
}

Mesh refine_near(const Mesh& mesh, const std::vector<Vec2>& centers, double radius) {
  const int nt = static_cast<int>(mesh.triangles.size());
  std::vector<char> red(nt, 0);
  std::map<std::pair<int, int>, int> split;  // edge -> midpoint id (-1 until created)
  auto edge = [](int a, int b) { return std::pair<int, int>(std::min(a, b), std::max(a, b)); };
  auto mark = [&](int t) {
    red[t] = 1;
    const auto& tr = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) split.emplace(edge(tr[i], tr[(i + 1) % 3]), -1);
  };
  for (int t = 0; t < nt; ++t) {
    bool near = false;
    for (int v : mesh.triangles[t])
      for (const Vec2& c : centers) near = near || norm(mesh.nodes[v] - c) <= radius;
    if (near) mark(t);
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (int t = 0; t < nt; ++t) {
      if (red[t]) continue;
      const auto& tr = mesh.triangles[t];
      int n = 0;
      for (int i = 0; i < 3; ++i) n += split.count(edge(tr[i], tr[(i + 1) % 3])) > 0;
      if (n >= 2) {
        mark(t);
        changed = true;
      }
    }
  }
  Mesh out;
  out.nodes = mesh.nodes;
  out.domain = mesh.domain;
  auto midpoint = [&](int a, int b) {
    int& id = split.at(edge(a, b));
    if (id < 0) {
      id = static_cast<int>(out.nodes.size());
      out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    }
    return id;
  };
  for (int t = 0; t < nt; ++t) {
    const auto& tr = mesh.triangles[t];
    if (red[t]) {
      const int m01 = midpoint(tr[0], tr[1]), m12 = midpoint(tr[1], tr[2]), m20 = midpoint(tr[2], tr[0]);
      out.triangles.push_back({tr[0], m01, m20});
      out.triangles.push_back({m01, tr[1], m12});
      out.triangles.push_back({m20, m12, tr[2]});
      out.triangles.push_back({m01, m12, m20});
      continue;
    }
    int k = -1;
    for (int i = 0; i < 3; ++i)
      if (split.count(edge(tr[i], tr[(i + 1) % 3]))) k = i;
    if (k < 0) {
      out.triangles.push_back(tr);
      continue;
    }
    const int a = tr[k], b = tr[(k + 1) % 3], c = tr[(k + 2) % 3];
    const int m = midpoint(a, b);
    out.triangles.push_back({a, m, c});
    out.triangles.push_back({m, b, c});
  }
  for (const auto& e : mesh.boundary_edges) {
    if (split.count(edge(e.a, e.b))) {
      const int m = midpoint(e.a, e.b);
      out.boundary_edges.push_back({e.a, m, e.tag});
      out.boundary_edges.push_back({m, e.b, e.tag});
    } else {
      out.boundary_edges.push_back(e);
    }
  }
  out.min_angle_deg = compute_min_angle_deg(out);
  return out;
}

Mesh refine_channel(const Mesh& mesh, double corner_radius) {
  if (!mesh.domain) throw InputError("refine_channel needs a channel mesh");
  const auto poly = obstacle_polygon(mesh.domain->state, mesh.domain->d);
  return refine_near(refine_uniform(mesh), {poly.begin(), poly.end()}, corner_radius);
}

double triangle_area(const Mesh& mesh, int t) {
  const auto& tr = mesh.triangles[t];
  const Vec2 a = mesh.nodes[tr[0]], b = mesh.nodes[tr[1]], c = mesh.nodes[tr[2]];
  return 0.5 * cross(b - a, c - a);
}

double mesh_area(const Mesh& mesh) {
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) sum += triangle_area(mesh, t);
  return sum;
}

double compute_min_angle_deg(const Mesh& mesh) {
  double best = 180.0;
  for (const auto& tr : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const Vec2 p = mesh.nodes[tr[i]];
      const Vec2 u = mesh.nodes[tr[(i + 1) % 3]] - p;
      const Vec2 v = mesh.nodes[tr[(i + 2) % 3]] - p;
      const double ang = std::atan2(std::abs(cross(u, v)), dot(u, v));
      best = std::min(best, ang * 180.0 / std::numbers::pi);
    }
  }
  return best;
}

MeshAudit audit_mesh(const Mesh& mesh) {
  MeshAudit audit;
  std::unordered_map<std::uint64_t, int> owners;
  auto key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  for (const auto& t : mesh.triangles)
    for (int i = 0; i < 3; ++i) ++owners[key(t[i], t[(i + 1) % 3])];
  std::size_t single = 0;
  for (const auto& [k, n] : owners) single += (n == 1);
  for (const auto& e : mesh.boundary_edges) {
    const auto it = owners.find(key(e.a, e.b));
    if (it == owners.end() || it->second != 1) audit.boundary_edges_single_owner = false;
  }
  if (single != mesh.boundary_edges.size()) audit.boundary_edges_single_owner = false;
  audit.area = mesh_area(mesh);
  audit.min_angle_deg = compute_min_angle_deg(mesh);

  std::map<int, std::vector<int>> adj;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != BoundaryTag::Obstacle) continue;
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
    audit.obstacle_loop_length += norm(mesh.nodes[e.a] - mesh.nodes[e.b]);
  }
  std::map<int, bool> seen;
  for (const auto& [v, nbrs] : adj) {
    if (seen[v]) continue;
    ++audit.obstacle_loops;
    std::vector<int> stack{v};
    seen[v] = true;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int w : adj[u])
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
    }
  }
  if (mesh.domain) {
    const auto poly = obstacle_polygon(mesh.domain->state, mesh.domain->d);
    for (const auto& [v, nbrs] : adj) {
      double dist = 1e300;
      for (int i = 0; i < 4; ++i)
        dist = std::min(dist, segment_distance(mesh.nodes[v], poly[i], poly[(i + 1) % 4]));
      audit.max_obstacle_node_distance = std::max(audit.max_obstacle_node_distance, dist);
    }
  }
  return audit;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << "mesh2d v1\n";
  if (mesh.domain) {
    const auto& s = *mesh.domain;
    out << std::setprecision(17) << "# domain " << s.L << ' ' << s.d << ' ' << s.X << ' '
        << to_string(mode_of(s.state)) << ' ' << position_of(s.state) << ' '
        << (s.symmetrize ? 1 : 0) << '\n';
  }
  out << "nodes " << mesh.nodes.size() << '\n' << std::setprecision(17);
  for (const Vec2& p : mesh.nodes) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "boundary " << mesh.boundary_edges.size() << '\n';
  for (const auto& e : mesh.boundary_edges) out << e.a << ' ' << e.b << ' ' << to_string(e.tag) << '\n';
}

Mesh read_mesh(std::istream& in) {
  std::vector<std::string> tokens;
  std::optional<DomainSpec> domain;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::istringstream comment(line.substr(hash + 1));
      std::string word;
      if (comment >> word && word == "domain") {
        DomainSpec s;
        std::string mode;
        double pos = 0.0;
        int sym = 0;
        if (comment >> s.L >> s.d >> s.X >> mode >> pos >> sym) {
          s.state = make_state(parse_mode(mode), pos);
          s.symmetrize = sym != 0;
          domain = s;
        }
      }
      line.resize(hash);
    }
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw InputError("mesh file truncated");
    return tokens[pos++];
  };
  auto expect = [&](const std::string& word) {
    if (next() != word) throw InputError("mesh file: expected '" + word + "'");
  };
  auto count = [&]() {
    const std::string& t = next();
    std::size_t used = 0;
    const long v = std::stol(t, &used);
    if (used != t.size() || v < 0) throw InputError("mesh file: bad count '" + t + "'");
    return static_cast<std::size_t>(v);
  };
  auto index = [&](std::size_t limit) {
    const std::size_t v = count();
    if (v >= limit) throw InputError("mesh file: index out of range");
    return static_cast<int>(v);
  };
  expect("mesh2d");
  expect("v1");
  Mesh mesh;
  expect("nodes");
  const std::size_t n = count();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::stod(next());
    const double y = std::stod(next());
    mesh.nodes.push_back({x, y});
  }
  expect("triangles");
  const std::size_t m = count();
  for (std::size_t i = 0; i < m; ++i) {
    const int a = index(n), b = index(n), c = index(n);
    mesh.triangles.push_back({a, b, c});
  }
  expect("boundary");
  const std::size_t k = count();
  for (std::size_t i = 0; i < k; ++i) {
    const int a = index(n), b = index(n);
    mesh.boundary_edges.push_back({a, b, parse_tag(next())});
  }
  if (pos != tokens.size()) throw InputError("mesh file: trailing content");
  mesh.min_angle_deg = compute_min_angle_deg(mesh);
  mesh.domain = domain;
  return mesh;
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write mesh file " + path);
  write_mesh(out, mesh);
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read mesh file " + path);
  return read_mesh(in);
}

}  // namespace channel_eq
