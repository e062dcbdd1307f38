#include "channel_eq/fem.hpp"

#include <Eigen/UmfPackSupport>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "channel_eq/errors.hpp"

namespace channel_eq {
namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

int tag_priority(int tag) { return tag == static_cast<int>(BoundaryTag::Wall) ? 2 : 1; }

// Sorted P2 node neighbours of every velocity node.
std::vector<std::vector<int>> node_adjacency(const DofMap& dofs) {
  std::vector<std::vector<int>> adj(dofs.velocity_nodes());
  for (const auto& c : dofs.cells)
    for (int a : c)
      for (int b : c) adj[a].push_back(b);
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return adj;
}

SpMat pattern_from_columns(int rows, const std::vector<std::vector<int>>& cols) {
  SpMat m(rows, static_cast<int>(cols.size()));
  std::size_t nnz = 0;
  for (const auto& c : cols) nnz += c.size();
  m.resizeNonZeros(static_cast<Eigen::Index>(nnz));
  int* outer = m.outerIndexPtr();
  int* inner = m.innerIndexPtr();
  double* val = m.valuePtr();
  int k = 0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    outer[j] = k;
    for (int r : cols[j]) {
      inner[k] = r;
      val[k] = 0.0;
      ++k;
    }
  }
  outer[cols.size()] = k;
  return m;
}

SpMat velocity_pattern(const DofMap& dofs, bool coupled) {
  const auto adj = node_adjacency(dofs);
  const int nv = dofs.velocity_nodes();
  std::vector<std::vector<int>> cols(2 * nv);
  for (int c = 0; c < 2; ++c) {
    for (int n = 0; n < nv; ++n) {
      auto& col = cols[c * nv + n];
      for (int d = 0; d < 2; ++d) {
        if (!coupled && d != c) continue;
        for (int m : adj[n]) col.push_back(d * nv + m);
      }
    }
  }
  return pattern_from_columns(2 * nv, cols);
}

double& entry(SpMat& m, int row, int col) {
  const int* inner = m.innerIndexPtr();
  const int b = m.outerIndexPtr()[col], e = m.outerIndexPtr()[col + 1];
  const int* it = std::lower_bound(inner + b, inner + e, row);
  if (it == inner + e || *it != row) throw DofMismatch("sparse entry outside the assembly pattern");
  return m.valuePtr()[it - inner];
}

// dst(row_off + i, col_off + j) += src(i, j); src pattern must be inside dst.
void scatter_add(const SpMat& src, int row_off, int col_off, SpMat& dst) {
  const int* dinner = dst.innerIndexPtr();
  double* dval = dst.valuePtr();
  for (int j = 0; j < src.outerSize(); ++j) {
    int k = dst.outerIndexPtr()[j + col_off];
    const int kend = dst.outerIndexPtr()[j + col_off + 1];
    for (SpMat::InnerIterator it(src, j); it; ++it) {
      const int r = static_cast<int>(it.row()) + row_off;
      while (k < kend && dinner[k] < r) ++k;
      if (k == kend || dinner[k] != r) throw DofMismatch("block entry outside the saddle pattern");
      dval[k] += it.value();
    }
  }
}

}  // namespace

int DofMap::edge_node(int a, int b) const {
  const auto it = edge_index.find(edge_key(a, b));
  return it == edge_index.end() ? -1 : num_vertices + it->second;
}

std::shared_ptr<const DofMap> build_spaces(std::shared_ptr<const Mesh> mesh) {
  auto dm = std::make_shared<DofMap>();
  dm->mesh = mesh;
  dm->num_vertices = static_cast<int>(mesh->nodes.size());
  const int V = dm->num_vertices;
  dm->cells.reserve(mesh->triangles.size());
  for (const auto& t : mesh->triangles) {
    std::array<int, 6> c{t[0], t[1], t[2], 0, 0, 0};
    for (int i = 0; i < 3; ++i) {
      const int a = t[i], b = t[(i + 1) % 3];
      auto [it, inserted] = dm->edge_index.emplace(edge_key(a, b), static_cast<int>(dm->edges.size()));
      if (inserted) dm->edges.push_back({std::min(a, b), std::max(a, b)});
      c[3 + i] = V + it->second;
    }
    dm->cells.push_back(c);
  }
  dm->num_edges = static_cast<int>(dm->edges.size());
  dm->node_points = mesh->nodes;
  for (const auto& e : dm->edges) dm->node_points.push_back(0.5 * (mesh->nodes[e[0]] + mesh->nodes[e[1]]));

  dm->node_tag.assign(dm->velocity_nodes(), -1);
  auto mark = [&](int node, int tag) {
    int& cur = dm->node_tag[node];
    if (cur < 0 || tag_priority(tag) > tag_priority(cur)) cur = tag;
  };
  for (const auto& e : mesh->boundary_edges) {
    const int en = dm->edge_node(e.a, e.b);
    if (en < 0) throw DofMismatch("boundary edge is not an edge of the triangulation");
    const int tag = static_cast<int>(e.tag);
    mark(e.a, tag);
    mark(e.b, tag);
    mark(en, tag);
  }
  for (int n = 0; n < dm->velocity_nodes(); ++n)
    if (dm->node_tag[n] >= 0) dm->tag_nodes[dm->node_tag[n]].push_back(n);
  return dm;
}

std::shared_ptr<const DofMap> build_spaces(const Mesh& mesh) {
  return build_spaces(std::make_shared<const Mesh>(mesh));
}

Field zero_field(std::shared_ptr<const DofMap> dofs) {
  Field f;
  f.u = Vector::Zero(dofs->velocity_dofs());
  f.p = Vector::Zero(dofs->pressure_dofs());
  f.dofs = std::move(dofs);
  return f;
}

Field interpolate(std::shared_ptr<const DofMap> dofs, const std::function<Vec2(Vec2)>& fn) {
  Field f = zero_field(dofs);
  const int nv = dofs->velocity_nodes();
  for (int n = 0; n < nv; ++n) {
    const Vec2 v = fn(dofs->node_points[n]);
    f.u[n] = v.x;
    f.u[nv + n] = v.y;
  }
  return f;
}

namespace fem {

const std::array<QuadPoint, 7> kTriangleRule = [] {
  const double a1 = 0.0597158717897698204, b1 = 0.4701420641051150898, w1 = 0.1323941527885061807;
  const double a2 = 0.7974269853530873223, b2 = 0.1012865073234563388, w2 = 0.1259391805448271525;
  const double t = 1.0 / 3.0;
  return std::array<QuadPoint, 7>{QuadPoint{t, t, t, 0.225},   QuadPoint{a1, b1, b1, w1},
                                  QuadPoint{b1, a1, b1, w1},   QuadPoint{b1, b1, a1, w1},
                                  QuadPoint{a2, b2, b2, w2},   QuadPoint{b2, a2, b2, w2},
                                  QuadPoint{b2, b2, a2, w2}};
}();

ElementGeom element_geometry(const DofMap& dofs, int t) {
  ElementGeom g;
  const auto& c = dofs.cells[t];
  for (int i = 0; i < 3; ++i) g.x[i] = dofs.node_points[c[i]];
  const double det = cross(g.x[1] - g.x[0], g.x[2] - g.x[0]);
  g.area = 0.5 * det;
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = g.x[(i + 2) % 3] - g.x[(i + 1) % 3];
    g.grad_lambda[i] = (1.0 / det) * Vec2{-e.y, e.x};
  }
  return g;
}

P2Basis p2_basis(const ElementGeom& g, double l0, double l1, double l2) {
  const std::array<double, 3> l{l0, l1, l2};
  const auto& G = g.grad_lambda;
  P2Basis b;
  for (int i = 0; i < 3; ++i) {
    b.N[i] = l[i] * (2.0 * l[i] - 1.0);
    b.dN[i] = (4.0 * l[i] - 1.0) * G[i];
    const int j = (i + 1) % 3;
    b.N[3 + i] = 4.0 * l[i] * l[j];
    b.dN[3 + i] = 4.0 * (l[j] * G[i] + l[i] * G[j]);
  }
  return b;
}

VelocitySample sample_velocity(const DofMap& dofs, const Vector& u, int t, const P2Basis& b) {
  const int nv = dofs.velocity_nodes();
  const auto& c = dofs.cells[t];
  VelocitySample s{{0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
  for (int a = 0; a < 6; ++a) {
    const double ux = u[c[a]], uy = u[nv + c[a]];
    s.value.x += ux * b.N[a];
    s.value.y += uy * b.N[a];
    s.grad[0] += ux * b.dN[a].x;
    s.grad[1] += ux * b.dN[a].y;
    s.grad[2] += uy * b.dN[a].x;
    s.grad[3] += uy * b.dN[a].y;
  }
  return s;
}

void for_each_quadrature_point(
    const DofMap& dofs, const std::function<void(int t, Vec2 x, const P2Basis&, double w)>& fn) {
  for (int t = 0; t < static_cast<int>(dofs.cells.size()); ++t) {
    const ElementGeom g = element_geometry(dofs, t);
    for (const QuadPoint& q : kTriangleRule) {
      const P2Basis b = p2_basis(g, q.l0, q.l1, q.l2);
      const Vec2 x = q.l0 * g.x[0] + q.l1 * g.x[1] + q.l2 * g.x[2];
      fn(t, x, b, q.w * g.area);
    }
  }
}

}  // namespace fem

SpMat assemble_viscous(const DofMap& dofs) {
  SpMat A = velocity_pattern(dofs, false);
  const int nv = dofs.velocity_nodes();
  for (int t = 0; t < static_cast<int>(dofs.cells.size()); ++t) {
    const auto g = fem::element_geometry(dofs, t);
    const auto& c = dofs.cells[t];
    std::array<std::array<double, 6>, 6> k{};
    for (const auto& q : fem::kTriangleRule) {
      const auto b = fem::p2_basis(g, q.l0, q.l1, q.l2);
      const double w = q.w * g.area;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) k[i][j] += w * dot(b.dN[i], b.dN[j]);
    }
    for (int comp = 0; comp < 2; ++comp)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) entry(A, comp * nv + c[i], comp * nv + c[j]) += k[i][j];
  }
  return A;
}

SpMat assemble_divergence(const DofMap& dofs) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(dofs.cells.size() * 36);
  const int nv = dofs.velocity_nodes();
  for (int t = 0; t < static_cast<int>(dofs.cells.size()); ++t) {
    const auto g = fem::element_geometry(dofs, t);
    const auto& c = dofs.cells[t];
    std::array<std::array<double, 12>, 3> k{};
    for (const auto& q : fem::kTriangleRule) {
      const auto b = fem::p2_basis(g, q.l0, q.l1, q.l2);
      const double w = q.w * g.area;
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 6; ++j) {
          k[i][j] -= w * l[i] * b.dN[j].x;
          k[i][6 + j] -= w * l[i] * b.dN[j].y;
        }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 6; ++j) {
        trip.emplace_back(c[i], c[j], k[i][j]);
        trip.emplace_back(c[i], nv + c[j], k[i][6 + j]);
      }
  }
  SpMat B(dofs.pressure_dofs(), dofs.velocity_dofs());
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

Vector assemble_load(const DofMap& dofs, const std::function<Vec2(Vec2)>& f) {
  Vector F = Vector::Zero(dofs.velocity_dofs());
  const int nv = dofs.velocity_nodes();
  fem::for_each_quadrature_point(dofs, [&](int t, Vec2 x, const fem::P2Basis& b, double w) {
    const Vec2 v = f(x);
    const auto& c = dofs.cells[t];
    for (int a = 0; a < 6; ++a) {
      F[c[a]] += w * v.x * b.N[a];
      F[nv + c[a]] += w * v.y * b.N[a];
    }
  });
  return F;
}

Vector pressure_weights(const DofMap& dofs) {
  Vector w = Vector::Zero(dofs.pressure_dofs());
  for (int t = 0; t < static_cast<int>(dofs.cells.size()); ++t) {
    const double a = fem::element_geometry(dofs, t).area;
    for (int i = 0; i < 3; ++i) w[dofs.cells[t][i]] += a / 3.0;
  }
  return w;
}

double pressure_mean(const Field& f) {
  const Vector w = pressure_weights(*f.dofs);
  return w.dot(f.p) / w.sum();
}

Vector convection_vector(const DofMap& dofs, const Vector& u, const Vector& v) {
  Vector out = Vector::Zero(dofs.velocity_dofs());
  const int nv = dofs.velocity_nodes();
  for (int t = 0; t < static_cast<int>(dofs.cells.size()); ++t) {
    const auto g = fem::element_geometry(dofs, t);
    const auto& c = dofs.cells[t];
    for (const auto& q : fem::kTriangleRule) {
      const auto b = fem::p2_basis(g, q.l0, q.l1, q.l2);
      const double w = q.w * g.area;
      const auto U = fem::sample_velocity(dofs, u, t, b);
      const auto W = fem::sample_velocity(dofs, v, t, b);
      // (u . grad) v
      const double tx = U.value.x * W.grad[0] + U.value.y * W.grad[1];
      const double ty = U.value.x * W.grad[2] + U.value.y * W.grad[3];
      for (int a = 0; a < 6; ++a) {
        const double udn = dot(U.value, b.dN[a]);
        out[c[a]] += 0.5 * w * (tx * b.N[a] - udn * W.value.x);
        out[nv + c[a]] += 0.5 * w * (ty * b.N[a] - udn * W.value.y);
      }
    }
  }
  return out;
}

double convection_form(const Field& u, const Field& v, const Field& phi) {
  if (u.dofs != v.dofs || u.dofs != phi.dofs) throw DofMismatch("convection_form: fields on different dof maps");
  return convection_vector(*u.dofs, u.u, v.u).dot(phi.u);
}

namespace fem {

void accumulate(const SpMat& src, SpMat& dst) {
  if (src.rows() != dst.rows() || src.cols() != dst.cols()) throw DofMismatch("accumulate: shape mismatch");
  scatter_add(src, 0, 0, dst);
}

std::vector<char> boundary_mask(const DofMap& dofs) {
  std::vector<char> mask(dofs.velocity_dofs(), 0);
  const int nv = dofs.velocity_nodes();
  for (int n = 0; n < nv; ++n)
    if (dofs.node_tag[n] >= 0) mask[n] = mask[nv + n] = 1;
  return mask;
}

Vector boundary_values(const DofMap& dofs, const BoundaryData& bc) {
  Vector vals = Vector::Zero(dofs.velocity_dofs());
  const int nv = dofs.velocity_nodes();
  for (BoundaryTag tag : kAllTags) {
    const auto& nodes = dofs.tag_nodes[static_cast<int>(tag)];
    if (nodes.empty()) continue;
    const auto it = bc.find(tag);
    if (it == bc.end() || !it->second) throw MissingTag("no boundary datum for tag " + to_string(tag));
    for (int n : nodes) {
      const Vec2 v = it->second(dofs.node_points[n]);
      vals[n] = v.x;
      vals[nv + n] = v.y;
    }
  }
  return vals;
}

void add_convection(const DofMap& dofs, const Vector& u0, double scale, Linearization kind, SpMat& block) {
  if (scale == 0.0) return;
  const int nv = dofs.velocity_nodes();
  for (int t = 0; t < static_cast<int>(dofs.cells.size()); ++t) {
    const auto g = fem::element_geometry(dofs, t);
    const auto& c = dofs.cells[t];
    // k[c][d][a][b]: test N_a e_c, trial N_b e_d.
    double k[2][2][6][6] = {};
    for (const auto& q : fem::kTriangleRule) {
      const auto b = fem::p2_basis(g, q.l0, q.l1, q.l2);
      const double w = 0.5 * scale * q.w * g.area;
      const auto U = fem::sample_velocity(dofs, u0, t, b);
      const double uc[2] = {U.value.x, U.value.y};
      std::array<double, 6> udn;
      for (int a = 0; a < 6; ++a) udn[a] = dot(U.value, b.dN[a]);
      for (int a = 0; a < 6; ++a)
        for (int bb = 0; bb < 6; ++bb) {
          const double t1 = w * (b.N[a] * udn[bb] - b.N[bb] * udn[a]);
          k[0][0][a][bb] += t1;
          k[1][1][a][bb] += t1;
          if (kind == Linearization::Newton) {
            const double nn = w * b.N[a] * b.N[bb];
            const double dna[2] = {b.dN[a].x, b.dN[a].y};
            for (int cc = 0; cc < 2; ++cc)
              for (int d = 0; d < 2; ++d)
                k[cc][d][a][bb] += nn * U.grad[2 * cc + d] - w * b.N[bb] * dna[d] * uc[cc];
          }
        }
    }
    for (int cc = 0; cc < 2; ++cc)
      for (int d = 0; d < 2; ++d) {
        if (kind == Linearization::Picard && cc != d) continue;
        for (int a = 0; a < 6; ++a)
          for (int bb = 0; bb < 6; ++bb) entry(block, cc * nv + c[a], d * nv + c[bb]) += k[cc][d][a][bb];
      }
  }
}

struct SaddleSolver::Impl {
  Eigen::UmfPackLU<SpMat> lu;
};

SaddleSolver::SaddleSolver(std::shared_ptr<const DofMap> dofs, std::vector<char> constrained)
    : dofs_(std::move(dofs)), constrained_(std::move(constrained)), impl_(std::make_unique<Impl>()) {
  const DofMap& dm = *dofs_;
  if (static_cast<int>(constrained_.size()) != dm.velocity_dofs())
    throw DofMismatch("constraint mask size differs from velocity dof count");
  const int nv = dm.velocity_nodes(), V = dm.num_vertices, nu = dm.velocity_dofs();

  // Pressure components: vertices linked through triangles.
  std::vector<int> parent(V);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& c : dm.cells)
    for (int i = 1; i < 3; ++i) parent[find(c[i])] = find(c[0]);
  component_.assign(V, -1);
  std::vector<int> root_id(V, -1);
  for (int v = 0; v < V; ++v) {
    const int r = find(v);
    if (root_id[r] < 0) {
      root_id[r] = static_cast<int>(pinned_.size());
      pinned_.push_back(v);
    }
    component_[v] = root_id[r];
  }
  weights_ = pressure_weights(dm);

  vpattern_ = channel_eq::velocity_pattern(dm, true);
  const auto adj = node_adjacency(dm);
  std::vector<std::vector<int>> cols(nu + V);
  for (int c = 0; c < 2; ++c)
    for (int n = 0; n < nv; ++n) {
      auto& col = cols[c * nv + n];
      for (int d = 0; d < 2; ++d)
        for (int m : adj[n]) col.push_back(d * nv + m);
      for (int m : adj[n])
        if (m < V) col.push_back(nu + m);
    }
  for (int q = 0; q < V; ++q) {
    auto& col = cols[nu + q];
    for (int d = 0; d < 2; ++d)
      for (int m : adj[q]) col.push_back(d * nv + m);
    col.push_back(nu + q);
  }
  K_ = pattern_from_columns(nu + V, cols);
  Kc_ = K_;
  auto& control = impl_->lu.umfpackControl();
  control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_SYMMETRIC;
  control[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
}

SaddleSolver::~SaddleSolver() = default;

void SaddleSolver::factorize(const SpMat& velocity_block, const SpMat& B) {
  const DofMap& dm = *dofs_;
  const int nu = dm.velocity_dofs();
  if (velocity_block.rows() != nu || velocity_block.cols() != nu || B.rows() != dm.pressure_dofs() ||
      B.cols() != nu)
    throw DofMismatch("saddle blocks do not match the dof map");
  std::fill(K_.valuePtr(), K_.valuePtr() + K_.nonZeros(), 0.0);
  scatter_add(velocity_block, 0, 0, K_);
  scatter_add(B, nu, 0, K_);
  const SpMat Bt = B.transpose();
  scatter_add(Bt, 0, nu, K_);

  std::vector<char> fixed(K_.rows(), 0);
  for (int i = 0; i < nu; ++i) fixed[i] = constrained_[i];
  for (int q : pinned_) fixed[nu + q] = 1;
  const int* inner = K_.innerIndexPtr();
  const double* src = K_.valuePtr();
  double* dst = Kc_.valuePtr();
  for (int j = 0; j < K_.outerSize(); ++j) {
    for (int k = K_.outerIndexPtr()[j]; k < K_.outerIndexPtr()[j + 1]; ++k) {
      const int i = inner[k];
      if (fixed[i] || fixed[j])
        dst[k] = (i == j) ? 1.0 : 0.0;
      else
        dst[k] = src[k];
    }
  }
  if (!analyzed_) {
    // METIS keeps process-wide random state, so concurrent orderings would
    // depend on thread interleaving.
    static std::mutex ordering;
    const std::lock_guard<std::mutex> lock(ordering);
    impl_->lu.analyzePattern(Kc_);
    analyzed_ = true;
  }
  impl_->lu.factorize(Kc_);
  ++factorizations_;
  if (impl_->lu.info() != Eigen::Success) {
    throw SingularSystem("sparse LU factorization failed (singular saddle system; check inf-sup "
                         "stability and pressure gauge)");
  }
}

void SaddleSolver::solve(const Vector& f, const Vector& g, const Vector& values, Vector& u,
                         Vector& p) const {
  const DofMap& dm = *dofs_;
  const int nu = dm.velocity_dofs(), V = dm.pressure_dofs();
  if (!analyzed_) throw SingularSystem("saddle solve requested before factorization");
  Vector x0 = Vector::Zero(nu + V);
  for (int i = 0; i < nu; ++i)
    if (constrained_[i]) x0[i] = values[i];
  Vector b(nu + V);
  b << f, g;
  b -= K_ * x0;
  for (int i = 0; i < nu; ++i)
    if (constrained_[i]) b[i] = values[i];
  for (int q : pinned_) b[nu + q] = 0.0;

  Vector x = impl_->lu.solve(b);
  const double bnorm = std::max(b.norm(), 1e-300);
  Vector r = b - Kc_ * x;
  if (r.norm() > 1e-12 * bnorm) {
    x += impl_->lu.solve(r);
    r = b - Kc_ * x;
  }
  if (!x.allFinite() || r.norm() > 1e-10 * bnorm) {
    std::ostringstream msg;
    msg << "saddle solve residual " << r.norm() << " exceeds 1e-10 of rhs norm " << bnorm;
    throw SingularSystem(msg.str());
  }
  u = x.head(nu);
  p = x.tail(V);
  std::vector<double> wsum(pinned_.size(), 0.0), psum(pinned_.size(), 0.0);
  for (int v = 0; v < V; ++v) {
    wsum[component_[v]] += weights_[v];
    psum[component_[v]] += weights_[v] * p[v];
  }
  for (int v = 0; v < V; ++v) p[v] -= psum[component_[v]] / wsum[component_[v]];
}

}  // namespace fem

SaddleSystem make_stokes_system(std::shared_ptr<const DofMap> dofs) {
  SaddleSystem s;
  s.A = assemble_viscous(*dofs);
  s.B = assemble_divergence(*dofs);
  s.f = Vector::Zero(dofs->velocity_dofs());
  s.g = Vector::Zero(dofs->pressure_dofs());
  s.dofs = std::move(dofs);
  return s;
}

SaddleSystem apply_dirichlet(SaddleSystem system, const BoundaryData& bc) {
  system.constrained_values = fem::boundary_values(*system.dofs, bc);
  system.constrained = fem::boundary_mask(*system.dofs);
  system.has_constraints = true;
  return system;
}

Field solve_saddle(const SaddleSystem& system) {
  const DofMap& dm = *system.dofs;
  std::vector<char> mask = system.has_constraints ? system.constrained
                                                  : std::vector<char>(dm.velocity_dofs(), 0);
  Vector values = system.has_constraints ? system.constrained_values : Vector::Zero(dm.velocity_dofs());
  fem::SaddleSolver solver(system.dofs, mask);
  SpMat block = solver.velocity_pattern();
  scatter_add(system.A, 0, 0, block);
  if (system.N) scatter_add(*system.N, 0, 0, block);
  solver.factorize(block, system.B);
  Field out = zero_field(system.dofs);
  solver.solve(system.f, system.g, values, out.u, out.p);
  return out;
}

}  // namespace channel_eq
