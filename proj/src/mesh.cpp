#include "dpg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace dpg {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double signed_area(const Vertex& a, const Vertex& b, const Vertex& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double distance(const Vertex& a, const Vertex& b) { return std::hypot(b.x - a.x, b.y - a.y); }

int longest_edge(const std::vector<Vertex>& vs, const std::array<int, 3>& v) {
  int best = 0;
  double best_len = -1.0;
  for (int k = 0; k < 3; ++k) {
    const double len = distance(vs[v[(k + 1) % 3]], vs[v[(k + 2) % 3]]);
    // strict comparison with a relative margin keeps the lowest index on ties
    if (len > best_len * (1.0 + 1e-12)) {
      best = k;
      best_len = len;
    }
  }
  return best;
}

}  // namespace

Mesh::Mesh(std::vector<Vertex> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  for (const auto& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw std::invalid_argument("mesh: non-finite vertex coordinate");
    }
  }
  const int nv = num_vertices();
  for (auto& t : triangles_) {
    for (int id : t.v) {
      if (id < 0 || id >= nv) throw std::invalid_argument("mesh: vertex index out of range");
    }
    if (t.refinement_edge < 0 || t.refinement_edge > 2) {
      throw std::invalid_argument("mesh: refinement edge index must be 0, 1 or 2");
    }
    const double a = signed_area(vertices_[t.v[0]], vertices_[t.v[1]], vertices_[t.v[2]]);
    const double scale = std::max({distance(vertices_[t.v[0]], vertices_[t.v[1]]),
                                   distance(vertices_[t.v[1]], vertices_[t.v[2]]),
                                   distance(vertices_[t.v[2]], vertices_[t.v[0]])});
    if (std::abs(a) <= 1e-14 * scale * scale) {
      throw std::invalid_argument("mesh: degenerate (collinear) triangle");
    }
    if (a < 0.0) {
      std::swap(t.v[1], t.v[2]);
      if (t.refinement_edge != 0) t.refinement_edge = 3 - t.refinement_edge;
    }
  }

  triangle_edges_.resize(triangles_.size());
  edge_lookup_.reserve(3 * triangles_.size());
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& v = triangles_[t].v;
    for (int k = 0; k < 3; ++k) {
      const int a = v[(k + 1) % 3];
      const int b = v[(k + 2) % 3];
      const auto key = edge_key(a, b);
      auto [it, inserted] = edge_lookup_.try_emplace(key, num_edges());
      if (inserted) {
        Edge e;
        e.v = {std::min(a, b), std::max(a, b)};
        e.elements = {t, -1};
        edges_.push_back(e);
      } else {
        Edge& e = edges_[it->second];
        if (e.elements[1] != -1) {
          throw std::invalid_argument("mesh: edge shared by more than two triangles");
        }
        e.elements[1] = t;
        e.boundary = false;
      }
      triangle_edges_[t][k] = it->second;
    }
  }

  h_max_ = 0.0;
  for (int t = 0; t < num_triangles(); ++t) h_max_ = std::max(h_max_, diameter(t));
}

int Mesh::find_edge(int a, int b) const {
  const auto it = edge_lookup_.find(edge_key(a, b));
  return it == edge_lookup_.end() ? -1 : it->second;
}

double Mesh::area(int t) const {
  const auto& v = triangles_[t].v;
  return signed_area(vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]);
}

double Mesh::diameter(int t) const {
  const auto& v = triangles_[t].v;
  return std::max({distance(vertices_[v[0]], vertices_[v[1]]), distance(vertices_[v[1]], vertices_[v[2]]),
                   distance(vertices_[v[2]], vertices_[v[0]])});
}

double Mesh::min_angle(int t) const {
  const auto& v = triangles_[t].v;
  double result = std::numbers::pi;
  for (int k = 0; k < 3; ++k) {
    const Vertex& o = vertices_[v[k]];
    const Vertex& a = vertices_[v[(k + 1) % 3]];
    const Vertex& b = vertices_[v[(k + 2) % 3]];
    const double ax = a.x - o.x, ay = a.y - o.y, bx = b.x - o.x, by = b.y - o.y;
    result = std::min(result, std::atan2(std::abs(ax * by - ay * bx), ax * bx + ay * by));
  }
  return result;
}

double Mesh::edge_length(int e) const { return distance(vertices_[edges_[e].v[0]], vertices_[edges_[e].v[1]]); }

double Mesh::total_area() const {
  double sum = 0.0;
  for (int t = 0; t < num_triangles(); ++t) sum += area(t);
  return sum;
}

double Mesh::boundary_length() const {
  double sum = 0.0;
  for (int e = 0; e < num_edges(); ++e) {
    if (edges_[e].boundary) sum += edge_length(e);
  }
  return sum;
}

bool Mesh::is_conforming() const {
  for (const auto& e : edges_) {
    const bool one = e.elements[0] >= 0 && e.elements[1] < 0;
    const bool two = e.elements[0] >= 0 && e.elements[1] >= 0;
    if (!(one || two) || e.boundary != one) return false;
  }
  // Hash vertices by position, then look for a vertex at each boundary
  // edge's midpoint.
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;
  const double cell = std::max(h_max_, 1e-300) * 1e-3;
  auto bucket_of = [cell](double x, double y) {
    const auto ix = static_cast<std::int64_t>(std::floor(x / cell));
    const auto iy = static_cast<std::int64_t>(std::floor(y / cell));
    return (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint64_t>(iy & 0xffffffff);
  };
  for (int i = 0; i < num_vertices(); ++i) buckets[bucket_of(vertices_[i].x, vertices_[i].y)].push_back(i);
  for (int e = 0; e < num_edges(); ++e) {
    if (!edges_[e].boundary) continue;
    const Vertex& a = vertices_[edges_[e].v[0]];
    const Vertex& b = vertices_[edges_[e].v[1]];
    const double mx = 0.5 * (a.x + b.x), my = 0.5 * (a.y + b.y);
    const double tol = 1e-10 * edge_length(e);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        const auto it = buckets.find(bucket_of(mx + dx * cell, my + dy * cell));
        if (it == buckets.end()) continue;
        for (int i : it->second) {
          if (std::abs(vertices_[i].x - mx) <= tol && std::abs(vertices_[i].y - my) <= tol) return false;
        }
      }
    }
  }
  return true;
}

bool Mesh::operator==(const Mesh& other) const {
  if (num_vertices() != other.num_vertices() || num_triangles() != other.num_triangles()) return false;
  for (int i = 0; i < num_vertices(); ++i) {
    if (vertices_[i].x != other.vertices_[i].x || vertices_[i].y != other.vertices_[i].y) return false;
  }
  for (int t = 0; t < num_triangles(); ++t) {
    if (triangles_[t].v != other.triangles_[t].v ||
        triangles_[t].refinement_edge != other.triangles_[t].refinement_edge) {
      return false;
    }
  }
  return true;
}

Mesh unit_square_mesh(int n) {
  if (n < 1) throw std::invalid_argument("unit_square_mesh: subdivision count must be >= 1");
  std::vector<Vertex> vertices;
  vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = j * (n + 1) + i;
      const int b = a + 1;
      const int c = b + n + 1;
      const int d = a + n + 1;
      // the diagonal a-c is the hypotenuse of both halves
      triangles.push_back({{a, b, c}, 1});
      triangles.push_back({{a, c, d}, 2});
    }
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

Mesh lshape_mesh() {
  std::vector<Vertex> vertices = {{0.0, 0.0},  {1.0, 0.0},   {1.0, 1.0},  {0.0, 1.0},
                                  {-1.0, 1.0}, {-1.0, 0.0}, {-1.0, -1.0}, {0.0, -1.0}};
  std::vector<Triangle> triangles;
  const std::array<std::array<int, 3>, 6> corners = {{{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}, {0, 5, 6}, {0, 6, 7}}};
  for (const auto& c : corners) triangles.push_back({c, longest_edge(vertices, c)});
  return Mesh(std::move(vertices), std::move(triangles));
}

Mesh refine_marked(const Mesh& mesh, std::span<const int> marked) {
  const int nt = mesh.num_triangles();
  std::vector<char> edge_marked(static_cast<std::size_t>(mesh.num_edges()), 0);
  std::vector<int> queue;
  auto mark_edge = [&](int e) {
    if (edge_marked[e]) return;
    edge_marked[e] = 1;
    for (int t : mesh.edges()[e].elements) {
      if (t >= 0) queue.push_back(t);
    }
  };
  for (int t : marked) {
    if (t < 0 || t >= nt) throw std::out_of_range("refine_marked: triangle index out of range");
    mark_edge(mesh.triangle_edge(t, mesh.triangles()[t].refinement_edge));
  }
  // closure: a triangle with any marked edge must also bisect its refinement edge
  while (!queue.empty()) {
    const int t = queue.back();
    queue.pop_back();
    const auto& edges = mesh.triangle_edges(t);
    const bool any = edge_marked[edges[0]] || edge_marked[edges[1]] || edge_marked[edges[2]];
    if (any) mark_edge(edges[mesh.triangles()[t].refinement_edge]);
  }

  std::vector<Vertex> vertices = mesh.vertices();
  std::vector<int> midpoint(static_cast<std::size_t>(mesh.num_edges()), -1);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (!edge_marked[e]) continue;
    const Vertex& a = vertices[mesh.edges()[e].v[0]];
    const Vertex& b = vertices[mesh.edges()[e].v[1]];
    midpoint[e] = static_cast<int>(vertices.size());
    vertices.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
  }

  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(nt) * 2);
  // Children of (n, e1, e2) with newest vertex n bisected at m on e1-e2 are
  // (m, n, e1) and (m, e2, n); both keep newest vertex m at position 0, so
  // their refinement edges are the parent's two remaining edges.
  auto bisect = [&](auto&& self, const std::array<int, 3>& v, int r) -> void {
    const int n = v[r], e1 = v[(r + 1) % 3], e2 = v[(r + 2) % 3];
    const int e = mesh.find_edge(e1, e2);
    if (e < 0 || !edge_marked[e]) {
      triangles.push_back({v, r});
      return;
    }
    const int m = midpoint[e];
    self(self, {m, n, e1}, 0);
    self(self, {m, e2, n}, 0);
  };
  for (int t = 0; t < nt; ++t) bisect(bisect, mesh.triangles()[t].v, mesh.triangles()[t].refinement_edge);
  return Mesh(std::move(vertices), std::move(triangles));
}

Mesh refine_uniform(const Mesh& mesh) {
  auto sweep = [](const Mesh& m) {
    std::vector<int> all(static_cast<std::size_t>(m.num_triangles()));
    for (int t = 0; t < m.num_triangles(); ++t) all[t] = t;
    return refine_marked(m, all);
  };
  return sweep(sweep(mesh));
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  char buf[96];
  out << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << '\n';
  for (const auto& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", p.x, p.y);
    out << buf;
  }
  for (const auto& t : mesh.triangles()) {
    out << "t " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.refinement_edge << '\n';
  }
}

Mesh read_mesh(std::istream& in) {
  std::string word;
  int nv = 0, nt = 0;
  std::string tri_word;
  if (!(in >> word >> nv >> tri_word >> nt) || word != "vertices" || tri_word != "triangles" || nv < 0 || nt < 0) {
    throw std::runtime_error("read_mesh: malformed header");
  }
  std::vector<Vertex> vertices(static_cast<std::size_t>(nv));
  for (auto& p : vertices) {
    std::string xs, ys;
    if (!(in >> word >> xs >> ys) || word != "v") throw std::runtime_error("read_mesh: malformed vertex line");
    p.x = std::strtod(xs.c_str(), nullptr);
    p.y = std::strtod(ys.c_str(), nullptr);
  }
  std::vector<Triangle> triangles(static_cast<std::size_t>(nt));
  for (auto& t : triangles) {
    if (!(in >> word >> t.v[0] >> t.v[1] >> t.v[2] >> t.refinement_edge) || word != "t") {
      throw std::runtime_error("read_mesh: malformed triangle line");
    }
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

void write_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mesh: cannot open " + path);
  write_mesh(out, mesh);
}

Mesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_mesh: cannot open " + path);
  return read_mesh(in);
}

}  // namespace dpg
