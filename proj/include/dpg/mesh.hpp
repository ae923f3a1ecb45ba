#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dpg {

struct Vertex {
  double x = 0.0;
  double y = 0.0;
};

/// Triangle with counterclockwise vertices. Local edge k is the edge opposite
/// vertex k; `refinement_edge` is the edge opposite the newest vertex.
struct Triangle {
  std::array<int, 3> v{};
  int refinement_edge = 0;
};

/// Skeleton edge, oriented from the lower to the higher vertex index.
struct Edge {
  std::array<int, 2> v{};
  std::array<int, 2> elements{-1, -1};
  bool boundary = true;
};

/// Conforming triangulation with its skeleton. Immutable once built; the
/// refinement routines return new meshes.
class Mesh {
 public:
  Mesh() = default;

  /// Builds topology. Clockwise triangles are flipped (the refinement edge
  /// index follows the flip); degenerate triangles are rejected.
  Mesh(std::vector<Vertex> vertices, std::vector<Triangle> triangles);

  [[nodiscard]] const std::vector<Vertex>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<Triangle>& triangles() const { return triangles_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }

  [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
  [[nodiscard]] int num_triangles() const { return static_cast<int>(triangles_.size()); }
  [[nodiscard]] int num_edges() const { return static_cast<int>(edges_.size()); }

  /// Global id of local edge k (opposite vertex k) of triangle t.
  [[nodiscard]] int triangle_edge(int t, int k) const { return triangle_edges_[t][k]; }
  [[nodiscard]] const std::array<int, 3>& triangle_edges(int t) const { return triangle_edges_[t]; }

  /// Edge id joining vertices a and b, or -1.
  [[nodiscard]] int find_edge(int a, int b) const;

  [[nodiscard]] double area(int t) const;
  [[nodiscard]] double diameter(int t) const;
  [[nodiscard]] double min_angle(int t) const;
  [[nodiscard]] double edge_length(int e) const;
  [[nodiscard]] double total_area() const;
  [[nodiscard]] double boundary_length() const;
  [[nodiscard]] double h_max() const { return h_max_; }

  /// Topology scan: at most two elements per edge, boundary flag consistent,
  /// and no vertex sitting on the midpoint of a boundary edge (the only place
  /// a newest-vertex-bisection hanging node can appear).
  [[nodiscard]] bool is_conforming() const;

  bool operator==(const Mesh& other) const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::unordered_map<std::uint64_t, int> edge_lookup_;
  double h_max_ = 0.0;
};

/// (0,1)^2 split into n x n cells, each cut by its lower-left to upper-right
/// diagonal. Throws std::invalid_argument for n < 1.
Mesh unit_square_mesh(int n);

/// (-1,1)^2 minus [0,1]x[-1,0]: three unit squares, each split by the
/// diagonal through the reentrant corner at the origin.
Mesh lshape_mesh();

/// Newest-vertex bisection of the marked triangles plus conforming closure.
Mesh refine_marked(const Mesh& mesh, std::span<const int> marked);

/// Two full bisection sweeps, so every element diameter halves.
Mesh refine_uniform(const Mesh& mesh);

/// Plain-text dump: `vertices <nv> triangles <nt>`, then `v x y` and
/// `t i j k r` lines. Coordinates are written with 17 significant digits.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void write_mesh(const std::string& path, const Mesh& mesh);
Mesh read_mesh(const std::string& path);

}  // namespace dpg
