#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dforge/error.hpp"
#include "dforge/mesh.hpp"

using namespace dforge;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};

TriMesh two_triangle_square() { return generate_structured_rect(1, 1, kUnit); }

}  // namespace

TEST_CASE("structured rectangle counts") {
  const TriMesh m1 = two_triangle_square();
  CHECK(m1.num_triangles() == 2);
  CHECK(m1.num_nodes() == 4);
  CHECK(m1.total_area() == doctest::Approx(1.0).epsilon(1e-14));

  const TriMesh m2 = generate_structured_rect(2, 2, kUnit);
  CHECK(m2.num_triangles() == 8);
  CHECK(m2.num_nodes() == 9);
}

TEST_CASE("boundary tagging matches the enumerated lattice boundary") {
  for (int cells : {1, 3, 4, 7}) {
    const TriMesh m = generate_structured_rect(cells, cells, kUnit, {}, [](const Point&) { return 1; });
    CHECK(m.num_nodes() == (cells + 1) * (cells + 1));
    int expected = 0;
    for (int j = 0; j <= cells; ++j)
      for (int i = 0; i <= cells; ++i)
        if (i == 0 || i == cells || j == 0 || j == cells) ++expected;
    CHECK(static_cast<int>(m.nodes_with_boundary_tag(1).size()) == expected);
    CHECK(static_cast<int>(m.boundary_nodes().size()) == expected);
  }
  // 4x4 cells: 25 lattice points, 16 of them on the boundary.
  const TriMesh m = generate_structured_rect(4, 4, kUnit, {}, [](const Point&) { return 1; });
  CHECK(m.num_nodes() == 25);
  CHECK(m.nodes_with_boundary_tag(1).size() == 16);
}

TEST_CASE("degenerate bounds are rejected") {
  CHECK_THROWS_AS(generate_structured_rect(2, 2, Rect{0.0, 0.0, 0.0, 1.0}), InvalidGeometry);
  CHECK_THROWS_AS(generate_structured_rect(0, 2, kUnit), InvalidGeometry);
}

TEST_CASE("triangle validation") {
  std::vector<Point> nodes{{0, 0}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(TriMesh(nodes, {{0, 1, 3}}, {1}, {0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(TriMesh(nodes, {{0, 2, 1}}, {1}, {0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(TriMesh(nodes, {{0, 0, 1}}, {1}, {0, 0, 0}), ValidationError);
  CHECK_NOTHROW(TriMesh(nodes, {{0, 1, 2}}, {1}, {1, 1, 1}));
}

TEST_CASE("interior nodes cannot carry boundary tags") {
  const TriMesh m = generate_structured_rect(2, 2, kUnit);
  std::vector<int> tags(m.num_nodes(), 0);
  tags[4] = 3;  // centre node of the 3x3 lattice
  CHECK_THROWS_AS(TriMesh(m.nodes(), m.triangles(), m.region_tags(), tags), ValidationError);
}

TEST_CASE("hanging nodes are rejected") {
  // Square split into a left triangle and two right triangles meeting at an
  // edge midpoint that the left triangle does not share.
  std::vector<Point> nodes{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  std::vector<Triangle> tris{{0, 1, 3}, {1, 2, 4}, {4, 2, 3}};
  CHECK_THROWS_AS(TriMesh(nodes, tris, {1, 1, 1}, {0, 0, 0, 0, 0}), ValidationError);
}

TEST_CASE("uniform refinement") {
  const TriMesh m = two_triangle_square();
  const TriMesh r1 = refine_uniform(m);
  CHECK(r1.num_triangles() == 8);
  CHECK(r1.num_nodes() == 9);
  CHECK(r1.num_nodes() == m.num_nodes() + static_cast<int>(m.edges().size()));
  const TriMesh r2 = refine_uniform(r1);
  CHECK(r2.num_triangles() == 32);
  CHECK(r2.total_area() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < m.num_nodes(); ++i) {
    CHECK(r1.node(i).x == m.node(i).x);
    CHECK(r1.node(i).y == m.node(i).y);
  }
}

TEST_CASE("refinement preserves the region partition of area") {
  const RegionFn regions = [](const Point& p) { return p.x < 0.5 ? 1 : (p.y < 0.25 ? 2 : 3); };
  const TriMesh m = generate_structured_rect(4, 4, kUnit, regions);
  const TriMesh r = refine_uniform(m);
  for (int tag : {1, 2, 3}) CHECK(std::abs(r.region_area(tag) - m.region_area(tag)) <= 1e-12);
}

TEST_CASE("refinement propagates boundary tags along tagged edges") {
  const BoundaryFn tag = [](const Point& p) { return p.y < 1e-12 ? 2 : 1; };
  const TriMesh m = generate_structured_rect(2, 2, kUnit, {}, tag);
  const TriMesh r = refine_uniform(m);
  for (int i = 0; i < r.num_nodes(); ++i) {
    if (!r.on_boundary()[i]) {
      CHECK(r.boundary_tags()[i] == 0);
      continue;
    }
    if (r.node(i).y < 1e-12) CHECK(r.boundary_tags()[i] == 2);
    else if (r.node(i).y > 1e-12) CHECK(r.boundary_tags()[i] == 1);
  }
}

TEST_CASE("point location") {
  const TriMesh m = generate_structured_rect(3, 2, Rect{-1.0, 0.0, 2.0, 1.5});
  SUBCASE("centroids") {
    for (int t = 0; t < m.num_triangles(); ++t) {
      const PointLocation loc = m.locate(m.centroid(t));
      CHECK(loc.triangle == t);
      for (double b : loc.bary) CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
  }
  SUBCASE("nodes") {
    for (int i = 0; i < m.num_nodes(); ++i) {
      const PointLocation loc = m.locate(m.node(i));
      const Triangle& tri = m.triangle(loc.triangle);
      int hits = 0;
      double x = 0.0, y = 0.0;
      for (int a = 0; a < 3; ++a) {
        if (tri[a] == i && std::abs(loc.bary[a] - 1.0) < 1e-12) ++hits;
        x += loc.bary[a] * m.node(tri[a]).x;
        y += loc.bary[a] * m.node(tri[a]).y;
      }
      CHECK(hits == 1);
      CHECK(std::abs(x - m.node(i).x) <= 1e-12);
      CHECK(std::abs(y - m.node(i).y) <= 1e-12);
    }
  }
  SUBCASE("random interior points round trip") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-1.0, 2.0), uy(0.0, 1.5);
    for (int s = 0; s < 200; ++s) {
      const Point p{ux(rng), uy(rng)};
      const PointLocation loc = m.locate(p);
      const Triangle& tri = m.triangle(loc.triangle);
      double x = 0.0, y = 0.0, sum = 0.0;
      for (int a = 0; a < 3; ++a) {
        CHECK(loc.bary[a] >= -1e-12);
        x += loc.bary[a] * m.node(tri[a]).x;
        y += loc.bary[a] * m.node(tri[a]).y;
        sum += loc.bary[a];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(std::abs(x - p.x) <= 1e-12);
      CHECK(std::abs(y - p.y) <= 1e-12);
    }
  }
  SUBCASE("shared edge resolves to the lowest index") {
    // The diagonal of the first cell is shared by triangles 0 and 1.
    const TriMesh sq = two_triangle_square();
    CHECK(sq.locate(Point{0.5, 0.5}).triangle == 0);
  }
  SUBCASE("outside the hull") {
    CHECK_THROWS_AS(m.locate(Point{2.1, 0.5}), LocationFailure);
    CHECK_NOTHROW(m.locate(Point{2.0 + 1e-11, 0.5}));
  }
}

TEST_CASE("mesh text round trip") {
  const RegionFn regions = [](const Point& p) { return p.x < 0.3 ? 4 : 1; };
  const TriMesh m = generate_structured_rect(3, 3, Rect{0.0, 0.0, 0.7, 1.3}, regions, [](const Point&) { return 2; });
  const TriMesh back = load_mesh(save_mesh(m));
  REQUIRE(back.num_nodes() == m.num_nodes());
  REQUIRE(back.num_triangles() == m.num_triangles());
  for (int i = 0; i < m.num_nodes(); ++i) {
    CHECK(std::abs(back.node(i).x - m.node(i).x) <= 1e-15);
    CHECK(std::abs(back.node(i).y - m.node(i).y) <= 1e-15);
    CHECK(back.boundary_tags()[i] == m.boundary_tags()[i]);
  }
  for (int t = 0; t < m.num_triangles(); ++t) {
    CHECK(back.triangle(t) == m.triangle(t));
    CHECK(back.region_tags()[t] == m.region_tags()[t]);
  }
}

TEST_CASE("mesh text errors") {
  CHECK_THROWS_AS(load_mesh("trimesh v1\nnodes 0\ntriangles 0\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("not a mesh\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("trimesh v1\nnodes 3\n0 0 0\n1 0 0\n0 1 0\ntriangles 1\n0 1 5 1\n"), ValidationError);
  try {
    load_mesh("trimesh v1\nnodes 3\n0 0 0\n1 zero 0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_NOTHROW(load_mesh("# comment\ntrimesh v1\nnodes 3\n0 0 0\n1 0 0\n0 1 0\ntriangles 1\n0 1 2 1\n"));
}

TEST_CASE("extraction keeps area of selected triangles") {
  const TriMesh m = generate_structured_rect(8, 8, Rect{-1.0, -1.0, 1.0, 1.0});
  const TriMesh disc = extract_triangles(m, [](const Point& c, int) { return c.x * c.x + c.y * c.y < 0.8; });
  double area = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Point c = m.centroid(t);
    if (c.x * c.x + c.y * c.y < 0.8) area += m.triangle_area(t);
  }
  CHECK(disc.total_area() == doctest::Approx(area).epsilon(1e-12));
  for (int i = 0; i < disc.num_nodes(); ++i) CHECK((disc.boundary_tags()[i] != 0) == disc.on_boundary()[i]);
}
