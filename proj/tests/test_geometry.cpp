#include <cmath>
#include <map>
#include <random>
#include <variant>

#include <gtest/gtest.h>

#include "lyapcert/hypersurface.hpp"

namespace lyapcert {
namespace {

GridSpec square(double half, int res) { return GridSpec{2, {-half, -half, 0}, {half, half, 0}, {res, res, 1}}; }
GridSpec cube(double half, int res) { return GridSpec{3, {-half, -half, -half}, {half, half, half}, {res, res, res}}; }

Expr F2(const std::string& s) { return parse_expression(s, 2); }
Expr F3(const std::string& s) { return parse_expression(s, 3); }

Hypersurface surface(const Expr& F, const GridSpec& spec, double level, std::size_t component = 0) {
  const auto comps = extract_level_components(build_grid(F, spec), level);
  EXPECT_GT(comps.size(), component);
  Classification c = classify_closed(comps.at(component));
  if (auto* r = std::get_if<Rejection>(&c)) throw GeometryError("rejected: " + to_string(r->reason));
  return std::get<Hypersurface>(c);
}

Hypersurface circle(double r, int res = 256, Vec centre = {}) {
  const std::string F = "(x-(" + std::to_string(centre.x) + "))^2+(y-(" + std::to_string(centre.y) + "))^2";
  return surface(F2(F), square(2.0 + std::max(std::fabs(centre.x), std::fabs(centre.y)), res), r * r);
}

// ---------------------------------------------------------------------------
// build_grid

TEST(BuildGrid, CachesFiniteValues) {
  const SampleGrid g = build_grid(F2("x^2+y^2"), square(2, 128));
  EXPECT_EQ(g.node_count(), 129 * 129);
  EXPECT_EQ(g.value(0, 0), 8.0);
  EXPECT_EQ(g.value(64, 64), 0.0);
  const Vec p = g.node_position(10, 20);
  EXPECT_EQ(g.value(10, 20), evaluate(g.function(), p.head(2)));
}

TEST(BuildGrid, NonFiniteNodeIsReported) {
  try {
    build_grid(F2("1/x"), square(2, 8));
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.count(), 9);  // the column x = 0
  }
}

TEST(BuildGrid, ResolutionBelowMinimumRejected) {
  EXPECT_THROW(build_grid(F2("x"), square(2, 4)), GeometryError);
  GridSpec bad = square(2, 16);
  bad.hi.x = bad.lo.x;
  EXPECT_THROW(bad.validate(), GeometryError);
  GridSpec four = square(2, 16);
  four.dimension = 4;
  EXPECT_THROW(four.validate(), GeometryError);
}

// ---------------------------------------------------------------------------
// extract_level_components

TEST(ExtractLevel, UnitCircleIsOneComponentNearTheCircle) {
  const auto comps = extract_level_components(build_grid(F2("x^2+y^2"), square(2, 256)), 1.0);
  ASSERT_EQ(comps.size(), 1u);
  for (const Vec& v : comps[0].vertices) EXPECT_NEAR(norm(v), 1.0, 1e-3);
}

TEST(ExtractLevel, NegativeLevelIsEmpty) {
  EXPECT_TRUE(extract_level_components(build_grid(F2("x^2+y^2"), square(2, 64)), -1.0).empty());
}

TEST(ExtractLevel, ProductOfCirclesGivesTwoComponents) {
  const GridSpec spec{2, {-2, -2, 0}, {7, 2, 0}, {288, 128, 1}};
  const LevelExtraction ex = extract_level(build_grid(F2("(x^2+y^2-1)*((x-5)^2+y^2-1)"), spec), 0.0);
  EXPECT_TRUE(ex.nudged);
  ASSERT_EQ(ex.components.size(), 2u);
  for (const auto& c : ex.components) EXPECT_TRUE(std::holds_alternative<Hypersurface>(classify_closed(c)));
}

TEST(ExtractLevel, NudgeKeepsLevelOffNodes) {
  const LevelExtraction ex = extract_level(build_grid(F2("x^2+y^2"), square(2, 64)), 1.0);
  EXPECT_TRUE(ex.nudged);
  EXPECT_LT(ex.level, 1.0);
  EXPECT_NEAR(ex.level, 1.0, 1e-11);
}

TEST(ExtractLevel, VertexNumberingIsDeterministic) {
  const auto a = extract_level_components(build_grid(F2("x^2+2*y^2"), square(2, 64)), 0.7);
  const auto b = extract_level_components(build_grid(F2("x^2+2*y^2"), square(2, 64)), 0.7);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a[0].vertices.size(); ++i) {
    EXPECT_EQ(a[0].vertices[i].x, b[0].vertices[i].x);
    EXPECT_EQ(a[0].vertices[i].y, b[0].vertices[i].y);
  }
}

// ---------------------------------------------------------------------------
// classify_closed

TEST(ClassifyClosed, UnitCircleAccepted) {
  const auto comps = extract_level_components(build_grid(F2("x^2+y^2"), square(2, 128)), 1.0);
  EXPECT_TRUE(std::holds_alternative<Hypersurface>(classify_closed(comps.at(0))));
}

TEST(ClassifyClosed, StraightLineTouchesBox) {
  const auto comps = extract_level_components(build_grid(F2("x"), square(2, 64)), 0.5);
  ASSERT_EQ(comps.size(), 1u);
  const Classification c = classify_closed(comps[0]);
  ASSERT_TRUE(std::holds_alternative<Rejection>(c));
  EXPECT_EQ(std::get<Rejection>(c).reason, RejectionReason::kTouchesBox);
  EXPECT_EQ(to_string(std::get<Rejection>(c).reason), "touches-box");
}

TEST(ClassifyClosed, FigureEightSplitsIntoTwoOvals) {
  const auto comps = extract_level_components(build_grid(F2("x^4 - x^2 + y^2"), square(2, 256)), 0.0);
  ASSERT_EQ(comps.size(), 2u);
  for (const auto& c : comps) {
    const Classification cls = classify_closed(c);
    ASSERT_TRUE(std::holds_alternative<Hypersurface>(cls));
    const Hypersurface& H = std::get<Hypersurface>(cls);
    EXPECT_NEAR(H.diameter(), 1.0, 0.02);
  }
}

TEST(ClassifyClosed, TinyComponentTooSmall) {
  // A circle well inside one cell yields a 4-vertex loop.
  const auto comps = extract_level_components(build_grid(F2("x^2+y^2"), square(2, 16)), 0.01);
  ASSERT_EQ(comps.size(), 1u);
  const Classification c = classify_closed(comps[0]);
  ASSERT_TRUE(std::holds_alternative<Rejection>(c));
  EXPECT_EQ(std::get<Rejection>(c).reason, RejectionReason::kTooSmall);
}

TEST(ClassifyClosed, OpenCurveRejected) {
  Component c;
  c.dimension = 2;
  c.grid = square(2, 64);
  for (int i = 0; i < 10; ++i) c.vertices.push_back({0.1 * i, 0.0, 0.0});
  for (int i = 0; i + 1 < 10; ++i) c.segments.push_back({i, i + 1});
  c.on_box_boundary.assign(10, false);
  const Classification cls = classify_closed(c);
  ASSERT_TRUE(std::holds_alternative<Rejection>(cls));
  EXPECT_EQ(std::get<Rejection>(cls).reason, RejectionReason::kOpenCurve);
}

TEST(ClassifyClosed, BranchingCurveIsNonManifold) {
  Component c;
  c.dimension = 2;
  c.grid = square(2, 64);
  c.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {2, 0, 0}, {2, 1, 0}, {0.5, 2, 0}, {1.5, 2, 0}};
  c.segments = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {1, 4}, {4, 5}, {5, 2}, {6, 7}};
  c.on_box_boundary.assign(c.vertices.size(), false);
  const Classification cls = classify_closed(c);
  ASSERT_TRUE(std::holds_alternative<Rejection>(cls));
}

TEST(ClassifyClosed, SelfIntersectingCycleRejected) {
  Component c;
  c.dimension = 2;
  c.grid = square(2, 64);
  // A bow-tie traversed as a single cycle.
  c.vertices = {{0, 0, 0}, {0.5, 0.25, 0}, {1, 0.5, 0}, {1.5, 0.75, 0}, {2, 1, 0},
                {2, 0, 0}, {1.5, 0.25, 0}, {0.5, 0.75, 0}, {0, 1, 0}};
  for (int i = 0; i < 9; ++i) c.segments.push_back({i, (i + 1) % 9});
  c.on_box_boundary.assign(c.vertices.size(), false);
  const Classification cls = classify_closed(c);
  ASSERT_TRUE(std::holds_alternative<Rejection>(cls));
  EXPECT_EQ(std::get<Rejection>(cls).reason, RejectionReason::kSelfIntersecting);
}

// ---------------------------------------------------------------------------
// bounds_point

TEST(BoundsPoint, Examples) {
  const Hypersurface H = circle(1.0, 128);
  EXPECT_TRUE(bounds_point(H, {0, 0, 0}));
  EXPECT_FALSE(bounds_point(H, {3, 0, 0}));
  const Hypersurface S = surface(F3("x^2+y^2+z^2"), cube(2, 32), 1.0);
  EXPECT_TRUE(bounds_point(S, {0, 0, 0.5}));
  EXPECT_FALSE(bounds_point(S, {0, 0, 1.5}));
}

TEST(BoundsPoint, TooCloseToSurface) {
  const Hypersurface H = circle(1.0, 128);
  EXPECT_THROW(bounds_point(H, {1.0, 0.0, 0.0}), ProximityError);
}

TEST(BoundsPoint, DegenerateRayOnMeshVertexRowIsResolved) {
  const Hypersurface S = surface(F3("x^2+y^2+z^2"), cube(2, 16), 1.0);
  // Axis-aligned query through grid-aligned vertices.
  EXPECT_TRUE(bounds_point(S, {0, 0, 0}));
  EXPECT_TRUE(bounds_point(S, {-0.5, 0, 0}));
  EXPECT_FALSE(bounds_point(S, {-1.75, 0, 0}));
}

// ---------------------------------------------------------------------------
// diameter / distance_to_point

TEST(Diameter, UnitCircle) {
  const Hypersurface H = circle(1.0, 256);
  const double chord = 4.0 / 256;
  EXPECT_NEAR(diameter(H), 2.0, 2 * chord);
}

TEST(Diameter, QuarterRadiusCircle) { EXPECT_NEAR(diameter(circle(0.25, 256)), 0.5, 0.01); }

TEST(DistanceToPoint, UsesTheFarthestVertex) {
  const Hypersurface H = circle(1.0, 256);
  EXPECT_NEAR(distance_to_point({0, 0, 0}, H), 1.0, 1e-3);
  EXPECT_NEAR(distance_to_point({1, 0, 0}, H), 2.0, 1e-3);
  EXPECT_GT(distance_to_point(H.vertices()[0], H), 1.9);
}

// ---------------------------------------------------------------------------
// orient_inward

Vec normal_near(const Hypersurface& H, const Vec& target) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < H.vertices().size(); ++i) {
    if (distance(H.vertices()[i], target) < distance(H.vertices()[best], target)) best = i;
  }
  EXPECT_LT(distance(H.vertices()[best], target), 1e-3);
  return H.normals()[best];
}

TEST(OrientInward, CircleNormalsFromGradient) {
  const Expr F = F2("x^2+y^2");
  const Hypersurface H = orient_inward(surface(F, square(2, 256), 1.0), {0, 0, 0}, gradient(F));
  EXPECT_TRUE(H.normals_oriented());
  const Vec top = normal_near(H, {0, 1, 0});
  EXPECT_NEAR(top.x, 0.0, 1e-6);
  EXPECT_NEAR(top.y, -1.0, 1e-6);
  const Vec right = normal_near(H, {1, 0, 0});
  EXPECT_NEAR(right.x, -1.0, 1e-6);
  EXPECT_NEAR(right.y, 0.0, 1e-6);
}

TEST(OrientInward, SphereNormalFromGradient) {
  const Expr F = F3("x^2+y^2+z^2");
  const Hypersurface H = orient_inward(surface(F, cube(2, 32), 1.0), {0, 0, 0}, gradient(F));
  const Vec n = normal_near(H, {0, 0, 1});
  EXPECT_NEAR(n.x, 0.0, 1e-6);
  EXPECT_NEAR(n.y, 0.0, 1e-6);
  EXPECT_NEAR(n.z, -1.0, 1e-6);
}

TEST(OrientInward, GeometricNormalsWithoutGradient) {
  const Hypersurface H = orient_inward(circle(1.0, 128), {0, 0, 0});
  const Vec top = normal_near(H, {0, 1, 0});
  EXPECT_NEAR(top.y, -1.0, 1e-3);
}

TEST(OrientInward, RequiresBoundedReferencePoint) {
  EXPECT_THROW(orient_inward(circle(1.0, 128), {1.8, 0, 0}), GeometryError);
}

// ---------------------------------------------------------------------------
// is_nested

TEST(IsNested, Examples) {
  const Hypersurface outer = circle(1.0, 256), inner = circle(0.5, 256);
  EXPECT_TRUE(is_nested(outer, inner));
  EXPECT_FALSE(is_nested(inner, outer));
  const Hypersurface left = circle(0.5, 256, {-1, 0, 0}), right = circle(0.5, 256, {1, 0, 0});
  EXPECT_FALSE(is_nested(left, right));
}

TEST(IsNested, TooCloseRaisesProximity) {
  const Hypersurface a = circle(1.0, 256);
  const Hypersurface b = circle(1.01, 256);
  EXPECT_THROW(is_nested(b, a), ProximityError);
}

// ---------------------------------------------------------------------------
// min_gradient_norm

TEST(MinGradientNorm, Examples) {
  const Expr F = F2("x^2+y^2");
  EXPECT_NEAR(min_gradient_norm(F, circle(1.0, 256)), 2.0, 1e-3);
  // Radius 1e-6 surfaces cannot be resolved; the gradient there is ~2e-6.
  const GridSpec tiny = square(4e-6, 64);
  const Hypersurface small = surface(F, tiny, 1e-12);
  EXPECT_LT(min_gradient_norm(F, small), 1e-4);
  EXPECT_NEAR(min_gradient_norm(F, small), 2e-6, 1e-7);
}

TEST(MinGradientNorm, SaddleComponentNearOriginIsSmall) {
  const Expr F = F2("x^2-y^2");
  const GridSpec spec{2, {-1, -1, 0}, {1, 1, 0}, {128, 128, 1}};
  const auto comps = extract_level_components(build_grid(F, spec), 1e-4);
  double smallest = 1e9;
  const VectorFieldDef g = gradient(F);
  for (const auto& c : comps) {
    for (const Vec& v : c.vertices) smallest = std::min(smallest, norm(Vec::from(g.evaluate(v.head(2)))));
  }
  EXPECT_LT(smallest, 0.05);
}

// ---------------------------------------------------------------------------
// Properties

TEST(GeometryProperties, ExtractionResidualShrinksWithResolution) {
  const Expr F = F2("x^2+y^2");
  for (double a : {0.25, 0.5, 1.0}) {
    double previous = 0.0;
    for (int res : {64, 128, 256}) {
      const Hypersurface H = surface(F, square(2, res), a);
      const double h = 4.0 / res;
      const double bound = 2.0 * h * h;  // second difference of F per cell
      const double r = level_residual(F, H);
      EXPECT_LE(r, bound);
      if (previous > 0.0) EXPECT_LE(r, 0.5 * previous * 1.05);
      previous = r;
    }
  }
}

TEST(GeometryProperties, OrientationProbesLandOnOppositeSides) {
  const Expr F = F2("x^2+3*y^2+x*y");
  const Hypersurface H = orient_inward(surface(F, square(2, 128), 0.6), {0, 0, 0}, gradient(F));
  const double h = H.probe_distance();
  for (std::size_t i = 0; i < H.vertices().size(); ++i) {
    EXPECT_NEAR(norm(H.normals()[i]), 1.0, 1e-9);
    EXPECT_TRUE(H.contains(H.vertices()[i] + h * H.normals()[i]));
    EXPECT_FALSE(H.contains(H.vertices()[i] - h * H.normals()[i]));
  }
  const Expr G = F3("x^2+y^2+2*z^2");
  const Hypersurface S = orient_inward(surface(G, cube(2, 32), 1.0), {0, 0, 0}, gradient(G));
  for (std::size_t i = 0; i < S.vertices().size(); ++i) {
    EXPECT_TRUE(S.contains(S.vertices()[i] + S.probe_distance() * S.normals()[i]));
    EXPECT_FALSE(S.contains(S.vertices()[i] - S.probe_distance() * S.normals()[i]));
  }
}

TEST(GeometryProperties, ParityAgreesWithCircleAndSphereOracles) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Hypersurface H = circle(1.0, 256);
  const double cell2 = 4.0 / 256;
  int tested = 0;
  while (tested < 1000) {
    const Vec p{u(rng), u(rng), 0.0};
    if (std::fabs(norm(p) - 1.0) <= cell2) continue;
    ++tested;
    EXPECT_EQ(bounds_point(H, p), norm(p) < 1.0);
  }
  const Hypersurface S = surface(F3("x^2+y^2+z^2"), cube(2, 48), 1.0);
  const double cell3 = 4.0 / 48;
  tested = 0;
  while (tested < 1000) {
    const Vec p{u(rng), u(rng), u(rng)};
    if (std::fabs(norm(p) - 1.0) <= cell3) continue;
    ++tested;
    EXPECT_EQ(bounds_point(S, p), norm(p) < 1.0);
  }
}

TEST(GeometryProperties, NestingIsAStrictPartialOrder) {
  std::vector<Hypersurface> family;
  for (double r : {1.5, 1.0, 0.6, 0.3}) family.push_back(circle(r, 256));
  family.push_back(circle(0.3, 256, {0.9, 0.9, 0}));
  const int n = static_cast<int>(family.size());
  auto nested = [&](int a, int b) {
    try {
      return is_nested(family[a], family[b]);
    } catch (const ProximityError&) {
      return false;
    }
  };
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b && nested(a, b)) {
        EXPECT_FALSE(nested(b, a));
      }
      for (int c = 0; c < n; ++c) {
        if (a != b && b != c && a != c && nested(a, b) && nested(b, c)) EXPECT_TRUE(nested(a, c));
      }
    }
  }
}

TEST(GeometryProperties, DiameterMonotoneOnQuadraticFamily) {
  const Expr F = F2("2*x^2 + y^2 + x*y");
  const GridSpec spec = square(2, 256);
  double previous = std::numeric_limits<double>::infinity();
  std::optional<Hypersurface> outer;
  for (double a = 1.0; a > 0.01; a *= 0.5) {
    const Hypersurface H = surface(F, spec, a);
    if (outer) {
      ASSERT_TRUE(is_nested(*outer, H));
      EXPECT_LE(H.diameter(), previous + 2 * spec.min_cell_size());
    }
    previous = H.diameter();
    outer = H;
  }
}

TEST(GeometryProperties, SphereMeshIsWatertight) {
  const auto comps = extract_level_components(build_grid(F3("x^2+y^2+z^2"), cube(2, 64)), 1.0);
  ASSERT_EQ(comps.size(), 1u);
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : comps[0].triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [e, count] : edges) EXPECT_EQ(count, 2);
  EXPECT_TRUE(std::holds_alternative<Hypersurface>(classify_closed(comps[0])));
}

TEST(GeometryProperties, AmbiguousCubesStayWatertight) {
  // Several blobs close together produce ambiguous faces.
  const Expr F = F3("cos(3*x)*cos(3*y)*cos(3*z)");
  const auto comps = extract_level_components(build_grid(F, cube(2, 24)), 0.3);
  ASSERT_FALSE(comps.empty());
  for (const auto& c : comps) {
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : c.triangles) {
      for (int k = 0; k < 3; ++k) {
        const int a = t[k], b = t[(k + 1) % 3];
        ++edges[{std::min(a, b), std::max(a, b)}];
      }
    }
    for (const auto& [e, count] : edges) {
      // Boundary edges occur only on the box faces.
      if (count != 2) {
        EXPECT_EQ(count, 1);
        EXPECT_TRUE(c.touches_box());
      }
    }
  }
}

}  // namespace
}  // namespace lyapcert
