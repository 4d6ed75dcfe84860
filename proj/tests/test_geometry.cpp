#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "sheetcap/geometry.hpp"
#include "sheetcap/mesh_io.hpp"
#include "sheetcap/rng.hpp"

using namespace sheetcap;
using Catch::Matchers::WithinAbs;

namespace {

TimePoint random_point(PhiloxStream& rng, double scale = 3.0) {
  return {scale * rng.next_uniform(), scale * rng.next_uniform()};
}

}  // namespace

TEST_CASE("sup norms and distances") {
  CHECK(sup_norm(TimePoint{0.0, 0.0}) == 0.0);
  CHECK(sup_norm(TimePoint{1.0, 2.0}) == 2.0);
  CHECK(sup_norm(TimePoint{3.0, 0.5}) == 3.0);

  CHECK(sup_dist(TimePoint{1, 1}, TimePoint{1, 1}) == 0.0);
  CHECK(sup_dist(TimePoint{1, 1}, TimePoint{2, 3}) == 2.0);
  CHECK(sup_dist(TimePoint{1, 2}, TimePoint{2, 1}) == 1.0);

  CHECK(sup_norm(SpacePoint{{-3.0, 2.0}}) == 3.0);
}

TEST_CASE("partial order flags") {
  const auto dom = partial_order({2, 2}, {1, 1});
  CHECK(dom.p_succ1_q);
  CHECK_FALSE(dom.q_succ1_p);

  const auto mixed = partial_order({2, 1}, {1, 2});
  CHECK(mixed.p_succ2_q);

  const auto same = partial_order({1, 1}, {1, 1});
  CHECK(same.p_succ1_q);
  CHECK(same.p_succ2_q);
  CHECK(same.q_succ1_p);
  CHECK(same.q_succ2_p);
}

TEST_CASE("partial orders totally order random pairs") {
  PhiloxStream rng({11, 0});
  for (int i = 0; i < 10000; ++i) {
    const TimePoint p = random_point(rng);
    const TimePoint q = random_point(rng);
    CAPTURE(p.s1, p.s2, q.s1, q.s2);
    REQUIRE(partial_order(p, q).any());
  }
}

TEST_CASE("mutual dominance forces equality") {
  // Draw from a small integer lattice so coincidences actually occur.
  PhiloxStream rng({12, 0});
  for (int i = 0; i < 10000; ++i) {
    const TimePoint p{static_cast<double>(rng.next_u32() % 3),
                      static_cast<double>(rng.next_u32() % 3)};
    const TimePoint q{static_cast<double>(rng.next_u32() % 3),
                      static_cast<double>(rng.next_u32() % 3)};
    if (succ1(p, q) && succ1(q, p)) REQUIRE(p == q);
    if (succ2(p, q) && succ2(q, p)) REQUIRE(p == q);
  }
}

TEST_CASE("sup distance satisfies the triangle inequality") {
  PhiloxStream rng({13, 0});
  for (int i = 0; i < 10000; ++i) {
    const TimePoint p = random_point(rng);
    const TimePoint q = random_point(rng);
    const TimePoint r = random_point(rng);
    REQUIRE(sup_dist(p, r) <= sup_dist(p, q) + sup_dist(q, r) + 1e-15);
  }
}

TEST_CASE("rect mesh examples") {
  const CompactMesh one = build_rect_mesh({1, 1}, {2, 2}, 1, 1);
  REQUIRE(one.size() == 1);
  CHECK(one.atoms()[0] == TimePoint{1.5, 1.5});
  CHECK(one.c1() == 1.5);
  CHECK(one.c2() == 1.5);
  CHECK(one.cell_weights()[0] == 1.0);

  const CompactMesh four = build_rect_mesh({1, 1}, {2, 2}, 2, 2);
  REQUIRE(four.size() == 4);
  CHECK(four.c1() == 1.25);
  CHECK(four.c2() == 1.75);
  CHECK(four.mesh_gauge() == 0.5);
}

TEST_CASE("rect mesh 10x10 checked against direct enumeration") {
  const CompactMesh mesh = build_rect_mesh({1, 1}, {2, 2}, 10, 10);
  REQUIRE(mesh.size() == 100);
  CHECK_THAT(mesh.mesh_gauge(), WithinAbs(0.1, 1e-15));

  // Independent enumeration of the expected atoms and radii.
  double expect_c1 = 1e300, expect_c2 = 0.0;
  std::size_t found = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const TimePoint expected{1.0 + (i + 0.5) * 0.1, 1.0 + (j + 0.5) * 0.1};
      expect_c1 = std::min(expect_c1, sup_norm(expected));
      expect_c2 = std::max(expect_c2, sup_norm(expected));
      for (const TimePoint& a : mesh.atoms()) {
        if (sup_dist(a, expected) < 1e-12) {
          ++found;
          break;
        }
      }
      CHECK_THAT(mesh.cell_weights()[static_cast<std::size_t>(i) * 10 + j],
                 WithinAbs(0.01, 1e-15));
    }
  }
  CHECK(found == 100);
  CHECK_THAT(mesh.c1(), WithinAbs(expect_c1, 1e-12));
  CHECK_THAT(mesh.c2(), WithinAbs(expect_c2, 1e-12));
}

TEST_CASE("rect mesh rejects degenerate rectangles") {
  CHECK_THROWS(build_rect_mesh({1, 1}, {1, 2}, 2, 2));
  CHECK_THROWS(build_rect_mesh({1, 1}, {2, 1}, 2, 2));
  CHECK_THROWS(build_rect_mesh({2, 2}, {1, 1}, 2, 2));
}

TEST_CASE("segment mesh examples") {
  const CompactMesh mid = build_segment_mesh({1, 1.5}, {2, 1.5}, 1);
  REQUIRE(mid.size() == 1);
  CHECK(mid.atoms()[0] == TimePoint{1.5, 1.5});

  const CompactMesh two = build_segment_mesh({1, 1.5}, {2, 1.5}, 2);
  REQUIRE(two.size() == 2);
  CHECK(two.atoms()[0] == TimePoint{1.25, 1.5});
  CHECK(two.atoms()[1] == TimePoint{1.75, 1.5});

  const CompactMesh diag = build_segment_mesh({1, 1}, {2, 2}, 5);
  REQUIRE(diag.size() == 5);
  CHECK_THAT(diag.c1(), WithinAbs(1.1, 1e-12));
  CHECK_THAT(diag.c2(), WithinAbs(1.9, 1e-12));
  for (int k = 0; k < 5; ++k) {
    const double u = 1.0 + (k + 0.5) / 5.0;
    CHECK_THAT(diag.atoms()[static_cast<std::size_t>(k)].s1, WithinAbs(u, 1e-12));
    CHECK_THAT(diag.atoms()[static_cast<std::size_t>(k)].s2, WithinAbs(u, 1e-12));
  }
  CHECK_THAT(diag.mesh_gauge(), WithinAbs(0.2, 1e-15));
  CHECK_THAT(diag.cell_weights()[0], WithinAbs(std::sqrt(2.0) / 5.0, 1e-15));

  CHECK_THROWS(build_segment_mesh({1, 1}, {1, 1}, 3));
}

TEST_CASE("restrict mesh") {
  const CompactMesh base = build_rect_mesh({1, 1}, {2, 2}, 2, 2);

  const CompactMesh unchanged = restrict_mesh(base, 0.0);
  CHECK(unchanged.size() == base.size());
  CHECK(unchanged.c1() == base.c1());

  const CompactMesh three = restrict_mesh(base, 1.5);
  CHECK(three.size() == 3);  // drops (1.25, 1.25)
  for (const TimePoint& a : three.atoms()) CHECK(sup_norm(a) >= 1.5);

  CHECK_THROWS(restrict_mesh(base, base.c2() + 0.1));
}

TEST_CASE("restrict mesh respects the requested floor on random meshes") {
  PhiloxStream rng({14, 0});
  for (int trial = 0; trial < 50; ++trial) {
    const CompactMesh mesh =
        build_rect_mesh({rng.next_uniform(), rng.next_uniform()},
                        {1.0 + rng.next_uniform(), 1.0 + rng.next_uniform()}, 4, 4);
    const double floor_norm = mesh.c1() + (mesh.c2() - mesh.c1()) * rng.next_uniform();
    const CompactMesh cut = restrict_mesh(mesh, floor_norm);
    REQUIRE(cut.c1() >= floor_norm);
  }
}

TEST_CASE("mesh invariants are enforced") {
  CHECK_THROWS(CompactMesh({}, {}, 1.0));
  CHECK_THROWS(CompactMesh({{1, 1}, {1, 1}}, {0.5, 0.5}, 1.0));        // duplicate atoms
  CHECK_THROWS(CompactMesh({{1, 1}}, {0.5, 0.5}, 1.0));                // weight count
  CHECK_THROWS(CompactMesh({{1, 1}}, {0.0}, 1.0));                     // weight positivity
  CHECK_THROWS(CompactMesh({{1, 1}}, {1.0}, 0.0));                     // gauge positivity
  CHECK_THROWS(CompactMesh({{-1, 1}}, {1.0}, 1.0));                    // quadrant
  CHECK_THROWS(CompactMesh({{0, 0}}, {1.0}, 1.0));                     // c2 > 0
}

TEST_CASE("mesh json round trip") {
  const CompactMesh mesh = build_rect_mesh({1, 1}, {2, 2}, 3, 2);
  const auto doc = mesh_to_json(mesh);
  const CompactMesh back = mesh_from_json(doc);
  REQUIRE(back.size() == mesh.size());
  CHECK(back.mesh_gauge() == mesh.mesh_gauge());
  CHECK(back.c1() == mesh.c1());
  CHECK(back.c2() == mesh.c2());
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    CHECK(back.atoms()[i] == mesh.atoms()[i]);
    CHECK(back.cell_weights()[i] == mesh.cell_weights()[i]);
  }

  // Stored radii that contradict the atoms are rejected.
  auto tampered = doc;
  tampered["c1"] = mesh.c1() + 0.5;
  CHECK_THROWS(mesh_from_json(tampered));

  // Atom lists without weights get a uniform reference measure.
  nlohmann::json bare;
  bare["atoms"] = {{1.0, 1.0}, {2.0, 2.0}};
  const CompactMesh scatter = mesh_from_json(bare);
  REQUIRE(scatter.size() == 2);
  CHECK(scatter.cell_weights()[0] == 0.5);
}
