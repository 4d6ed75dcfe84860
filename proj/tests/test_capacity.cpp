#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "sheetcap/capacity.hpp"
#include "sheetcap/geometry.hpp"
#include "sheetcap/rng.hpp"

using namespace sheetcap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

KernelMatrix two_atom_kernel() {
  KernelMatrix k(2, 2);
  k << 10.0, 1.0, 1.0, 10.0;
  return k;
}

CompactMesh random_small_mesh(PhiloxStream& rng, int n_atoms) {
  std::vector<TimePoint> atoms;
  while (static_cast<int>(atoms.size()) < n_atoms) {
    const TimePoint candidate{0.5 + 2.0 * rng.next_uniform(), 0.5 + 2.0 * rng.next_uniform()};
    bool fresh = true;
    for (const TimePoint& a : atoms) fresh = fresh && sup_dist(a, candidate) > 1e-6;
    if (fresh) atoms.push_back(candidate);
  }
  return make_scatter_mesh(std::move(atoms));
}

}  // namespace

TEST_CASE("kernel value") {
  CHECK_THAT(kernel_value({0.5, 0.1}, 0.0), WithinRel(10.0, 1e-15));
  CHECK_THAT(kernel_value({0.5, 0.1}, 1.0), WithinRel(1.0, 1e-15));
  CHECK_THAT(kernel_value({1.0, 0.0}, 4.0), WithinRel(0.25, 1e-15));
  CHECK_THROWS(kernel_value({0.5, 0.0}, 0.0));   // pure Riesz diverges at 0
  CHECK_THROWS(kernel_value({-1.0, 0.0}, 1.0));  // beta must be positive
  // Nonincreasing in r.
  double prev = kernel_value({0.75, 0.2}, 0.0);
  for (double r = 0.01; r < 4.0; r += 0.01) {
    const double v = kernel_value({0.75, 0.2}, r);
    REQUIRE(v <= prev + 1e-15);
    prev = v;
  }
}

TEST_CASE("kernel matrix examples") {
  const CompactMesh pair = make_scatter_mesh({{1.0, 1.0}, {2.0, 2.0}});
  const KernelMatrix k = kernel_matrix(pair, {0.5, 0.1});
  CHECK_THAT(k(0, 0), WithinRel(10.0, 1e-15));
  CHECK_THAT(k(1, 1), WithinRel(10.0, 1e-15));
  CHECK_THAT(k(0, 1), WithinRel(1.0, 1e-15));
  CHECK(k(1, 0) == k(0, 1));

  const CompactMesh single = make_scatter_mesh({{1.0, 1.0}});
  const KernelMatrix k1 = kernel_matrix(single, {0.5, 0.5});
  CHECK_THAT(k1(0, 0), WithinRel(2.0, 1e-15));

  // Three collinear atoms at spacing 0.5, beta = 1/2, eps = 0.25.
  const CompactMesh collinear = make_scatter_mesh({{1.0, 1.0}, {1.5, 1.0}, {2.0, 1.0}});
  const KernelMatrix k3 = kernel_matrix(collinear, {0.5, 0.25});
  CHECK_THAT(k3(0, 0), WithinRel(4.0, 1e-15));
  CHECK_THAT(k3(0, 1), WithinRel(std::pow(0.5, -0.5), 1e-15));
  CHECK_THAT(k3(0, 2), WithinRel(1.0, 1e-15));

  // Untruncated spec: diagonal falls back to the mesh gauge.
  const CompactMesh spaced = make_scatter_mesh({{1.0, 1.0}, {2.0, 2.0}}, 0.25);
  const KernelMatrix kd = kernel_matrix(spaced, {0.5, 0.0});
  CHECK_THAT(kd(0, 0), WithinRel(4.0, 1e-15));
  CHECK_THAT(kd(0, 1), WithinRel(1.0, 1e-15));
}

TEST_CASE("kernel matrix is symmetric and monotone under distance growth") {
  PhiloxStream rng({40, 0});
  for (int trial = 0; trial < 20; ++trial) {
    const CompactMesh mesh = random_small_mesh(rng, 5);
    const KernelMatrix k = kernel_matrix(mesh, {0.5 + rng.next_uniform(), 0.1});
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // Scaling every atom pair further apart can only shrink entries.
    std::vector<TimePoint> stretched;
    for (const TimePoint& a : mesh.atoms()) stretched.push_back({2.0 * a.s1, 2.0 * a.s2});
    const KernelMatrix ks =
        kernel_matrix(make_scatter_mesh(stretched, mesh.mesh_gauge()), {0.75, 0.1});
    const KernelMatrix k0 =
        kernel_matrix(mesh, {0.75, 0.1});
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (i != j) REQUIRE(ks(i, j) <= k0(i, j) + 1e-15);
      }
    }
  }
}

TEST_CASE("energy evaluation") {
  const KernelMatrix k = two_atom_kernel();
  CHECK_THAT(energy(k, DiscreteMeasure{{0.5, 0.5}}), WithinRel(5.5, 1e-15));
  CHECK_THAT(energy(k, DiscreteMeasure{{1.0, 0.0}}), WithinRel(10.0, 1e-15));
  CHECK_THROWS(energy(k, DiscreteMeasure{{1.0}}));
}

TEST_CASE("measure validation") {
  CHECK_NOTHROW(validate_measure(uniform_measure(4), 4));
  CHECK_THROWS(validate_measure(DiscreteMeasure{{0.5, 0.6}}, 2));
  CHECK_THROWS(validate_measure(DiscreteMeasure{{1.5, -0.5}}, 2));
  CHECK_THROWS(validate_measure(uniform_measure(4), 5));
}

TEST_CASE("minimize_energy: two-atom closed form") {
  const CapacityResult r = minimize_energy(two_atom_kernel(), 1e-8, 100000);
  REQUIRE(r.converged);
  CHECK_THAT(r.energy, WithinAbs(5.5, 1e-6));
  CHECK_THAT(r.capacity, WithinAbs(0.18181818181818182, 1e-6));
  CHECK_THAT(r.optimal_measure.weights[0], WithinAbs(0.5, 1e-6));
  CHECK(r.capacity * r.energy == 1.0);
}

TEST_CASE("minimize_energy: singleton and symmetric triple") {
  KernelMatrix k1(1, 1);
  k1 << 7.0;
  const CapacityResult r1 = minimize_energy(k1);
  CHECK(r1.optimal_measure.weights == std::vector<double>{1.0});
  CHECK_THAT(r1.capacity, WithinRel(1.0 / 7.0, 1e-15));

  // All off-diagonals equal: the uniform measure is forced by symmetry.
  KernelMatrix k3(3, 3);
  k3 << 4.0, 1.5, 1.5, 1.5, 4.0, 1.5, 1.5, 1.5, 4.0;
  const CapacityResult r3 = minimize_energy(k3);
  REQUIRE(r3.converged);
  for (double w : r3.optimal_measure.weights) CHECK_THAT(w, WithinAbs(1.0 / 3.0, 1e-9));
}

TEST_CASE("minimize_energy flags non-convergence but still returns a result") {
  KernelMatrix k(3, 3);
  k << 30.0, 2.0, 1.0, 2.0, 11.0, 0.5, 1.0, 0.5, 17.0;
  const CapacityResult r = minimize_energy(k, 1e-15, 3);
  CHECK_FALSE(r.converged);
  CHECK(r.energy > 0.0);
  double sum = 0.0;
  for (double w : r.optimal_measure.weights) sum += w;
  CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
}

TEST_CASE("brute force oracle on the two-atom closed form") {
  const CapacityResult bf = brute_force_energy_min(two_atom_kernel(), 1000);
  CHECK_THAT(bf.energy, WithinAbs(5.5, 1e-4));
  CHECK(bf.iterations == 1001);

  KernelMatrix k1(1, 1);
  k1 << 4.0;
  const CapacityResult one = brute_force_energy_min(k1, 10);
  CHECK(one.capacity == 0.25);

  KernelMatrix k6 = KernelMatrix::Identity(6, 6);
  CHECK_THROWS(brute_force_energy_min(k6, 10));
}

TEST_CASE("solver agrees with the oracle on random small meshes") {
  PhiloxStream rng({41, 0});
  for (int trial = 0; trial < 20; ++trial) {
    const int n_atoms = 2 + static_cast<int>(rng.next_u32() % 3);  // 2..4
    const CompactMesh mesh = random_small_mesh(rng, n_atoms);
    const double eps = 0.1 + 0.5 * rng.next_uniform();
    const int d = 1 + static_cast<int>(rng.next_u32() % 3);
    const KernelMatrix k = kernel_matrix(mesh, {d / 2.0, eps});
    const CapacityResult fw = minimize_energy(k, 1e-8, 100000);
    const CapacityResult bf = brute_force_energy_min(k, 1000);
    const double tolerance = fw.duality_gap + lattice_error_bound(k, 1000);
    CAPTURE(n_atoms, eps, d, fw.energy, bf.energy, tolerance);
    REQUIRE(std::abs(fw.energy - bf.energy) <= tolerance);
    // The oracle can never beat the true optimum certified by the gap.
    REQUIRE(bf.energy >= fw.energy - fw.duality_gap - 1e-12);
  }
}

TEST_CASE("five-atom oracle at coarse lattice still brackets the solver") {
  PhiloxStream rng({42, 0});
  const CompactMesh mesh = random_small_mesh(rng, 5);
  const KernelMatrix k = kernel_matrix(mesh, {0.5, 0.3});
  const CapacityResult fw = minimize_energy(k, 1e-8, 100000);
  const CapacityResult bf = brute_force_energy_min(k, 60);
  REQUIRE(std::abs(fw.energy - bf.energy) <= fw.duality_gap + lattice_error_bound(k, 60));
}

TEST_CASE("scaling the kernel scales energy and leaves the optimum in place") {
  PhiloxStream rng({43, 0});
  for (int trial = 0; trial < 10; ++trial) {
    const CompactMesh mesh = random_small_mesh(rng, 4);
    const KernelMatrix k = kernel_matrix(mesh, {0.5, 0.2});
    const double lambda = 0.5 + 4.0 * rng.next_uniform();
    const CapacityResult base = minimize_energy(k, 1e-10, 200000);
    const CapacityResult scaled = minimize_energy(lambda * k, 1e-10, 200000);
    CHECK_THAT(scaled.energy, WithinRel(lambda * base.energy, 1e-6));
    CHECK_THAT(scaled.capacity, WithinRel(base.capacity / lambda, 1e-6));
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK_THAT(scaled.optimal_measure.weights[i],
                 WithinAbs(base.optimal_measure.weights[i], 1e-4));
    }
  }
}

TEST_CASE("adding an atom never increases the minimal energy") {
  PhiloxStream rng({44, 0});
  for (int trial = 0; trial < 10; ++trial) {
    const CompactMesh small = random_small_mesh(rng, 3);
    std::vector<TimePoint> grown = small.atoms();
    grown.push_back({0.5 + 2.0 * rng.next_uniform(), 0.5 + 2.0 * rng.next_uniform()});
    const KernelSpec spec{0.5, 0.2};
    const double tol = 1e-8;
    const CapacityResult before = minimize_energy(kernel_matrix(small, spec), tol, 200000);
    const CapacityResult after = minimize_energy(
        kernel_matrix(make_scatter_mesh(grown, small.mesh_gauge()), spec), tol, 200000);
    // The zero-padded old optimum stays feasible, so the new minimum cannot
    // exceed the old one beyond the two solver certificates.
    REQUIRE(after.energy <= before.energy + before.duality_gap + after.duality_gap + 1e-12);
  }
}

TEST_CASE("random feasible measures never beat the solver certificate") {
  PhiloxStream rng({45, 0});
  const CompactMesh mesh = random_small_mesh(rng, 4);
  const KernelMatrix k = kernel_matrix(mesh, {0.5, 0.15});
  const CapacityResult best = minimize_energy(k, 1e-10, 200000);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(4);
    double sum = 0.0;
    for (double& x : w) {
      x = -std::log(rng.next_uniform());
      sum += x;
    }
    for (double& x : w) x /= sum;
    REQUIRE(energy(k, DiscreteMeasure{w}) >= 1.0 / best.capacity - best.duality_gap - 1e-12);
  }
  // The uniform measure in particular.
  REQUIRE(energy(k, uniform_measure(4)) >= best.energy - best.duality_gap - 1e-12);
}

TEST_CASE("capacity_of_mesh on the two-atom example") {
  const CompactMesh pair = make_scatter_mesh({{1.0, 1.0}, {2.0, 2.0}}, 0.05);
  const CapacityResult r = capacity_of_mesh(pair, 1, 0.1, 1e-8, 100000);
  CHECK_THAT(r.capacity, WithinAbs(0.18181818181818182, 1e-6));
}

TEST_CASE("capacity grows along refinement with a fixed kernel") {
  double prev = 0.0;
  for (int n : {2, 4, 8}) {
    const CompactMesh mesh = build_rect_mesh({1, 1}, {2, 2}, n, n);
    const CapacityResult r = capacity_of_mesh(mesh, 1, 0.05, 1e-3, 100000);
    REQUIRE(r.capacity >= prev * (1.0 - 2e-3));
    prev = r.capacity;
  }
}

TEST_CASE("segment capacity at beta three halves decays under refinement") {
  double prev = 1e300;
  for (int n : {8, 16, 32, 64}) {
    const CompactMesh mesh = build_segment_mesh({1, 1}, {2, 2}, n);
    const CapacityResult r = capacity_of_mesh(mesh, 3, 0.0, 1e-3, 100000);
    REQUIRE(r.capacity < prev);
    prev = r.capacity;
  }
}

TEST_CASE("capacity_limit_check on a restriction chain") {
  const CompactMesh base = build_rect_mesh({1, 1}, {2, 2}, 6, 6);
  std::vector<CompactMesh> chain;
  for (double norm : {1.8, 1.5, 1.2, 0.0}) chain.push_back(restrict_mesh(base, norm));
  const MonotoneReport report = capacity_limit_check(chain, 1, 0.1, 1e-3, 100000);
  REQUIRE(report.entries.size() == 4);
  CHECK(report.nondecreasing);
  CHECK(report.worst_drop == 0.0);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(report.entries[i].n_atoms >= report.entries[i - 1].n_atoms);
  }

  // Single-element chain is trivially monotone; equal meshes give equal
  // capacities because the solver is deterministic.
  const MonotoneReport single = capacity_limit_check({base}, 1, 0.1, 1e-3, 100000);
  CHECK(single.nondecreasing);
  const MonotoneReport equal = capacity_limit_check({base, base}, 1, 0.1, 1e-3, 100000);
  CHECK(equal.nondecreasing);
  CHECK(equal.entries[0].capacity == equal.entries[1].capacity);
}

TEST_CASE("kernel matrix csv export") {
  std::ostringstream os;
  kernel_matrix_to_csv(os, two_atom_kernel());
  CHECK(os.str() == "10,1\n1,10\n");
}

TEST_CASE("kernel matrix rejections propagate") {
  KernelMatrix asym(2, 2);
  asym << 1.0, 2.0, 3.0, 1.0;
  CHECK_THROWS(minimize_energy(asym));
  KernelMatrix bad_diag(2, 2);
  bad_diag << 0.0, 1.0, 1.0, 1.0;
  CHECK_THROWS(minimize_energy(bad_diag));
}
