#include "doctest.h"
#include "mf/recovery.hpp"
#include "test_support.hpp"

using namespace mf;

namespace {

// stress field drawn from the full bilinear span, one expression per component
Eigen::Vector3d bilinear_stress(double x, double y) {
  return {2.0 + 0.5 * x - 0.25 * y + 0.125 * x * y,
          -1.0 + 0.3 * x + 0.7 * y - 0.4 * x * y,
          0.2 - 0.1 * x + 0.05 * y + 0.9 * x * y};
}

int node_at(const QuadMesh& mesh, int gx, int gy) {
  for (int v = 0; v < mesh.node_count(); ++v)
    if (mesh.nodes[v].gx == gx && mesh.nodes[v].gy == gy) return v;
  REQUIRE(false);
  return -1;
}

}  // namespace

TEST_CASE("superconvergent samples are the bilinear fit at the centroid") {
  const auto mesh = build_uniform_mesh(mftest::uniform_grid(2));
  const auto material = mftest::single_phase_materials();

  SUBCASE("constant field reproduces the constant") {
    auto qp = mftest::synthetic_qp_field(mesh, material, [](double, double, int) {
      return Eigen::Vector3d(3.0, -1.0, 0.5);
    });
    const auto samples = superconvergent_samples(mesh, qp);
    for (const auto& s : samples.stress)
      CHECK((s - Eigen::Vector3d(3.0, -1.0, 0.5)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("linear-in-x field evaluates at the element centroid") {
    auto qp = mftest::synthetic_qp_field(mesh, material, [](double x, double, int) {
      return Eigen::Vector3d(1.0 + 2.0 * x, 0.0, 0.0);
    });
    const auto samples = superconvergent_samples(mesh, qp);
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
      const double cx =
          mesh.element_x0(mesh.elements[e]) + 0.5 * mesh.side_length(mesh.elements[e]);
      CHECK(samples.stress[e][0] == doctest::Approx(1.0 + 2.0 * cx).epsilon(1e-13));
    }
  }
  SUBCASE("arbitrary Gauss data: center sample equals the componentwise mean") {
    QuadraturePointField qp;
    qp.mesh = &mesh;
    qp.stress.resize(mesh.elements.size());
    qp.strain.resize(mesh.elements.size());
    qp.det_jacobian.assign(mesh.elements.size(), 1.0);
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (auto& per : qp.stress)
      for (auto& v : per) v = Eigen::Vector3d(dist(rng), dist(rng), dist(rng));
    qp.strain = qp.stress;
    const auto samples = superconvergent_samples(mesh, qp);
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (int g = 0; g < 4; ++g) mean += 0.25 * qp.stress[e][g];
      CHECK((samples.stress[e] - mean).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("fit_patch solves the normal equations") {
  SUBCASE("four bilinear samples reproduce the function exactly") {
    std::vector<PatchSample> samples;
    for (auto [x, y] : {std::pair{0.5, 0.5}, {1.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}}) {
      PatchSample s;
      s.position = {x, y};
      s.value << bilinear_stress(x, y), 0.5 * bilinear_stress(x, y);
      samples.push_back(s);
    }
    const std::vector<Monomial> full{Monomial::one, Monomial::x, Monomial::y, Monomial::xy};
    const auto basis = fit_patch(samples, full);
    for (auto [x, y] : {std::pair{0.0, 0.0}, {2.0, 1.0}, {0.7, 1.9}}) {
      const auto v = basis.evaluate({x, y});
      CHECK((v.head<3>() - bilinear_stress(x, y)).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
  SUBCASE("three non-collinear samples fit the plane through them") {
    // oracle: direct 3x3 interpolation solve, no normal equations
    const Eigen::Vector2d p0(0.0, 0.0), p1(1.0, 0.0), p2(0.25, 1.0);
    auto f = [](const Eigen::Vector2d& p) { return 1.0 + 2.0 * p.x() - 0.5 * p.y(); };
    Eigen::Matrix3d V;
    V << 1, p0.x(), p0.y(), 1, p1.x(), p1.y(), 1, p2.x(), p2.y();
    const Eigen::Vector3d rhs(f(p0), f(p1), f(p2));
    const Eigen::Vector3d coeff_oracle = V.partialPivLu().solve(rhs);

    std::vector<PatchSample> samples;
    for (const auto& p : {p0, p1, p2}) {
      PatchSample s;
      s.position = p;
      s.value.setConstant(f(p));
      samples.push_back(s);
    }
    const std::vector<Monomial> plane{Monomial::one, Monomial::x, Monomial::y};
    const auto basis = fit_patch(samples, plane);
    for (int t = 0; t < 3; ++t)
      CHECK(basis.coefficients(t, 0) == doctest::Approx(coeff_oracle[t]).epsilon(1e-10));
  }
  SUBCASE("three collinear samples make the full basis singular") {
    std::vector<PatchSample> samples(3);
    samples[0].position = {0.0, 0.0};
    samples[1].position = {1.0, 0.0};
    samples[2].position = {2.0, 0.0};
    for (auto& s : samples) s.value.setOnes();
    const std::vector<Monomial> full{Monomial::one, Monomial::x, Monomial::y, Monomial::xy};
    CHECK_THROWS_AS(fit_patch(samples, full), SingularPatchError);
    // and fewer samples than terms is refused outright
    samples.pop_back();
    CHECK_THROWS_AS(fit_patch(samples, full), SingularPatchError);
  }
}

TEST_CASE("standard SPR recovers a global bilinear field exactly") {
  const auto mesh = build_uniform_mesh(mftest::uniform_grid(6));
  const auto material = mftest::single_phase_materials();
  auto qp = mftest::synthetic_qp_field(
      mesh, material, [](double x, double y, int) { return bilinear_stress(x, y); });
  const auto recovered = spr_standard(mesh, qp);
  for (int v = 0; v < mesh.node_count(); ++v) {
    const auto& entry = recovered.value_at(v, 0);
    const Eigen::Vector3d exact = bilinear_stress(mesh.node_x(v), mesh.node_y(v));
    CHECK((entry.stress - exact).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(recovered.entry_count(v) == 1);
  }
}

TEST_CASE("standard SPR at a corner equals the hand fit of the nearest 2x2 block") {
  // quadratic stress: the fit is inexact, so patch selection matters
  const auto mesh = build_uniform_mesh(mftest::uniform_grid(4));
  const auto material = mftest::single_phase_materials();
  auto stress = [](double x, double y, int) {
    return Eigen::Vector3d(x * x + 0.3 * y, y * y - x, x * y + 1.0);
  };
  auto qp = mftest::synthetic_qp_field(mesh, material, stress);
  const auto recovered = spr_standard(mesh, qp);

  // oracle: center samples (Gauss means) of the 2x2 corner block, full
  // bilinear interpolation, evaluated at the corner (0,0)
  const double h = mesh.h();
  const std::vector<Eigen::Vector2d> centers = {
      {0.5 * h, 0.5 * h}, {1.5 * h, 0.5 * h}, {0.5 * h, 1.5 * h}, {1.5 * h, 1.5 * h}};
  auto block_element = [&](const Eigen::Vector2d& c) {
    const int ix = (int)(c.x() / h), iy = (int)(c.y() / h);
    return iy * mesh.grid->width + ix;
  };
  Eigen::Matrix4d V;
  Eigen::Matrix<double, 4, 3> rhs;
  for (int i = 0; i < 4; ++i) {
    V.row(i) << 1, centers[i].x(), centers[i].y(), centers[i].x() * centers[i].y();
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int g = 0; g < 4; ++g) mean += 0.25 * qp.stress[block_element(centers[i])][g];
    rhs.row(i) = mean.transpose();
  }
  const Eigen::Matrix<double, 4, 3> coeff = V.partialPivLu().solve(rhs);
  const Eigen::Vector3d expected = coeff.row(0).transpose();  // value at (0,0)

  const int corner = node_at(mesh, 0, 0);
  CHECK((recovered.value_at(corner, 0).stress - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("standard SPR smears the stress jump at an interface") {
  const auto mesh = build_uniform_mesh(mftest::two_block_grid(4));
  const auto material = mftest::two_phase_materials();
  const Eigen::Vector3d s0(1.0, 0.5, 0.0), s1(5.0, 2.5, 0.0);
  auto qp = mftest::synthetic_qp_field(
      mesh, material, [&](double, double, int phase) { return phase == 0 ? s0 : s1; });

  const auto recovered = spr_standard(mesh, qp);
  const int interface_node = node_at(mesh, 2, 2);
  const auto& entry = recovered.value_at(interface_node, 0);
  CHECK(entry.stress[0] > s0[0]);
  CHECK(entry.stress[0] < s1[0]);  // strictly between the phase limits
  CHECK(recovered.entry_count(interface_node) == 1);
}

TEST_CASE("modified SPR keeps duplex values without smearing") {
  const auto mesh = build_uniform_mesh(mftest::two_block_grid(4));
  const auto material = mftest::two_phase_materials();
  const Eigen::Vector3d s0(1.0, 0.5, 0.0), s1(5.0, 2.5, 0.0);
  auto qp = mftest::synthetic_qp_field(
      mesh, material, [&](double, double, int phase) { return phase == 0 ? s0 : s1; });

  const auto recovered = spr_modified(mesh, qp);
  for (int v = 0; v < mesh.node_count(); ++v) {
    const bool on_interface = mesh.nodes[v].gx == 2;
    CHECK(recovered.entry_count(v) == (on_interface ? 2 : 1));
    if (on_interface) {
      CHECK((recovered.value_at(v, 0).stress - s0).cwiseAbs().maxCoeff() < 1e-11);
      CHECK((recovered.value_at(v, 1).stress - s1).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
}

TEST_CASE("isolated single-element phase recovers its own center sample") {
  // one phase-1 pixel inside a 4x4 phase-0 grid
  std::vector<int> labels(16, 0);
  labels[1 * 4 + 2] = 1;
  const auto grid = std::make_shared<PhaseGrid>(4, 4, std::move(labels), 1.0);
  const auto mesh = build_uniform_mesh(grid);
  const auto material = mftest::two_phase_materials();
  auto qp = mftest::synthetic_qp_field(mesh, material, [](double x, double y, int phase) {
    return Eigen::Vector3d(phase == 1 ? 9.0 : x + y, 0.0, 0.0);
  });

  int isolated = -1;
  for (int e = 0; e < mesh.element_count(); ++e)
    if (mesh.elements[e].phase == 1) isolated = e;
  REQUIRE(isolated >= 0);

  const auto samples = superconvergent_samples(mesh, qp);
  const auto recovered = spr_modified(mesh, qp);
  for (int c = 0; c < 4; ++c) {
    const int v = mesh.elements[isolated].corners[c];
    const auto& entry = recovered.value_at(v, 1);
    CHECK((entry.stress - samples.stress[isolated]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("hanging nodes fit a plane through their three surrounding elements") {
  const auto uniform = build_uniform_mesh(mftest::uniform_grid(3));
  MarkSet marks(9, 0);
  marks[0] = marks[1] = marks[3] = marks[4] = 1;
  const QuadMesh mesh = coarsen(uniform, marks);
  REQUIRE(mesh.hanging_node_count() == 2);
  const auto material = mftest::single_phase_materials();

  // linear stress: the three-sample [1,x,y] fit is exact
  auto qp = mftest::synthetic_qp_field(mesh, material, [](double x, double y, int) {
    return Eigen::Vector3d(1.0 + 3.0 * x - 2.0 * y, x, y);
  });
  for (auto scheme : {RecoveryScheme::spr_standard, RecoveryScheme::spr_modified}) {
    const auto recovered = recover(scheme, mesh, qp);
    for (const auto& con : mesh.constraints) {
      const Eigen::Vector3d exact{
          1.0 + 3.0 * mesh.node_x(con.hanging) - 2.0 * mesh.node_y(con.hanging),
          mesh.node_x(con.hanging), mesh.node_y(con.hanging)};
      const auto& entry = recovered.value_at(con.hanging, 0);
      CHECK((entry.stress - exact).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
}

TEST_CASE("averaging recovery extrapolates Gauss values to corners") {
  const auto material = mftest::single_phase_materials();
  SUBCASE("constant field is reproduced everywhere") {
    const auto mesh = build_uniform_mesh(mftest::uniform_grid(3));
    auto qp = mftest::synthetic_qp_field(mesh, material, [](double, double, int) {
      return Eigen::Vector3d(2.0, -1.0, 0.25);
    });
    const auto recovered = averaging_recovery(mesh, qp);
    for (int v = 0; v < mesh.node_count(); ++v)
      CHECK((recovered.value_at(v, 0).stress - Eigen::Vector3d(2.0, -1.0, 0.25))
                .cwiseAbs()
                .maxCoeff() < 1e-13);
  }
  SUBCASE("bilinear field: extrapolation and averaging are exact") {
    const auto mesh = build_uniform_mesh(mftest::uniform_grid(4));
    auto qp = mftest::synthetic_qp_field(
        mesh, material, [](double x, double y, int) { return bilinear_stress(x, y); });
    const auto recovered = averaging_recovery(mesh, qp);
    for (int v = 0; v < mesh.node_count(); ++v) {
      const Eigen::Vector3d exact = bilinear_stress(mesh.node_x(v), mesh.node_y(v));
      CHECK((recovered.value_at(v, 0).stress - exact).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
  SUBCASE("adjacent elements with different linear fields average their extrapolations") {
    const auto mesh = build_uniform_mesh(mftest::uniform_grid(2));
    // linear in x with a kink at the column boundary: per element the field
    // is linear, so elementwise corner extrapolation is exact
    auto stress = [&](double x, double, int) {
      return Eigen::Vector3d(x < 0.5 ? 2.0 * x : 1.0 + 6.0 * (x - 0.5), 0.0, 0.0);
    };
    auto qp = mftest::synthetic_qp_field(mesh, material, stress);
    const auto recovered = averaging_recovery(mesh, qp);
    // node between the lower elements: both columns extrapolate to 1.0 there
    const int mid_bottom = node_at(mesh, 1, 0);
    CHECK(recovered.value_at(mid_bottom, 0).stress[0] == doctest::Approx(1.0).epsilon(1e-12));
    // top-left corner: only the left column contributes, exact value 0
    const int top_left = node_at(mesh, 0, 2);
    CHECK(recovered.value_at(top_left, 0).stress[0] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("phase separation and duplex counts on a random microstructure") {
  const auto grid = mftest::random_grid(12, 31);
  const auto mesh = build_uniform_mesh(grid);
  const auto material = mftest::two_phase_materials();
  // per-phase constant stresses make any cross-phase mixing visible
  const Eigen::Vector3d s0(1.0, 2.0, 3.0), s1(10.0, 20.0, 30.0);
  auto qp = mftest::synthetic_qp_field(
      mesh, material, [&](double, double, int phase) { return phase == 0 ? s0 : s1; });

  const auto incidence = mesh.corner_incidence();
  for (auto scheme : {RecoveryScheme::spr_modified, RecoveryScheme::averaging}) {
    const auto recovered = recover(scheme, mesh, qp);
    for (int v = 0; v < mesh.node_count(); ++v) {
      std::set<int> phases;
      for (auto e : incidence[v]) phases.insert(mesh.elements[e].phase);
      CHECK(recovered.entry_count(v) == (int)phases.size());
      for (int p : phases) {
        const auto& entry = recovered.value_at(v, p);
        CHECK((entry.stress - (p == 0 ? s0 : s1)).cwiseAbs().maxCoeff() < 1e-11);
      }
    }
  }
}
