#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

namespace mf {

/// Per-phase isotropic elastic constants and the derived plane-strain
/// stiffness in Voigt form [s11,s22,s12] vs [e11,e22,g12] (engineering shear).
class MaterialTable {
 public:
  void add(int phase, double young_modulus, double poisson_ratio);

  bool has(int phase) const { return entries_.count(phase) != 0; }
  double young_modulus(int phase) const { return entry(phase).E; }
  double poisson_ratio(int phase) const { return entry(phase).nu; }
  const Eigen::Matrix3d& stiffness(int phase) const { return entry(phase).D; }
  Eigen::Matrix3d compliance(int phase) const { return entry(phase).D.inverse(); }

  std::vector<int> phases() const;
  std::size_t size() const { return entries_.size(); }

  static Eigen::Matrix3d plane_strain_stiffness(double young_modulus, double poisson_ratio);

 private:
  struct Entry {
    double E, nu;
    Eigen::Matrix3d D;
  };
  const Entry& entry(int phase) const;
  std::map<int, Entry> entries_;
};

}  // namespace mf
