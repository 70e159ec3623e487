#include "mf/material.hpp"

#include <stdexcept>
#include <string>

namespace mf {

Eigen::Matrix3d MaterialTable::plane_strain_stiffness(double E, double nu) {
  const double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
  Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
  D(0, 0) = D(1, 1) = c * (1.0 - nu);
  D(0, 1) = D(1, 0) = c * nu;
  D(2, 2) = c * (1.0 - 2.0 * nu) / 2.0;  // == E / (2(1+nu))
  return D;
}

void MaterialTable::add(int phase, double E, double nu) {
  if (phase < 0) throw std::runtime_error("material: negative phase id");
  if (!(E > 0.0)) throw std::runtime_error("material: Young's modulus must be positive");
  if (!(nu >= 0.0 && nu < 0.5))
    throw std::runtime_error("material: Poisson's ratio must be in [0, 0.5)");
  entries_[phase] = Entry{E, nu, plane_strain_stiffness(E, nu)};
}

const MaterialTable::Entry& MaterialTable::entry(int phase) const {
  auto it = entries_.find(phase);
  if (it == entries_.end())
    throw std::runtime_error("material: phase " + std::to_string(phase) + " not in table");
  return it->second;
}

std::vector<int> MaterialTable::phases() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const auto& [phase, e] : entries_) out.push_back(phase);
  return out;
}

}  // namespace mf
