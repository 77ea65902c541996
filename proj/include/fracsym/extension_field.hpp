#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "fracsym/domain.hpp"

namespace fracsym {

enum class ExtensionBC { DirichletTrace, NeumannFlux };

/// Values on the tensor grid (x-box cells) x (graded z nodes) for the
/// half-space problem in the z = (y/sigma)^sigma variables. Column j of
/// `values` is the slice at z[j]; z[0] = 0 carries the trace.
struct ExtensionField {
  DomainPtr box;     // enclosing box grid, every cell active
  DomainPtr omega;   // the source domain embedded in the box
  double sigma = 1.0;
  double zmax = 0.0;
  double gamma = 1.0;
  std::vector<double> z;   // M+1 nodes, z[0] = 0 < ... < z[M] = zmax
  Eigen::MatrixXd values;  // (box cells) x (M+1)
  ExtensionBC bc = ExtensionBC::DirichletTrace;
  bool decay_ok = true;    // top-slice decay check passed

  double nu() const { return 2.0 * (sigma - 1.0) / sigma; }
  int levels() const { return static_cast<int>(z.size()); }
};

}  // namespace fracsym
