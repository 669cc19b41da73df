#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "carnot/linalg_skew.hpp"

namespace carnot {

struct NotSkewError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct HormanderError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Point of a group or model, split into the horizontal coordinates x (the
/// ones driven directly by the control) and the remaining coordinates t.
/// For free groups t holds bivector coefficients flattened in lexicographic
/// (j,k) order; for the Engel model x=(x1,x2), t=(x3,x4); for the Martinet
/// system x=(x,y), t=(z).
struct GroupElement {
  VectorXd x;
  VectorXd t;

  VectorXd state() const;
  double norm() const { return std::sqrt(x.squaredNorm() + t.squaredNorm()); }
};

/// Step-two Carnot group on R^m x R^ell encoded by skew structure matrices
/// A^1..A^ell: (x,t)(xi,tau) = (x+xi, t+tau+<x,A xi>/2). Construction
/// enforces skewness and the Hormander (bracket-generating) condition.
class StepTwoGroup {
 public:
  StepTwoGroup(const std::vector<MatrixXd>& A, std::string name = "");

  int m() const { return m_; }
  int ell() const { return ell_; }
  int state_dim() const { return m_ + ell_; }
  const std::string& name() const { return name_; }
  const SkewMatrix& structure_matrix(int alpha) const { return A_[alpha]; }

  /// sigma A = sum_a sigma_a A^a.
  SkewMatrix sigma_A(const VectorXd& sigma) const;

  /// <x, A xi> in R^ell, the bracket part of the group law.
  VectorXd bracket_form(const VectorXd& x, const VectorXd& xi) const;

  GroupElement identity() const;
  GroupElement element(const VectorXd& state) const;

  /// True for groups built by free_group(); vertical coordinates are then
  /// flattened bivector coefficients.
  bool is_free() const { return is_free_; }

  /// Constructs without the Hormander check (internal use: subgroup
  /// restrictions are valid control systems but need not bracket-generate
  /// their full vertical space).
  static StepTwoGroup unchecked(std::vector<SkewMatrix> A, std::string name);

 private:
  StepTwoGroup() = default;
  int m_ = 0;
  int ell_ = 0;
  std::vector<SkewMatrix> A_;
  std::string name_;
  bool is_free_ = false;

  friend StepTwoGroup free_group(int m);
};

StepTwoGroup make_step_two(const std::vector<MatrixXd>& A, std::string name = "");

StepTwoGroup heisenberg();
StepTwoGroup free_group(int m);  // 2 <= m <= 8
StepTwoGroup h_times_r();
StepTwoGroup h_alpha(double alpha);  // alpha > 1

enum class ModelKind { Engel, Martinet };

/// Hard-coded polynomial models that are not encoded by structure matrices.
/// Engel: state (x1,x2,x3,x4), fields X1 = d1, X2 = d2 + x1 d3 + (x1^2/2) d4.
/// Martinet: state (x,y,z), control u1 along Y = dy, u2 along
/// X = dx + (y^2/2) dz.
struct ModelSystem {
  ModelKind kind = ModelKind::Engel;

  int state_dim() const { return kind == ModelKind::Engel ? 4 : 3; }
  int control_dim() const { return 2; }
  int horizontal_dim() const { return 2; }
  std::string name() const {
    return kind == ModelKind::Engel ? "engel" : "martinet";
  }

  GroupElement identity() const;
  GroupElement element(const VectorXd& state) const;
};

using Group = std::variant<StepTwoGroup, ModelSystem>;

/// Named structures: "heisenberg", "h_times_r", "free(m)", "h_alpha(a)",
/// "engel", "martinet".
Group preset(const std::string& name);

int state_dim(const Group& G);
int control_dim(const Group& G);
GroupElement identity(const Group& G);
GroupElement element(const Group& G, const VectorXd& state);
std::string group_name(const Group& G);

GroupElement multiply(const StepTwoGroup& G, const GroupElement& g,
                      const GroupElement& h);
GroupElement multiply(const ModelSystem& M, const GroupElement& g,
                      const GroupElement& h);  // Engel only
GroupElement multiply(const Group& G, const GroupElement& g, const GroupElement& h);

GroupElement inverse(const StepTwoGroup& G, const GroupElement& g);
GroupElement inverse(const ModelSystem& M, const GroupElement& g);  // Engel only
GroupElement inverse(const Group& G, const GroupElement& g);

/// Anisotropic dilations: (rx, r^2 t) in step two; weights (1,1,2,3) for
/// Engel and (1,1,3) for Martinet.
GroupElement dilate(const StepTwoGroup& G, const GroupElement& g, double r);
GroupElement dilate(const ModelSystem& M, const GroupElement& g, double r);
GroupElement dilate(const Group& G, const GroupElement& g, double r);

struct MetivierReport {
  enum class Verdict { Metivier, NotMetivier, Inconclusive };
  Verdict verdict = Verdict::Inconclusive;
  /// Unit sigma with sigma A singular; present iff verdict == NotMetivier.
  std::optional<VectorXd> witness_sigma;
  /// Kernel basis of sigma A at the witness.
  std::vector<VectorXd> witness_kernel;
  /// Minimum over sampled unit sigma of the smallest singular value of
  /// sigma A, relative to the scale of the structure matrices.
  double min_smallest_singular_value = 0.0;

  bool is_metivier() const { return verdict == Verdict::Metivier; }
};

/// Decides whether sigma A is nonsingular for every unit sigma. Exact for
/// ell == 1 and for odd m; otherwise a deterministic sphere search with the
/// three-valued outcome described in MetivierReport.
MetivierReport check_metivier(const StepTwoGroup& G);

/// Matrix of J_eta on the horizontal layer: sum_a eta_a A^a.
SkewMatrix j_map(const StepTwoGroup& G, const VectorXd& eta);

/// Bivector view of the vertical part of a free-group element.
Bivector vertical_bivector(const StepTwoGroup& G, const GroupElement& g);
GroupElement free_element(const StepTwoGroup& G, const VectorXd& x,
                          const Bivector& t);

}  // namespace carnot
