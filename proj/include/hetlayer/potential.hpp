#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hetlayer {

using Point = std::vector<double>;

/// Plug-in interface for a double-well potential W: R^m -> [0, inf).
///
/// Implementations supply exact closed forms for W, its gradient and the
/// Hessian quadratic form. They receive already-validated input and must be
/// stateless after construction (safe for concurrent evaluation).
class PotentialModel {
 public:
  virtual ~PotentialModel() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual Point well_minus() const = 0;
  virtual Point well_plus() const = 0;

  virtual double value(std::span<const double> u) const = 0;
  virtual void gradient(std::span<const double> u, std::span<double> out) const = 0;
  virtual double hessian_quadform(std::span<const double> u,
                                  std::span<const double> nu) const = 0;

  /// True when W(u1, u2, ...) = W(u1, -u2, ...) holds exactly.
  virtual bool symmetric_in_u2() const { return false; }
};

/// W = 1/4 (1 - u1^2)^2 + 1/2 sum_{k>=2} u_k^2, wells (+-1, 0, ..., 0).
/// Its minimal heteroclinic is (tanh(x/sqrt2), 0, ..., 0) with action 2 sqrt2 / 3.
class DecoupledQuartic final : public PotentialModel {
 public:
  explicit DecoupledQuartic(int m = 2);
  std::string name() const override { return "decoupled_quartic"; }
  int dim() const override { return m_; }
  Point well_minus() const override;
  Point well_plus() const override;
  double value(std::span<const double> u) const override;
  void gradient(std::span<const double> u, std::span<double> out) const override;
  double hessian_quadform(std::span<const double> u, std::span<const double> nu) const override;
  bool symmetric_in_u2() const override { return true; }

 private:
  int m_;
};

/// W = 1/4 (u1^2 - 1)^2 + 1/2 (u2^2 - a (1 - u1^2))^2 + mu/2 u2^2 on R^2.
///
/// The second term vanishes on the ellipse u2^2 + a u1^2 = a through both wells,
/// so cheap connections bend away from the u1 axis; the Hessian at the wells is
/// diag(2 + 4 a^2, mu).
class EllipticWell final : public PotentialModel {
 public:
  EllipticWell(double a = 2.0, double mu = 0.1);
  std::string name() const override { return "elliptic_well"; }
  int dim() const override { return 2; }
  Point well_minus() const override { return {-1.0, 0.0}; }
  Point well_plus() const override { return {1.0, 0.0}; }
  double value(std::span<const double> u) const override;
  void gradient(std::span<const double> u, std::span<double> out) const override;
  double hessian_quadform(std::span<const double> u, std::span<const double> nu) const override;
  bool symmetric_in_u2() const override { return true; }

  double a() const { return a_; }
  double mu() const { return mu_; }

 private:
  double a_;
  double mu_;
};

/// Immutable double-well potential: a model plus the constants the theory
/// attaches to it (nondegeneracy radius r, convexity bound c, optional
/// invariant-ball radius rho for the radial growth condition).
///
/// The checked entry points validate their input; the `*_unchecked` variants
/// are for inner loops that already hold finite data.
class Potential {
 public:
  Potential(std::shared_ptr<const PotentialModel> model, double r, double c,
            std::optional<double> rho = std::nullopt);

  int dim() const { return model_->dim(); }
  std::string name() const { return model_->name(); }
  const Point& well_minus() const { return a_minus_; }
  const Point& well_plus() const { return a_plus_; }
  double r() const { return r_; }
  double c() const { return c_; }
  const std::optional<double>& rho() const { return rho_; }
  bool symmetric_in_u2() const { return model_->symmetric_in_u2(); }
  const PotentialModel& model() const { return *model_; }

  double eval(std::span<const double> u) const;
  Point gradient(std::span<const double> u) const;
  double hessian_quadform(std::span<const double> u, std::span<const double> nu) const;

  double eval_unchecked(std::span<const double> u) const { return model_->value(u); }
  void gradient_unchecked(std::span<const double> u, std::span<double> out) const {
    model_->gradient(u, out);
  }
  double hessian_quadform_unchecked(std::span<const double> u,
                                    std::span<const double> nu) const {
    return model_->hessian_quadform(u, nu);
  }

  /// Largest |D^2W(u)(nu,nu)| over coordinate axes and pairwise diagonals.
  double hessian_scale(std::span<const double> u) const;

 private:
  std::shared_ptr<const PotentialModel> model_;
  Point a_minus_;
  Point a_plus_;
  double r_;
  double c_;
  std::optional<double> rho_;
};

Potential make_decoupled_quartic(int m = 2, std::optional<double> rho = std::nullopt);
Potential make_elliptic_well(double a = 2.0, double mu = 0.1,
                             std::optional<double> rho = std::nullopt);

struct SampleSpec {
  double box_half_width = 3.0;  // sampling box [-w, w]^m
  double box_step = 0.05;
  double sphere_radius = 5.0;   // R for the asymptotic condition
  int sphere_samples = 720;
  int direction_samples = 64;   // unit vectors for the Hessian bound
  int ball_samples = 400;       // points inside each r-ball
  double zero_tolerance = 1e-10;
  unsigned seed = 12345;
};

struct HypothesisReport {
  bool two_zeros = false;          // W >= 0 on samples, exactly two zeros, at a-/a+
  bool hessian_bound = false;      // D^2W >= c on both r-balls
  bool asymptotic = false;         // inf over |u| = R is positive
  std::optional<bool> growth;      // W(s u) >= W(u), s >= 1, |u| = rho (if rho set)
  double min_sampled_value = 0.0;
  std::vector<Point> zeros;        // distinct zeros located by refinement
  double measured_c = 0.0;         // min Hessian quadform over the r-balls
  double sphere_infimum = 0.0;

  bool all_pass() const { return two_zeros && hessian_bound && asymptotic && growth.value_or(true); }
};

/// Sampling-based check of the standing double-well hypotheses.
HypothesisReport verify_double_well(const Potential& p, const SampleSpec& spec = {});

}  // namespace hetlayer
