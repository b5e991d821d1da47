#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamembed/linalg.hpp"

namespace hamembed::hamsys {

/// System-specific constants. Fields irrelevant to a system keep defaults.
struct SystemParams {
  int grid_points = 0;     // N for the PDE discretizations
  double domain_lo = 0.0;  // spatial domain [lo, hi), periodic
  double domain_hi = 0.0;
  double dzeta = 0.0;      // grid spacing
  double alpha = 0.5;      // NLS dispersion constant
  double beta = 1.0;       // NLS nonlinearity constant
};

/// A canonical Hamiltonian system x' = J grad H(x) with x = [q; p].
class CanonicalSystem {
 public:
  using ScalarFn = std::function<double(const Vec&)>;
  using VectorFn = std::function<Vec(const Vec&)>;

  CanonicalSystem(std::string name, int n, ScalarFn hamiltonian, VectorFn gradient,
                  SystemParams params = {});

  const std::string& name() const { return name_; }
  int n() const { return n_; }
  int dim() const { return 2 * n_; }
  const SystemParams& params() const { return params_; }

  double hamiltonian(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  /// J_{2n} grad H(x). Rejects wrong dimension and non-finite states.
  Vec vector_field(const Vec& x) const;

 private:
  void check_dim(const Vec& x, const char* what) const;

  std::string name_;
  int n_;
  ScalarFn h_;
  VectorFn grad_;
  SystemParams params_;
};

CanonicalSystem make_pendulum();
/// H = p^2/2 + q^2/2 + q^2/4.
CanonicalSystem make_oscillator();
/// H = p - e^p + 2q - e^q in canonical coordinates.
CanonicalSystem make_lotka_volterra();
/// Cubic Hamiltonian p^2/2 + q^2/2 + q^3/3, which has unbounded orbits.
CanonicalSystem make_cubic_oscillator();

/// Periodic three-point second-difference matrix on N points, scaled by 1/dz^2.
Mat periodic_laplacian(int grid_points, double dzeta);

/// Cubic NLS i u_t + 1/2 u_zz + |u|^2 u = 0 with u = q + i p on N periodic
/// grid points. The attached discrete Hamiltonian is
/// H = -1/4 q'Dq - 1/4 p'Dp - 1/4 sum (q^2+p^2)^2, so that J grad H matches the
/// semi-discrete equations exactly.
CanonicalSystem build_nls_system(int grid_points, double domain_lo = -10.0, double domain_hi = 10.0,
                                 bool periodic = true);

/// Linear wave u_tt = u_zz: z' = K z with K = [[0, I], [D, 0]] and
/// H = 1/2 p'p - 1/2 q'Dq.
CanonicalSystem build_wave_system(int grid_points, double domain_lo = -10.0, double domain_hi = 10.0);

/// The block operator K of the wave semi-discretization.
Mat wave_operator(const CanonicalSystem& wave);

/// Grid nodes zeta_j = lo + j*dz, j = 0..N-1.
Vec spatial_grid(const CanonicalSystem& pde);

/// q = sech(zeta/2), p = 0.
Vec nls_initial_state(const CanonicalSystem& nls);
/// q = sech(mu*zeta), p = 0.
Vec wave_initial_state(const CanonicalSystem& wave, double mu);

/// Registry lookup: "pendulum", "oscillator", "lotka-volterra", "nls", "wave".
CanonicalSystem make_system(const std::string& name, int grid_points = 256);
const std::vector<std::string>& system_names();

struct InitialConditionSpec {
  std::vector<std::pair<double, double>> box;  // per-coordinate closed interval
  double energy_cap = std::numeric_limits<double>::infinity();
  int count = 1;
  std::uint64_t seed = 0;
};

inline constexpr long kMaxSamplingAttempts = 1'000'000;
inline constexpr long kMinAttemptsForRate = 100'000;
inline constexpr double kMinAcceptanceRate = 1e-4;

/// Uniform samples on the box, rejection-filtered by H(x) <= energy_cap.
/// Deterministic for a fixed seed.
std::vector<Vec> sample_initial_conditions(const CanonicalSystem& sys, const InitialConditionSpec& spec);

}  // namespace hamembed::hamsys
