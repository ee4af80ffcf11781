#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace onebit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// sgn with the tie convention sgn(0) = +1.
inline double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }
Vector sign_of(const Vector& v);

// Where an instance came from; carried through files and reports.
struct Provenance {
  int m_tilde = 0;
  int n_tilde = 0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

// One-bit observation r~ = Q(H~ x~ + v~) of QPSK symbols.
struct ComplexInstance {
  ComplexMatrix h_tilde;
  ComplexVector x_tilde;
  double sigma_tilde_sq = 0.0;
  ComplexVector r_tilde;
  // Noise actually drawn; empty when the instance was loaded from a file.
  ComplexVector v_tilde;
  Provenance provenance;
};

// Real-valued form: M = 2 M~, N = 2 N~, b.row(i) = r(i) * h.row(i).
struct RealInstance {
  Matrix h;
  Vector r;
  Matrix b;
  double sigma = 1.0;  // per-dimension noise std
  std::optional<Vector> x_true;
  Provenance provenance;

  int m() const { return static_cast<int>(h.rows()); }
  int n() const { return static_cast<int>(h.cols()); }

  // Builds an instance directly from a real channel and observation.
  static RealInstance from_real(Matrix h, Vector r, double sigma,
                                std::optional<Vector> x_true = std::nullopt);
};

struct SnrSpec {
  double snr_db = 0.0;
  int n_tilde = 1;
};

// [Re; Im]
Vector stack(const ComplexVector& v);
// [[Re, -Im], [Im, Re]]
Matrix stack(const ComplexMatrix& h);

// Element-wise one-bit quantizer on real and imaginary parts.
ComplexVector quantize(const ComplexVector& y);

RealInstance complex_to_real(const ComplexInstance& c);

// Complex noise variance sigma~^2 = 2 N~ / 10^(snr_db / 10), from
// E||H~ x~||^2 = 2 M~ N~ and E||v~||^2 = M~ sigma~^2.
double noise_variance_from_snr(const SnrSpec& s);

// Unit-variance complex Gaussian channel (each part variance 1/2), uniform
// QPSK symbols, complex Gaussian noise. Deterministic in `seed`; the draw
// order is H~ column-major, then x~, then v~.
ComplexInstance generate_complex_instance(int m_tilde, int n_tilde, double snr_db, std::uint64_t seed);
RealInstance generate_instance(int m_tilde, int n_tilde, double snr_db, std::uint64_t seed);

// Instance files: {m_tilde, n_tilde, snr_db, seed, H_re, H_im, x_re, x_im,
// r_re, r_im, sigma_tilde_sq}, matrices flattened row-major.
nlohmann::json instance_to_json(const ComplexInstance& c);
ComplexInstance instance_from_json(const nlohmann::json& j);

}  // namespace onebit
