#include "onebit/model.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "onebit/rng.hpp"

namespace onebit {

Vector sign_of(const Vector& v) {
  return v.unaryExpr([](double x) { return sign_of(x); });
}

RealInstance RealInstance::from_real(Matrix h, Vector r, double sigma, std::optional<Vector> x_true) {
  if (h.rows() != r.size()) throw std::invalid_argument("instance: H rows must match r length");
  if (x_true && x_true->size() != h.cols()) throw std::invalid_argument("instance: x_true length");
  RealInstance inst;
  inst.b = r.asDiagonal() * h;
  inst.h = std::move(h);
  inst.r = std::move(r);
  inst.sigma = sigma;
  inst.x_true = std::move(x_true);
  return inst;
}

Vector stack(const ComplexVector& v) {
  Vector out(2 * v.size());
  out << v.real(), v.imag();
  return out;
}

Matrix stack(const ComplexMatrix& h) {
  const auto m = h.rows();
  const auto n = h.cols();
  Matrix out(2 * m, 2 * n);
  out.topLeftCorner(m, n) = h.real();
  out.topRightCorner(m, n) = -h.imag();
  out.bottomLeftCorner(m, n) = h.imag();
  out.bottomRightCorner(m, n) = h.real();
  return out;
}

ComplexVector quantize(const ComplexVector& y) {
  ComplexVector r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) r(i) = {sign_of(y(i).real()), sign_of(y(i).imag())};
  return r;
}

RealInstance complex_to_real(const ComplexInstance& c) {
  std::optional<Vector> x_true;
  if (c.x_tilde.size() > 0) x_true = stack(c.x_tilde);
  RealInstance inst = RealInstance::from_real(stack(c.h_tilde), stack(c.r_tilde),
                                              std::sqrt(c.sigma_tilde_sq / 2.0), std::move(x_true));
  inst.provenance = c.provenance;
  return inst;
}

double noise_variance_from_snr(const SnrSpec& s) {
  const double snr_linear = std::pow(10.0, s.snr_db / 10.0);
  return 2.0 * s.n_tilde / snr_linear;
}

ComplexInstance generate_complex_instance(int m_tilde, int n_tilde, double snr_db, std::uint64_t seed) {
  if (m_tilde <= 0 || n_tilde <= 0) throw std::invalid_argument("generate_instance: sizes must be positive");
  Rng rng(seed);
  ComplexInstance c;
  c.provenance = {m_tilde, n_tilde, snr_db, seed};
  c.sigma_tilde_sq = noise_variance_from_snr({snr_db, n_tilde});

  const double h_scale = std::sqrt(0.5);
  c.h_tilde.resize(m_tilde, n_tilde);
  for (int j = 0; j < n_tilde; ++j) {
    for (int i = 0; i < m_tilde; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      c.h_tilde(i, j) = {h_scale * re, h_scale * im};
    }
  }
  c.x_tilde.resize(n_tilde);
  for (int j = 0; j < n_tilde; ++j) {
    const double re = rng.sign();
    const double im = rng.sign();
    c.x_tilde(j) = {re, im};
  }
  const double v_scale = std::sqrt(c.sigma_tilde_sq / 2.0);
  c.v_tilde.resize(m_tilde);
  for (int i = 0; i < m_tilde; ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    c.v_tilde(i) = {v_scale * re, v_scale * im};
  }
  c.r_tilde = quantize(c.h_tilde * c.x_tilde + c.v_tilde);
  return c;
}

RealInstance generate_instance(int m_tilde, int n_tilde, double snr_db, std::uint64_t seed) {
  return complex_to_real(generate_complex_instance(m_tilde, n_tilde, snr_db, seed));
}

namespace {

std::vector<double> flatten_row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

std::vector<double> read_array(const nlohmann::json& j, const char* key, std::size_t expected) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("instance json: missing field ") + key);
  auto values = j.at(key).get<std::vector<double>>();
  if (values.size() != expected) {
    throw std::invalid_argument(std::string("instance json: field ") + key + " has wrong length");
  }
  return values;
}

}  // namespace

nlohmann::json instance_to_json(const ComplexInstance& c) {
  const Vector x_re = c.x_tilde.real();
  const Vector x_im = c.x_tilde.imag();
  const Vector r_re = c.r_tilde.real();
  const Vector r_im = c.r_tilde.imag();
  return {
      {"m_tilde", c.h_tilde.rows()},
      {"n_tilde", c.h_tilde.cols()},
      {"snr_db", c.provenance.snr_db},
      {"seed", c.provenance.seed},
      {"H_re", flatten_row_major(c.h_tilde.real())},
      {"H_im", flatten_row_major(c.h_tilde.imag())},
      {"x_re", std::vector<double>(x_re.data(), x_re.data() + x_re.size())},
      {"x_im", std::vector<double>(x_im.data(), x_im.data() + x_im.size())},
      {"r_re", std::vector<double>(r_re.data(), r_re.data() + r_re.size())},
      {"r_im", std::vector<double>(r_im.data(), r_im.data() + r_im.size())},
      {"sigma_tilde_sq", c.sigma_tilde_sq},
  };
}

ComplexInstance instance_from_json(const nlohmann::json& j) {
  for (const char* key : {"m_tilde", "n_tilde", "sigma_tilde_sq"}) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("instance json: missing field ") + key);
  }
  const int m = j.at("m_tilde").get<int>();
  const int n = j.at("n_tilde").get<int>();
  if (m <= 0 || n <= 0) throw std::invalid_argument("instance json: sizes must be positive");
  ComplexInstance c;
  c.provenance.m_tilde = m;
  c.provenance.n_tilde = n;
  c.provenance.snr_db = j.value("snr_db", 0.0);
  c.provenance.seed = j.value("seed", std::uint64_t{0});
  c.sigma_tilde_sq = j.at("sigma_tilde_sq").get<double>();
  if (!(c.sigma_tilde_sq > 0.0)) throw std::invalid_argument("instance json: sigma_tilde_sq must be positive");

  const auto h_re = read_array(j, "H_re", static_cast<std::size_t>(m) * n);
  const auto h_im = read_array(j, "H_im", static_cast<std::size_t>(m) * n);
  c.h_tilde.resize(m, n);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < n; ++k) c.h_tilde(i, k) = {h_re[i * n + k], h_im[i * n + k]};
  }
  const auto r_re = read_array(j, "r_re", m);
  const auto r_im = read_array(j, "r_im", m);
  c.r_tilde.resize(m);
  for (int i = 0; i < m; ++i) {
    if (std::abs(r_re[i]) != 1.0 || std::abs(r_im[i]) != 1.0) {
      throw std::invalid_argument("instance json: r entries must be +-1");
    }
    c.r_tilde(i) = {r_re[i], r_im[i]};
  }
  if (j.contains("x_re") && j.contains("x_im")) {
    const auto x_re = read_array(j, "x_re", n);
    const auto x_im = read_array(j, "x_im", n);
    c.x_tilde.resize(n);
    for (int k = 0; k < n; ++k) c.x_tilde(k) = {x_re[k], x_im[k]};
  }
  return c;
}

}  // namespace onebit
