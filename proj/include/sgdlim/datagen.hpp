#pragma once

// Random least-squares instances: b = A x_tilde + sqrt(n) eta, with A drawn
// from one of four ensembles. Everything is deterministic given (model,
// seed); named RNG streams keep A, x_tilde, x0 and eta independent.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sgdlim/rng.hpp"

namespace sgdlim::datagen {

// rows are accessed one at a time by the SGD loop, keep them contiguous
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Isotropic {
  int n, d;
};

// A = U diag(singular_values) V^T, U and V Haar; singular_values.size()
// must equal min(n, d)
struct Planted {
  int n, d;
  std::vector<double> singular_values;
};

// product of standard Gaussian factors n x w1 x ... x wL x d, scaled by
// 1/sqrt(w1 ... wL) so the ESM of (1/n) A^T A keeps first moment 1
struct DeepLinear {
  int n, d;
  std::vector<int> inner_widths;
};

// A_ij = g([W Y]_ij / sqrt(m)), g(z) = max(z,0) - 1/sqrt(2 pi)
struct OneHiddenLayer {
  int n, m, d;
};

using DataModel = std::variant<Isotropic, Planted, DeepLinear, OneHiddenLayer>;

inline int model_n(const DataModel& m) {
  return std::visit([](const auto& v) { return v.n; }, m);
}
inline int model_d(const DataModel& m) {
  return std::visit([](const auto& v) { return v.d; }, m);
}

inline void validate_model(const DataModel& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if (m.n < 1 || m.d < 1) throw std::invalid_argument("DataModel: dimensions must be >= 1");
        if constexpr (std::is_same_v<T, Planted>) {
          if (static_cast<int>(m.singular_values.size()) != std::min(m.n, m.d))
            throw std::invalid_argument("Planted: need min(n,d) singular values");
          for (double s : m.singular_values)
            if (s < 0.0) throw std::invalid_argument("Planted: singular values must be >= 0");
        } else if constexpr (std::is_same_v<T, DeepLinear>) {
          for (int w : m.inner_widths)
            if (w < 1) throw std::invalid_argument("DeepLinear: widths must be >= 1");
        } else if constexpr (std::is_same_v<T, OneHiddenLayer>) {
          if (m.m < 1) throw std::invalid_argument("OneHiddenLayer: m must be >= 1");
        }
      },
      model);
}

inline const char* model_tag(const DataModel& m) {
  struct V {
    const char* operator()(const Isotropic&) const { return "isotropic"; }
    const char* operator()(const Planted&) const { return "planted"; }
    const char* operator()(const DeepLinear&) const { return "deep_linear"; }
    const char* operator()(const OneHiddenLayer&) const { return "one_hidden_layer"; }
  };
  return std::visit(V{}, m);
}

inline double hinge_activation(double z) {
  return std::max(z, 0.0) - 0.3989422804014326779399461; // 1/sqrt(2 pi)
}

namespace detail {

inline Matrix gaussian_matrix(int rows, int cols, rng::Rng& g) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g.normal();
  return m;
}

inline Vector gaussian_vector(int k, rng::Rng& g) {
  Vector v(k);
  for (int i = 0; i < k; ++i) v[i] = g.normal();
  return v;
}

inline Vector unit_vector(int k, rng::Rng& g) {
  Vector v = gaussian_vector(k, g);
  v /= v.norm();
  return v;
}

// QR of a Gaussian matrix; multiplying Q's columns by the signs of R's
// diagonal makes the factorization unique and the law exactly Haar
inline Eigen::MatrixXd haar_impl(int k, rng::Rng& g) {
  Eigen::MatrixXd ginv(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) ginv(i, j) = g.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ginv);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

// deep factor f draws from its own stream so width changes never reshuffle
// earlier factors
inline std::uint64_t deep_stream(std::size_t f) {
  if (f == 0) return rng::stream_id::matrix;
  if (f == 1) return rng::stream_id::matrix_aux;
  return rng::stream_id::matrix_extra + static_cast<std::uint64_t>(f - 2);
}

} // namespace detail

inline Eigen::MatrixXd haar_orthogonal(int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("haar_orthogonal: k must be >= 1");
  rng::Rng g(seed, rng::stream_id::matrix);
  return detail::haar_impl(k, g);
}

inline Matrix gen_matrix(const DataModel& model, std::uint64_t seed) {
  validate_model(model);
  struct V {
    std::uint64_t seed;

    Matrix operator()(const Isotropic& m) const {
      rng::Rng g(seed, rng::stream_id::matrix);
      return detail::gaussian_matrix(m.n, m.d, g);
    }

    Matrix operator()(const Planted& m) const {
      rng::Rng gu(seed, rng::stream_id::matrix);
      rng::Rng gv(seed, rng::stream_id::matrix_aux);
      const int k = std::min(m.n, m.d);
      Eigen::MatrixXd u = detail::haar_impl(m.n, gu);
      Eigen::MatrixXd v = detail::haar_impl(m.d, gv);
      Eigen::Map<const Vector> sv(m.singular_values.data(), k);
      return Matrix((u.leftCols(k) * sv.asDiagonal()) * v.leftCols(k).transpose());
    }

    Matrix operator()(const DeepLinear& m) const {
      std::vector<int> widths;
      widths.push_back(m.n);
      widths.insert(widths.end(), m.inner_widths.begin(), m.inner_widths.end());
      widths.push_back(m.d);
      rng::Rng g0(seed, detail::deep_stream(0));
      Matrix prod = detail::gaussian_matrix(widths[0], widths[1], g0);
      double scale = 1.0;
      for (std::size_t f = 1; f + 1 < widths.size(); ++f) {
        rng::Rng gf(seed, detail::deep_stream(f));
        prod = Matrix(prod * detail::gaussian_matrix(widths[f], widths[f + 1], gf));
        scale *= static_cast<double>(widths[f]);
      }
      return Matrix(prod / std::sqrt(scale));
    }

    Matrix operator()(const OneHiddenLayer& m) const {
      rng::Rng gw(seed, rng::stream_id::matrix);
      rng::Rng gy(seed, rng::stream_id::matrix_aux);
      Matrix w = detail::gaussian_matrix(m.n, m.m, gw);
      Matrix y = detail::gaussian_matrix(m.m, m.d, gy);
      Matrix a(m.n, m.d);
      const double inv = 1.0 / std::sqrt(static_cast<double>(m.m));
      a.noalias() = w * y;
      for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.d; ++j) a(i, j) = hinge_activation(a(i, j) * inv);
      return a;
    }
  };
  return std::visit(V{seed}, model);
}

struct ProblemInstance {
  Matrix A;
  Vector b, x_tilde, x0, eta;
  int n = 0, d = 0;
  double R = 0.0, R_tilde = 0.0;
};

// x_tilde is a uniform unit vector (|x_tilde|^2 = 1 by convention; only
// |x0 - x_tilde|^2 = R enters the limit). deterministic_direction replaces
// the random sphere direction of x0 - x_tilde with e_1.
inline ProblemInstance gen_instance(const DataModel& model, double R, double R_tilde,
                                    std::uint64_t seed, bool deterministic_direction = false) {
  if (R < 0.0 || R_tilde < 0.0) throw std::invalid_argument("gen_instance: R, R_tilde >= 0");
  ProblemInstance inst;
  inst.n = model_n(model);
  inst.d = model_d(model);
  inst.R = R;
  inst.R_tilde = R_tilde;
  inst.A = gen_matrix(model, seed);

  rng::Rng gs(seed, rng::stream_id::signal);
  inst.x_tilde = detail::unit_vector(inst.d, gs);

  Vector u;
  if (deterministic_direction) {
    u = Vector::Zero(inst.d);
    u[0] = 1.0;
  } else {
    rng::Rng gd(seed, rng::stream_id::direction);
    u = detail::unit_vector(inst.d, gd);
  }
  inst.x0 = inst.x_tilde + std::sqrt(R) * u;

  rng::Rng ge(seed, rng::stream_id::noise);
  inst.eta = Vector(inst.n);
  const double sd = std::sqrt(R_tilde / static_cast<double>(inst.n));
  for (int i = 0; i < inst.n; ++i) inst.eta[i] = sd * ge.normal();

  inst.b = inst.A * inst.x_tilde + std::sqrt(static_cast<double>(inst.n)) * inst.eta;
  return inst;
}

// Fresh rows from the same ensemble as gen_matrix(model, seed): the one-pass
// regime where every step sees new data. Cached factors reuse the gen_matrix
// streams; per-row randomness comes from stream_rows.
class RowSampler {
public:
  RowSampler(const DataModel& model, std::uint64_t seed)
      : model_(model), fresh_(seed, rng::stream_id::stream_rows) {
    validate_model(model);
    struct V {
      RowSampler* s;
      std::uint64_t seed;

      void operator()(const Isotropic&) const {}

      void operator()(const Planted& m) const {
        rng::Rng gv(seed, rng::stream_id::matrix_aux);
        const int k = std::min(m.n, m.d);
        Eigen::MatrixXd v = detail::haar_impl(m.d, gv);
        Eigen::Map<const Vector> sv(m.singular_values.data(), k);
        // row of U Sigma V^T with a fresh Haar row of U: unit n-vector w,
        // row = sum_k w_k sv_k v_k^T
        s->cached_ = Matrix(sv.asDiagonal() * v.leftCols(k).transpose());
      }

      void operator()(const DeepLinear& m) const {
        std::vector<int> widths;
        widths.push_back(m.inner_widths.empty() ? m.d : m.inner_widths[0]);
        for (std::size_t i = 1; i < m.inner_widths.size(); ++i) widths.push_back(m.inner_widths[i]);
        if (!m.inner_widths.empty()) widths.push_back(m.d);
        // product of factors 1..L with their gen_matrix streams; factor 0 is
        // redrawn per row
        double scale = 1.0;
        Matrix prod = Matrix::Identity(widths[0], widths[0]);
        for (std::size_t f = 1; f < widths.size(); ++f) {
          rng::Rng gf(seed, detail::deep_stream(f));
          prod = Matrix(prod * detail::gaussian_matrix(widths[f - 1], widths[f], gf));
          scale *= static_cast<double>(widths[f - 1]);
        }
        s->cached_ = Matrix(prod / std::sqrt(scale));
      }

      void operator()(const OneHiddenLayer& m) const {
        rng::Rng gy(seed, rng::stream_id::matrix_aux);
        s->cached_ = detail::gaussian_matrix(m.m, m.d, gy);
      }
    };
    std::visit(V{this, seed}, model);
  }

  void next_row(Vector& row) {
    struct V {
      RowSampler* s;
      Vector* row;

      void operator()(const Isotropic& m) const {
        row->resize(m.d);
        for (int j = 0; j < m.d; ++j) (*row)[j] = s->fresh_.normal();
      }

      void operator()(const Planted& m) const {
        const Vector w = detail::unit_vector(m.n, s->fresh_);
        row->resize(m.d);
        row->noalias() = s->cached_.transpose() * w.head(s->cached_.rows());
      }

      void operator()(const DeepLinear& m) const {
        const int w1 = static_cast<int>(s->cached_.rows());
        Vector g(w1);
        for (int j = 0; j < w1; ++j) g[j] = s->fresh_.normal();
        row->resize(m.d);
        row->noalias() = s->cached_.transpose() * g;
      }

      void operator()(const OneHiddenLayer& m) const {
        Vector w(m.m);
        for (int j = 0; j < m.m; ++j) w[j] = s->fresh_.normal();
        row->resize(m.d);
        row->noalias() = s->cached_.transpose() * w;
        const double inv = 1.0 / std::sqrt(static_cast<double>(m.m));
        for (int j = 0; j < m.d; ++j) (*row)[j] = hinge_activation((*row)[j] * inv);
      }
    };
    std::visit(V{this, &row}, model_);
  }

private:
  DataModel model_;
  rng::Rng fresh_;
  Matrix cached_;
};

// binary + text serialization: <prefix>.bin holds A (row-major), b, x_tilde,
// x0, eta as raw little-endian float64; <prefix>.meta holds the shapes
inline void save_instance(const ProblemInstance& inst, const std::string& prefix) {
  {
    std::FILE* f = std::fopen((prefix + ".bin").c_str(), "wb");
    if (!f) throw std::runtime_error("save_instance: cannot open " + prefix + ".bin");
    auto put = [f](const double* p, std::size_t k) {
      if (std::fwrite(p, sizeof(double), k, f) != k)
        throw std::runtime_error("save_instance: short write");
    };
    put(inst.A.data(), static_cast<std::size_t>(inst.n) * inst.d);
    put(inst.b.data(), inst.n);
    put(inst.x_tilde.data(), inst.d);
    put(inst.x0.data(), inst.d);
    put(inst.eta.data(), inst.n);
    std::fclose(f);
  }
  std::FILE* f = std::fopen((prefix + ".meta").c_str(), "w");
  if (!f) throw std::runtime_error("save_instance: cannot open " + prefix + ".meta");
  std::fprintf(f, "n=%d\nd=%d\nR=%.17g\nR_tilde=%.17g\nlayout=A,b,x_tilde,x0,eta\n", inst.n,
               inst.d, inst.R, inst.R_tilde);
  std::fclose(f);
}

inline ProblemInstance load_instance(const std::string& prefix) {
  ProblemInstance inst;
  {
    std::FILE* f = std::fopen((prefix + ".meta").c_str(), "r");
    if (!f) throw std::runtime_error("load_instance: cannot open " + prefix + ".meta");
    char key[64];
    double val;
    while (std::fscanf(f, " %63[^=]=%lg", key, &val) == 2) {
      const std::string k(key);
      if (k == "n")
        inst.n = static_cast<int>(val);
      else if (k == "d")
        inst.d = static_cast<int>(val);
      else if (k == "R")
        inst.R = val;
      else if (k == "R_tilde")
        inst.R_tilde = val;
      else
        break; // layout line ends the numeric block
    }
    std::fclose(f);
  }
  if (inst.n < 1 || inst.d < 1) throw std::runtime_error("load_instance: bad metadata");
  std::FILE* f = std::fopen((prefix + ".bin").c_str(), "rb");
  if (!f) throw std::runtime_error("load_instance: cannot open " + prefix + ".bin");
  auto get = [f, &prefix](double* p, std::size_t k) {
    if (std::fread(p, sizeof(double), k, f) != k)
      throw std::runtime_error("load_instance: " + prefix + ".bin is truncated");
  };
  inst.A.resize(inst.n, inst.d);
  inst.b.resize(inst.n);
  inst.x_tilde.resize(inst.d);
  inst.x0.resize(inst.d);
  inst.eta.resize(inst.n);
  get(inst.A.data(), static_cast<std::size_t>(inst.n) * inst.d);
  get(inst.b.data(), inst.n);
  get(inst.x_tilde.data(), inst.d);
  get(inst.x0.data(), inst.d);
  get(inst.eta.data(), inst.n);
  std::fclose(f);
  return inst;
}

} // namespace sgdlim::datagen
