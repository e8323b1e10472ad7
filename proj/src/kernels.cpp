#include "vst/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vst::kernels {

namespace {
#ifdef _OPENMP
bool g_parallel = true;
#else
bool g_parallel = false;
#endif

// Work below these sizes is not worth a team wake-up.
constexpr long kMatmulGrain = 1 << 15;
constexpr std::size_t kVecGrain = 1 << 14;
constexpr long kRowGrain = 1 << 13;

inline bool par(long work, long grain) { return g_parallel && work > grain; }
}  // namespace

void set_parallel(bool on) {
#ifdef _OPENMP
  g_parallel = on;
#else
  (void)on;
  g_parallel = false;
#endif
}

bool parallel_enabled() { return g_parallel; }

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n) {
  for (long i = 0; i < static_cast<long>(m) * n; ++i) c[i] = 0.0;
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  const long work = static_cast<long>(m) * k * n;
  if (!par(work, kMatmulGrain)) {
    matmul_serial(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_nt_add_serial(const double* g, const double* b, double* da, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* gi = g + static_cast<std::size_t>(i) * n;
    double* dai = da + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * n;
      double s = 0.0;
      for (int p = 0; p < n; ++p) s += gi[p] * bj[p];
      dai[j] += s;
    }
  }
}

void matmul_nt_add(const double* g, const double* b, double* da, int m, int k, int n) {
  const long work = static_cast<long>(m) * k * n;
  if (!par(work, kMatmulGrain)) {
    matmul_nt_add_serial(g, b, da, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* gi = g + static_cast<std::size_t>(i) * n;
    double* dai = da + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * n;
      double s = 0.0;
      for (int p = 0; p < n; ++p) s += gi[p] * bj[p];
      dai[j] += s;
    }
  }
}

void matmul_tn_add_serial(const double* a, const double* g, double* db, int m, int k, int n) {
  for (int i = 0; i < k; ++i) {
    double* dbi = db + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < m; ++p) {
      const double api = a[static_cast<std::size_t>(p) * k + i];
      const double* gp = g + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) dbi[j] += api * gp[j];
    }
  }
}

void matmul_tn_add(const double* a, const double* g, double* db, int m, int k, int n) {
  const long work = static_cast<long>(m) * k * n;
  if (!par(work, kMatmulGrain)) {
    matmul_tn_add_serial(a, g, db, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k; ++i) {
    double* dbi = db + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < m; ++p) {
      const double api = a[static_cast<std::size_t>(p) * k + i];
      const double* gp = g + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) dbi[j] += api * gp[j];
    }
  }
}

void sigmoid_serial(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid(const double* x, double* y, std::size_t n) {
  if (!par(static_cast<long>(n), static_cast<long>(kVecGrain))) {
    sigmoid_serial(x, y, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void tanh_serial(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh(const double* x, double* y, std::size_t n) {
  if (!par(static_cast<long>(n), static_cast<long>(kVecGrain))) {
    tanh_serial(x, y, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n); ++i) y[i] = std::tanh(x[i]);
}

void affine(const double* x, double* y, std::size_t n, double alpha, double beta) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(n), static_cast<long>(kVecGrain)))
  for (long i = 0; i < static_cast<long>(n); ++i) y[i] = alpha * x[i] + beta;
}

void add(const double* a, const double* b, double* y, std::size_t n) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(n), static_cast<long>(kVecGrain)))
  for (long i = 0; i < static_cast<long>(n); ++i) y[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* y, std::size_t n) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(n), static_cast<long>(kVecGrain)))
  for (long i = 0; i < static_cast<long>(n); ++i) y[i] = a[i] * b[i];
}

void add_bias(const double* x, const double* bias, double* y, int r, int c) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(r) * c, static_cast<long>(kVecGrain)))
  for (int i = 0; i < r; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * c;
    double* yi = y + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < c; ++j) yi[j] = xi[j] + bias[j];
  }
}

void acc(const double* g, double* out, std::size_t n) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(n), static_cast<long>(kVecGrain)))
  for (long i = 0; i < static_cast<long>(n); ++i) out[i] += g[i];
}

void acc_scaled(const double* g, double* out, std::size_t n, double s) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(n), static_cast<long>(kVecGrain)))
  for (long i = 0; i < static_cast<long>(n); ++i) out[i] += s * g[i];
}

void acc_mul(const double* g, const double* f, double* out, std::size_t n) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(n), static_cast<long>(kVecGrain)))
  for (long i = 0; i < static_cast<long>(n); ++i) out[i] += g[i] * f[i];
}

void acc_sigmoid_bwd(const double* y, const double* g, double* out, std::size_t n) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(n), static_cast<long>(kVecGrain)))
  for (long i = 0; i < static_cast<long>(n); ++i) out[i] += g[i] * y[i] * (1.0 - y[i]);
}

void acc_tanh_bwd(const double* y, const double* g, double* out, std::size_t n) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(n), static_cast<long>(kVecGrain)))
  for (long i = 0; i < static_cast<long>(n); ++i) out[i] += g[i] * (1.0 - y[i] * y[i]);
}

void acc_cols(const double* g, double* out, int r, int c) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(r) * c, kRowGrain))
  for (int j = 0; j < c; ++j) {
    double s = 0.0;
    for (int i = 0; i < r; ++i) s += g[static_cast<std::size_t>(i) * c + j];
    out[j] += s;
  }
}

void softmax_rows_serial(const double* x, double* y, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * cols;
    double* yi = y + static_cast<std::size_t>(i) * cols;
    double mx = xi[0];
    for (int j = 1; j < cols; ++j) mx = xi[j] > mx ? xi[j] : mx;
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      sum += yi[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < cols; ++j) yi[j] *= inv;
  }
}

void softmax_rows(const double* x, double* y, int rows, int cols) {
  if (!par(static_cast<long>(rows) * cols, kRowGrain)) {
    softmax_rows_serial(x, y, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    softmax_rows_serial(x + static_cast<std::size_t>(i) * cols, y + static_cast<std::size_t>(i) * cols, 1, cols);
  }
}

void softmax_rows_bwd(const double* y, const double* g, double* gx, int rows, int cols) {
#pragma omp parallel for schedule(static) if (par(static_cast<long>(rows) * cols, kRowGrain))
  for (int i = 0; i < rows; ++i) {
    const double* yi = y + static_cast<std::size_t>(i) * cols;
    const double* gi = g + static_cast<std::size_t>(i) * cols;
    double* gxi = gx + static_cast<std::size_t>(i) * cols;
    double dot = 0.0;
    for (int j = 0; j < cols; ++j) dot += gi[j] * yi[j];
    for (int j = 0; j < cols; ++j) gxi[j] += yi[j] * (gi[j] - dot);
  }
}

}  // namespace vst::kernels
