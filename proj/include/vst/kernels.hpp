#pragma once

#include <cstddef>

namespace vst::kernels {

// Runtime switch between the OpenMP kernels and the serial reference path.
// Defaults to on when compiled with OpenMP. Every parallel kernel assigns
// each output element to exactly one thread and accumulates in the same
// order as the serial reference, so results are bit-identical either way.
void set_parallel(bool on);
bool parallel_enabled();
int thread_count();

// c[m×n] = a[m×k] · b[k×n]
void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// da[m×k] += g[m×n] · b[k×n]ᵀ
void matmul_nt_add_serial(const double* g, const double* b, double* da, int m, int k, int n);
void matmul_nt_add(const double* g, const double* b, double* da, int m, int k, int n);

// db[k×n] += a[m×k]ᵀ · g[m×n]
void matmul_tn_add_serial(const double* a, const double* g, double* db, int m, int k, int n);
void matmul_tn_add(const double* a, const double* g, double* db, int m, int k, int n);

// Elementwise forward maps.
void sigmoid_serial(const double* x, double* y, std::size_t n);
void sigmoid(const double* x, double* y, std::size_t n);
void tanh_serial(const double* x, double* y, std::size_t n);
void tanh(const double* x, double* y, std::size_t n);

// y = alpha·x + beta (elementwise affine; covers negation and 1−x).
void affine(const double* x, double* y, std::size_t n, double alpha, double beta);

void add(const double* a, const double* b, double* y, std::size_t n);
void mul(const double* a, const double* b, double* y, std::size_t n);
// y[r×c] = x[r×c] + bias[c]
void add_bias(const double* x, const double* bias, double* y, int r, int c);

// Accumulating backward primitives.
void acc(const double* g, double* out, std::size_t n);                    // out += g
void acc_scaled(const double* g, double* out, std::size_t n, double s);   // out += s·g
void acc_mul(const double* g, const double* f, double* out, std::size_t n);  // out += g⊙f
void acc_sigmoid_bwd(const double* y, const double* g, double* out, std::size_t n);  // out += g⊙y⊙(1−y)
void acc_tanh_bwd(const double* y, const double* g, double* out, std::size_t n);     // out += g⊙(1−y²)
void acc_cols(const double* g, double* out, int r, int c);  // out[c] += Σ_rows g[r×c]

// Row-stable softmax: per row subtract max, exponentiate, normalize.
void softmax_rows_serial(const double* x, double* y, int rows, int cols);
void softmax_rows(const double* x, double* y, int rows, int cols);
// gx[i] += y[i]·(g[i] − Σ_j g[j]·y[j]) per row.
void softmax_rows_bwd(const double* y, const double* g, double* gx, int rows, int cols);

}  // namespace vst::kernels
