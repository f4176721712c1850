#include <algorithm>
#include <cstddef>
#include <cstring>
#include <vector>

#include "polarscan/errors.hpp"
#include "polarscan/tensor.hpp"

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

// 3x3 stride-1 "same" convolution, forward and backward.
//
// The float path is the training workhorse: it decomposes the convolution
// into nine shifted [C_out x C_in] GEMMs applied row by row, so the input
// stays cache-resident and no im2col buffer is materialized on the forward
// pass. The weight gradient uses one im2col GEMM per call. Every kernel
// accumulates each output element in a fixed sequential order, which makes
// results bit-reproducible run to run.
//
// The generic path is a plain quadruple loop in the documented reference
// order; it is the 64-bit verification surface.

namespace polarscan {

namespace {

struct ConvDims {
  int cin, cout, h, w;
  size_t plane() const { return static_cast<size_t>(h) * w; }
};

// ---------------------------------------------------------------------------
// Microkernels
// ---------------------------------------------------------------------------

// C[m][j] += sum_k A[m][k] * B[k][j]  for m < M, j < N.
// A row-major with leading dimension lda; B rows are N contiguous values
// spaced ldb apart; C rows spaced ldc apart. Accumulation over k is
// sequential per output element.
void gemm_rows_acc(int M, int K, int N, const float* A, int lda, const float* B,
                   size_t ldb, float* C, int ldc) {
#if defined(__AVX512F__)
  constexpr int kVec = 16;
  constexpr int kNr = 4 * kVec;  // 64 columns per register tile
  for (int n0 = 0; n0 < N; n0 += kNr) {
    const int nb = std::min(kNr, N - n0);
    const int nvec = (nb + kVec - 1) / kVec;
    __mmask16 tail = static_cast<__mmask16>((1u << (nb - (nvec - 1) * kVec)) - 1u);
    if ((nb % kVec) == 0) tail = 0xffff;

    int m0 = 0;
    for (; m0 + 4 <= M; m0 += 4) {
      __m512 acc[4][4];
      for (int r = 0; r < 4; ++r)
        for (int v = 0; v < nvec; ++v) {
          const __mmask16 m = (v == nvec - 1) ? tail : 0xffff;
          acc[r][v] = _mm512_maskz_loadu_ps(m, C + (m0 + r) * ldc + n0 + v * kVec);
        }
      for (int k = 0; k < K; ++k) {
        const float* brow = B + static_cast<size_t>(k) * ldb + n0;
        __m512 b[4];
        for (int v = 0; v < nvec; ++v) {
          const __mmask16 m = (v == nvec - 1) ? tail : 0xffff;
          b[v] = _mm512_maskz_loadu_ps(m, brow + v * kVec);
        }
        for (int r = 0; r < 4; ++r) {
          const __m512 a = _mm512_set1_ps(A[(m0 + r) * lda + k]);
          for (int v = 0; v < nvec; ++v) acc[r][v] = _mm512_fmadd_ps(a, b[v], acc[r][v]);
        }
      }
      for (int r = 0; r < 4; ++r)
        for (int v = 0; v < nvec; ++v) {
          const __mmask16 m = (v == nvec - 1) ? tail : 0xffff;
          _mm512_mask_storeu_ps(C + (m0 + r) * ldc + n0 + v * kVec, m, acc[r][v]);
        }
    }
    for (; m0 < M; ++m0) {
      __m512 acc[4];
      for (int v = 0; v < nvec; ++v) {
        const __mmask16 m = (v == nvec - 1) ? tail : 0xffff;
        acc[v] = _mm512_maskz_loadu_ps(m, C + m0 * ldc + n0 + v * kVec);
      }
      for (int k = 0; k < K; ++k) {
        const float* brow = B + static_cast<size_t>(k) * ldb + n0;
        const __m512 a = _mm512_set1_ps(A[m0 * lda + k]);
        for (int v = 0; v < nvec; ++v) {
          const __mmask16 m = (v == nvec - 1) ? tail : 0xffff;
          acc[v] = _mm512_fmadd_ps(a, _mm512_maskz_loadu_ps(m, brow + v * kVec), acc[v]);
        }
      }
      for (int v = 0; v < nvec; ++v) {
        const __mmask16 m = (v == nvec - 1) ? tail : 0xffff;
        _mm512_mask_storeu_ps(C + m0 * ldc + n0 + v * kVec, m, acc[v]);
      }
    }
  }
#else
  for (int m = 0; m < M; ++m) {
    float* crow = C + static_cast<size_t>(m) * ldc;
    for (int k = 0; k < K; ++k) {
      const float a = A[m * lda + k];
      const float* brow = B + static_cast<size_t>(k) * ldb;
      for (int j = 0; j < N; ++j) crow[j] += a * brow[j];
    }
  }
#endif
}

// C[m][k] += dot(A row m, B row k) over N columns. A rows spaced lda apart,
// B rows contiguous length N spaced ldb apart, C row-major [M x ldc].
void gemm_nt_acc(int M, int K, int N, const float* A, size_t lda, const float* B,
                 size_t ldb, float* C, int ldc) {
#if defined(__AVX512F__)
  constexpr int kVec = 16;
  const int nv = N / kVec;
  const __mmask16 tail = static_cast<__mmask16>((1u << (N - nv * kVec)) - 1u);
  for (int m = 0; m < M; ++m) {
    const float* arow = A + static_cast<size_t>(m) * lda;
    int k = 0;
    for (; k + 4 <= K; k += 4) {
      __m512 acc0 = _mm512_setzero_ps(), acc1 = _mm512_setzero_ps();
      __m512 acc2 = _mm512_setzero_ps(), acc3 = _mm512_setzero_ps();
      const float* b0 = B + static_cast<size_t>(k) * ldb;
      const float* b1 = b0 + ldb;
      const float* b2 = b1 + ldb;
      const float* b3 = b2 + ldb;
      for (int j = 0; j < nv * kVec; j += kVec) {
        const __m512 a = _mm512_loadu_ps(arow + j);
        acc0 = _mm512_fmadd_ps(a, _mm512_loadu_ps(b0 + j), acc0);
        acc1 = _mm512_fmadd_ps(a, _mm512_loadu_ps(b1 + j), acc1);
        acc2 = _mm512_fmadd_ps(a, _mm512_loadu_ps(b2 + j), acc2);
        acc3 = _mm512_fmadd_ps(a, _mm512_loadu_ps(b3 + j), acc3);
      }
      if (tail) {
        const __m512 a = _mm512_maskz_loadu_ps(tail, arow + nv * kVec);
        acc0 = _mm512_fmadd_ps(a, _mm512_maskz_loadu_ps(tail, b0 + nv * kVec), acc0);
        acc1 = _mm512_fmadd_ps(a, _mm512_maskz_loadu_ps(tail, b1 + nv * kVec), acc1);
        acc2 = _mm512_fmadd_ps(a, _mm512_maskz_loadu_ps(tail, b2 + nv * kVec), acc2);
        acc3 = _mm512_fmadd_ps(a, _mm512_maskz_loadu_ps(tail, b3 + nv * kVec), acc3);
      }
      C[m * ldc + k + 0] += _mm512_reduce_add_ps(acc0);
      C[m * ldc + k + 1] += _mm512_reduce_add_ps(acc1);
      C[m * ldc + k + 2] += _mm512_reduce_add_ps(acc2);
      C[m * ldc + k + 3] += _mm512_reduce_add_ps(acc3);
    }
    for (; k < K; ++k) {
      __m512 acc = _mm512_setzero_ps();
      const float* brow = B + static_cast<size_t>(k) * ldb;
      for (int j = 0; j < nv * kVec; j += kVec) {
        acc = _mm512_fmadd_ps(_mm512_loadu_ps(arow + j), _mm512_loadu_ps(brow + j), acc);
      }
      if (tail) {
        acc = _mm512_fmadd_ps(_mm512_maskz_loadu_ps(tail, arow + nv * kVec),
                              _mm512_maskz_loadu_ps(tail, brow + nv * kVec), acc);
      }
      C[m * ldc + k] += _mm512_reduce_add_ps(acc);
    }
  }
#else
  for (int m = 0; m < M; ++m) {
    const float* arow = A + static_cast<size_t>(m) * lda;
    for (int k = 0; k < K; ++k) {
      const float* brow = B + static_cast<size_t>(k) * ldb;
      float acc = 0.0f;
      for (int j = 0; j < N; ++j) acc += arow[j] * brow[j];
      C[m * ldc + k] += acc;
    }
  }
#endif
}

// ---------------------------------------------------------------------------
// Fast float path
// ---------------------------------------------------------------------------

// w[co][ci][ky][kx] -> nine [cout x cin] slices (tap-major).
void pack_weight_slices(const float* w, int cout, int cin, std::vector<float>& slices) {
  slices.resize(static_cast<size_t>(9) * cout * cin);
  for (int t = 0; t < 9; ++t) {
    float* s = slices.data() + static_cast<size_t>(t) * cout * cin;
    for (int co = 0; co < cout; ++co)
      for (int ci = 0; ci < cin; ++ci)
        s[co * cin + ci] = w[(static_cast<size_t>(co) * cin + ci) * 9 + t];
  }
}

// w[co][ci][ky][kx] -> nine [cin x cout] transposed slices.
void pack_weight_slices_t(const float* w, int cout, int cin, std::vector<float>& slices) {
  slices.resize(static_cast<size_t>(9) * cout * cin);
  for (int t = 0; t < 9; ++t) {
    float* s = slices.data() + static_cast<size_t>(t) * cout * cin;
    for (int ci = 0; ci < cin; ++ci)
      for (int co = 0; co < cout; ++co)
        s[ci * cout + co] = w[(static_cast<size_t>(co) * cin + ci) * 9 + t];
  }
}

void conv_forward_f32(const ConvDims& d, const float* in, const float* w, const float* b,
                      float* out) {
  thread_local std::vector<float> slices;
  thread_local std::vector<float> rowbuf;
  pack_weight_slices(w, d.cout, d.cin, slices);
  rowbuf.resize(static_cast<size_t>(d.cout) * d.w);

  const size_t plane = d.plane();
  for (int y = 0; y < d.h; ++y) {
    for (int co = 0; co < d.cout; ++co) {
      for (int x = 0; x < d.w; ++x) rowbuf[co * d.w + x] = b[co];
    }
    for (int ky = 0; ky < 3; ++ky) {
      const int iy = y + ky - 1;
      if (iy < 0 || iy >= d.h) continue;
      for (int kx = 0; kx < 3; ++kx) {
        const int dx = kx - 1;
        const int xlo = std::max(0, -dx);
        const int xhi = d.w - std::max(0, dx);
        const float* slice = slices.data() + static_cast<size_t>(ky * 3 + kx) * d.cout * d.cin;
        gemm_rows_acc(d.cout, d.cin, xhi - xlo, slice, d.cin,
                      in + static_cast<size_t>(iy) * d.w + (xlo + dx), plane,
                      rowbuf.data() + xlo, d.w);
      }
    }
    for (int co = 0; co < d.cout; ++co) {
      std::memcpy(out + static_cast<size_t>(co) * plane + static_cast<size_t>(y) * d.w,
                  rowbuf.data() + static_cast<size_t>(co) * d.w, sizeof(float) * d.w);
    }
  }
}

void conv_backward_input_f32(const ConvDims& d, const float* w, const float* dout,
                             float* din /* accumulated into */) {
  thread_local std::vector<float> slices_t;
  thread_local std::vector<float> rowbuf;
  pack_weight_slices_t(w, d.cout, d.cin, slices_t);
  rowbuf.resize(static_cast<size_t>(d.cin) * d.w);

  const size_t plane = d.plane();
  for (int iy = 0; iy < d.h; ++iy) {
    std::fill(rowbuf.begin(), rowbuf.end(), 0.0f);
    for (int ky = 0; ky < 3; ++ky) {
      const int y = iy - ky + 1;
      if (y < 0 || y >= d.h) continue;
      for (int kx = 0; kx < 3; ++kx) {
        const int dx = kx - 1;
        const int xlo = std::max(0, dx);
        const int xhi = d.w + std::min(0, dx);
        const float* slice =
            slices_t.data() + static_cast<size_t>(ky * 3 + kx) * d.cout * d.cin;
        gemm_rows_acc(d.cin, d.cout, xhi - xlo, slice, d.cout,
                      dout + static_cast<size_t>(y) * d.w + (xlo - dx), plane,
                      rowbuf.data() + xlo, d.w);
      }
    }
    for (int ci = 0; ci < d.cin; ++ci) {
      float* drow = din + static_cast<size_t>(ci) * plane + static_cast<size_t>(iy) * d.w;
      const float* src = rowbuf.data() + static_cast<size_t>(ci) * d.w;
      for (int x = 0; x < d.w; ++x) drow[x] += src[x];
    }
  }
}

// col[k][p] with k = (ci*3 + ky)*3 + kx, p = y*w + x, zero padded.
void im2col_f32(const ConvDims& d, const float* in, std::vector<float>& col) {
  const size_t plane = d.plane();
  col.assign(static_cast<size_t>(d.cin) * 9 * plane, 0.0f);
  for (int ci = 0; ci < d.cin; ++ci) {
    const float* src = in + static_cast<size_t>(ci) * plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        float* crow = col.data() + (static_cast<size_t>(ci) * 9 + ky * 3 + kx) * plane;
        const int dx = kx - 1;
        const int xlo = std::max(0, -dx);
        const int xhi = d.w - std::max(0, dx);
        for (int y = 0; y < d.h; ++y) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= d.h) continue;
          std::memcpy(crow + static_cast<size_t>(y) * d.w + xlo,
                      src + static_cast<size_t>(iy) * d.w + xlo + dx,
                      sizeof(float) * (xhi - xlo));
        }
      }
    }
  }
}

void conv_backward_weight_f32(const ConvDims& d, const float* in, const float* dout,
                              float* dw /* accumulated into */) {
  thread_local std::vector<float> col;
  im2col_f32(d, in, col);
  const size_t plane = d.plane();
  // dw layout [co][ci][ky][kx] is exactly [co][k] over the im2col k index.
  gemm_nt_acc(d.cout, d.cin * 9, static_cast<int>(plane), dout, plane, col.data(), plane,
              dw, d.cin * 9);
}

// ---------------------------------------------------------------------------
// Reference-order generic path (the 64-bit verification surface)
// ---------------------------------------------------------------------------

template <typename T>
void conv_forward_naive(const ConvDims& d, const T* in, const T* w, const T* b, T* out) {
  const size_t plane = d.plane();
  for (int co = 0; co < d.cout; ++co) {
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        T acc = b[co];
        for (int ci = 0; ci < d.cin; ++ci) {
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= d.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - 1;
              if (ix < 0 || ix >= d.w) continue;
              acc += w[(static_cast<size_t>(co) * d.cin + ci) * 9 + ky * 3 + kx] *
                     in[static_cast<size_t>(ci) * plane + static_cast<size_t>(iy) * d.w + ix];
            }
          }
        }
        out[static_cast<size_t>(co) * plane + static_cast<size_t>(y) * d.w + x] = acc;
      }
    }
  }
}

template <typename T>
void conv_backward_naive(const ConvDims& d, const T* in, const T* w, const T* dout,
                         T* din, T* dw, T* db) {
  const size_t plane = d.plane();
  for (int co = 0; co < d.cout; ++co) {
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        const T g = dout[static_cast<size_t>(co) * plane + static_cast<size_t>(y) * d.w + x];
        if (db) db[co] += g;
        for (int ci = 0; ci < d.cin; ++ci) {
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= d.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - 1;
              if (ix < 0 || ix >= d.w) continue;
              const size_t wi = (static_cast<size_t>(co) * d.cin + ci) * 9 + ky * 3 + kx;
              const size_t ii =
                  static_cast<size_t>(ci) * plane + static_cast<size_t>(iy) * d.w + ix;
              if (dw) dw[wi] += g * in[ii];
              if (din) din[ii] += g * w[wi];
            }
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.shape().size() != 3 || weight.shape().size() != 4 || bias.shape().size() != 1 ||
      weight.dim(2) != 3 || weight.dim(3) != 3 || weight.dim(1) != input.dim(0) ||
      bias.dim(0) != weight.dim(0)) {
    throw ShapeError("conv2d: incompatible shapes in" + shape_str(input.shape()) + " w" +
                     shape_str(weight.shape()) + " b" + shape_str(bias.shape()));
  }
  const ConvDims d{input.dim(0), weight.dim(0), input.dim(1), input.dim(2)};
  const bool rg = input.requires_grad() || weight.requires_grad() || bias.requires_grad();

  Tensor<T> out = Tensor<T>::make_op(
      {d.cout, d.h, d.w}, rg, {input.handle(), weight.handle(), bias.handle()},
      [d](detail::TensorNode<T>& n) {
        auto& in = *n.inputs[0];
        auto& w = *n.inputs[1];
        auto& b = *n.inputs[2];
        const T* dout = n.grad.data();
        if constexpr (std::is_same_v<T, float>) {
          if (b.requires_grad) {
            const size_t plane = d.plane();
            for (int co = 0; co < d.cout; ++co) {
              float acc = 0.0f;
              const float* g = dout + static_cast<size_t>(co) * plane;
              for (size_t p = 0; p < plane; ++p) acc += g[p];
              b.grad[co] += acc;
            }
          }
          if (w.requires_grad) {
            conv_backward_weight_f32(d, in.value.data(), dout, w.grad.data());
          }
          if (in.requires_grad) {
            conv_backward_input_f32(d, w.value.data(), dout, in.grad.data());
          }
        } else {
          conv_backward_naive<T>(d, in.value.data(), w.value.data(), dout,
                                 in.requires_grad ? in.grad.data() : nullptr,
                                 w.requires_grad ? w.grad.data() : nullptr,
                                 b.requires_grad ? b.grad.data() : nullptr);
        }
      });

  if constexpr (std::is_same_v<T, float>) {
    conv_forward_f32(d, input.values().data(), weight.values().data(),
                     bias.values().data(), out.values_mut().data());
  } else {
    conv_forward_naive<T>(d, input.values().data(), weight.values().data(),
                          bias.values().data(), out.values_mut().data());
  }
  return out;
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&,
                              const Tensor<float>&);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&,
                               const Tensor<double>&);

}  // namespace polarscan
