// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
//
// OpenMP kernels. Parallelism is always over independent output elements
// (or fixed chunks), and per-element accumulation order matches the serial
// reference exactly, so results are bitwise identical to it for any thread
// count.

namespace silt::kernels::parallel {

namespace {

// Blocked im2col: patch rows for output rows [oy0, oy1), laid out
// (row-major) as ((oy-oy0)*out_w + ox, K) with K = in_c*kh*kw matching the
// OIHW weight layout. Every entry is written (padding becomes zero).
template <typename T>
void im2col_rows(const T* x, T* P, const Conv2dDims& d, int oy0, int oy1) {
    const int K = d.in_c * d.kh * d.kw;
#pragma omp parallel for schedule(static)
    for (int oy = oy0; oy < oy1; ++oy) {
        T* prow0 = P + static_cast<int64_t>(oy - oy0) * d.out_w * K;
        for (int ic = 0; ic < d.in_c; ++ic) {
            for (int ky = 0; ky < d.kh; ++ky) {
                const int iy = oy * d.stride + ky - d.pad;
                const bool row_ok = iy >= 0 && iy < d.in_h;
                const T* xrow = x + (static_cast<int64_t>(ic) * d.in_h + iy) * d.in_w;
                const int kbase = (ic * d.kh + ky) * d.kw;
                for (int kx = 0; kx < d.kw; ++kx) {
                    T* dst = prow0 + kbase + kx;
                    if (!row_ok) {
                        for (int ox = 0; ox < d.out_w; ++ox) dst[static_cast<int64_t>(ox) * K] = T(0);
                        continue;
                    }
                    for (int ox = 0; ox < d.out_w; ++ox) {
                        const int ix = ox * d.stride + kx - d.pad;
                        dst[static_cast<int64_t>(ox) * K] =
                            (ix >= 0 && ix < d.in_w) ? xrow[ix] : T(0);
                    }
                }
            }
        }
    }
}

constexpr int64_t kColBudget = 1 << 20;  // floats per im2col block

inline int conv_block_rows(const Conv2dDims& d) {
    const int64_t K = static_cast<int64_t>(d.in_c) * d.kh * d.kw;
    const int64_t rows = kColBudget / (K * std::max(1, d.out_w));
    return static_cast<int>(std::clamp<int64_t>(rows, 1, d.out_h));
}

}  // namespace

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d) {
    const int K = d.in_c * d.kh * d.kw;
    const int64_t plane = static_cast<int64_t>(d.out_h) * d.out_w;
    const int block = conv_block_rows(d);
    std::vector<T> P(static_cast<size_t>(block) * d.out_w * K);
    for (int oy0 = 0; oy0 < d.out_h; oy0 += block) {
        const int oy1 = std::min(d.out_h, oy0 + block);
        im2col_rows(x, P.data(), d, oy0, oy1);
        const int np = (oy1 - oy0) * d.out_w;
        const int64_t off = static_cast<int64_t>(oy0) * d.out_w;
#pragma omp parallel for schedule(static)
        for (int p = 0; p < np; ++p) {
            const T* prow = P.data() + static_cast<int64_t>(p) * K;
            for (int oc = 0; oc < d.out_c; ++oc)
                y[oc * plane + off + p] =
                    (bias ? bias[oc] : T(0)) +
                    detail::lane_dot(w + static_cast<int64_t>(oc) * K, prow, K);
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d) {
    const int K = d.in_c * d.kh * d.kw;
    const int64_t plane = static_cast<int64_t>(d.out_h) * d.out_w;
    const int block = conv_block_rows(d);
    std::vector<T> dP(static_cast<size_t>(block) * d.out_w * K);
    for (int oy0 = 0; oy0 < d.out_h; oy0 += block) {
        const int oy1 = std::min(d.out_h, oy0 + block);
        const int np = (oy1 - oy0) * d.out_w;
        const int64_t off = static_cast<int64_t>(oy0) * d.out_w;
        // dP = gy^T W, one patch row per output site
#pragma omp parallel for schedule(static)
        for (int p = 0; p < np; ++p) {
            T* prow = dP.data() + static_cast<int64_t>(p) * K;
            std::fill(prow, prow + K, T(0));
            for (int oc = 0; oc < d.out_c; ++oc) {
                const T g = gy[oc * plane + off + p];
                const T* wrow = w + static_cast<int64_t>(oc) * K;
                for (int k = 0; k < K; ++k) prow[k] += g * wrow[k];
            }
        }
        // col2im as a gather over the input rows this block can touch
        const int iy_lo = std::max(0, oy0 * d.stride - d.pad);
        const int iy_hi = std::min(d.in_h - 1, (oy1 - 1) * d.stride + d.kh - 1 - d.pad);
        const int rows = iy_hi - iy_lo + 1;
        if (rows <= 0) continue;
#pragma omp parallel for collapse(2) schedule(static)
        for (int ic = 0; ic < d.in_c; ++ic) {
            for (int r = 0; r < rows; ++r) {
                const int iy = iy_lo + r;
                T* gxrow = gx + (static_cast<int64_t>(ic) * d.in_h + iy) * d.in_w;
                for (int ky = 0; ky < d.kh; ++ky) {
                    const int t = iy + d.pad - ky;
                    if (t < 0 || t % d.stride != 0) continue;
                    const int oy = t / d.stride;
                    if (oy < oy0 || oy >= oy1) continue;
                    for (int kx = 0; kx < d.kw; ++kx) {
                        const detail::OxRange rr =
                            detail::ox_range(kx, d.pad, d.stride, d.in_w, d.out_w);
                        const int kidx = (ic * d.kh + ky) * d.kw + kx;
                        const T* src =
                            dP.data() + (static_cast<int64_t>(oy - oy0) * d.out_w) * K + kidx;
                        for (int ox = rr.lo; ox <= rr.hi; ++ox)
                            gxrow[ox * d.stride + kx - d.pad] +=
                                src[static_cast<int64_t>(ox) * K];
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_weight(const T* gy, const T* x, T* gw, const Conv2dDims& d) {
    const int K = d.in_c * d.kh * d.kw;
    const int64_t plane = static_cast<int64_t>(d.out_h) * d.out_w;
    const int block = conv_block_rows(d);
    std::vector<T> P(static_cast<size_t>(block) * d.out_w * K);
    for (int oy0 = 0; oy0 < d.out_h; oy0 += block) {
        const int oy1 = std::min(d.out_h, oy0 + block);
        im2col_rows(x, P.data(), d, oy0, oy1);
        const int np = (oy1 - oy0) * d.out_w;
        const int64_t off = static_cast<int64_t>(oy0) * d.out_w;
#pragma omp parallel for schedule(static)
        for (int oc = 0; oc < d.out_c; ++oc) {
            T* gwrow = gw + static_cast<int64_t>(oc) * K;
            for (int p = 0; p < np; ++p) {
                const T g = gy[oc * plane + off + p];
                const T* prow = P.data() + static_cast<int64_t>(p) * K;
                for (int k = 0; k < K; ++k) gwrow[k] += g * prow[k];
            }
        }
    }
}

template <typename T>
void conv2d_backward_bias(const T* gy, T* gb, const Conv2dDims& d) {
    const int64_t plane = static_cast<int64_t>(d.out_h) * d.out_w;
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < d.out_c; ++oc) {
        const T* p = gy + oc * plane;
        T acc = 0;
        for (int64_t i = 0; i < plane; ++i) acc += p[i];
        gb[oc] += acc;
    }
}

template <typename T>
void resize_bilinear_forward(const T* x, T* y, int c, int ih, int iw, int oh, int ow) {
    detail::BilinearTaps<T> taps(ih, iw, oh, ow);
#pragma omp parallel for collapse(2) schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
            const T* xp = x + static_cast<int64_t>(ch) * ih * iw;
            T* yp = y + static_cast<int64_t>(ch) * oh * ow;
            const auto& ty = taps.rows[static_cast<size_t>(oy)];
            for (int ox = 0; ox < ow; ++ox) {
                const auto& tx = taps.cols[static_cast<size_t>(ox)];
                yp[static_cast<int64_t>(oy) * ow + ox] =
                    ty.w0 * (tx.w0 * xp[static_cast<int64_t>(ty.i0) * iw + tx.i0] +
                             tx.w1 * xp[static_cast<int64_t>(ty.i0) * iw + tx.i1]) +
                    ty.w1 * (tx.w0 * xp[static_cast<int64_t>(ty.i1) * iw + tx.i0] +
                             tx.w1 * xp[static_cast<int64_t>(ty.i1) * iw + tx.i1]);
            }
        }
    }
}

// Backward is a scatter, so each thread owns whole channels.
template <typename T>
void resize_bilinear_backward(const T* gy, T* gx, int c, int ih, int iw, int oh, int ow) {
    detail::BilinearTaps<T> taps(ih, iw, oh, ow);
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        const T* gyp = gy + static_cast<int64_t>(ch) * oh * ow;
        T* gxp = gx + static_cast<int64_t>(ch) * ih * iw;
        for (int oy = 0; oy < oh; ++oy) {
            const auto& ty = taps.rows[static_cast<size_t>(oy)];
            for (int ox = 0; ox < ow; ++ox) {
                const auto& tx = taps.cols[static_cast<size_t>(ox)];
                const T g = gyp[static_cast<int64_t>(oy) * ow + ox];
                gxp[static_cast<int64_t>(ty.i0) * iw + tx.i0] += ty.w0 * tx.w0 * g;
                gxp[static_cast<int64_t>(ty.i0) * iw + tx.i1] += ty.w0 * tx.w1 * g;
                gxp[static_cast<int64_t>(ty.i1) * iw + tx.i0] += ty.w1 * tx.w0 * g;
                gxp[static_cast<int64_t>(ty.i1) * iw + tx.i1] += ty.w1 * tx.w1 * g;
            }
        }
    }
}

template <typename T>
void instance_norm_forward(const T* x, const T* gamma, const T* beta, T* y, T* mean, T* inv_std,
                           int c, int hw, T eps) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch)
        detail::instance_norm_channel(x, gamma, beta, y, mean, inv_std, ch, hw, eps);
}

template <typename T>
void instance_norm_backward(const T* gy, const T* x, const T* gamma, const T* mean,
                            const T* inv_std, T* gx, T* ggamma, T* gbeta, int c, int hw) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch)
        detail::instance_norm_channel_backward(gy, x, gamma, mean, inv_std, gx, ggamma, gbeta, ch,
                                               hw);
}

template <typename T>
void matmul_nt_forward(const T* a, const T* b, T* y, int n, int m, int k) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const T* ai = a + static_cast<int64_t>(i) * k;
        for (int j = 0; j < m; ++j)
            y[static_cast<int64_t>(i) * m + j] =
                detail::lane_dot(ai, b + static_cast<int64_t>(j) * k, k);
    }
}

template <typename T>
void matmul_nt_backward_a(const T* gy, const T* b, T* ga, int n, int m, int k) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        T* gai = ga + static_cast<int64_t>(i) * k;
        const T* gyi = gy + static_cast<int64_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const T g = gyi[j];
            const T* bj = b + static_cast<int64_t>(j) * k;
            for (int kk = 0; kk < k; ++kk) gai[kk] += g * bj[kk];
        }
    }
}

template <typename T>
void matmul_nt_backward_b(const T* gy, const T* a, T* gb, int n, int m, int k) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < m; ++j) {
        T* gbj = gb + static_cast<int64_t>(j) * k;
        for (int i = 0; i < n; ++i) {
            const T g = gy[static_cast<int64_t>(i) * m + j];
            const T* ai = a + static_cast<int64_t>(i) * k;
            for (int kk = 0; kk < k; ++kk) gbj[kk] += g * ai[kk];
        }
    }
}

template <typename T>
void leaky_relu_forward(const T* x, T* y, int64_t n, T slope) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0 ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_backward(const T* gy, const T* x, T* gx, int64_t n, T slope) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) gx[i] += x[i] > 0 ? gy[i] : slope * gy[i];
}

template <typename T>
void sigmoid_forward(const T* x, T* y, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void sigmoid_backward(const T* gy, const T* y, T* gx, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) gx[i] += gy[i] * y[i] * (T(1) - y[i]);
}

template <typename T>
T reduce_sum(const T* x, int64_t n) {
    const int64_t chunks = detail::chunk_count(n);
    std::vector<T> partial(static_cast<size_t>(chunks));
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < chunks; ++c) partial[static_cast<size_t>(c)] = detail::chunk_sum(x, n, c);
    T total = 0;
    for (int64_t c = 0; c < chunks; ++c) total += partial[static_cast<size_t>(c)];
    return total;
}

}  // namespace silt::kernels::parallel
