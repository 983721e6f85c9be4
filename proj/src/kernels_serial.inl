// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels. Deliberately plain loops: this is what the
// OpenMP implementation is checked against, element for element.

namespace silt::kernels::serial {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d) {
    for (int oc = 0; oc < d.out_c; ++oc) {
        for (int oy = 0; oy < d.out_h; ++oy) {
            T* yrow = y + (static_cast<int64_t>(oc) * d.out_h + oy) * d.out_w;
            for (int ox = 0; ox < d.out_w; ++ox) yrow[ox] = bias ? bias[oc] : T(0);
            for (int ic = 0; ic < d.in_c; ++ic) {
                for (int ky = 0; ky < d.kh; ++ky) {
                    const int iy = oy * d.stride + ky - d.pad;
                    if (iy < 0 || iy >= d.in_h) continue;
                    const T* xrow = x + (static_cast<int64_t>(ic) * d.in_h + iy) * d.in_w;
                    const T* wrow =
                        w + ((static_cast<int64_t>(oc) * d.in_c + ic) * d.kh + ky) * d.kw;
                    for (int kx = 0; kx < d.kw; ++kx) {
                        const T wv = wrow[kx];
                        for (int ox = 0; ox < d.out_w; ++ox) {
                            const int ix = ox * d.stride + kx - d.pad;
                            if (ix < 0 || ix >= d.in_w) continue;
                            yrow[ox] += wv * xrow[ix];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d) {
    for (int ic = 0; ic < d.in_c; ++ic) {
        for (int iy = 0; iy < d.in_h; ++iy) {
            T* gxrow = gx + (static_cast<int64_t>(ic) * d.in_h + iy) * d.in_w;
            for (int ky = 0; ky < d.kh; ++ky) {
                const int r = iy + d.pad - ky;
                if (r < 0 || r % d.stride != 0) continue;
                const int oy = r / d.stride;
                if (oy >= d.out_h) continue;
                for (int oc = 0; oc < d.out_c; ++oc) {
                    const T* gyrow = gy + (static_cast<int64_t>(oc) * d.out_h + oy) * d.out_w;
                    const T* wrow =
                        w + ((static_cast<int64_t>(oc) * d.in_c + ic) * d.kh + ky) * d.kw;
                    for (int kx = 0; kx < d.kw; ++kx) {
                        const T wv = wrow[kx];
                        for (int ox = 0; ox < d.out_w; ++ox) {
                            const int ix = ox * d.stride + kx - d.pad;
                            if (ix < 0 || ix >= d.in_w) continue;
                            gxrow[ix] += wv * gyrow[ox];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_weight(const T* gy, const T* x, T* gw, const Conv2dDims& d) {
    for (int oc = 0; oc < d.out_c; ++oc) {
        for (int ic = 0; ic < d.in_c; ++ic) {
            for (int ky = 0; ky < d.kh; ++ky) {
                for (int kx = 0; kx < d.kw; ++kx) {
                    const detail::OxRange r = detail::ox_range(kx, d.pad, d.stride, d.in_w, d.out_w);
                    const int n = r.hi - r.lo + 1;
                    T acc = 0;
                    for (int oy = 0; oy < d.out_h; ++oy) {
                        const int iy = oy * d.stride + ky - d.pad;
                        if (iy < 0 || iy >= d.in_h) continue;
                        if (n <= 0) continue;
                        const T* gyrow = gy + (static_cast<int64_t>(oc) * d.out_h + oy) * d.out_w;
                        const T* xs =
                            x + (static_cast<int64_t>(ic) * d.in_h + iy) * d.in_w + kx - d.pad;
                        if (d.stride == 1)
                            acc += detail::lane_dot(xs + r.lo, gyrow + r.lo, n);
                        else
                            acc += detail::lane_dot_strided(xs + static_cast<int64_t>(r.lo) * d.stride,
                                                            d.stride, gyrow + r.lo, n);
                    }
                    gw[((static_cast<int64_t>(oc) * d.in_c + ic) * d.kh + ky) * d.kw + kx] += acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_bias(const T* gy, T* gb, const Conv2dDims& d) {
    const int64_t plane = static_cast<int64_t>(d.out_h) * d.out_w;
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
    for (int ch = 0; ch < c; ++ch) {
        const T* xp = x + static_cast<int64_t>(ch) * ih * iw;
        T* yp = y + static_cast<int64_t>(ch) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
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

template <typename T>
void resize_bilinear_backward(const T* gy, T* gx, int c, int ih, int iw, int oh, int ow) {
    detail::BilinearTaps<T> taps(ih, iw, oh, ow);
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
    for (int ch = 0; ch < c; ++ch)
        detail::instance_norm_channel(x, gamma, beta, y, mean, inv_std, ch, hw, eps);
}

template <typename T>
void instance_norm_backward(const T* gy, const T* x, const T* gamma, const T* mean,
                            const T* inv_std, T* gx, T* ggamma, T* gbeta, int c, int hw) {
    for (int ch = 0; ch < c; ++ch)
        detail::instance_norm_channel_backward(gy, x, gamma, mean, inv_std, gx, ggamma, gbeta, ch,
                                               hw);
}

template <typename T>
void matmul_nt_forward(const T* a, const T* b, T* y, int n, int m, int k) {
    for (int i = 0; i < n; ++i) {
        const T* ai = a + static_cast<int64_t>(i) * k;
        for (int j = 0; j < m; ++j)
            y[static_cast<int64_t>(i) * m + j] =
                detail::lane_dot(ai, b + static_cast<int64_t>(j) * k, k);
    }
}

template <typename T>
void matmul_nt_backward_a(const T* gy, const T* b, T* ga, int n, int m, int k) {
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
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0 ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_backward(const T* gy, const T* x, T* gx, int64_t n, T slope) {
    for (int64_t i = 0; i < n; ++i) gx[i] += x[i] > 0 ? gy[i] : slope * gy[i];
}

template <typename T>
void sigmoid_forward(const T* x, T* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void sigmoid_backward(const T* gy, const T* y, T* gx, int64_t n) {
    for (int64_t i = 0; i < n; ++i) gx[i] += gy[i] * y[i] * (T(1) - y[i]);
}

template <typename T>
T reduce_sum(const T* x, int64_t n) {
    const int64_t chunks = detail::chunk_count(n);
    T total = 0;
    for (int64_t c = 0; c < chunks; ++c) total += detail::chunk_sum(x, n, c);
    return total;
}

}  // namespace silt::kernels::serial
