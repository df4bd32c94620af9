#include "rampinn/nn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "rampinn/error.hpp"
#include "rampinn/hilbert.hpp"

namespace rampinn::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

[[noreturn]] void shape_error(const std::string& what) { throw Error(ErrorKind::ShapeMismatch, what); }

template <class T>
bool wants_grad(const Node<T>& self, std::size_t parent) {
    return parent < self.parents.size() && self.parents[parent]->requires_grad;
}

// Parent slots are positional; from_op keeps the input order.
template <class T>
std::vector<T>& parent_grad(Node<T>& self, std::size_t parent) {
    return self.parents[parent]->ensure_grad();
}

}  // namespace

template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t padding) {
    const Shape xs = x.shape();
    const Shape ws = weight.shape();
    if (ws.channels != xs.channels) {
        shape_error("conv1d input channels " + std::to_string(xs.channels) + " vs weight " + to_string(ws));
    }
    if (bias.numel() != ws.batch) shape_error("conv1d bias size does not match output channels");
    if (ws.length % 2 == 0) shape_error("conv1d kernel must be odd");
    const std::size_t batch = xs.batch, cin = xs.channels, len = xs.length;
    const std::size_t cout = ws.batch, kernel = ws.length;
    if (len + 2 * padding < kernel) shape_error("conv1d input shorter than kernel");
    const std::size_t lout = len + 2 * padding - kernel + 1;
    // All samples sit side by side in one zero-padded (cin, batch * lp) matrix,
    // so each kernel tap is a single GEMM; the kernel - 1 columns straddling
    // two samples are computed and discarded.
    const std::size_t lp = len + 2 * padding;
    const std::size_t wide = batch * lp;
    const std::size_t span_cols = wide - kernel + 1;
    const auto Ci = static_cast<long>(cin), Co = static_cast<long>(cout), N = static_cast<long>(span_cols);

    std::vector<T> xpad(cin * wide, T(0));
    const auto xd = x.data();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < cin; ++c) {
            std::copy_n(xd.data() + (b * cin + c) * len, len, xpad.data() + c * wide + b * lp + padding);
        }
    }
    // Tap-major copy of the weights: taps[k] is (cout, cin).
    auto split_taps = [=](std::span<const T> w) {
        std::vector<T> taps(kernel * cout * cin);
        for (std::size_t o = 0; o < cout; ++o) {
            for (std::size_t c = 0; c < cin; ++c) {
                for (std::size_t k = 0; k < kernel; ++k) taps[(k * cout + o) * cin + c] = w[(o * cin + c) * kernel + k];
            }
        }
        return taps;
    };
    const auto taps = split_taps(weight.data());

    ConstMapMat<T> xm(xpad.data(), Ci, static_cast<long>(wide));
    RowMat<T> prod = RowMat<T>::Zero(Co, N);
    for (std::size_t k = 0; k < kernel; ++k) {
        ConstMapMat<T> wk(taps.data() + k * cout * cin, Co, Ci);
        prod.noalias() += wk * xm.middleCols(static_cast<long>(k), N);
    }

    std::vector<T> out(batch * cout * lout);
    const auto bd = bias.data();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < cout; ++o) {
            T* dst = out.data() + (b * cout + o) * lout;
            const T* src = prod.data() + o * span_cols + b * lp;
            for (std::size_t l = 0; l < lout; ++l) dst[l] = src[l] + bd[o];
        }
    }

    return Tensor<T>::from_op(
        Shape{batch, cout, lout}, std::move(out), {x, weight, bias},
        [=, xpad = std::move(xpad)](Node<T>& self) {
            RowMat<T> dprod = RowMat<T>::Zero(Co, N);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t o = 0; o < cout; ++o) {
                    const T* src = self.grad.data() + (b * cout + o) * lout;
                    std::copy(src, src + lout, dprod.data() + o * span_cols + b * lp);
                }
            }
            if (wants_grad(self, 2)) {
                auto& db = parent_grad(self, 2);
                for (std::size_t o = 0; o < cout; ++o) {
                    double acc = 0.0;
                    const T* row = dprod.data() + o * span_cols;
                    for (std::size_t j = 0; j < span_cols; ++j) acc += row[j];
                    db[o] += static_cast<T>(acc);
                }
            }
            ConstMapMat<T> xm(xpad.data(), Ci, static_cast<long>(wide));
            if (wants_grad(self, 1)) {
                auto& dw = parent_grad(self, 1);
                RowMat<T> dk(Co, Ci);
                for (std::size_t k = 0; k < kernel; ++k) {
                    dk.noalias() = dprod * xm.middleCols(static_cast<long>(k), N).transpose();
                    for (std::size_t o = 0; o < cout; ++o) {
                        for (std::size_t c = 0; c < cin; ++c) {
                            dw[(o * cin + c) * kernel + k] += dk(static_cast<long>(o), static_cast<long>(c));
                        }
                    }
                }
            }
            if (wants_grad(self, 0)) {
                const auto taps = split_taps(self.parents[1]->value);
                RowMat<T> dxpad = RowMat<T>::Zero(Ci, static_cast<long>(wide));
                for (std::size_t k = 0; k < kernel; ++k) {
                    ConstMapMat<T> wk(taps.data() + k * cout * cin, Co, Ci);
                    dxpad.middleCols(static_cast<long>(k), N).noalias() += wk.transpose() * dprod;
                }
                auto& dx = parent_grad(self, 0);
                for (std::size_t b = 0; b < batch; ++b) {
                    for (std::size_t c = 0; c < cin; ++c) {
                        const T* src = dxpad.data() + c * wide + b * lp + padding;
                        T* dst = dx.data() + (b * cin + c) * len;
                        for (std::size_t l = 0; l < len; ++l) dst[l] += src[l];
                    }
                }
            }
        });
}

template <class T>
Tensor<T> batch_norm1d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, BatchNormState<T>& state,
                       bool training) {
    const Shape xs = x.shape();
    const std::size_t batch = xs.batch, ch = xs.channels, len = xs.length;
    if (gamma.numel() != ch || beta.numel() != ch || state.running_mean.size() != ch ||
        state.running_var.size() != ch) {
        shape_error("batch_norm1d parameters do not match " + std::to_string(ch) + " channels");
    }
    const std::size_t count = batch * len;
    const auto xd = x.data();
    const auto gd = gamma.data();
    const auto bd = beta.data();
    std::vector<T> xhat(xd.size());
    std::vector<T> inv_std(ch);
    std::vector<T> out(xd.size());

    for (std::size_t c = 0; c < ch; ++c) {
        double mean, var;
        if (training) {
            if (count < 1) shape_error("batch_norm1d needs at least one value per channel");
            double s = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const T* p = xd.data() + (b * ch + c) * len;
                for (std::size_t l = 0; l < len; ++l) s += p[l];
            }
            mean = s / static_cast<double>(count);
            double sq = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const T* p = xd.data() + (b * ch + c) * len;
                for (std::size_t l = 0; l < len; ++l) sq += (p[l] - mean) * (p[l] - mean);
            }
            var = sq / static_cast<double>(count);
            const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
            state.running_mean[c] =
                static_cast<T>((1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean);
            state.running_var[c] =
                static_cast<T>((1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased);
        } else {
            mean = state.running_mean[c];
            var = state.running_var[c];
        }
        const double is = 1.0 / std::sqrt(var + state.eps);
        inv_std[c] = static_cast<T>(is);
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * ch + c) * len;
            for (std::size_t l = 0; l < len; ++l) {
                const T h = static_cast<T>((xd[off + l] - mean) * is);
                xhat[off + l] = h;
                out[off + l] = gd[c] * h + bd[c];
            }
        }
    }

    return Tensor<T>::from_op(
        xs, std::move(out), {x, gamma, beta},
        [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
            const auto& dy = self.grad;
            const auto& g = self.parents[1]->value;
            for (std::size_t c = 0; c < ch; ++c) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (std::size_t b = 0; b < batch; ++b) {
                    const std::size_t off = (b * ch + c) * len;
                    for (std::size_t l = 0; l < len; ++l) {
                        sum_dy += dy[off + l];
                        sum_dy_xhat += static_cast<double>(dy[off + l]) * xhat[off + l];
                    }
                }
                if (wants_grad(self, 1)) parent_grad(self, 1)[c] += static_cast<T>(sum_dy_xhat);
                if (wants_grad(self, 2)) parent_grad(self, 2)[c] += static_cast<T>(sum_dy);
                if (!wants_grad(self, 0)) continue;
                auto& dx = parent_grad(self, 0);
                if (training) {
                    const double n = static_cast<double>(count);
                    const double k = static_cast<double>(g[c]) * inv_std[c] / n;
                    for (std::size_t b = 0; b < batch; ++b) {
                        const std::size_t off = (b * ch + c) * len;
                        for (std::size_t l = 0; l < len; ++l) {
                            dx[off + l] += static_cast<T>(k * (n * dy[off + l] - sum_dy - xhat[off + l] * sum_dy_xhat));
                        }
                    }
                } else {
                    const T k = g[c] * inv_std[c];
                    for (std::size_t b = 0; b < batch; ++b) {
                        const std::size_t off = (b * ch + c) * len;
                        for (std::size_t l = 0; l < len; ++l) dx[off + l] += k * dy[off + l];
                    }
                }
            }
        });
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
    const auto xd = x.data();
    std::vector<T> out(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] > T(0) ? xd[i] : T(0);
    return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [](Node<T>& self) {
        auto& dx = parent_grad(self, 0);
        const auto& xv = self.parents[0]->value;
        for (std::size_t i = 0; i < dx.size(); ++i) {
            if (xv[i] > T(0)) dx[i] += self.grad[i];
        }
    });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    const auto xd = x.data();
    std::vector<T> out(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) {
        const T v = xd[i];
        if (v >= T(0)) {
            out[i] = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            out[i] = e / (T(1) + e);
        }
    }
    return Tensor<T>::from_op(x.shape(), std::move(out), {x}, [](Node<T>& self) {
        auto& dx = parent_grad(self, 0);
        for (std::size_t i = 0; i < dx.size(); ++i) {
            const T s = self.value[i];
            dx[i] += self.grad[i] * s * (T(1) - s);
        }
    });
}

template <class T>
Tensor<T> avg_pool1d(const Tensor<T>& x, std::size_t kernel) {
    const Shape xs = x.shape();
    if (kernel == 0 || xs.length < kernel) shape_error("avg_pool1d kernel larger than input");
    const std::size_t lout = xs.length / kernel;
    const std::size_t rows = xs.batch * xs.channels;
    const auto xd = x.data();
    std::vector<T> out(rows * lout);
    const T inv = T(1) / static_cast<T>(kernel);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t l = 0; l < lout; ++l) {
            T acc = 0;
            for (std::size_t k = 0; k < kernel; ++k) acc += xd[r * xs.length + l * kernel + k];
            out[r * lout + l] = acc * inv;
        }
    }
    const std::size_t len = xs.length;
    return Tensor<T>::from_op(Shape{xs.batch, xs.channels, lout}, std::move(out), {x},
                              [=](Node<T>& self) {
                                  auto& dx = parent_grad(self, 0);
                                  for (std::size_t r = 0; r < rows; ++r) {
                                      for (std::size_t l = 0; l < lout; ++l) {
                                          const T g = self.grad[r * lout + l] * inv;
                                          for (std::size_t k = 0; k < kernel; ++k) dx[r * len + l * kernel + k] += g;
                                      }
                                  }
                              });
}

template <class T>
Tensor<T> interpolate_linear(const Tensor<T>& x, std::size_t target_length) {
    const Shape xs = x.shape();
    if (target_length == 0 || xs.length == 0) shape_error("interpolate_linear needs non-empty lengths");
    const std::size_t lin = xs.length;
    const std::size_t rows = xs.batch * xs.channels;
    std::vector<std::size_t> lo(target_length), hi(target_length);
    std::vector<T> frac(target_length);
    const double ratio = static_cast<double>(lin) / static_cast<double>(target_length);
    for (std::size_t i = 0; i < target_length; ++i) {
        double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
        if (src < 0.0) src = 0.0;
        std::size_t i0 = static_cast<std::size_t>(src);
        if (i0 > lin - 1) i0 = lin - 1;
        lo[i] = i0;
        hi[i] = std::min(i0 + 1, lin - 1);
        frac[i] = static_cast<T>(src - static_cast<double>(i0));
    }
    const auto xd = x.data();
    std::vector<T> out(rows * target_length);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* src = xd.data() + r * lin;
        T* dst = out.data() + r * target_length;
        for (std::size_t i = 0; i < target_length; ++i) {
            dst[i] = (T(1) - frac[i]) * src[lo[i]] + frac[i] * src[hi[i]];
        }
    }
    return Tensor<T>::from_op(Shape{xs.batch, xs.channels, target_length}, std::move(out), {x},
                              [=, lo = std::move(lo), hi = std::move(hi), frac = std::move(frac)](Node<T>& self) {
                                  auto& dx = parent_grad(self, 0);
                                  for (std::size_t r = 0; r < rows; ++r) {
                                      const T* g = self.grad.data() + r * target_length;
                                      T* d = dx.data() + r * lin;
                                      for (std::size_t i = 0; i < target_length; ++i) {
                                          d[lo[i]] += (T(1) - frac[i]) * g[i];
                                          d[hi[i]] += frac[i] * g[i];
                                      }
                                  }
                              });
}

template <class T>
Tensor<T> upsample_linear(const Tensor<T>& x, std::size_t scale) {
    if (scale == 0) shape_error("upsample scale must be positive");
    return interpolate_linear(x, x.shape().length * scale);
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape as = a.shape(), bs = b.shape();
    if (as.batch != bs.batch || as.length != bs.length) {
        shape_error("concat_channels " + to_string(as) + " with " + to_string(bs));
    }
    const std::size_t len = as.length;
    const std::size_t ca = as.channels, cb = bs.channels, batch = as.batch;
    std::vector<T> out(batch * (ca + cb) * len);
    const auto ad = a.data();
    const auto bd = b.data();
    for (std::size_t n = 0; n < batch; ++n) {
        std::copy_n(ad.data() + n * ca * len, ca * len, out.data() + n * (ca + cb) * len);
        std::copy_n(bd.data() + n * cb * len, cb * len, out.data() + n * (ca + cb) * len + ca * len);
    }
    return Tensor<T>::from_op(Shape{batch, ca + cb, len}, std::move(out), {a, b}, [=](Node<T>& self) {
        for (std::size_t n = 0; n < batch; ++n) {
            const T* g = self.grad.data() + n * (ca + cb) * len;
            if (wants_grad(self, 0)) {
                T* d = parent_grad(self, 0).data() + n * ca * len;
                for (std::size_t i = 0; i < ca * len; ++i) d[i] += g[i];
            }
            if (wants_grad(self, 1)) {
                T* d = parent_grad(self, 1).data() + n * cb * len;
                for (std::size_t i = 0; i < cb * len; ++i) d[i] += g[ca * len + i];
            }
        }
    });
}

template <class T>
Tensor<T> self_attention_1d(const Tensor<T>& x, const Tensor<T>& wq, const Tensor<T>& wk, const Tensor<T>& wv) {
    const Shape xs = x.shape();
    const std::size_t batch = xs.batch, ch = xs.channels, len = xs.length;
    const Shape proj{1, ch, ch};
    if (wq.shape() != proj || wk.shape() != proj || wv.shape() != proj) {
        shape_error("self_attention_1d projections must be " + to_string(proj));
    }
    const auto C = static_cast<long>(ch);
    const auto L = static_cast<long>(len);
    const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(ch)));
    ConstMapMat<T> mq(wq.data().data(), C, C), mk(wk.data().data(), C, C), mv(wv.data().data(), C, C);

    // Per-sample saved activations: Q, K, V (C x L) and attention A (L x L).
    std::vector<RowMat<T>> qs(batch), ks(batch), vs(batch), as(batch);
    std::vector<T> out(x.numel());
    for (std::size_t b = 0; b < batch; ++b) {
        ConstMapMat<T> xb(x.data().data() + b * ch * len, C, L);
        qs[b] = mq * xb;
        ks[b] = mk * xb;
        vs[b] = mv * xb;
        RowMat<T> scores = (qs[b].transpose() * ks[b]) * inv_sqrt;
        for (long i = 0; i < L; ++i) {
            const T m = scores.row(i).maxCoeff();
            scores.row(i) = (scores.row(i).array() - m).exp();
            scores.row(i) /= scores.row(i).sum();
        }
        as[b] = std::move(scores);
        MapMat<T> yb(out.data() + b * ch * len, C, L);
        yb = xb + vs[b] * as[b].transpose();
    }

    return Tensor<T>::from_op(
        xs, std::move(out), {x, wq, wk, wv},
        [=, qs = std::move(qs), ks = std::move(ks), vs = std::move(vs), as = std::move(as)](Node<T>& self) {
            const auto& xv = self.parents[0]->value;
            ConstMapMat<T> mq(self.parents[1]->value.data(), C, C);
            ConstMapMat<T> mk(self.parents[2]->value.data(), C, C);
            ConstMapMat<T> mv(self.parents[3]->value.data(), C, C);
            for (std::size_t b = 0; b < batch; ++b) {
                ConstMapMat<T> dy(self.grad.data() + b * ch * len, C, L);
                ConstMapMat<T> xb(xv.data() + b * ch * len, C, L);
                const RowMat<T>& A = as[b];
                RowMat<T> dv = dy * A;
                RowMat<T> da = dy.transpose() * vs[b];
                RowMat<T> ds(L, L);
                for (long i = 0; i < L; ++i) {
                    const T dot = (da.row(i).array() * A.row(i).array()).sum();
                    ds.row(i) = A.row(i).array() * (da.row(i).array() - dot);
                }
                RowMat<T> dq = (ks[b] * ds.transpose()) * inv_sqrt;
                RowMat<T> dk = (qs[b] * ds) * inv_sqrt;
                if (wants_grad(self, 1)) MapMat<T>(parent_grad(self, 1).data(), C, C).noalias() += dq * xb.transpose();
                if (wants_grad(self, 2)) MapMat<T>(parent_grad(self, 2).data(), C, C).noalias() += dk * xb.transpose();
                if (wants_grad(self, 3)) MapMat<T>(parent_grad(self, 3).data(), C, C).noalias() += dv * xb.transpose();
                if (wants_grad(self, 0)) {
                    MapMat<T> dx(parent_grad(self, 0).data() + b * ch * len, C, L);
                    dx += dy;
                    dx.noalias() += mq.transpose() * dq;
                    dx.noalias() += mk.transpose() * dk;
                    dx.noalias() += mv.transpose() * dv;
                }
            }
        });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) shape_error("add " + to_string(a.shape()) + " with " + to_string(b.shape()));
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return Tensor<T>::from_op(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (!wants_grad(self, p)) continue;
            auto& d = parent_grad(self, p);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
        }
    });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, double factor) {
    const T f = static_cast<T>(factor);
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * f;
    return Tensor<T>::from_op(a.shape(), std::move(out), {a}, [f](Node<T>& self) {
        auto& d = parent_grad(self, 0);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * f;
    });
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
    double acc = 0.0;
    for (T v : a.data()) acc += v;
    return Tensor<T>::from_op(Shape{}, {static_cast<T>(acc)}, {a}, [](Node<T>& self) {
        auto& d = parent_grad(self, 0);
        for (auto& v : d) v += self.grad[0];
    });
}

template <class T>
Tensor<T> mse_loss(const Tensor<T>& pred, std::span<const T> target, std::span<const unsigned char> mask) {
    const Shape ps = pred.shape();
    if (target.size() != pred.numel()) shape_error("mse_loss target size does not match prediction");
    if (!mask.empty() && mask.size() != ps.batch) shape_error("mse_loss mask must have one entry per sample");
    const std::size_t per = ps.channels * ps.length;
    std::size_t labeled = 0;
    double acc = 0.0;
    const auto pd = pred.data();
    for (std::size_t b = 0; b < ps.batch; ++b) {
        if (!mask.empty() && mask[b] == 0) continue;
        ++labeled;
        for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
            const double d = static_cast<double>(pd[i]) - target[i];
            acc += d * d;
        }
    }
    if (labeled == 0) return Tensor<T>::zeros(Shape{});
    const double n = static_cast<double>(labeled * per);
    std::vector<T> tgt(target.begin(), target.end());
    std::vector<unsigned char> msk(mask.begin(), mask.end());
    return Tensor<T>::from_op(Shape{}, {static_cast<T>(acc / n)}, {pred},
                              [=, tgt = std::move(tgt), msk = std::move(msk)](Node<T>& self) {
                                  auto& d = parent_grad(self, 0);
                                  const auto& p = self.parents[0]->value;
                                  const double g = 2.0 * self.grad[0] / n;
                                  for (std::size_t b = 0; b < ps.batch; ++b) {
                                      if (!msk.empty() && msk[b] == 0) continue;
                                      for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
                                          d[i] += static_cast<T>(g * (static_cast<double>(p[i]) - tgt[i]));
                                      }
                                  }
                              });
}

template <class T>
Tensor<T> kk_loss(const Tensor<T>& raman, std::span<const T> x, const Tensor<T>& nrb) {
    const Shape rs = raman.shape();
    if (nrb.shape() != rs || x.size() != raman.numel()) shape_error("kk_loss operands must share one shape");
    const std::size_t rows = rs.batch * rs.channels;
    const std::size_t len = rs.length;
    const HilbertFilter filter(len);
    const double n = static_cast<double>(raman.numel());

    std::vector<double> diff(raman.numel());
    std::vector<double> residual(len);
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t l = 0; l < len; ++l) residual[l] = static_cast<double>(x[r * len + l]) - nrb.data()[r * len + l];
        const auto target = filter.transform(residual);
        for (std::size_t l = 0; l < len; ++l) {
            const double d = static_cast<double>(raman.data()[r * len + l]) - target[l];
            diff[r * len + l] = d;
            acc += d * d;
        }
    }
    return Tensor<T>::from_op(Shape{}, {static_cast<T>(acc / n)}, {raman, nrb},
                              [=, diff = std::move(diff)](Node<T>& self) {
                                  const double g = 2.0 * self.grad[0] / n;
                                  if (wants_grad(self, 0)) {
                                      auto& d = parent_grad(self, 0);
                                      for (std::size_t i = 0; i < d.size(); ++i) d[i] += static_cast<T>(g * diff[i]);
                                  }
                                  if (wants_grad(self, 1)) {
                                      auto& d = parent_grad(self, 1);
                                      const HilbertFilter filter(len);
                                      std::vector<double> row(len);
                                      for (std::size_t r = 0; r < rows; ++r) {
                                          for (std::size_t l = 0; l < len; ++l) row[l] = g * diff[r * len + l];
                                          const auto back = filter.adjoint(row);
                                          for (std::size_t l = 0; l < len; ++l) d[r * len + l] += static_cast<T>(back[l]);
                                      }
                                  }
                              });
}

template <class T>
Tensor<T> smooth_loss(const Tensor<T>& nrb) {
    const Shape s = nrb.shape();
    if (s.length < 2) shape_error("smooth_loss needs length >= 2");
    const std::size_t rows = s.batch * s.channels;
    const std::size_t len = s.length;
    const double n = static_cast<double>(rows * (len - 1));
    double acc = 0.0;
    const auto v = nrb.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t l = 0; l + 1 < len; ++l) {
            const double d = static_cast<double>(v[r * len + l + 1]) - v[r * len + l];
            acc += d * d;
        }
    }
    return Tensor<T>::from_op(Shape{}, {static_cast<T>(acc / n)}, {nrb}, [=](Node<T>& self) {
        auto& dx = parent_grad(self, 0);
        const auto& xv = self.parents[0]->value;
        const double g = 2.0 * self.grad[0] / n;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t l = 0; l + 1 < len; ++l) {
                const double d = g * (static_cast<double>(xv[r * len + l + 1]) - xv[r * len + l]);
                dx[r * len + l + 1] += static_cast<T>(d);
                dx[r * len + l] -= static_cast<T>(d);
            }
        }
    });
}

#define RAMPINN_INSTANTIATE_OPS(T)                                                                                    \
    template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);                    \
    template Tensor<T> batch_norm1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, BatchNormState<T>&, bool); \
    template Tensor<T> relu(const Tensor<T>&);                                                                        \
    template Tensor<T> sigmoid(const Tensor<T>&);                                                                     \
    template Tensor<T> avg_pool1d(const Tensor<T>&, std::size_t);                                                     \
    template Tensor<T> interpolate_linear(const Tensor<T>&, std::size_t);                                             \
    template Tensor<T> upsample_linear(const Tensor<T>&, std::size_t);                                                \
    template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                                           \
    template Tensor<T> self_attention_1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);     \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                       \
    template Tensor<T> scale(const Tensor<T>&, double);                                                               \
    template Tensor<T> sum(const Tensor<T>&);                                                                         \
    template Tensor<T> mse_loss(const Tensor<T>&, std::span<const T>, std::span<const unsigned char>);                \
    template Tensor<T> kk_loss(const Tensor<T>&, std::span<const T>, const Tensor<T>&);                               \
    template Tensor<T> smooth_loss(const Tensor<T>&);

RAMPINN_INSTANTIATE_OPS(float)
RAMPINN_INSTANTIATE_OPS(double)

#undef RAMPINN_INSTANTIATE_OPS

}  // namespace rampinn::nn
