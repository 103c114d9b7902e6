// Copyright 2026 The HSC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hsc/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace hsc {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;
template <typename T>
using CMapM = Eigen::Map<const Mat<T>>;

template <typename T>
using NodeT = internal::Node<T>;

// Left-to-right sum. Eigen's vectorised reductions peel to the first aligned
// element, so their rounding depends on where the buffer was allocated.
template <typename Row>
typename Row::Scalar SequentialSum(const Row& row) {
  typename Row::Scalar s = 0;
  for (Eigen::Index i = 0; i < row.size(); ++i) s += row(i);
  return s;
}

template <typename T>
bool Wants(const NodeT<T>& self, size_t k) {
  return self.inputs[k]->requires_grad;
}

int NormAxis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  Check(axis >= 0 && axis < rank, ErrorKind::kShape,
        std::string(op) + ": axis out of range");
  return axis;
}

void RequireSameShape(const Shape& a, const Shape& b, const char* op) {
  Check(a == b, ErrorKind::kShape,
        std::string(op) + ": shape mismatch " + ShapeString(a) + " vs " +
            ShapeString(b));
}

// Unary elementwise op given value and derivative-from-(x, y) functors.
template <typename T, typename F, typename D>
Tensor<T> Unary(const char* op, const Tensor<T>& x, F f, D df) {
  std::vector<T> y(x.size());
  auto xv = x.values();
  for (size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return MakeOpResult<T>(op, x.shape(), std::move(y), {x},
                         [df](NodeT<T>& self) {
                           auto gx = self.inputs[0]->GradBuffer();
                           const auto& xv = self.inputs[0]->value;
                           for (size_t i = 0; i < gx.size(); ++i) {
                             gx[i] += self.grad[i] * df(xv[i], self.value[i]);
                           }
                         });
}

struct Broadcast {
  Shape out;
  bool same = false;
  std::vector<int64_t> ia, ib;
};

Broadcast MakeBroadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  const size_t r = std::max(a.size(), b.size());
  bc.out.assign(r, 1);
  std::vector<int64_t> sa(r, 0), sb(r, 0);
  int64_t stride_a = 1, stride_b = 1;
  for (size_t k = 0; k < r; ++k) {
    const size_t i = r - 1 - k;
    const int64_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
    const int64_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
    Check(da == db || da == 1 || db == 1, ErrorKind::kShape,
          std::string(op) + ": cannot broadcast " + ShapeString(a) + " with " +
              ShapeString(b));
    bc.out[i] = std::max(da, db);
    sa[i] = da == 1 ? 0 : stride_a;
    sb[i] = db == 1 ? 0 : stride_b;
    stride_a *= da;
    stride_b *= db;
  }
  const int64_t n = NumElements(bc.out);
  bc.ia.resize(n);
  bc.ib.resize(n);
  std::vector<int64_t> idx(r, 0);
  int64_t oa = 0, ob = 0;
  for (int64_t flat = 0; flat < n; ++flat) {
    bc.ia[flat] = oa;
    bc.ib[flat] = ob;
    for (size_t k = r; k-- > 0;) {
      ++idx[k];
      oa += sa[k];
      ob += sb[k];
      if (idx[k] < bc.out[k]) break;
      oa -= sa[k] * idx[k];
      ob -= sb[k] * idx[k];
      idx[k] = 0;
    }
  }
  return bc;
}

// Binary elementwise op with broadcasting. dfa/dfb give d(out)/d(a), d(b).
template <typename T, typename F, typename DA, typename DB>
Tensor<T> Binary(const char* op, const Tensor<T>& a, const Tensor<T>& b, F f,
                 DA dfa, DB dfb) {
  auto bc = std::make_shared<Broadcast>(MakeBroadcast(a.shape(), b.shape(), op));
  const int64_t n = NumElements(bc->out);
  std::vector<T> y(n);
  auto av = a.values();
  auto bv = b.values();
  if (bc->same) {
    for (int64_t i = 0; i < n; ++i) y[i] = f(av[i], bv[i]);
  } else {
    for (int64_t i = 0; i < n; ++i) y[i] = f(av[bc->ia[i]], bv[bc->ib[i]]);
  }
  return MakeOpResult<T>(
      op, bc->out, std::move(y), {a, b}, [bc, dfa, dfb](NodeT<T>& self) {
        const auto& av = self.inputs[0]->value;
        const auto& bv = self.inputs[1]->value;
        const int64_t n = static_cast<int64_t>(self.value.size());
        auto ia = [&](int64_t i) { return bc->same ? i : bc->ia[i]; };
        auto ib = [&](int64_t i) { return bc->same ? i : bc->ib[i]; };
        if (Wants(self, 0)) {
          auto ga = self.inputs[0]->GradBuffer();
          for (int64_t i = 0; i < n; ++i) {
            ga[ia(i)] += self.grad[i] * dfa(av[ia(i)], bv[ib(i)]);
          }
        }
        if (Wants(self, 1)) {
          auto gb = self.inputs[1]->GradBuffer();
          for (int64_t i = 0; i < n; ++i) {
            gb[ib(i)] += self.grad[i] * dfb(av[ia(i)], bv[ib(i)]);
          }
        }
      });
}

// Splits a shape around `axis` into (outer, n, inner).
std::array<int64_t, 3> AxisSplit(const Shape& s, int axis) {
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  return {outer, s[axis], inner};
}

// --- im2col helpers --------------------------------------------------------

// Gathers k x k patches of a C x H x W image into rows (c, kh, kw) and
// columns (oh, ow) of a (C*k*k) x (OH*OW) matrix.
template <typename T>
void Im2Col(const T* img, int C, int H, int W, int k, int stride, int pad,
            int OH, int OW, T* col) {
  const int64_t P = static_cast<int64_t>(OH) * OW;
  for (int c = 0; c < C; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        T* row = col + ((static_cast<int64_t>(c) * k + kh) * k + kw) * P;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride - pad + kh;
          T* dst = row + static_cast<int64_t>(oh) * OW;
          if (ih < 0 || ih >= H) {
            std::fill(dst, dst + OW, T(0));
            continue;
          }
          const T* src = img + (static_cast<int64_t>(c) * H + ih) * W;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * stride - pad + kw;
            dst[ow] = (iw >= 0 && iw < W) ? src[iw] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters-adds columns back into the image.
template <typename T>
void Col2Im(const T* col, int C, int H, int W, int k, int stride, int pad,
            int OH, int OW, T* img) {
  const int64_t P = static_cast<int64_t>(OH) * OW;
  for (int c = 0; c < C; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const T* row = col + ((static_cast<int64_t>(c) * k + kh) * k + kw) * P;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride - pad + kh;
          if (ih < 0 || ih >= H) continue;
          const T* src = row + static_cast<int64_t>(oh) * OW;
          T* dst = img + (static_cast<int64_t>(c) * H + ih) * W;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * stride - pad + kw;
            if (iw >= 0 && iw < W) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

struct Tap3 {
  int c, kd, kh, kw;
};

std::vector<Tap3> ActiveTaps(const TapMask& m) {
  std::vector<Tap3> taps;
  for (int c = 0; c < m.in_channels; ++c)
    for (int kd = 0; kd < m.kernel; ++kd)
      for (int kh = 0; kh < m.kernel; ++kh)
        for (int kw = 0; kw < m.kernel; ++kw)
          if (m.at(c, kd, kh, kw)) taps.push_back({c, kd, kh, kw});
  return taps;
}

template <typename T>
void Im2Col3(const T* vol, int D, int H, int W, int k,
             const std::vector<Tap3>& taps, T* col) {
  const int pad = k / 2;
  const int64_t P = static_cast<int64_t>(D) * H * W;
  for (size_t r = 0; r < taps.size(); ++r) {
    const Tap3& t = taps[r];
    T* row = col + static_cast<int64_t>(r) * P;
    const T* src = vol + static_cast<int64_t>(t.c) * P;
    for (int d = 0; d < D; ++d) {
      const int id = d + t.kd - pad;
      for (int h = 0; h < H; ++h) {
        const int ih = h + t.kh - pad;
        T* dst = row + (static_cast<int64_t>(d) * H + h) * W;
        if (id < 0 || id >= D || ih < 0 || ih >= H) {
          std::fill(dst, dst + W, T(0));
          continue;
        }
        const T* s = src + (static_cast<int64_t>(id) * H + ih) * W;
        for (int w = 0; w < W; ++w) {
          const int iw = w + t.kw - pad;
          dst[w] = (iw >= 0 && iw < W) ? s[iw] : T(0);
        }
      }
    }
  }
}

template <typename T>
void Col2Im3(const T* col, int D, int H, int W, int k,
             const std::vector<Tap3>& taps, T* vol) {
  const int pad = k / 2;
  const int64_t P = static_cast<int64_t>(D) * H * W;
  for (size_t r = 0; r < taps.size(); ++r) {
    const Tap3& t = taps[r];
    const T* row = col + static_cast<int64_t>(r) * P;
    T* dstc = vol + static_cast<int64_t>(t.c) * P;
    for (int d = 0; d < D; ++d) {
      const int id = d + t.kd - pad;
      if (id < 0 || id >= D) continue;
      for (int h = 0; h < H; ++h) {
        const int ih = h + t.kh - pad;
        if (ih < 0 || ih >= H) continue;
        const T* s = row + (static_cast<int64_t>(d) * H + h) * W;
        T* dst = dstc + (static_cast<int64_t>(id) * H + ih) * W;
        for (int w = 0; w < W; ++w) {
          const int iw = w + t.kw - pad;
          if (iw >= 0 && iw < W) dst[iw] += s[w];
        }
      }
    }
  }
}

}  // namespace

// --- elementwise -------------------------------------------------------------

template <typename T>
Tensor<T> Relu(const Tensor<T>& x) {
  return Unary<T>(
      "relu", x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> LeakyRelu(const Tensor<T>& x, double slope) {
  const T s = static_cast<T>(slope);
  return Unary<T>(
      "leaky_relu", x, [s](T v) { return v > T(0) ? v : s * v; },
      [s](T v, T) { return v > T(0) ? T(1) : s; });
}

template <typename T>
Tensor<T> Sigmoid(const Tensor<T>& x) {
  return Unary<T>(
      "sigmoid", x,
      [](T v) {
        return v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                         : std::exp(v) / (T(1) + std::exp(v));
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> Exp(const Tensor<T>& x) {
  return Unary<T>(
      "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> Log(const Tensor<T>& x) {
  for (T v : x.values()) {
    Check(v > T(0), ErrorKind::kNumerical, "log: non-positive input");
  }
  return Unary<T>(
      "log", x, [](T v) { return std::log(v); },
      [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> Square(const Tensor<T>& x) {
  return Unary<T>(
      "square", x, [](T v) { return v * v; },
      [](T v, T) { return T(2) * v; });
}

template <typename T>
Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b) {
  return Binary<T>(
      "add", a, b, [](T p, T q) { return p + q; }, [](T, T) { return T(1); },
      [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> Sub(const Tensor<T>& a, const Tensor<T>& b) {
  return Binary<T>(
      "sub", a, b, [](T p, T q) { return p - q; }, [](T, T) { return T(1); },
      [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b) {
  return Binary<T>(
      "mul", a, b, [](T p, T q) { return p * q; }, [](T, T q) { return q; },
      [](T p, T) { return p; });
}

template <typename T>
Tensor<T> Scale(const Tensor<T>& x, double s) {
  const T k = static_cast<T>(s);
  return Unary<T>(
      "scale", x, [k](T v) { return k * v; }, [k](T, T) { return k; });
}

template <typename T>
Tensor<T> AddScalar(const Tensor<T>& x, double s) {
  const T k = static_cast<T>(s);
  return Unary<T>(
      "add_scalar", x, [k](T v) { return v + k; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> Clamp(const Tensor<T>& x, double lo, double hi) {
  const T l = static_cast<T>(lo), h = static_cast<T>(hi);
  return Unary<T>(
      "clamp", x, [l, h](T v) { return std::min(std::max(v, l), h); },
      [l, h](T v, T) { return (v > l && v < h) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> CeilSte(const Tensor<T>& x) {
  return Unary<T>(
      "ceil_ste", x, [](T v) { return std::ceil(v); },
      [](T, T) { return T(1); });
}

// --- reductions ----------------------------------------------------------------

template <typename T>
Tensor<T> Sum(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.values()) s += v;
  return MakeOpResult<T>("sum", Shape{}, {s}, {x}, [](NodeT<T>& self) {
    const T g = self.grad[0];
    for (T& v : self.inputs[0]->GradBuffer()) v += g;
  });
}

template <typename T>
Tensor<T> Mean(const Tensor<T>& x) {
  Check(x.size() > 0, ErrorKind::kShape, "mean of empty tensor");
  T s = 0;
  for (T v : x.values()) s += v;
  const T inv = T(1) / static_cast<T>(x.size());
  return MakeOpResult<T>("mean", Shape{}, {s * inv}, {x},
                         [inv](NodeT<T>& self) {
                           const T g = self.grad[0] * inv;
                           for (T& v : self.inputs[0]->GradBuffer()) v += g;
                         });
}

template <typename T>
Tensor<T> Mse(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a.shape(), b.shape(), "mse");
  Check(a.size() > 0, ErrorKind::kShape, "mse of empty tensors");
  auto av = a.values();
  auto bv = b.values();
  T s = 0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const T d = av[i] - bv[i];
    s += d * d;
  }
  const T inv = T(1) / static_cast<T>(a.size());
  return MakeOpResult<T>("mse", Shape{}, {s * inv}, {a, b},
                         [inv](NodeT<T>& self) {
                           const auto& av = self.inputs[0]->value;
                           const auto& bv = self.inputs[1]->value;
                           const T g = T(2) * inv * self.grad[0];
                           if (Wants(self, 0)) {
                             auto ga = self.inputs[0]->GradBuffer();
                             for (size_t i = 0; i < av.size(); ++i)
                               ga[i] += g * (av[i] - bv[i]);
                           }
                           if (Wants(self, 1)) {
                             auto gb = self.inputs[1]->GradBuffer();
                             for (size_t i = 0; i < av.size(); ++i)
                               gb[i] -= g * (av[i] - bv[i]);
                           }
                         });
}

// --- linear algebra / layout -------------------------------------------------

template <typename T>
Tensor<T> MatMul(const Tensor<T>& a, const Tensor<T>& b) {
  Check(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
        ErrorKind::kShape,
        "matmul: incompatible " + ShapeString(a.shape()) + " x " +
            ShapeString(b.shape()));
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> y(m * n);
  MapM<T>(y.data(), m, n).noalias() =
      CMapM<T>(a.values().data(), m, k) * CMapM<T>(b.values().data(), k, n);
  return MakeOpResult<T>(
      "matmul", Shape{m, n}, std::move(y), {a, b}, [m, k, n](NodeT<T>& self) {
        CMapM<T> g(self.grad.data(), m, n);
        if (Wants(self, 0)) {
          MapM<T>(self.inputs[0]->GradBuffer().data(), m, k).noalias() +=
              g * CMapM<T>(self.inputs[1]->value.data(), k, n).transpose();
        }
        if (Wants(self, 1)) {
          MapM<T>(self.inputs[1]->GradBuffer().data(), k, n).noalias() +=
              CMapM<T>(self.inputs[0]->value.data(), m, k).transpose() * g;
        }
      });
}

template <typename T>
Tensor<T> Transpose(const Tensor<T>& x) {
  Check(x.rank() == 2, ErrorKind::kShape, "transpose: rank-2 input required");
  const int64_t r = x.dim(0), c = x.dim(1);
  std::vector<T> y(r * c);
  MapM<T>(y.data(), c, r) = CMapM<T>(x.values().data(), r, c).transpose();
  return MakeOpResult<T>("transpose", Shape{c, r}, std::move(y), {x},
                         [r, c](NodeT<T>& self) {
                           MapM<T>(self.inputs[0]->GradBuffer().data(), r, c) +=
                               CMapM<T>(self.grad.data(), c, r).transpose();
                         });
}

template <typename T>
Tensor<T> Reshape(const Tensor<T>& x, Shape shape) {
  Check(NumElements(shape) == x.size(), ErrorKind::kShape,
        "reshape: " + ShapeString(x.shape()) + " -> " + ShapeString(shape));
  std::vector<T> y(x.values().begin(), x.values().end());
  return MakeOpResult<T>("reshape", std::move(shape), std::move(y), {x},
                         [](NodeT<T>& self) {
                           auto g = self.inputs[0]->GradBuffer();
                           for (size_t i = 0; i < g.size(); ++i)
                             g[i] += self.grad[i];
                         });
}

template <typename T>
Tensor<T> Softmax(const Tensor<T>& x, int axis) {
  axis = NormAxis(axis, x.rank(), "softmax");
  const auto [outer, n, inner] = AxisSplit(x.shape(), axis);
  std::vector<T> y(x.size());
  auto xv = x.values();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      const int64_t base = o * n * inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (int64_t j = 0; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      T s = 0;
      for (int64_t j = 0; j < n; ++j) {
        const T e = std::exp(xv[base + j * inner] - mx);
        y[base + j * inner] = e;
        s += e;
      }
      for (int64_t j = 0; j < n; ++j) y[base + j * inner] /= s;
    }
  }
  return MakeOpResult<T>(
      "softmax", x.shape(), std::move(y), {x},
      [outer, n, inner](NodeT<T>& self) {
        auto gx = self.inputs[0]->GradBuffer();
        for (int64_t o = 0; o < outer; ++o) {
          for (int64_t i = 0; i < inner; ++i) {
            const int64_t base = o * n * inner + i;
            T dot = 0;
            for (int64_t j = 0; j < n; ++j) {
              dot += self.grad[base + j * inner] * self.value[base + j * inner];
            }
            for (int64_t j = 0; j < n; ++j) {
              const int64_t p = base + j * inner;
              gx[p] += self.value[p] * (self.grad[p] - dot);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> LogSoftmax(const Tensor<T>& x, int axis) {
  axis = NormAxis(axis, x.rank(), "log_softmax");
  const auto [outer, n, inner] = AxisSplit(x.shape(), axis);
  std::vector<T> y(x.size());
  auto xv = x.values();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      const int64_t base = o * n * inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (int64_t j = 0; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      T s = 0;
      for (int64_t j = 0; j < n; ++j) s += std::exp(xv[base + j * inner] - mx);
      const T lse = mx + std::log(s);
      for (int64_t j = 0; j < n; ++j)
        y[base + j * inner] = xv[base + j * inner] - lse;
    }
  }
  return MakeOpResult<T>(
      "log_softmax", x.shape(), std::move(y), {x},
      [outer, n, inner](NodeT<T>& self) {
        auto gx = self.inputs[0]->GradBuffer();
        for (int64_t o = 0; o < outer; ++o) {
          for (int64_t i = 0; i < inner; ++i) {
            const int64_t base = o * n * inner + i;
            T gs = 0;
            for (int64_t j = 0; j < n; ++j) gs += self.grad[base + j * inner];
            for (int64_t j = 0; j < n; ++j) {
              const int64_t p = base + j * inner;
              gx[p] += self.grad[p] - std::exp(self.value[p]) * gs;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> CrossEntropy(const Tensor<T>& probs, const Tensor<T>& target,
                       int axis) {
  RequireSameShape(probs.shape(), target.shape(), "cross_entropy");
  axis = NormAxis(axis, probs.rank(), "cross_entropy");
  const auto [outer, n, inner] = AxisSplit(probs.shape(), axis);
  const int64_t rows = outer * inner;
  Check(rows > 0, ErrorKind::kShape, "cross_entropy: empty input");
  auto pv = probs.values();
  auto tv = target.values();
  T s = 0;
  for (int64_t i = 0; i < probs.size(); ++i) {
    if (tv[i] != T(0)) {
      Check(pv[i] > T(0), ErrorKind::kNumerical,
            "cross_entropy: zero probability on a target class");
      s -= tv[i] * std::log(pv[i]);
    }
  }
  const T inv = T(1) / static_cast<T>(rows);
  return MakeOpResult<T>(
      "cross_entropy", Shape{}, {s * inv}, {probs, target},
      [inv](NodeT<T>& self) {
        const auto& pv = self.inputs[0]->value;
        const auto& tv = self.inputs[1]->value;
        const T g = self.grad[0] * inv;
        if (Wants(self, 0)) {
          auto gp = self.inputs[0]->GradBuffer();
          for (size_t i = 0; i < pv.size(); ++i)
            if (tv[i] != T(0)) gp[i] -= g * tv[i] / pv[i];
        }
        if (Wants(self, 1)) {
          auto gt = self.inputs[1]->GradBuffer();
          for (size_t i = 0; i < pv.size(); ++i) gt[i] -= g * std::log(pv[i]);
        }
      });
}

template <typename T>
Tensor<T> NegLog2Gather(const Tensor<T>& probs, std::span<const int32_t> symbols,
                        int axis) {
  axis = NormAxis(axis, probs.rank(), "neg_log2_gather");
  const auto [outer, n, inner] = AxisSplit(probs.shape(), axis);
  Check(static_cast<int64_t>(symbols.size()) == outer * inner,
        ErrorKind::kShape, "neg_log2_gather: symbol count mismatch");
  Shape out_shape = probs.shape();
  out_shape.erase(out_shape.begin() + axis);
  auto idx = std::make_shared<std::vector<int64_t>>(symbols.size());
  std::vector<T> y(symbols.size());
  auto pv = probs.values();
  const T inv_ln2 = T(1) / static_cast<T>(std::log(2.0));
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      const int64_t site = o * inner + i;
      const int32_t s = symbols[site];
      Check(s >= 0 && s < n, ErrorKind::kShape,
            "neg_log2_gather: symbol out of range");
      const int64_t p = o * n * inner + static_cast<int64_t>(s) * inner + i;
      Check(pv[p] > T(0), ErrorKind::kNumerical,
            "neg_log2_gather: zero probability at a realized symbol");
      (*idx)[site] = p;
      y[site] = -std::log(pv[p]) * inv_ln2;
    }
  }
  return MakeOpResult<T>("neg_log2_gather", std::move(out_shape), std::move(y),
                         {probs}, [idx, inv_ln2](NodeT<T>& self) {
                           auto gp = self.inputs[0]->GradBuffer();
                           const auto& pv = self.inputs[0]->value;
                           for (size_t s = 0; s < idx->size(); ++s) {
                             const int64_t p = (*idx)[s];
                             gp[p] -= self.grad[s] * inv_ln2 / pv[p];
                           }
                         });
}

template <typename T>
Tensor<T> Concat(const std::vector<Tensor<T>>& parts, int axis) {
  Check(!parts.empty(), ErrorKind::kShape, "concat: no inputs");
  const Shape& s0 = parts[0].shape();
  axis = NormAxis(axis, static_cast<int>(s0.size()), "concat");
  Shape out = s0;
  out[axis] = 0;
  for (const auto& p : parts) {
    Check(p.rank() == static_cast<int>(s0.size()), ErrorKind::kShape,
          "concat: rank mismatch");
    for (int d = 0; d < p.rank(); ++d) {
      Check(d == axis || p.shape()[d] == s0[d], ErrorKind::kShape,
            "concat: shape mismatch " + ShapeString(p.shape()) + " vs " +
                ShapeString(s0));
    }
    out[axis] += p.shape()[axis];
  }
  const auto [outer, total, inner] = AxisSplit(out, axis);
  std::vector<T> y(NumElements(out));
  auto offsets = std::make_shared<std::vector<int64_t>>();
  int64_t off = 0;
  for (const auto& p : parts) {
    offsets->push_back(off);
    const int64_t n = p.shape()[axis];
    auto pv = p.values();
    for (int64_t o = 0; o < outer; ++o) {
      std::copy(pv.begin() + o * n * inner, pv.begin() + (o + 1) * n * inner,
                y.begin() + (o * total + off) * inner);
    }
    off += n;
  }
  const int64_t outer_c = outer, total_c = total, inner_c = inner;
  return MakeOpResult<T>(
      "concat", out, std::move(y), parts,
      [offsets, outer_c, total_c, inner_c, axis](NodeT<T>& self) {
        for (size_t k = 0; k < self.inputs.size(); ++k) {
          if (!Wants(self, k)) continue;
          auto g = self.inputs[k]->GradBuffer();
          const int64_t n = self.inputs[k]->shape[axis];
          for (int64_t o = 0; o < outer_c; ++o) {
            const T* src =
                self.grad.data() + (o * total_c + (*offsets)[k]) * inner_c;
            T* dst = g.data() + o * n * inner_c;
            for (int64_t i = 0; i < n * inner_c; ++i) dst[i] += src[i];
          }
        }
      });
}

template <typename T>
Tensor<T> Slice(const Tensor<T>& x, int axis, int64_t begin, int64_t end) {
  axis = NormAxis(axis, x.rank(), "slice");
  const int64_t n = x.shape()[axis];
  Check(0 <= begin && begin <= end && end <= n, ErrorKind::kShape,
        "slice: range out of bounds");
  const auto [outer, full, inner] = AxisSplit(x.shape(), axis);
  Shape out = x.shape();
  out[axis] = end - begin;
  const int64_t len = end - begin;
  std::vector<T> y(NumElements(out));
  auto xv = x.values();
  for (int64_t o = 0; o < outer; ++o) {
    std::copy(xv.begin() + (o * full + begin) * inner,
              xv.begin() + (o * full + end) * inner,
              y.begin() + o * len * inner);
  }
  const int64_t outer_c = outer, full_c = full, inner_c = inner;
  return MakeOpResult<T>(
      "slice", out, std::move(y), {x},
      [outer_c, full_c, inner_c, begin, len](NodeT<T>& self) {
        auto g = self.inputs[0]->GradBuffer();
        for (int64_t o = 0; o < outer_c; ++o) {
          const T* src = self.grad.data() + o * len * inner_c;
          T* dst = g.data() + (o * full_c + begin) * inner_c;
          for (int64_t i = 0; i < len * inner_c; ++i) dst[i] += src[i];
        }
      });
}

template <typename T>
Tensor<T> UpsampleNearest(const Tensor<T>& x, int factor) {
  Check(x.rank() == 4 && factor >= 1, ErrorKind::kShape,
        "upsample_nearest: NCHW input and factor >= 1 required");
  const int64_t NC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t OH = H * factor, OW = W * factor;
  std::vector<T> y(NC * OH * OW);
  auto xv = x.values();
  for (int64_t p = 0; p < NC; ++p)
    for (int64_t h = 0; h < OH; ++h)
      for (int64_t w = 0; w < OW; ++w)
        y[(p * OH + h) * OW + w] = xv[(p * H + h / factor) * W + w / factor];
  return MakeOpResult<T>(
      "upsample_nearest", Shape{x.dim(0), x.dim(1), OH, OW}, std::move(y), {x},
      [NC, H, W, factor](NodeT<T>& self) {
        auto g = self.inputs[0]->GradBuffer();
        const int64_t OH = H * factor, OW = W * factor;
        for (int64_t p = 0; p < NC; ++p)
          for (int64_t h = 0; h < OH; ++h)
            for (int64_t w = 0; w < OW; ++w)
              g[(p * H + h / factor) * W + w / factor] +=
                  self.grad[(p * OH + h) * OW + w];
      });
}

template <typename T>
Tensor<T> ChannelNorm(const Tensor<T>& x, double eps) {
  Check(x.rank() >= 2, ErrorKind::kShape, "channel_norm: rank >= 2 required");
  const auto [outer, C, inner] = AxisSplit(x.shape(), 1);
  auto norms = std::make_shared<std::vector<T>>(outer * inner);
  std::vector<T> y(x.size());
  auto xv = x.values();
  const T e = static_cast<T>(eps);
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      const int64_t base = o * C * inner + i;
      T ss = e;
      for (int64_t c = 0; c < C; ++c) ss += xv[base + c * inner] * xv[base + c * inner];
      const T nrm = std::sqrt(ss);
      (*norms)[o * inner + i] = nrm;
      for (int64_t c = 0; c < C; ++c) y[base + c * inner] = xv[base + c * inner] / nrm;
    }
  }
  const int64_t outer_c = outer, C_c = C, inner_c = inner;
  return MakeOpResult<T>(
      "channel_norm", x.shape(), std::move(y), {x},
      [norms, outer_c, C_c, inner_c](NodeT<T>& self) {
        auto gx = self.inputs[0]->GradBuffer();
        for (int64_t o = 0; o < outer_c; ++o) {
          for (int64_t i = 0; i < inner_c; ++i) {
            const int64_t base = o * C_c * inner_c + i;
            T dot = 0;
            for (int64_t c = 0; c < C_c; ++c) {
              dot += self.grad[base + c * inner_c] * self.value[base + c * inner_c];
            }
            const T nrm = (*norms)[o * inner_c + i];
            for (int64_t c = 0; c < C_c; ++c) {
              const int64_t p = base + c * inner_c;
              gx[p] += (self.grad[p] - self.value[p] * dot) / nrm;
            }
          }
        }
      });
}

// --- convolutions ------------------------------------------------------------

template <typename T>
Tensor<T> Conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride, int padding) {
  Check(x.rank() == 4 && w.rank() == 4 && w.dim(1) == x.dim(1) &&
            w.dim(2) == w.dim(3),
        ErrorKind::kShape,
        "conv2d: input " + ShapeString(x.shape()) + " weight " +
            ShapeString(w.shape()));
  Check(stride >= 1 && padding >= 0, ErrorKind::kShape, "conv2d: bad stride");
  const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
  const int O = static_cast<int>(w.dim(0)), k = static_cast<int>(w.dim(2));
  const bool has_bias = b.defined();
  if (has_bias) {
    Check(b.rank() == 1 && b.dim(0) == O, ErrorKind::kShape,
          "conv2d: bias length mismatch");
  }
  Check(H + 2 * padding >= k && W + 2 * padding >= k, ErrorKind::kShape,
        "conv2d: kernel larger than padded input");
  const int OH = (H + 2 * padding - k) / stride + 1;
  const int OW = (W + 2 * padding - k) / stride + 1;
  const int64_t K = static_cast<int64_t>(C) * k * k, P = int64_t{OH} * OW;
  std::vector<T> y(static_cast<int64_t>(N) * O * P);
  std::vector<T> col(K * P);
  CMapM<T> wm(w.values().data(), O, K);
  for (int n = 0; n < N; ++n) {
    Im2Col(x.values().data() + int64_t{n} * C * H * W, C, H, W, k, stride,
           padding, OH, OW, col.data());
    MapM<T> out(y.data() + int64_t{n} * O * P, O, P);
    out.noalias() = wm * CMapM<T>(col.data(), K, P);
    if (has_bias) {
      for (int o = 0; o < O; ++o) out.row(o).array() += b.values()[o];
    }
  }
  std::vector<Tensor<T>> ins = {x, w};
  if (has_bias) ins.push_back(b);
  return MakeOpResult<T>(
      "conv2d", Shape{N, O, OH, OW}, std::move(y), ins,
      [=](NodeT<T>& self) {
        const auto& xv = self.inputs[0]->value;
        const auto& wv = self.inputs[1]->value;
        std::vector<T> col(K * P);
        std::vector<T> dcol(K * P);
        for (int n = 0; n < N; ++n) {
          CMapM<T> g(self.grad.data() + int64_t{n} * O * P, O, P);
          if (Wants(self, 1)) {
            Im2Col(xv.data() + int64_t{n} * C * H * W, C, H, W, k, stride,
                   padding, OH, OW, col.data());
            MapM<T>(self.inputs[1]->GradBuffer().data(), O, K).noalias() +=
                g * CMapM<T>(col.data(), K, P).transpose();
          }
          if (has_bias && Wants(self, 2)) {
            auto gb = self.inputs[2]->GradBuffer();
            for (int o = 0; o < O; ++o) gb[o] += SequentialSum(g.row(o));
          }
          if (Wants(self, 0)) {
            MapM<T>(dcol.data(), K, P).noalias() =
                CMapM<T>(wv.data(), O, K).transpose() * g;
            Col2Im(dcol.data(), C, H, W, k, stride, padding, OH, OW,
                   self.inputs[0]->GradBuffer().data() + int64_t{n} * C * H * W);
          }
        }
      });
}

template <typename T>
Tensor<T> ConvTranspose2d(const Tensor<T>& x, const Tensor<T>& w,
                          const Tensor<T>& b, int stride, int padding,
                          int output_padding) {
  Check(x.rank() == 4 && w.rank() == 4 && w.dim(0) == x.dim(1) &&
            w.dim(2) == w.dim(3),
        ErrorKind::kShape,
        "conv_transpose2d: input " + ShapeString(x.shape()) + " weight " +
            ShapeString(w.shape()));
  Check(stride >= 1 && padding >= 0 && output_padding >= 0 &&
            output_padding < stride,
        ErrorKind::kShape, "conv_transpose2d: bad stride/padding");
  const int N = static_cast<int>(x.dim(0)), Cin = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
  const int Cout = static_cast<int>(w.dim(1)), k = static_cast<int>(w.dim(2));
  const int OH = (H - 1) * stride - 2 * padding + k + output_padding;
  const int OW = (W - 1) * stride - 2 * padding + k + output_padding;
  Check(OH > 0 && OW > 0, ErrorKind::kShape, "conv_transpose2d: empty output");
  const bool has_bias = b.defined();
  if (has_bias) {
    Check(b.rank() == 1 && b.dim(0) == Cout, ErrorKind::kShape,
          "conv_transpose2d: bias length mismatch");
  }
  const int64_t K = int64_t{Cout} * k * k, P = int64_t{H} * W;
  const int64_t OP = int64_t{OH} * OW;
  std::vector<T> y(int64_t{N} * Cout * OP, T(0));
  std::vector<T> col(K * P);
  CMapM<T> wm(w.values().data(), Cin, K);
  for (int n = 0; n < N; ++n) {
    MapM<T>(col.data(), K, P).noalias() =
        wm.transpose() * CMapM<T>(x.values().data() + int64_t{n} * Cin * P, Cin, P);
    T* out = y.data() + int64_t{n} * Cout * OP;
    Col2Im(col.data(), Cout, OH, OW, k, stride, padding, H, W, out);
    if (has_bias) {
      for (int c = 0; c < Cout; ++c)
        for (int64_t p = 0; p < OP; ++p) out[c * OP + p] += b.values()[c];
    }
  }
  std::vector<Tensor<T>> ins = {x, w};
  if (has_bias) ins.push_back(b);
  return MakeOpResult<T>(
      "conv_transpose2d", Shape{N, Cout, OH, OW}, std::move(y), ins,
      [=](NodeT<T>& self) {
        const auto& xv = self.inputs[0]->value;
        const auto& wv = self.inputs[1]->value;
        std::vector<T> dcol(K * P);
        for (int n = 0; n < N; ++n) {
          const T* g = self.grad.data() + int64_t{n} * Cout * OP;
          Im2Col(g, Cout, OH, OW, k, stride, padding, H, W, dcol.data());
          CMapM<T> dc(dcol.data(), K, P);
          if (Wants(self, 0)) {
            MapM<T>(self.inputs[0]->GradBuffer().data() + int64_t{n} * Cin * P,
                    Cin, P)
                .noalias() += CMapM<T>(wv.data(), Cin, K) * dc;
          }
          if (Wants(self, 1)) {
            MapM<T>(self.inputs[1]->GradBuffer().data(), Cin, K).noalias() +=
                CMapM<T>(xv.data() + int64_t{n} * Cin * P, Cin, P) *
                dc.transpose();
          }
          if (has_bias && Wants(self, 2)) {
            auto gb = self.inputs[2]->GradBuffer();
            for (int c = 0; c < Cout; ++c) {
              T s = 0;
              for (int64_t p = 0; p < OP; ++p) s += g[c * OP + p];
              gb[c] += s;
            }
          }
        }
      });
}

int TapMask::CountActive() const {
  int n = 0;
  for (uint8_t a : active) n += a != 0;
  return n;
}

TapMask CausalTapMask(int causal_channels, int free_channels, int kernel,
                      bool include_center) {
  Check(kernel >= 1 && kernel % 2 == 1, ErrorKind::kShape,
        "causal mask needs an odd kernel");
  TapMask m;
  m.kernel = kernel;
  m.in_channels = causal_channels + free_channels;
  const int k3 = kernel * kernel * kernel;
  m.active.assign(static_cast<size_t>(m.in_channels) * k3, 0);
  const int c0 = kernel / 2;
  for (int c = 0; c < m.in_channels; ++c) {
    for (int kd = 0; kd < kernel; ++kd) {
      for (int kh = 0; kh < kernel; ++kh) {
        for (int kw = 0; kw < kernel; ++kw) {
          bool on = true;
          if (c < causal_channels) {
            // Lexicographic (d, h, w) comparison against the centre tap.
            const std::array<int, 3> off = {kd - c0, kh - c0, kw - c0};
            const bool before = off < std::array<int, 3>{0, 0, 0};
            const bool center = off == std::array<int, 3>{0, 0, 0};
            on = before || (center && include_center);
          }
          m.active[((static_cast<size_t>(c) * kernel + kd) * kernel + kh) *
                       kernel + kw] = on;
        }
      }
    }
  }
  return m;
}

template <typename T>
Tensor<T> MaskedConv3d(const Tensor<T>& x, const Tensor<T>& w,
                       const Tensor<T>& b, const TapMask& mask) {
  Check(x.rank() == 5 && w.rank() == 5 && w.dim(1) == x.dim(1),
        ErrorKind::kShape,
        "masked_conv3d: input " + ShapeString(x.shape()) + " weight " +
            ShapeString(w.shape()));
  const int k = mask.kernel;
  Check(w.dim(2) == k && w.dim(3) == k && w.dim(4) == k &&
            mask.in_channels == x.dim(1),
        ErrorKind::kShape, "masked_conv3d: mask/kernel mismatch");
  const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int D = static_cast<int>(x.dim(2)), H = static_cast<int>(x.dim(3));
  const int W = static_cast<int>(x.dim(4)), O = static_cast<int>(w.dim(0));
  const bool has_bias = b.defined();
  if (has_bias) {
    Check(b.rank() == 1 && b.dim(0) == O, ErrorKind::kShape,
          "masked_conv3d: bias length mismatch");
  }
  auto taps = std::make_shared<std::vector<Tap3>>(ActiveTaps(mask));
  const int64_t R = static_cast<int64_t>(taps->size());
  const int64_t P = int64_t{D} * H * W;
  const int64_t k3 = int64_t{k} * k * k;
  const int64_t full_k = int64_t{C} * k3;
  auto tap_col = [k, k3](const Tap3& t) {
    return t.c * k3 + (int64_t{t.kd} * k + t.kh) * k + t.kw;
  };
  // Compact weight matrix over the active taps only.
  Mat<T> wc(O, R);
  for (int o = 0; o < O; ++o)
    for (int64_t r = 0; r < R; ++r)
      wc(o, r) = w.values()[o * full_k + tap_col((*taps)[r])];
  std::vector<T> y(int64_t{N} * O * P);
  std::vector<T> col(R * P);
  for (int n = 0; n < N; ++n) {
    Im2Col3(x.values().data() + int64_t{n} * C * P, D, H, W, k, *taps,
            col.data());
    MapM<T> out(y.data() + int64_t{n} * O * P, O, P);
    out.noalias() = wc * CMapM<T>(col.data(), R, P);
    if (has_bias) {
      for (int o = 0; o < O; ++o) out.row(o).array() += b.values()[o];
    }
  }
  std::vector<Tensor<T>> ins = {x, w};
  if (has_bias) ins.push_back(b);
  auto wc_shared = std::make_shared<Mat<T>>(std::move(wc));
  return MakeOpResult<T>(
      "masked_conv3d", Shape{N, O, D, H, W}, std::move(y), ins,
      [=](NodeT<T>& self) {
        const auto& xv = self.inputs[0]->value;
        std::vector<T> col(R * P);
        Mat<T> dwc = Mat<T>::Zero(O, R);
        for (int n = 0; n < N; ++n) {
          CMapM<T> g(self.grad.data() + int64_t{n} * O * P, O, P);
          if (Wants(self, 1)) {
            Im2Col3(xv.data() + int64_t{n} * C * P, D, H, W, k, *taps,
                    col.data());
            dwc.noalias() += g * CMapM<T>(col.data(), R, P).transpose();
          }
          if (has_bias && Wants(self, 2)) {
            auto gb = self.inputs[2]->GradBuffer();
            for (int o = 0; o < O; ++o) gb[o] += SequentialSum(g.row(o));
          }
          if (Wants(self, 0)) {
            MapM<T>(col.data(), R, P).noalias() = wc_shared->transpose() * g;
            Col2Im3(col.data(), D, H, W, k, *taps,
                    self.inputs[0]->GradBuffer().data() + int64_t{n} * C * P);
          }
        }
        if (Wants(self, 1)) {
          auto gw = self.inputs[1]->GradBuffer();
          for (int o = 0; o < O; ++o)
            for (int64_t r = 0; r < R; ++r)
              gw[o * full_k + tap_col((*taps)[r])] += dwc(o, r);
        }
      });
}

// --- dispatch ------------------------------------------------------------------

namespace {
constexpr std::string_view kOpKinds[] = {
    "conv2d",     "masked_conv3d", "transposed_conv2d", "relu",
    "leaky_relu", "channel_norm",  "add",               "sub",
    "mul",        "scale",         "matmul",            "transpose",
    "softmax",    "log_softmax",   "cross_entropy",     "neg_log2_gather",
    "mse",        "mean",          "sum",               "concat",
    "slice",      "upsample_nearest", "reshape",        "clamp",
    "sigmoid",    "exp",           "log",               "square",
};
}  // namespace

std::span<const std::string_view> OpKinds() { return kOpKinds; }

template <typename T>
Tensor<T> ApplyOp(std::string_view kind, std::span<const Tensor<T>> in,
                  const OpAttrs& a) {
  auto need = [&](size_t n) {
    Check(in.size() >= n, ErrorKind::kShape,
          std::string(kind) + ": expected " + std::to_string(n) + " inputs");
  };
  auto opt = [&](size_t i) { return i < in.size() ? in[i] : Tensor<T>(); };
  if (kind == "conv2d") {
    need(2);
    return Conv2d(in[0], in[1], opt(2), a.stride, a.padding);
  }
  if (kind == "transposed_conv2d") {
    need(2);
    return ConvTranspose2d(in[0], in[1], opt(2), a.stride, a.padding,
                           a.output_padding);
  }
  if (kind == "masked_conv3d") {
    need(2);
    return MaskedConv3d(in[0], in[1], opt(2), a.mask);
  }
  if (kind == "relu") { need(1); return Relu(in[0]); }
  if (kind == "leaky_relu") { need(1); return LeakyRelu(in[0], a.slope); }
  if (kind == "channel_norm") { need(1); return ChannelNorm(in[0], a.eps); }
  if (kind == "add") { need(2); return Add(in[0], in[1]); }
  if (kind == "sub") { need(2); return Sub(in[0], in[1]); }
  if (kind == "mul") { need(2); return Mul(in[0], in[1]); }
  if (kind == "scale") { need(1); return Scale(in[0], a.scalar); }
  if (kind == "matmul") { need(2); return MatMul(in[0], in[1]); }
  if (kind == "transpose") { need(1); return Transpose(in[0]); }
  if (kind == "softmax") { need(1); return Softmax(in[0], a.axis); }
  if (kind == "log_softmax") { need(1); return LogSoftmax(in[0], a.axis); }
  if (kind == "cross_entropy") {
    need(2);
    return CrossEntropy(in[0], in[1], a.axis);
  }
  if (kind == "neg_log2_gather") {
    need(1);
    return NegLog2Gather(in[0], std::span<const int32_t>(a.symbols), a.axis);
  }
  if (kind == "mse") { need(2); return Mse(in[0], in[1]); }
  if (kind == "mean") { need(1); return Mean(in[0]); }
  if (kind == "sum") { need(1); return Sum(in[0]); }
  if (kind == "concat") {
    need(1);
    return Concat(std::vector<Tensor<T>>(in.begin(), in.end()), a.axis);
  }
  if (kind == "slice") { need(1); return Slice(in[0], a.axis, a.begin, a.end); }
  if (kind == "upsample_nearest") {
    need(1);
    return UpsampleNearest(in[0], a.factor);
  }
  if (kind == "reshape") { need(1); return Reshape(in[0], a.shape); }
  if (kind == "clamp") { need(1); return Clamp(in[0], a.lo, a.hi); }
  if (kind == "sigmoid") { need(1); return Sigmoid(in[0]); }
  if (kind == "exp") { need(1); return Exp(in[0]); }
  if (kind == "log") { need(1); return Log(in[0]); }
  if (kind == "square") { need(1); return Square(in[0]); }
  Fail(ErrorKind::kUsage, "unknown op kind '" + std::string(kind) + "'");
}

#define HSC_INSTANTIATE_OPS(T)                                                 \
  template Tensor<T> Relu(const Tensor<T>&);                                   \
  template Tensor<T> LeakyRelu(const Tensor<T>&, double);                      \
  template Tensor<T> Sigmoid(const Tensor<T>&);                                \
  template Tensor<T> Exp(const Tensor<T>&);                                    \
  template Tensor<T> Log(const Tensor<T>&);                                    \
  template Tensor<T> Square(const Tensor<T>&);                                 \
  template Tensor<T> Add(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> Sub(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> Mul(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> Scale(const Tensor<T>&, double);                          \
  template Tensor<T> AddScalar(const Tensor<T>&, double);                      \
  template Tensor<T> Clamp(const Tensor<T>&, double, double);                  \
  template Tensor<T> CeilSte(const Tensor<T>&);                                \
  template Tensor<T> Sum(const Tensor<T>&);                                    \
  template Tensor<T> Mean(const Tensor<T>&);                                   \
  template Tensor<T> Mse(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> MatMul(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> Transpose(const Tensor<T>&);                              \
  template Tensor<T> Reshape(const Tensor<T>&, Shape);                         \
  template Tensor<T> Softmax(const Tensor<T>&, int);                           \
  template Tensor<T> LogSoftmax(const Tensor<T>&, int);                        \
  template Tensor<T> CrossEntropy(const Tensor<T>&, const Tensor<T>&, int);    \
  template Tensor<T> NegLog2Gather(const Tensor<T>&, std::span<const int32_t>, \
                                   int);                                       \
  template Tensor<T> Concat(const std::vector<Tensor<T>>&, int);               \
  template Tensor<T> Slice(const Tensor<T>&, int, int64_t, int64_t);           \
  template Tensor<T> UpsampleNearest(const Tensor<T>&, int);                   \
  template Tensor<T> ChannelNorm(const Tensor<T>&, double);                    \
  template Tensor<T> Conv2d(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&, int, int);                       \
  template Tensor<T> ConvTranspose2d(const Tensor<T>&, const Tensor<T>&,       \
                                     const Tensor<T>&, int, int, int);         \
  template Tensor<T> MaskedConv3d(const Tensor<T>&, const Tensor<T>&,          \
                                  const Tensor<T>&, const TapMask&);           \
  template Tensor<T> ApplyOp(std::string_view, std::span<const Tensor<T>>,     \
                             const OpAttrs&);

HSC_INSTANTIATE_OPS(float)
HSC_INSTANTIATE_OPS(double)

}  // namespace hsc
