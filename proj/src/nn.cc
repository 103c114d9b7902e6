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

#include "hsc/nn.h"

#include <cmath>

namespace hsc {

template <typename T>
Parameter<T>::Parameter(std::string name_in, Tensor<T> value_in)
    : name(std::move(name_in)), value(std::move(value_in)) {
  value.set_requires_grad(true);
  adam_m.assign(value.size(), T(0));
  adam_v.assign(value.size(), T(0));
}

template <typename T>
Tensor<T> HeUniform(Shape shape, int64_t fan_in, Rng& rng, double gain) {
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in));
  std::vector<T> v(NumElements(shape));
  for (T& x : v) x = static_cast<T>(rng.Uniform(-bound, bound));
  return Tensor<T>(std::move(shape), std::move(v));
}

template <typename T>
Conv2dLayer<T>::Conv2dLayer(const std::string& name, int in, int out,
                            int kernel, int stride_in, Rng& rng, double gain)
    : weight(name + ".weight",
             HeUniform<T>({out, in, kernel, kernel},
                          int64_t{in} * kernel * kernel, rng, gain)),
      bias(name + ".bias", Tensor<T>(Shape{out})),
      stride(stride_in),
      padding(kernel / 2) {}

template <typename T>
Tensor<T> Conv2dLayer<T>::operator()(const Tensor<T>& x) const {
  return Conv2d(x, weight.value, bias.value, stride, padding);
}

template <typename T>
void Conv2dLayer<T>::Collect(ParamList<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename T>
ConvTranspose2dLayer<T>::ConvTranspose2dLayer(const std::string& name, int in,
                                              int out, int kernel,
                                              int stride_in, Rng& rng)
    : weight(name + ".weight",
             HeUniform<T>({in, out, kernel, kernel},
                          std::max<int64_t>(1, int64_t{in} * kernel * kernel /
                                                   (stride_in * stride_in)),
                          rng)),
      bias(name + ".bias", Tensor<T>(Shape{out})),
      stride(stride_in) {
  // (in-1)*s - 2p + k + op == in*s  =>  2p - op == k - s
  const int slack = kernel - stride_in;
  padding = (slack + 1) / 2;
  output_padding = 2 * padding - slack;
}

template <typename T>
Tensor<T> ConvTranspose2dLayer<T>::operator()(const Tensor<T>& x) const {
  return ConvTranspose2d(x, weight.value, bias.value, stride, padding,
                         output_padding);
}

template <typename T>
void ConvTranspose2dLayer<T>::Collect(ParamList<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename T>
ResidualBlock<T>::ResidualBlock(const std::string& name, int channels,
                                Rng& rng, double slope)
    : first(name + ".conv1", channels, channels, 3, 1, rng),
      second(name + ".conv2", channels, channels, 3, 1, rng, 0.5),
      slope(slope) {}

template <typename T>
Tensor<T> ResidualBlock<T>::operator()(const Tensor<T>& x) const {
  const Tensor<T> h = first(x);
  return Add(x, second(slope > 0 ? LeakyRelu(h, slope) : Relu(h)));
}

template <typename T>
void ResidualBlock<T>::Collect(ParamList<T>& out) {
  first.Collect(out);
  second.Collect(out);
}

template <typename T>
SelfAttention<T>::SelfAttention(const std::string& name, int channels_in,
                                Rng& rng)
    : channels(channels_in), inner(std::max(1, channels_in / 2)) {
  query = Parameter<T>(name + ".query",
                       HeUniform<T>({inner, channels}, channels, rng, 0.5));
  key = Parameter<T>(name + ".key",
                     HeUniform<T>({inner, channels}, channels, rng, 0.5));
  value = Parameter<T>(name + ".value",
                       HeUniform<T>({channels, channels}, channels, rng, 0.5));
  // Starts as an identity block; the projection learns in.
  output = Parameter<T>(name + ".output", Tensor<T>(Shape{channels, channels}));
}

template <typename T>
Tensor<T> SelfAttention<T>::operator()(const Tensor<T>& x) const {
  Check(x.rank() == 4 && x.dim(1) == channels, ErrorKind::kShape,
        "self_attention: channel mismatch");
  const int64_t N = x.dim(0), H = x.dim(2), W = x.dim(3), P = H * W;
  const double scale = 1.0 / std::sqrt(static_cast<double>(inner));
  std::vector<Tensor<T>> outs;
  for (int64_t n = 0; n < N; ++n) {
    Tensor<T> xn = Reshape(N == 1 ? x : Slice(x, 0, n, n + 1),
                           Shape{channels, P});
    Tensor<T> q = MatMul(query.value, xn);  // inner x P
    Tensor<T> k = MatMul(key.value, xn);
    Tensor<T> v = MatMul(value.value, xn);  // C x P
    Tensor<T> logits = Scale(MatMul(Transpose(q), k), scale);  // P x P
    Tensor<T> attn = Softmax(logits, 1);
    Tensor<T> mixed = MatMul(v, Transpose(attn));  // C x P
    Tensor<T> proj = MatMul(output.value, mixed);
    outs.push_back(Reshape(Add(xn, proj), Shape{1, channels, H, W}));
  }
  return N == 1 ? outs[0] : Concat(outs, 0);
}

template <typename T>
void SelfAttention<T>::Collect(ParamList<T>& out) {
  out.push_back(&query);
  out.push_back(&key);
  out.push_back(&value);
  out.push_back(&output);
}

template struct Parameter<float>;
template struct Parameter<double>;
template Tensor<float> HeUniform<float>(Shape, int64_t, Rng&, double);
template Tensor<double> HeUniform<double>(Shape, int64_t, Rng&, double);
template class Conv2dLayer<float>;
template class Conv2dLayer<double>;
template class ConvTranspose2dLayer<float>;
template class ConvTranspose2dLayer<double>;
template class ResidualBlock<float>;
template class ResidualBlock<double>;
template class SelfAttention<float>;
template class SelfAttention<double>;

}  // namespace hsc
