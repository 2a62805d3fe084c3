#include "lexshare/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <tuple>
#include <ostream>

#include "lexshare/error.hpp"

namespace lexshare {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// y += W x
void matvec_add(const Tensor& w, const double* x, double* y) {
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  const double* a = w.values.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// dx += W^T dy
void matvec_t_add(const Tensor& w, const double* dy, double* dx) {
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  const double* a = w.values.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    const double* row = a + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dx[c] += row[c] * g;
  }
}

// W.grad += dy x^T
void outer_add(Tensor& w, const double* dy, const double* x) {
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  double* g = w.grad.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double d = dy[r];
    if (d == 0.0) continue;
    double* row = g + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += d * x[c];
  }
}

void bias_add(Tensor& b, const double* dy) {
  for (std::size_t i = 0; i < b.size(); ++i) b.grad[i] += dy[i];
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

template <class Store, class T = std::conditional_t<std::is_const_v<Store>, const Tensor, Tensor>>
BasicLinearParams<T> bind_linear_impl(Store& store, const std::string& prefix) {
  return {&store.get(prefix + "/W"), &store.get(prefix + "/b")};
}

template <class Store, class T = std::conditional_t<std::is_const_v<Store>, const Tensor, Tensor>>
BasicGruParams<T> bind_gru_impl(Store& store, const std::string& prefix) {
  BasicGruParams<T> p;
  p.w_z = &store.get(prefix + "/W_z");
  p.w_r = &store.get(prefix + "/W_r");
  p.w_h = &store.get(prefix + "/W_h");
  p.u_z = &store.get(prefix + "/U_z");
  p.u_r = &store.get(prefix + "/U_r");
  p.u_h = &store.get(prefix + "/U_h");
  p.b_z = &store.get(prefix + "/b_z");
  p.b_r = &store.get(prefix + "/b_r");
  p.b_h = &store.get(prefix + "/b_h");
  return p;
}

template <class Store, class T = std::conditional_t<std::is_const_v<Store>, const Tensor, Tensor>>
BasicCharResnetParams<T> bind_char_resnet_impl(Store& store, const std::string& prefix) {
  BasicCharResnetParams<T> p;
  p.embedding = &store.get(prefix + "/embedding");
  for (std::size_t b = 0;; ++b) {
    const std::string block = prefix + "/block" + std::to_string(b);
    if (!store.contains(block + "/K1")) break;
    BasicResBlockParams<T> rb;
    rb.kernel1 = &store.get(block + "/K1");
    rb.bias1 = &store.get(block + "/b1");
    rb.kernel2 = &store.get(block + "/K2");
    rb.bias2 = &store.get(block + "/b2");
    p.blocks.push_back(rb);
  }
  return p;
}

// out = conv(in) + bias over a channels x length matrix, width-3 kernels, zero padding.
void conv_forward(const Tensor& kernel, const Tensor& bias, const double* in, double* out, std::size_t channels,
                  std::size_t length) {
  const double* k = kernel.values.data();
  for (std::size_t o = 0; o < channels; ++o) {
    double* row = out + o * length;
    std::fill(row, row + length, bias.values[o]);
    for (std::size_t i = 0; i < channels; ++i) {
      const double* src = in + i * length;
      const double* w = k + (o * channels + i) * 3;
      for (std::size_t p = 0; p < length; ++p) {
        double acc = w[1] * src[p];
        if (p > 0) acc += w[0] * src[p - 1];
        if (p + 1 < length) acc += w[2] * src[p + 1];
        row[p] += acc;
      }
    }
  }
}

// Accumulates kernel/bias gradients and d_in given d_out.
void conv_backward(Tensor& kernel, Tensor& bias, const double* in, const double* d_out, double* d_in,
                   std::size_t channels, std::size_t length) {
  const double* k = kernel.values.data();
  double* gk = kernel.grad.data();
  for (std::size_t o = 0; o < channels; ++o) {
    const double* dy = d_out + o * length;
    double db = 0.0;
    for (std::size_t p = 0; p < length; ++p) db += dy[p];
    bias.grad[o] += db;
    for (std::size_t i = 0; i < channels; ++i) {
      const double* src = in + i * length;
      double* dsrc = d_in + i * length;
      const double* w = k + (o * channels + i) * 3;
      double* gw = gk + (o * channels + i) * 3;
      for (std::size_t p = 0; p < length; ++p) {
        const double g = dy[p];
        if (g == 0.0) continue;
        gw[1] += g * src[p];
        dsrc[p] += g * w[1];
        if (p > 0) {
          gw[0] += g * src[p - 1];
          dsrc[p - 1] += g * w[0];
        }
        if (p + 1 < length) {
          gw[2] += g * src[p + 1];
          dsrc[p + 1] += g * w[2];
        }
      }
    }
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw ParseError(0, "truncated parameter container");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

constexpr char kMagic[8] = {'L', 'X', 'S', 'P', 'A', 'R', 'A', 'M'};
constexpr std::uint32_t kContainerVersion = 1;

}  // namespace

// ---- Tensor / ParameterStore -------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
    n *= d;
  }
  values.assign(n, 0.0);
  grad.assign(n, 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

bool Tensor::grad_is_zero() const {
  return std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; });
}

Tensor& ParameterStore::add(const std::string& path, std::vector<std::size_t> shape) {
  const auto [it, inserted] = tensors_.emplace(path, Tensor(std::move(shape)));
  if (!inserted) throw ConfigError("duplicate parameter path '" + path + "'");
  return it->second;
}

Tensor& ParameterStore::get(const std::string& path) {
  const auto it = tensors_.find(path);
  if (it == tensors_.end()) throw LookupError("no parameter '" + path + "'");
  return it->second;
}

const Tensor& ParameterStore::get(const std::string& path) const {
  const auto it = tensors_.find(path);
  if (it == tensors_.end()) throw LookupError("no parameter '" + path + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [path, t] : tensors_) t.zero_grad();
}

std::vector<std::string> ParameterStore::paths() const {
  std::vector<std::string> out;
  for (const auto& [path, t] : tensors_) out.push_back(path);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [path, t] : tensors_) n += t.size();
  return n;
}

bool ParameterStore::operator==(const ParameterStore& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  auto a = tensors_.begin();
  auto b = other.tensors_.begin();
  for (; a != tensors_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.shape != b->second.shape) return false;
    if (std::memcmp(a->second.values.data(), b->second.values.data(), a->second.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

void init_glorot(Tensor& t, Rng& rng) {
  double fan_in = 0, fan_out = 0;
  if (t.shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(t.shape[0]);
  } else {
    const double receptive = t.shape.size() == 3 ? static_cast<double>(t.shape[2]) : 1.0;
    fan_out = static_cast<double>(t.shape[0]) * receptive;
    fan_in = static_cast<double>(t.shape[1]) * receptive;
  }
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.values) v = rng.uniform(-limit, limit);
}

// ---- declaration / binding ---------------------------------------------------------------

void declare_linear(ParameterStore& store, const std::string& prefix, std::size_t input_dim, std::size_t output_dim,
                    Rng& rng) {
  init_glorot(store.add(prefix + "/W", {output_dim, input_dim}), rng);
  store.add(prefix + "/b", {output_dim});
}

void declare_gru(ParameterStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
                 Rng& rng) {
  for (const char* gate : {"z", "r", "h"}) init_glorot(store.add(prefix + "/W_" + gate, {hidden_dim, input_dim}), rng);
  for (const char* gate : {"z", "r", "h"}) init_glorot(store.add(prefix + "/U_" + gate, {hidden_dim, hidden_dim}), rng);
  for (const char* gate : {"z", "r", "h"}) store.add(prefix + "/b_" + std::string(gate), {hidden_dim});
}

void declare_char_resnet(ParameterStore& store, const std::string& prefix, std::size_t vocab_size,
                         std::size_t channels, std::size_t blocks, Rng& rng) {
  init_glorot(store.add(prefix + "/embedding", {vocab_size, channels}), rng);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::string block = prefix + "/block" + std::to_string(b);
    init_glorot(store.add(block + "/K1", {channels, channels, 3}), rng);
    store.add(block + "/b1", {channels});
    init_glorot(store.add(block + "/K2", {channels, channels, 3}), rng);
    store.add(block + "/b2", {channels});
  }
}

LinearParams bind_linear(ParameterStore& s, const std::string& prefix) { return bind_linear_impl(s, prefix); }
ConstLinearParams bind_linear(const ParameterStore& s, const std::string& prefix) {
  return bind_linear_impl(s, prefix);
}
GruParams bind_gru(ParameterStore& s, const std::string& prefix) { return bind_gru_impl(s, prefix); }
ConstGruParams bind_gru(const ParameterStore& s, const std::string& prefix) { return bind_gru_impl(s, prefix); }
CharResnetParams bind_char_resnet(ParameterStore& s, const std::string& prefix) {
  return bind_char_resnet_impl(s, prefix);
}
ConstCharResnetParams bind_char_resnet(const ParameterStore& s, const std::string& prefix) {
  return bind_char_resnet_impl(s, prefix);
}

// ---- linear ------------------------------------------------------------------------------

Vector linear(std::span<const double> x, ConstLinearParams p) {
  require(x.size() == p.input_dim(), "linear: input has " + std::to_string(x.size()) + " components, weight expects " +
                                         std::to_string(p.input_dim()));
  require(p.bias->size() == p.output_dim(), "linear: bias length differs from weight rows");
  Vector y(p.bias->values);
  matvec_add(*p.weight, x.data(), y.data());
  return y;
}

void linear_backward(std::span<const double> x, std::span<const double> dy, LinearParams p, std::span<double> dx) {
  require(dy.size() == p.output_dim() && x.size() == p.input_dim(), "linear_backward: shape mismatch");
  outer_add(*p.weight, dy.data(), x.data());
  bias_add(*p.bias, dy.data());
  if (!dx.empty()) {
    require(dx.size() == p.input_dim(), "linear_backward: dx shape mismatch");
    matvec_t_add(*p.weight, dy.data(), dx.data());
  }
}

// ---- GRU ---------------------------------------------------------------------------------

GruStep gru_forward(std::span<const double> x, std::span<const double> h_prev, ConstGruParams p) {
  const std::size_t in = p.input_dim(), hid = p.hidden_dim();
  require(x.size() == in, "gru_cell: input has " + std::to_string(x.size()) + " components, expected " +
                              std::to_string(in));
  require(h_prev.size() == hid, "gru_cell: state has " + std::to_string(h_prev.size()) + " components, expected " +
                                    std::to_string(hid));
  GruStep s;
  s.x.assign(x.begin(), x.end());
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  s.z = p.b_z->values;
  s.r = p.b_r->values;
  s.candidate = p.b_h->values;
  matvec_add(*p.w_z, x.data(), s.z.data());
  matvec_add(*p.u_z, h_prev.data(), s.z.data());
  matvec_add(*p.w_r, x.data(), s.r.data());
  matvec_add(*p.u_r, h_prev.data(), s.r.data());
  Vector rh(hid);
  for (std::size_t j = 0; j < hid; ++j) {
    s.z[j] = sigmoid(s.z[j]);
    s.r[j] = sigmoid(s.r[j]);
    rh[j] = s.r[j] * h_prev[j];
  }
  matvec_add(*p.w_h, x.data(), s.candidate.data());
  matvec_add(*p.u_h, rh.data(), s.candidate.data());
  s.h.resize(hid);
  for (std::size_t j = 0; j < hid; ++j) {
    s.candidate[j] = std::tanh(s.candidate[j]);
    s.h[j] = (1.0 - s.z[j]) * h_prev[j] + s.z[j] * s.candidate[j];
  }
  return s;
}

Vector gru_cell(std::span<const double> x, std::span<const double> h_prev, ConstGruParams p) {
  return gru_forward(x, h_prev, p).h;
}

void gru_backward(const GruStep& s, std::span<const double> dh, GruParams p, std::span<double> dx,
                  std::span<double> dh_prev) {
  const std::size_t hid = p.hidden_dim();
  require(dh.size() == hid && dh_prev.size() == hid && dx.size() == p.input_dim(), "gru_backward: shape mismatch");
  Vector da_z(hid), da_r(hid), da_h(hid), rh(hid), drh(hid, 0.0);
  for (std::size_t j = 0; j < hid; ++j) {
    const double z = s.z[j], c = s.candidate[j];
    const double dz = dh[j] * (c - s.h_prev[j]);
    const double dc = dh[j] * z;
    dh_prev[j] += dh[j] * (1.0 - z);
    da_h[j] = dc * (1.0 - c * c);
    da_z[j] = dz * z * (1.0 - z);
    rh[j] = s.r[j] * s.h_prev[j];
  }
  outer_add(*p.w_h, da_h.data(), s.x.data());
  outer_add(*p.u_h, da_h.data(), rh.data());
  bias_add(*p.b_h, da_h.data());
  matvec_t_add(*p.w_h, da_h.data(), dx.data());
  matvec_t_add(*p.u_h, da_h.data(), drh.data());
  for (std::size_t j = 0; j < hid; ++j) {
    const double r = s.r[j];
    dh_prev[j] += drh[j] * r;
    da_r[j] = drh[j] * s.h_prev[j] * r * (1.0 - r);
  }
  for (auto [w, u, b, da] : {std::tuple{p.w_r, p.u_r, p.b_r, &da_r}, std::tuple{p.w_z, p.u_z, p.b_z, &da_z}}) {
    outer_add(*w, da->data(), s.x.data());
    outer_add(*u, da->data(), s.h_prev.data());
    bias_add(*b, da->data());
    matvec_t_add(*w, da->data(), dx.data());
    matvec_t_add(*u, da->data(), dh_prev.data());
  }
}

BiGruTrace bidirectional_forward(std::span<const Vector> xs, ConstGruParams fwd, ConstGruParams bwd) {
  if (xs.empty()) throw ArityError("bidirectional_encode: empty sequence");
  require(fwd.hidden_dim() == bwd.hidden_dim(), "bidirectional_encode: direction sizes differ");
  const std::size_t n = xs.size(), hid = fwd.hidden_dim();
  BiGruTrace trace;
  trace.forward.reserve(n);
  trace.backward.resize(n);
  Vector h(hid, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    trace.forward.push_back(gru_forward(xs[i], h, fwd));
    h = trace.forward.back().h;
  }
  std::fill(h.begin(), h.end(), 0.0);
  for (std::size_t i = n; i-- > 0;) {
    trace.backward[i] = gru_forward(xs[i], h, bwd);
    h = trace.backward[i].h;
  }
  trace.outputs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& o = trace.outputs[i];
    o.reserve(2 * hid);
    o.insert(o.end(), trace.forward[i].h.begin(), trace.forward[i].h.end());
    o.insert(o.end(), trace.backward[i].h.begin(), trace.backward[i].h.end());
  }
  return trace;
}

std::vector<Vector> bidirectional_encode(std::span<const Vector> xs, ConstGruParams fwd, ConstGruParams bwd) {
  return bidirectional_forward(xs, fwd, bwd).outputs;
}

std::vector<Vector> bidirectional_backward(const BiGruTrace& trace, std::span<const Vector> d_outputs, GruParams fwd,
                                           GruParams bwd) {
  const std::size_t n = trace.outputs.size(), hid = fwd.hidden_dim();
  require(d_outputs.size() == n, "bidirectional_backward: gradient count differs from sequence length");
  std::vector<Vector> dxs(n, Vector(fwd.input_dim(), 0.0));
  Vector carry(hid, 0.0), next(hid), dh(hid);
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = 0; j < hid; ++j) dh[j] = d_outputs[i][j] + carry[j];
    std::fill(next.begin(), next.end(), 0.0);
    gru_backward(trace.forward[i], dh, fwd, dxs[i], next);
    std::swap(carry, next);
  }
  std::fill(carry.begin(), carry.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < hid; ++j) dh[j] = d_outputs[i][hid + j] + carry[j];
    std::fill(next.begin(), next.end(), 0.0);
    gru_backward(trace.backward[i], dh, bwd, dxs[i], next);
    std::swap(carry, next);
  }
  return dxs;
}

// ---- character ResNet ----------------------------------------------------------------------

CharResnetTrace char_resnet_forward(std::span<const std::size_t> ids, ConstCharResnetParams p) {
  if (ids.empty()) throw ArityError("char_resnet: empty character sequence");
  const std::size_t channels = p.channels(), length = ids.size(), vocab = p.embedding->dim(0);
  CharResnetTrace trace;
  trace.ids.assign(ids.begin(), ids.end());
  trace.length = length;

  Vector x(channels * length);
  for (std::size_t pos = 0; pos < length; ++pos) {
    const std::size_t id = ids[pos] < vocab ? ids[pos] : CharVocab::kUnknown;
    trace.ids[pos] = id;
    const double* row = p.embedding->values.data() + id * channels;
    for (std::size_t c = 0; c < channels; ++c) x[c * length + pos] = row[c];
  }
  for (const auto& block : p.blocks) {
    require(block.channels() == channels, "char_resnet: block channel count differs from embedding width");
    ResBlockTrace bt;
    bt.input = std::move(x);
    bt.pre1.resize(channels * length);
    conv_forward(*block.kernel1, *block.bias1, bt.input.data(), bt.pre1.data(), channels, length);
    Vector act1(bt.pre1.size());
    for (std::size_t i = 0; i < act1.size(); ++i) act1[i] = std::max(0.0, bt.pre1[i]);
    bt.sum.resize(channels * length);
    conv_forward(*block.kernel2, *block.bias2, act1.data(), bt.sum.data(), channels, length);
    for (std::size_t i = 0; i < bt.sum.size(); ++i) bt.sum[i] += bt.input[i];
    x.resize(bt.sum.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(0.0, bt.sum[i]);
    trace.blocks.push_back(std::move(bt));
  }
  trace.top = std::move(x);
  trace.output.resize(channels);
  trace.argmax.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* row = trace.top.data() + c * length;
    const auto best = static_cast<std::size_t>(std::max_element(row, row + length) - row);
    trace.argmax[c] = best;
    trace.output[c] = row[best];
  }
  return trace;
}

Vector char_resnet(std::string_view word, const CharVocab& vocab, ConstCharResnetParams p) {
  const auto ids = vocab.encode(word);
  return char_resnet_forward(ids, p).output;
}

void char_resnet_backward(const CharResnetTrace& trace, std::span<const double> d_output, CharResnetParams p) {
  const std::size_t channels = p.channels(), length = trace.length;
  require(d_output.size() == channels, "char_resnet_backward: gradient length differs from channel count");
  Vector dx(channels * length, 0.0);
  for (std::size_t c = 0; c < channels; ++c) dx[c * length + trace.argmax[c]] = d_output[c];

  for (std::size_t b = trace.blocks.size(); b-- > 0;) {
    const auto& bt = trace.blocks[b];
    auto& block = p.blocks[b];
    Vector ds(dx.size());
    for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = bt.sum[i] > 0.0 ? dx[i] : 0.0;
    Vector act1(bt.pre1.size());
    for (std::size_t i = 0; i < act1.size(); ++i) act1[i] = std::max(0.0, bt.pre1[i]);
    Vector dact1(act1.size(), 0.0);
    conv_backward(*block.kernel2, *block.bias2, act1.data(), ds.data(), dact1.data(), channels, length);
    for (std::size_t i = 0; i < dact1.size(); ++i)
      if (bt.pre1[i] <= 0.0) dact1[i] = 0.0;
    Vector d_input = ds;  // residual path
    conv_backward(*block.kernel1, *block.bias1, bt.input.data(), dact1.data(), d_input.data(), channels, length);
    dx = std::move(d_input);
  }
  double* g = p.embedding->grad.data();
  for (std::size_t pos = 0; pos < length; ++pos) {
    double* row = g + trace.ids[pos] * channels;
    for (std::size_t c = 0; c < channels; ++c) row[c] += dx[c * length + pos];
  }
}

// ---- loss / optimizer --------------------------------------------------------------------

SoftmaxXent softmax_xent(std::span<const double> logits, std::size_t gold) {
  if (gold >= logits.size())
    throw IndexError("softmax_xent: gold index " + std::to_string(gold) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  const double top = *std::max_element(logits.begin(), logits.end());
  SoftmaxXent out;
  out.probabilities.resize(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probabilities[i] = std::exp(logits[i] - top);
    z += out.probabilities[i];
  }
  for (auto& p : out.probabilities) p /= z;
  out.loss = -(logits[gold] - top - std::log(z));
  out.grad = out.probabilities;
  out.grad[gold] -= 1.0;
  return out;
}

void adam_step(ParameterStore& params, AdamState& state, const AdamConfig& config) {
  for (const auto& [path, t] : params)
    for (double g : t.grad)
      if (!std::isfinite(g)) throw DivergenceError(path, 0, "non-finite gradient in parameter '" + path + "'");

  for (auto& [path, t] : params) {
    if (t.grad_is_zero()) continue;
    auto& mo = state.moments[path];
    if (mo.m.empty()) {
      mo.m.assign(t.size(), 0.0);
      mo.v.assign(t.size(), 0.0);
    }
    ++mo.steps;
    const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(mo.steps));
    const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(mo.steps));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double g = t.grad[i];
      mo.m[i] = config.beta1 * mo.m[i] + (1.0 - config.beta1) * g;
      mo.v[i] = config.beta2 * mo.v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = mo.m[i] / correction1;
      const double v_hat = mo.v[i] / correction2;
      t.values[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

// ---- gradient check ----------------------------------------------------------------------

GradCheckReport grad_check(const LossClosure& closure, ParameterStore& params, double tolerance,
                           const GradCheckOptions& options) {
  std::vector<std::string> paths = options.paths.empty() ? params.paths() : options.paths;

  params.zero_grad();
  const double loss = closure(params);
  std::map<std::string, Vector> analytic;
  for (const auto& path : paths) analytic[path] = params.get(path).grad;

  params.zero_grad();
  const double again = closure(params);
  if (std::memcmp(&loss, &again, sizeof loss) != 0)
    throw DeterminismError("grad_check: loss closure returned different values at the same point");
  for (const auto& path : paths)
    if (params.get(path).grad != analytic[path])
      throw DeterminismError("grad_check: closure produced different gradients for '" + path + "'");

  GradCheckReport report;
  report.tolerance = tolerance;
  const double h = options.step;
  for (const auto& path : paths) {
    Tensor& t = params.get(path);
    GradCheckEntry entry;
    entry.path = path;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double original = t.values[i];
      t.values[i] = original + h;
      const double plus = closure(params);
      t.values[i] = original - h;
      const double minus = closure(params);
      t.values[i] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[path][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      if (!(rel <= entry.max_relative_error)) {
        entry.max_relative_error = rel;
        entry.worst_index = i;
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    if (!(entry.max_relative_error <= report.max_relative_error) || report.worst_path.empty()) {
      report.max_relative_error = entry.max_relative_error;
      report.worst_path = path;
    }
    report.entries.push_back(std::move(entry));
  }
  params.zero_grad();
  for (const auto& path : paths) params.get(path).grad = analytic[path];
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

// ---- checkpoint container ----------------------------------------------------------------

void write_parameters(std::ostream& out, const ParameterStore& params) {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kContainerVersion);
  put_u64(out, params.rng_seed());
  std::uint64_t count = 0;
  for ([[maybe_unused]] const auto& entry : params) ++count;
  put_u64(out, count);
  for (const auto& [path, t] : params) {
    put_u32(out, static_cast<std::uint32_t>(path.size()));
    out.write(path.data(), static_cast<std::streamsize>(path.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_u64(out, d);
    for (double v : t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw Error("failed to write parameter container");
}

ParameterStore read_parameters(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ParseError(0, "not a parameter container");
  const auto version = get_uint(in, 4);
  if (version != kContainerVersion) throw ParseError(0, "unsupported container version " + std::to_string(version));
  ParameterStore params(get_uint(in, 8));
  const auto count = get_uint(in, 8);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto len = get_uint(in, 4);
    std::string path(len, '\0');
    if (!in.read(path.data(), static_cast<std::streamsize>(len))) throw ParseError(0, "truncated parameter path");
    const auto rank = get_uint(in, 4);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = get_uint(in, 8);
    Tensor& t = params.add(path, shape);
    for (auto& v : t.values) v = std::bit_cast<double>(get_uint(in, 8));
  }
  return params;
}

}  // namespace lexshare
