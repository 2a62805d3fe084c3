#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lexshare/embeddings.hpp"
#include "lexshare/rng.hpp"

namespace lexshare {

// Dense row-major array with a gradient buffer of the same shape.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);

  std::size_t size() const { return values.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }
  void zero_grad();
  bool grad_is_zero() const;
};

class ParameterStore {
 public:
  using Map = std::map<std::string, Tensor>;

  explicit ParameterStore(std::uint64_t rng_seed = 0) : rng_seed_(rng_seed) {}

  // Throws ConfigError if the path exists.
  Tensor& add(const std::string& path, std::vector<std::size_t> shape);
  Tensor& get(const std::string& path);
  const Tensor& get(const std::string& path) const;
  bool contains(const std::string& path) const { return tensors_.count(path) != 0; }

  void zero_grad();
  std::vector<std::string> paths() const;
  std::size_t parameter_count() const;
  std::uint64_t rng_seed() const { return rng_seed_; }

  Map::iterator begin() { return tensors_.begin(); }
  Map::iterator end() { return tensors_.end(); }
  Map::const_iterator begin() const { return tensors_.begin(); }
  Map::const_iterator end() const { return tensors_.end(); }

  bool operator==(const ParameterStore& other) const;

 private:
  Map tensors_;
  std::uint64_t rng_seed_;
};

// uniform(-sqrt(6 / (fan_in + fan_out)), +...). For rank-3 convolution kernels
// {out, in, width} the fans are in * width and out * width.
void init_glorot(Tensor& t, Rng& rng);

namespace detail {
template <class From, class To>
inline constexpr bool adds_const = std::is_same_v<const From, To> && !std::is_same_v<From, To>;
}

// Parameter views bind tensors of a store by path. T is Tensor for training and const Tensor for
// inference; the mutable view converts implicitly to the const one.
template <class T>
struct BasicLinearParams {
  T* weight = nullptr;  // {out, in}
  T* bias = nullptr;    // {out}

  BasicLinearParams() = default;
  BasicLinearParams(T* w, T* b) : weight(w), bias(b) {}
  template <class U>
    requires detail::adds_const<U, T>
  BasicLinearParams(const BasicLinearParams<U>& o) : weight(o.weight), bias(o.bias) {}

  std::size_t input_dim() const { return weight->dim(1); }
  std::size_t output_dim() const { return weight->dim(0); }
};

template <class T>
struct BasicGruParams {
  T* w_z = nullptr;  // {hidden, input}
  T* w_r = nullptr;
  T* w_h = nullptr;
  T* u_z = nullptr;  // {hidden, hidden}
  T* u_r = nullptr;
  T* u_h = nullptr;
  T* b_z = nullptr;  // {hidden}
  T* b_r = nullptr;
  T* b_h = nullptr;

  BasicGruParams() = default;
  template <class U>
    requires detail::adds_const<U, T>
  BasicGruParams(const BasicGruParams<U>& o)
      : w_z(o.w_z), w_r(o.w_r), w_h(o.w_h), u_z(o.u_z), u_r(o.u_r), u_h(o.u_h), b_z(o.b_z), b_r(o.b_r),
        b_h(o.b_h) {}

  std::size_t input_dim() const { return w_z->dim(1); }
  std::size_t hidden_dim() const { return w_z->dim(0); }
};

template <class T>
struct BasicResBlockParams {
  T* kernel1 = nullptr;  // {channels, channels, 3}
  T* bias1 = nullptr;    // {channels}
  T* kernel2 = nullptr;
  T* bias2 = nullptr;

  BasicResBlockParams() = default;
  template <class U>
    requires detail::adds_const<U, T>
  BasicResBlockParams(const BasicResBlockParams<U>& o)
      : kernel1(o.kernel1), bias1(o.bias1), kernel2(o.kernel2), bias2(o.bias2) {}

  std::size_t channels() const { return kernel1->dim(0); }
};

template <class T>
struct BasicCharResnetParams {
  T* embedding = nullptr;  // {vocab, channels}
  std::vector<BasicResBlockParams<T>> blocks;

  BasicCharResnetParams() = default;
  template <class U>
    requires detail::adds_const<U, T>
  BasicCharResnetParams(const BasicCharResnetParams<U>& o) : embedding(o.embedding) {
    blocks.assign(o.blocks.begin(), o.blocks.end());
  }

  std::size_t channels() const { return embedding->dim(1); }
};

using LinearParams = BasicLinearParams<Tensor>;
using ConstLinearParams = BasicLinearParams<const Tensor>;
using GruParams = BasicGruParams<Tensor>;
using ConstGruParams = BasicGruParams<const Tensor>;
using ResBlockParams = BasicResBlockParams<Tensor>;
using ConstResBlockParams = BasicResBlockParams<const Tensor>;
using CharResnetParams = BasicCharResnetParams<Tensor>;
using ConstCharResnetParams = BasicCharResnetParams<const Tensor>;

// Declaration creates and initializes the tensors under `prefix`; binding looks them up.
void declare_linear(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                    std::size_t output_dim, Rng& rng);
void declare_gru(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                 std::size_t hidden_dim, Rng& rng);
void declare_char_resnet(ParameterStore& store, const std::string& prefix, std::size_t vocab_size,
                         std::size_t channels, std::size_t blocks, Rng& rng);

LinearParams bind_linear(ParameterStore& store, const std::string& prefix);
ConstLinearParams bind_linear(const ParameterStore& store, const std::string& prefix);
GruParams bind_gru(ParameterStore& store, const std::string& prefix);
ConstGruParams bind_gru(const ParameterStore& store, const std::string& prefix);
CharResnetParams bind_char_resnet(ParameterStore& store, const std::string& prefix);
ConstCharResnetParams bind_char_resnet(const ParameterStore& store, const std::string& prefix);

// ---- affine map ----------------------------------------------------------------------------

Vector linear(std::span<const double> x, ConstLinearParams p);
// Accumulates parameter gradients and, when dx is non-empty, dx += W^T dy.
void linear_backward(std::span<const double> x, std::span<const double> dy, LinearParams p,
                     std::span<double> dx);

// ---- GRU -----------------------------------------------------------------------------------

// z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br), c = tanh(Wh x + Uh (r * h) + bh),
// h' = (1 - z) * h + z * c.
struct GruStep {
  Vector x;
  Vector h_prev;
  Vector z;
  Vector r;
  Vector candidate;
  Vector h;
};

GruStep gru_forward(std::span<const double> x, std::span<const double> h_prev, ConstGruParams p);
Vector gru_cell(std::span<const double> x, std::span<const double> h_prev, ConstGruParams p);
// Accumulates parameter gradients, dx and dh_prev.
void gru_backward(const GruStep& step, std::span<const double> dh, GruParams p, std::span<double> dx,
                  std::span<double> dh_prev);

struct BiGruTrace {
  std::vector<GruStep> forward;   // forward[i] consumed x_0..x_i
  std::vector<GruStep> backward;  // backward[i] consumed x_{n-1}..x_i
  std::vector<Vector> outputs;    // forward[i].h ++ backward[i].h
};

BiGruTrace bidirectional_forward(std::span<const Vector> xs, ConstGruParams fwd, ConstGruParams bwd);
std::vector<Vector> bidirectional_encode(std::span<const Vector> xs, ConstGruParams fwd, ConstGruParams bwd);
// Returns d loss / d x_i given d loss / d output_i.
std::vector<Vector> bidirectional_backward(const BiGruTrace& trace, std::span<const Vector> d_outputs,
                                           GruParams fwd, GruParams bwd);

// ---- character ResNet ----------------------------------------------------------------------

// Activations are channels x positions, row-major.
struct ResBlockTrace {
  Vector input;
  Vector pre1;  // conv1(input) + bias1
  Vector sum;   // conv2(relu(pre1)) + bias2 + input
};

struct CharResnetTrace {
  std::vector<std::size_t> ids;
  std::size_t length = 0;
  std::vector<ResBlockTrace> blocks;
  Vector top;  // relu(sum) of the last block, or the embedded matrix without blocks
  Vector output;
  std::vector<std::size_t> argmax;
};

// Embeds the ids into a channels x L matrix, applies each block as
// relu(conv1) -> conv2 -> + input -> relu (width-3 kernels, zero padding), then max-pools over
// positions.
CharResnetTrace char_resnet_forward(std::span<const std::size_t> ids, ConstCharResnetParams p);
Vector char_resnet(std::string_view word, const CharVocab& vocab, ConstCharResnetParams p);
void char_resnet_backward(const CharResnetTrace& trace, std::span<const double> d_output, CharResnetParams p);

// ---- loss and optimizer --------------------------------------------------------------------

struct SoftmaxXent {
  double loss = 0.0;
  Vector grad;           // softmax - onehot(gold)
  Vector probabilities;
};

SoftmaxXent softmax_xent(std::span<const double> logits, std::size_t gold);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Vector m;
  Vector v;
  std::uint64_t steps = 0;
};

struct AdamState {
  std::map<std::string, AdamMoments> moments;
};

// One bias-corrected Adam update from the gradients held in the store. A tensor whose gradient
// is entirely zero is left untouched (moments and step count included), so parameters outside
// the current computation never move. Throws DivergenceError naming the first parameter with a
// non-finite gradient, before anything is updated.
void adam_step(ParameterStore& params, AdamState& state, const AdamConfig& config);

// ---- gradient check ------------------------------------------------------------------------

// Evaluates the loss at the store's current values and accumulates analytic gradients into it.
using LossClosure = std::function<double(ParameterStore&)>;

struct GradCheckOptions {
  double step = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double denominator_floor = 1e-3;
  // Paths to check; empty means all.
  std::vector<std::string> paths;
};

struct GradCheckEntry {
  std::string path;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  double max_relative_error = 0.0;
  std::string worst_path;
  bool passed = false;
};

// Central finite differences against the closure's analytic gradients. The closure is run
// strictly serially; two evaluations at the same point that differ raise DeterminismError.
// Parameter values are restored on return.
GradCheckReport grad_check(const LossClosure& closure, ParameterStore& params, double tolerance,
                           const GradCheckOptions& options = {});

// ---- checkpoint container ------------------------------------------------------------------

// "LXSPARAM" magic, u32 version, u64 record count, then per record: u32 path length, path bytes,
// u32 rank, u64 dims, little-endian IEEE-754 doubles. The store's rng seed follows the magic.
void write_parameters(std::ostream& out, const ParameterStore& params);
ParameterStore read_parameters(std::istream& in);

}  // namespace lexshare
