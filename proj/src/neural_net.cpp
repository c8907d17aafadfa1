#include "mimo/neural_net.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace mimo {

namespace {

Eigen::VectorXd apply_activation(Activation act, const Eigen::VectorXd& z) {
  switch (act) {
    case Activation::Identity:
      return z;
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Tanh:
      return z.array().tanh();
    case Activation::Softmax: {
      Eigen::ArrayXd shifted = z.array() - z.maxCoeff();  // stability shift
      Eigen::ArrayXd e = shifted.exp();
      return e / e.sum();
    }
  }
  throw InvalidParameterError("unknown activation");
}

// dL/dz given dL/da and the already-computed activation value a.
Eigen::VectorXd activation_grad(Activation act, const Eigen::VectorXd& post,
                                const Eigen::VectorXd& grad_post) {
  switch (act) {
    case Activation::Identity:
      return grad_post;
    case Activation::Relu:
      return (post.array() > 0.0).select(grad_post.array(), 0.0);
    case Activation::Tanh:
      return (grad_post.array() * (1.0 - post.array().square())).matrix();
    case Activation::Softmax: {
      const double dot = post.dot(grad_post);
      return (post.array() * (grad_post.array() - dot)).matrix();
    }
  }
  throw InvalidParameterError("unknown activation");
}

Mlp make_net(int input, const std::vector<int>& hidden, int output,
             Activation hidden_act, Activation output_act, double l2_coeff) {
  Mlp net;
  net.l2_coeff = l2_coeff;
  int in = input;
  for (int width : hidden) {
    DenseLayer layer;
    layer.weights.setZero(width, in);
    layer.biases.setZero(width);
    layer.activation = hidden_act;
    net.layers.push_back(std::move(layer));
    in = width;
  }
  DenseLayer out;
  out.weights.setZero(output, in);
  out.biases.setZero(output);
  out.activation = output_act;
  net.layers.push_back(std::move(out));
  return net;
}

std::vector<int> table_hidden(int m, int n, int n_t) {
  return {4 * m + n + 2, 8 * n_t, 8 * n_t, 8 * n_t, 8 * n_t, 8 * n_t};
}

}  // namespace

void Gradients::add_scaled(const Gradients& other, double scale) {
  for (std::size_t i = 0; i < d_weights.size(); ++i) {
    d_weights[i] += scale * other.d_weights[i];
    d_biases[i] += scale * other.d_biases[i];
  }
}

void Gradients::scale(double s) {
  for (std::size_t i = 0; i < d_weights.size(); ++i) {
    d_weights[i] *= s;
    d_biases[i] *= s;
  }
}

bool Gradients::all_finite() const {
  for (std::size_t i = 0; i < d_weights.size(); ++i)
    if (!d_weights[i].allFinite() || !d_biases[i].allFinite()) return false;
  return true;
}

std::size_t Mlp::parameter_count() const {
  std::size_t c = 0;
  for (const auto& l : layers) c += l.weights.size() + l.biases.size();
  return c;
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers) {
    g.d_weights.emplace_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.d_biases.emplace_back(Eigen::VectorXd::Zero(l.biases.size()));
  }
  return g;
}

Mlp make_actor(int m, int n, int n_t, int q, double l2_coeff) {
  return make_net(4 * m + n + 2, table_hidden(m, n, n_t), q, Activation::Relu,
                  Activation::Softmax, l2_coeff);
}

Mlp make_critic(int m, int n, int n_t, double l2_coeff) {
  return make_net(4 * m + n + 2, table_hidden(m, n, n_t), 1, Activation::Tanh,
                  Activation::Tanh, l2_coeff);
}

Mlp make_state_value(int m, int n, int n_t, int q, double l2_coeff) {
  return make_net(4 * m + n + 2 + q, table_hidden(m, n, n_t), 1,
                  Activation::Tanh, Activation::Tanh, l2_coeff);
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input,
                        ForwardCache* cache) {
  if (input.size() != net.input_dim())
    throw ShapeError("forward: input length does not match first layer");
  if (cache) {
    cache->input = input;
    cache->pre.clear();
    cache->post.clear();
  }
  Eigen::VectorXd a = input;
  for (const auto& layer : net.layers) {
    Eigen::VectorXd z = layer.weights * a + layer.biases;
    a = apply_activation(layer.activation, z);
    if (cache) {
      cache->pre.push_back(z);
      cache->post.push_back(a);
    }
  }
  return a;
}

Gradients backward(const Mlp& net, const ForwardCache& cache,
                   const Eigen::VectorXd& output_grad, bool at_logits) {
  if (cache.post.size() != net.layers.size())
    throw Error("backward: cache does not match network");
  Gradients g = net.zero_gradients();
  const int last = static_cast<int>(net.layers.size()) - 1;

  Eigen::VectorXd delta =
      at_logits ? output_grad
                : activation_grad(net.layers[last].activation, cache.post[last],
                                  output_grad);
  for (int i = last; i >= 0; --i) {
    const Eigen::VectorXd& in = (i == 0) ? cache.input : cache.post[i - 1];
    g.d_weights[i] = delta * in.transpose();
    g.d_biases[i] = delta;
    if (i > 0) {
      Eigen::VectorXd grad_post = net.layers[i].weights.transpose() * delta;
      delta = activation_grad(net.layers[i - 1].activation, cache.post[i - 1],
                              grad_post);
    }
  }
  return g;
}

RmsPropState RmsPropState::for_net(const Mlp& net, double learning_rate) {
  RmsPropState s;
  s.learning_rate = learning_rate;
  for (const auto& l : net.layers) {
    s.ms_weights.emplace_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    s.ms_biases.emplace_back(Eigen::VectorXd::Zero(l.biases.size()));
  }
  return s;
}

void rmsprop_step(RmsPropState& opt, Mlp& net, const Gradients& grads) {
  if (!grads.all_finite())
    throw TrainingDivergenceError("non-finite gradient in optimizer step");
  const double rho = opt.decay_rho;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    opt.ms_weights[i] = rho * opt.ms_weights[i].array() +
                        (1.0 - rho) * grads.d_weights[i].array().square();
    opt.ms_biases[i] = rho * opt.ms_biases[i].array() +
                       (1.0 - rho) * grads.d_biases[i].array().square();
    net.layers[i].weights.array() -=
        opt.learning_rate * grads.d_weights[i].array() /
        (opt.ms_weights[i].array() + opt.epsilon_stab).sqrt();
    net.layers[i].biases.array() -=
        opt.learning_rate * grads.d_biases[i].array() /
        (opt.ms_biases[i].array() + opt.epsilon_stab).sqrt();
  }
}

void init_weights(Mlp& net, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x696e6974ULL);
  for (auto& layer : net.layers) {
    const double fan_in = static_cast<double>(layer.weights.cols());
    const double fan_out = static_cast<double>(layer.weights.rows());
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        layer.weights(r, c) = u(rng);
    layer.biases.setZero();
  }
}

double l2_norm_squared(const Mlp& net) {
  double s = 0.0;
  for (const auto& l : net.layers)
    s += l.weights.squaredNorm() + l.biases.squaredNorm();
  return s;
}

// ---- checkpoint serialization -------------------------------------------
// Layout (little-endian):
//   magic "MDCK" | u32 version | u32 net count
//   per net: u32 layer count
//            per layer: u64 rows | u64 cols | u8 activation
//                       rows*cols f64 (row-major) | rows f64 biases
//            f64 l2_coeff

namespace {

constexpr char kMagic[4] = {'M', 'D', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("checkpoint truncated");
  return v;
}

void write_net(std::ostream& os, const Mlp& net) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    put<std::uint64_t>(os, static_cast<std::uint64_t>(l.weights.rows()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(l.weights.cols()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(l.activation));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
        put<double>(os, l.weights(r, c));
    for (Eigen::Index r = 0; r < l.biases.size(); ++r)
      put<double>(os, l.biases(r));
  }
  put<double>(os, net.l2_coeff);
}

Mlp read_net(std::istream& is) {
  Mlp net;
  const auto n_layers = get<std::uint32_t>(is);
  if (n_layers == 0 || n_layers > 1024) throw FormatError("bad layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    DenseLayer l;
    const auto rows = get<std::uint64_t>(is);
    const auto cols = get<std::uint64_t>(is);
    if (rows == 0 || cols == 0 || rows > (1ULL << 20) || cols > (1ULL << 20))
      throw FormatError("bad layer shape");
    const auto act = get<std::uint8_t>(is);
    if (act > static_cast<std::uint8_t>(Activation::Softmax))
      throw FormatError("bad activation tag");
    l.activation = static_cast<Activation>(act);
    l.weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
        l.weights(r, c) = get<double>(is);
    l.biases.resize(static_cast<Eigen::Index>(rows));
    for (Eigen::Index r = 0; r < l.biases.size(); ++r)
      l.biases(r) = get<double>(is);
    net.layers.push_back(std::move(l));
  }
  net.l2_coeff = get<double>(is);
  return net;
}

}  // namespace

void save_checkpoint(const DrlNets& nets, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, 3);
  write_net(os, nets.actor);
  write_net(os, nets.critic);
  write_net(os, nets.state_value);
  if (!os) throw Error("checkpoint write failed: " + path);
}

DrlNets load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad checkpoint magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint32_t>(is);
  if (count != 3) throw FormatError("unexpected network count");
  DrlNets nets;
  nets.actor = read_net(is);
  nets.critic = read_net(is);
  nets.state_value = read_net(is);
  return nets;
}

}  // namespace mimo
