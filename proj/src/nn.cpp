#include "rmfs/nn.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace rmfs {

void Network::init_shape(std::vector<std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("network: need at least two layer sizes");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("network: layer sizes must be positive");
  }
  sizes_ = std::move(layer_sizes);
  offsets_.clear();
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

Network::Network(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
  init_shape(std::move(layer_sizes));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
    std::uniform_real_distribution<double> init(-limit, limit);
    double* w = &params_[weight_offset(l)];
    for (std::size_t i = 0; i < sizes_[l] * sizes_[l + 1]; ++i) w[i] = init(rng);
  }
}

Network Network::zeros(std::vector<std::size_t> layer_sizes) {
  Network net;
  net.init_shape(std::move(layer_sizes));
  return net;
}

std::vector<double> Network::forward(std::span<const double> x) const {
  if (x.size() != input_size()) {
    throw std::invalid_argument("network: input has " + std::to_string(x.size()) +
                                " values, expected " + std::to_string(input_size()));
  }
  std::vector<double> in(x.begin(), x.end());
  std::vector<double> out;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    const double* w = &params_[weight_offset(l)];
    const double* b = &params_[bias_offset(l)];
    const bool hidden = l + 1 < layer_count();
    out.assign(n_out, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      double acc = b[o];
      const double* row = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
      out[o] = hidden ? std::max(acc, 0.0) : acc;
    }
    in.swap(out);
  }
  return in;
}

double Network::loss_and_gradient(std::span<const std::vector<double>> inputs,
                                  std::span<const TargetRow> targets,
                                  std::vector<double>& gradient) const {
  if (inputs.size() != targets.size() || inputs.empty()) {
    throw std::invalid_argument("network: batch inputs and targets must be nonempty and aligned");
  }
  gradient.assign(params_.size(), 0.0);
  const std::size_t layers = layer_count();
  const double scale = 1.0 / static_cast<double>(inputs.size() * output_size());

  // activations[l] is the input to layer l; activations[layers] the output.
  std::vector<std::vector<double>> activations(layers + 1);
  std::vector<double> delta;
  std::vector<double> prev_delta;
  double loss = 0.0;

  for (std::size_t n = 0; n < inputs.size(); ++n) {
    const auto& x = inputs[n];
    const TargetRow& t = targets[n];
    if (x.size() != input_size() || t.mask.size() != output_size() ||
        t.values.size() != output_size()) {
      throw std::invalid_argument("network: batch row has the wrong dimension");
    }
    activations[0] = x;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t n_in = sizes_[l];
      const std::size_t n_out = sizes_[l + 1];
      const double* w = &params_[weight_offset(l)];
      const double* b = &params_[bias_offset(l)];
      const bool hidden = l + 1 < layers;
      auto& a = activations[l + 1];
      a.assign(n_out, 0.0);
      for (std::size_t o = 0; o < n_out; ++o) {
        double acc = b[o];
        for (std::size_t i = 0; i < n_in; ++i) acc += w[o * n_in + i] * activations[l][i];
        a[o] = hidden ? std::max(acc, 0.0) : acc;
      }
    }

    const auto& y = activations[layers];
    delta.assign(output_size(), 0.0);
    for (std::size_t k = 0; k < output_size(); ++k) {
      if (!t.mask[k]) continue;
      const double err = y[k] - t.values[k];
      loss += err * err * scale;
      delta[k] = 2.0 * err * scale;
    }

    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t n_in = sizes_[l];
      const std::size_t n_out = sizes_[l + 1];
      const double* w = &params_[weight_offset(l)];
      double* gw = &gradient[weight_offset(l)];
      double* gb = &gradient[bias_offset(l)];
      const auto& a_in = activations[l];
      for (std::size_t o = 0; o < n_out; ++o) {
        if (delta[o] == 0.0) continue;
        gb[o] += delta[o];
        for (std::size_t i = 0; i < n_in; ++i) gw[o * n_in + i] += delta[o] * a_in[i];
      }
      if (l == 0) break;
      prev_delta.assign(n_in, 0.0);
      for (std::size_t o = 0; o < n_out; ++o) {
        if (delta[o] == 0.0) continue;
        for (std::size_t i = 0; i < n_in; ++i) prev_delta[i] += w[o * n_in + i] * delta[o];
      }
      // ReLU derivative, taken as 0 at the kink.
      for (std::size_t i = 0; i < n_in; ++i) {
        if (a_in[i] <= 0.0) prev_delta[i] = 0.0;
      }
      delta.swap(prev_delta);
    }
  }
  return loss;
}

void Network::copy_weights_from(const Network& source) {
  if (source.sizes_ != sizes_) throw std::invalid_argument("network: architecture mismatch on copy");
  params_ = source.params_;
}

void Network::save(std::ostream& out) const {
  out << "rmfs-network 1\n" << sizes_.size();
  for (std::size_t s : sizes_) out << ' ' << s;
  out << '\n' << std::setprecision(17);
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    const double* w = &params_[weight_offset(l)];
    for (std::size_t o = 0; o < n_out; ++o) {
      for (std::size_t i = 0; i < n_in; ++i) out << (i ? " " : "") << w[o * n_in + i];
      out << '\n';
    }
    const double* b = &params_[bias_offset(l)];
    for (std::size_t o = 0; o < n_out; ++o) out << (o ? " " : "") << b[o];
    out << '\n';
  }
}

Network Network::load(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version >> count) || magic != "rmfs-network" || version != 1) {
    throw std::runtime_error("network: not an rmfs-network v1 file");
  }
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) {
    if (!(in >> s)) throw std::runtime_error("network: truncated header");
  }
  Network net = zeros(std::move(sizes));
  for (double& p : net.params_) {
    if (!(in >> p)) throw std::runtime_error("network: truncated parameter block");
  }
  return net;
}

Adam::Adam(std::size_t parameter_count, AdamConfig config)
    : config_(config), first_(parameter_count, 0.0), second_(parameter_count, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> gradient) {
  if (params.size() != first_.size() || gradient.size() != first_.size()) {
    throw std::invalid_argument("adam: parameter count mismatch");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * gradient[i];
    second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * gradient[i] * gradient[i];
    const double m_hat = first_[i] / c1;
    const double v_hat = second_[i] / c2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

double train_batch(Network& net, Adam& adam, std::span<const std::vector<double>> inputs,
                   std::span<const TargetRow> targets) {
  std::vector<double> gradient;
  const double loss = net.loss_and_gradient(inputs, targets, gradient);
  if (!std::isfinite(loss)) throw std::runtime_error("network: non-finite loss, training diverged");
  adam.step(net.parameters(), gradient);
  return loss;
}

}  // namespace rmfs
