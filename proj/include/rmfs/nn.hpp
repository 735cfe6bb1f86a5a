#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace rmfs {

// One training target: only outputs with mask != 0 contribute to the loss.
struct TargetRow {
  std::vector<std::uint8_t> mask;
  std::vector<double> values;
};

// Dense feed-forward network, rectified-linear hidden layers and a linear
// output layer. Parameters live in one flat buffer: for each layer the
// row-major weight matrix (out x in) followed by the bias vector.
class Network {
 public:
  Network() = default;
  // Glorot-uniform weights, zero biases.
  Network(std::vector<std::size_t> layer_sizes, std::uint64_t seed);
  static Network zeros(std::vector<std::size_t> layer_sizes);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_.at(layer) + sizes_[layer] * sizes_[layer + 1];
  }

  std::vector<double> forward(std::span<const double> x) const;

  // Masked mean squared error, sum over masked outputs divided by
  // batch * output_size, and its gradient with respect to every parameter.
  double loss_and_gradient(std::span<const std::vector<double>> inputs,
                           std::span<const TargetRow> targets, std::vector<double>& gradient) const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  void copy_weights_from(const Network& source);

  // Text format:
  //   rmfs-network 1
  //   <layer count + 1> <size_0> ... <size_L>
  //   per layer: `out` lines of `in` weights, then one line of `out` biases
  void save(std::ostream& out) const;
  static Network load(std::istream& in);

  friend bool operator==(const Network&, const Network&) = default;

 private:
  void init_shape(std::vector<std::size_t> layer_sizes);

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 0.00025;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t parameter_count, AdamConfig config);

  void step(std::span<double> params, std::span<const double> gradient);
  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> first_;
  std::vector<double> second_;
  std::size_t steps_ = 0;
};

// One Adam update on a mini-batch. Returns the loss before the update and
// throws std::runtime_error if it is not finite.
double train_batch(Network& net, Adam& adam, std::span<const std::vector<double>> inputs,
                   std::span<const TargetRow> targets);

}  // namespace rmfs
