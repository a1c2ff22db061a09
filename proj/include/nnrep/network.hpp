#ifndef NNREP_NETWORK_HPP
#define NNREP_NETWORK_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnrep/common.hpp"

namespace nnrep {

struct Layer {
    // weights(i, j) connects input j to output node i.
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

// Fully connected ReLU network: ReLU on every hidden layer, identity on the
// output layer. Immutable after construction; layer indices are 1-based
// (layer 1 consumes the raw input, layer depth() produces the output),
// matching the convention l in {1, ..., L+1} used throughout the project.
class Network {
public:
    explicit Network(std::vector<Layer> layers);

    int depth() const { return static_cast<int>(layers_.size()); }      // L+1
    int hidden_count() const { return depth() - 1; }                    // L
    int input_width() const { return static_cast<int>(layers_.front().weights.cols()); }
    int output_width() const { return static_cast<int>(layers_.back().weights.rows()); }
    int layer_width(int l) const { return static_cast<int>(layer(l).weights.rows()); }

    const Layer& layer(int l) const;

    // Returns a copy with layer l replaced. Shapes must match.
    Network with_layer(int l, Eigen::MatrixXd weights, Eigen::VectorXd bias) const;

private:
    std::vector<Layer> layers_;
};

// All intermediate node values for one input sample.
// post[0] = x^0 (input), post[l] = x^l for hidden layers, y = output.
// pre[l-1] = pre-activation of layer l (1-based l); pre of the output layer
// equals y. pattern[l-1][j] is true iff the pre-activation of hidden node j
// in layer l is > 0.
struct Activations {
    std::vector<Eigen::VectorXd> post;
    std::vector<Eigen::VectorXd> pre;
    Eigen::VectorXd y;
    std::vector<std::vector<bool>> pattern;
};

Activations forward(const Network& net, const Eigen::VectorXd& x0);

// Batch forward pass over inputs given as rows; returns outputs as rows.
// The OpenMP variant writes each output row independently, so it is
// bit-identical to the serial reference for any thread count.
Eigen::MatrixXd forward_outputs(const Network& net, const Eigen::MatrixXd& inputs);
Eigen::MatrixXd forward_outputs_serial(const Network& net, const Eigen::MatrixXd& inputs);

// JSON schema: {"layers":[{"weights":[[...]],"bias":[...]}, ...]}
Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);

} // namespace nnrep

#endif
