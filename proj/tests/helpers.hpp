#ifndef NNREP_TEST_HELPERS_HPP
#define NNREP_TEST_HELPERS_HPP

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nnrep/network.hpp"

namespace nnrep::test {

// Seeded dense network with N(0, scale/sqrt(fan_in)) weights.
inline Network random_network(const std::vector<int>& widths, unsigned long seed,
                              double scale = 1.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Layer> layers;
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer lay;
        lay.weights.resize(widths[l + 1], widths[l]);
        lay.bias.resize(widths[l + 1]);
        const double s = scale / std::sqrt(static_cast<double>(widths[l]));
        for (int i = 0; i < widths[l + 1]; ++i) {
            for (int j = 0; j < widths[l]; ++j) lay.weights(i, j) = s * gauss(rng);
            lay.bias[i] = 0.3 * gauss(rng);
        }
        layers.push_back(std::move(lay));
    }
    return Network(std::move(layers));
}

inline Eigen::MatrixXd random_inputs(int rows, int cols, unsigned long seed, double range = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-range, range);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = uni(rng);
    return m;
}

} // namespace nnrep::test

#endif
