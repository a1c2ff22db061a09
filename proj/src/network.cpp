#include "nnrep/network.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace nnrep {

using nlohmann::json;

namespace {

void check_finite(const Layer& layer, int l) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite())
        throw SchemaError("layer " + std::to_string(l) + " contains a non-finite value");
}

} // namespace

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty())
        throw DimensionError("network must have at least one layer");
    for (size_t i = 0; i < layers_.size(); ++i) {
        const Layer& lay = layers_[i];
        if (lay.weights.rows() != lay.bias.size())
            throw DimensionError("layer " + std::to_string(i + 1) +
                                 ": bias size does not match weight rows");
        if (i > 0 && layers_[i - 1].weights.rows() != lay.weights.cols())
            throw DimensionError("layer " + std::to_string(i + 1) +
                                 ": input width does not match previous layer output");
        check_finite(lay, static_cast<int>(i + 1));
    }
}

const Layer& Network::layer(int l) const {
    if (l < 1 || l > depth())
        throw DimensionError("layer index " + std::to_string(l) + " out of range [1, " +
                             std::to_string(depth()) + "]");
    return layers_[static_cast<size_t>(l - 1)];
}

Network Network::with_layer(int l, Eigen::MatrixXd weights, Eigen::VectorXd bias) const {
    const Layer& old = layer(l);
    if (weights.rows() != old.weights.rows() || weights.cols() != old.weights.cols() ||
        bias.size() != old.bias.size())
        throw DimensionError("with_layer: replacement shapes do not match layer " +
                             std::to_string(l));
    std::vector<Layer> copy = layers_;
    copy[static_cast<size_t>(l - 1)] = Layer{std::move(weights), std::move(bias)};
    return Network(std::move(copy));
}

Activations forward(const Network& net, const Eigen::VectorXd& x0) {
    if (x0.size() != net.input_width())
        throw DimensionError("forward: input has size " + std::to_string(x0.size()) +
                             ", expected " + std::to_string(net.input_width()));
    Activations act;
    act.post.resize(static_cast<size_t>(net.depth()));
    act.pre.resize(static_cast<size_t>(net.depth()));
    act.pattern.resize(static_cast<size_t>(net.hidden_count()));
    act.post[0] = x0;
    Eigen::VectorXd x = x0;
    for (int l = 1; l <= net.depth(); ++l) {
        const Layer& lay = net.layer(l);
        Eigen::VectorXd z = lay.weights * x + lay.bias;
        act.pre[static_cast<size_t>(l - 1)] = z;
        if (l < net.depth()) {
            x = z.cwiseMax(0.0);
            act.post[static_cast<size_t>(l)] = x;
            std::vector<bool>& pat = act.pattern[static_cast<size_t>(l - 1)];
            pat.resize(static_cast<size_t>(z.size()));
            for (Eigen::Index j = 0; j < z.size(); ++j) pat[static_cast<size_t>(j)] = z[j] > 0.0;
        } else {
            act.y = z;
        }
    }
    return act;
}

Eigen::MatrixXd forward_outputs_serial(const Network& net, const Eigen::MatrixXd& inputs) {
    Eigen::MatrixXd out(inputs.rows(), net.output_width());
    for (Eigen::Index n = 0; n < inputs.rows(); ++n)
        out.row(n) = forward(net, inputs.row(n).transpose()).y.transpose();
    return out;
}

Eigen::MatrixXd forward_outputs(const Network& net, const Eigen::MatrixXd& inputs) {
    Eigen::MatrixXd out(inputs.rows(), net.output_width());
    const Eigen::Index n_rows = inputs.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < n_rows; ++n)
        out.row(n) = forward(net, inputs.row(n).transpose()).y.transpose();
    return out;
}

namespace {

Network network_from_parsed(const json& doc) {
    if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array() ||
        doc["layers"].empty())
        throw SchemaError("network JSON must be an object with a non-empty \"layers\" array");
    std::vector<Layer> layers;
    int index = 0;
    for (const json& jl : doc["layers"]) {
        ++index;
        if (!jl.is_object() || !jl.contains("weights") || !jl.contains("bias"))
            throw SchemaError("layer " + std::to_string(index) +
                              " must have \"weights\" and \"bias\"");
        const json& jw = jl["weights"];
        const json& jb = jl["bias"];
        if (!jw.is_array() || jw.empty() || !jb.is_array())
            throw SchemaError("layer " + std::to_string(index) + ": malformed weights or bias");
        const size_t rows = jw.size();
        const size_t cols = jw[0].size();
        Layer lay;
        lay.weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (size_t i = 0; i < rows; ++i) {
            if (!jw[i].is_array() || jw[i].size() != cols)
                throw SchemaError("layer " + std::to_string(index) + ": ragged weight matrix");
            for (size_t j = 0; j < cols; ++j) {
                if (!jw[i][j].is_number())
                    throw SchemaError("layer " + std::to_string(index) +
                                      ": weight is not a finite number");
                lay.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    jw[i][j].get<double>();
            }
        }
        if (jb.size() != rows)
            throw SchemaError("layer " + std::to_string(index) + ": bias size mismatch");
        lay.bias.resize(static_cast<Eigen::Index>(rows));
        for (size_t i = 0; i < rows; ++i) {
            if (!jb[i].is_number())
                throw SchemaError("layer " + std::to_string(index) +
                                  ": bias is not a finite number");
            lay.bias(static_cast<Eigen::Index>(i)) = jb[i].get<double>();
        }
        check_finite(lay, index);
        layers.push_back(std::move(lay));
    }
    return Network(std::move(layers));
}

} // namespace

Network network_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("network JSON parse error: ") + e.what());
    }
    return network_from_parsed(doc);
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open network file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return network_from_json(buf.str());
}

std::string network_to_json(const Network& net) {
    json doc;
    doc["layers"] = json::array();
    for (int l = 1; l <= net.depth(); ++l) {
        const Layer& lay = net.layer(l);
        json jl;
        jl["weights"] = json::array();
        for (Eigen::Index i = 0; i < lay.weights.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < lay.weights.cols(); ++j) row.push_back(lay.weights(i, j));
            jl["weights"].push_back(std::move(row));
        }
        jl["bias"] = json::array();
        for (Eigen::Index i = 0; i < lay.bias.size(); ++i) jl["bias"].push_back(lay.bias(i));
        doc["layers"].push_back(std::move(jl));
    }
    return doc.dump(2) + "\n";
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot open file for writing: " + path);
    out << network_to_json(net);
}

} // namespace nnrep
