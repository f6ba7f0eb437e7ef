#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/dataset.hpp"
#include "dlmf/rng.hpp"

namespace dlmf {

//! Dense feedforward net: ReLU hidden layers, identity scalar output.
//! weights[l] is fan_out x fan_in for layer l.
struct Network {
    std::vector<int> layer_sizes;          // [in, h_1, ..., h_L, 1]
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    int in_dim() const { return layer_sizes.front(); }
    std::size_t num_layers() const { return weights.size(); }
};

//! Gradients (or any other quantity) shaped like a Network's parameters.
struct ParamGrads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
};

inline void check_layer_sizes(const std::vector<int>& sizes) {
    if (sizes.size() < 3) {
        throw std::invalid_argument("network: need at least one hidden layer");
    }
    for (int s : sizes) {
        if (s < 1) throw std::invalid_argument("network: every layer size must be >= 1");
    }
    if (sizes.back() != 1) {
        throw std::invalid_argument("network: output layer must have size 1");
    }
}

//! Seeded Glorot-uniform weights, zero biases. Deterministic given the seed.
inline Network mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    check_layer_sizes(layer_sizes);
    Network net;
    net.layer_sizes = layer_sizes;
    RngStream rng(seed, "mlp-init");
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double r = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i) {
            for (int j = 0; j < fan_in; ++j) {
                w(i, j) = -r + 2.0 * r * rng.next_double();
            }
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return net;
}

//! Batch forward pass: one row per sample, returns one output per row.
inline Eigen::VectorXd forward_batch(const Network& net, const Eigen::MatrixXd& inputs) {
    if (inputs.cols() != net.in_dim()) {
        throw std::invalid_argument("forward: input has " + std::to_string(inputs.cols()) +
                                    " columns, network expects " + std::to_string(net.in_dim()));
    }
    Eigen::MatrixXd a = inputs;
    const std::size_t last = net.num_layers() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
        Eigen::MatrixXd z = (a * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
        if (l < last) {
            a = z.cwiseMax(0.0);
        } else {
            a = std::move(z);
        }
    }
    return a.col(0);
}

inline double forward(const Network& net, const Eigen::VectorXd& input) {
    return forward_batch(net, input.transpose())(0);
}

//! Per-layer activations kept around for the backward pass.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> act;   // act[0] = inputs, act[l] = post-ReLU layer l
    Eigen::VectorXd out;
};

inline ForwardCache forward_cached(const Network& net, const Eigen::MatrixXd& inputs) {
    if (inputs.cols() != net.in_dim()) {
        throw std::invalid_argument("forward: input has " + std::to_string(inputs.cols()) +
                                    " columns, network expects " + std::to_string(net.in_dim()));
    }
    ForwardCache cache;
    cache.act.reserve(net.num_layers());
    cache.act.push_back(inputs);
    const std::size_t last = net.num_layers() - 1;
    for (std::size_t l = 0; l < last; ++l) {
        Eigen::MatrixXd z =
            (cache.act.back() * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
        cache.act.push_back(z.cwiseMax(0.0));
    }
    cache.out = ((cache.act.back() * net.weights[last].transpose()).rowwise() +
                 net.biases[last].transpose())
                    .col(0);
    return cache;
}

//! Exact reverse-mode gradients given dL/d(output). Optionally also returns
//! dL/d(input), which is what chains a discriminator into a generator.
inline ParamGrads backward(const Network& net, const ForwardCache& cache,
                           const Eigen::VectorXd& grad_out,
                           Eigen::MatrixXd* grad_input = nullptr) {
    const std::size_t layers = net.num_layers();
    ParamGrads grads;
    grads.w.resize(layers);
    grads.b.resize(layers);
    Eigen::MatrixXd g = grad_out;   // k x fan_out of current layer
    for (std::size_t l = layers; l-- > 0;) {
        grads.w[l].noalias() = g.transpose() * cache.act[l];
        grads.b[l] = g.colwise().sum().transpose();
        Eigen::MatrixXd ga = g * net.weights[l];   // dL/d act[l]
        if (l > 0) {
            g = ga.cwiseProduct((cache.act[l].array() > 0.0).cast<double>().matrix());
        } else if (grad_input) {
            *grad_input = std::move(ga);
        }
    }
    return grads;
}

//! Full-batch mean squared error and its exact parameter gradients.
inline std::pair<double, ParamGrads> loss_and_grads(const Network& net,
                                                    const Eigen::MatrixXd& inputs,
                                                    const Eigen::VectorXd& targets) {
    const Eigen::Index k = inputs.rows();
    if (k < 1) throw std::invalid_argument("loss_and_grads: empty batch");
    if (targets.size() != k) {
        throw std::invalid_argument("loss_and_grads: batch size does not match target length");
    }
    ForwardCache cache = forward_cached(net, inputs);
    const Eigen::VectorXd resid = cache.out - targets;
    const double loss = resid.squaredNorm() / static_cast<double>(k);
    const Eigen::VectorXd grad_out = (2.0 / static_cast<double>(k)) * resid;
    return {loss, backward(net, cache, grad_out)};
}

inline double mse_loss(const Network& net, const Eigen::MatrixXd& inputs,
                       const Eigen::VectorXd& targets) {
    const Eigen::VectorXd out = forward_batch(net, inputs);
    return (out - targets).squaredNorm() / static_cast<double>(inputs.rows());
}

enum class OptimizerKind { SGD, Adam, RMSProp };

inline std::string optimizer_to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::SGD: return "sgd";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::RMSProp: return "rmsprop";
    }
    return {};
}

inline OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "sgd") return OptimizerKind::SGD;
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "rmsprop") return OptimizerKind::RMSProp;
    throw std::invalid_argument("unknown optimizer '" + s + "'");
}

//! Optimizer buffers mirror the parameter shapes of the network they drive.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::SGD;
    double lr = 1e-3;
    long step_count = 0;
    double beta1 = 0.9;        // Adam
    double beta2 = 0.999;      // Adam
    double eps = 1e-8;
    double rms_decay = 0.99;   // RMSProp
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
};

inline OptimizerState make_optimizer(OptimizerKind kind, double lr, const Network& net) {
    if (!(lr > 0.0)) throw std::invalid_argument("optimizer: learning rate must be positive");
    OptimizerState st;
    st.kind = kind;
    st.lr = lr;
    if (kind != OptimizerKind::SGD) {
        for (std::size_t l = 0; l < net.num_layers(); ++l) {
            st.v_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
            st.v_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
            if (kind == OptimizerKind::Adam) {
                st.m_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
                st.m_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
            }
        }
    }
    return st;
}

namespace detail {

template <typename P, typename G, typename M, typename V>
void apply_update(OptimizerState& st, P& param, const G& grad, M* m, V* v) {
    switch (st.kind) {
        case OptimizerKind::SGD:
            param -= st.lr * grad;
            break;
        case OptimizerKind::RMSProp:
            *v = st.rms_decay * (*v) + (1.0 - st.rms_decay) * grad.cwiseProduct(grad);
            param.array() -= st.lr * grad.array() / (v->array().sqrt() + st.eps);
            break;
        case OptimizerKind::Adam: {
            *m = st.beta1 * (*m) + (1.0 - st.beta1) * grad;
            *v = st.beta2 * (*v) + (1.0 - st.beta2) * grad.cwiseProduct(grad);
            const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
            const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
            param.array() -=
                st.lr * (m->array() / c1) / ((v->array() / c2).sqrt() + st.eps);
            break;
        }
    }
}

} // namespace detail

//! One optimizer update in place. SGD / RMSProp / bias-corrected Adam.
inline void optimizer_step(OptimizerState& st, Network& net, const ParamGrads& grads) {
    if (grads.w.size() != net.num_layers()) {
        throw std::invalid_argument("optimizer_step: gradient layer count mismatch");
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        if (grads.w[l].rows() != net.weights[l].rows() || grads.w[l].cols() != net.weights[l].cols() ||
            grads.b[l].size() != net.biases[l].size()) {
            throw std::invalid_argument("optimizer_step: gradient shape mismatch at layer " +
                                        std::to_string(l));
        }
    }
    ++st.step_count;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        Eigen::MatrixXd* mw = st.kind == OptimizerKind::Adam ? &st.m_w[l] : nullptr;
        Eigen::MatrixXd* vw = st.kind != OptimizerKind::SGD ? &st.v_w[l] : nullptr;
        Eigen::VectorXd* mb = st.kind == OptimizerKind::Adam ? &st.m_b[l] : nullptr;
        Eigen::VectorXd* vb = st.kind != OptimizerKind::SGD ? &st.v_b[l] : nullptr;
        detail::apply_update(st, net.weights[l], grads.w[l], mw, vw);
        detail::apply_update(st, net.biases[l], grads.b[l], mb, vb);
    }
}

//! Clamp every weight and bias to [-m, m].
inline void clip_params(Network& net, double m) {
    if (!(m > 0.0)) throw std::invalid_argument("clip_params: m must be positive");
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        net.weights[l] = net.weights[l].cwiseMax(-m).cwiseMin(m);
        net.biases[l] = net.biases[l].cwiseMax(-m).cwiseMin(m);
    }
}

inline double max_abs_param(const Network& net) {
    double v = 0.0;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        v = std::max(v, net.weights[l].cwiseAbs().maxCoeff());
        v = std::max(v, net.biases[l].cwiseAbs().maxCoeff());
    }
    return v;
}

//! Early-stopping policy: every `period` epochs, measure the empirical
//! coverage of the monitored prediction interval on the held-out set and
//! stop once it reaches 1 - alpha.
struct EarlyStop {
    int period = 500;
    double alpha = 0.05;
    std::shared_ptr<const Dataset> validation;
    int draws = 500;   // Monte Carlo draws per validation point
};

//! Everything a single training run needs besides the data.
struct TrainSpec {
    int epochs = 5000;
    double lr = 1e-3;
    double clip_m = 20.0;
    OptimizerKind optimizer = OptimizerKind::RMSProp;
    std::uint64_t seed = 0;
    std::vector<int> hidden = {50};
    std::optional<EarlyStop> early_stop;
};

inline void validate_train_spec(const TrainSpec& spec) {
    if (spec.epochs < 0) throw std::invalid_argument("train spec: epochs must be >= 0");
    if (!(spec.lr > 0.0)) throw std::invalid_argument("train spec: learning rate must be positive");
    if (!(spec.clip_m > 0.0)) throw std::invalid_argument("train spec: clip_m must be positive");
    if (spec.hidden.empty()) throw std::invalid_argument("train spec: need at least one hidden layer");
    if (spec.early_stop) {
        if (spec.early_stop->period < 1) {
            throw std::invalid_argument("train spec: early-stop period must be >= 1");
        }
        if (spec.early_stop->period > spec.epochs && spec.epochs > 0) {
            throw std::invalid_argument("train spec: early-stop period exceeds epoch budget");
        }
        if (!spec.early_stop->validation) {
            throw std::invalid_argument("train spec: early stop requires a validation dataset");
        }
        if (!(spec.early_stop->alpha > 0.0 && spec.early_stop->alpha < 1.0)) {
            throw std::invalid_argument("train spec: early-stop alpha must lie in (0, 1)");
        }
    }
}

//! Width/depth sizing from the approximation-rate analysis. Advisory only:
//! never fed into training automatically.
struct TheoryArchitecture {
    std::uint64_t width = 0;
    std::uint64_t depth = 0;
    std::uint64_t n1 = 0;
    std::uint64_t n2 = 0;
};

inline TheoryArchitecture theory_architecture(int d, int p, long n, double tau) {
    if (d + p < 2) throw std::invalid_argument("theory_architecture: need d + p >= 2");
    if (!(tau > 1.0)) throw std::invalid_argument("theory_architecture: need tau > 1");
    if (n < 3) throw std::invalid_argument("theory_architecture: need n >= 3");
    const double dp = static_cast<double>(d + p);
    const double ln_n = std::log(static_cast<double>(n));
    TheoryArchitecture arch;
    arch.n1 = static_cast<std::uint64_t>(
        std::ceil(std::pow(static_cast<double>(n), dp / (2.0 * (tau + dp))) / ln_n));
    arch.n2 = static_cast<std::uint64_t>(std::ceil(ln_n));
    const std::uint64_t root = static_cast<std::uint64_t>(
        std::floor(std::pow(static_cast<double>(arch.n1), 1.0 / dp)));
    const std::uint64_t inner =
        std::max(static_cast<std::uint64_t>(d + p) * root, arch.n1 + 1);
    unsigned __int128 w = 1;
    for (int i = 0; i < d + p + 3; ++i) w *= 3;
    w *= inner;
    if (w > static_cast<unsigned __int128>(UINT64_MAX)) {
        throw std::overflow_error("theory_architecture: width exceeds 64-bit range");
    }
    arch.width = static_cast<std::uint64_t>(w);
    arch.depth = 12 * arch.n2 + 14 + 2 * static_cast<std::uint64_t>(d + p);
    return arch;
}

//! Text serialization: layer sizes line terminated by ';', then one line per
//! layer holding the row-major weights followed by the biases, 17 significant
//! digits each.
inline void write_network(std::ostream& os, const Network& net) {
    for (std::size_t i = 0; i < net.layer_sizes.size(); ++i) {
        if (i) os << ',';
        os << net.layer_sizes[i];
    }
    os << ";\n";
    char buf[40];
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        bool first = true;
        for (Eigen::Index i = 0; i < net.weights[l].rows(); ++i) {
            for (Eigen::Index j = 0; j < net.weights[l].cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", net.weights[l](i, j));
                if (!first) os << ' ';
                os << buf;
                first = false;
            }
        }
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", net.biases[l](i));
            os << ' ' << buf;
        }
        os << '\n';
    }
}

inline Network read_network(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("network: missing header line");
    const std::size_t semi = header.find(';');
    if (semi == std::string::npos) throw std::runtime_error("network: header missing ';'");
    std::vector<int> sizes;
    std::stringstream hs(header.substr(0, semi));
    std::string tok;
    while (std::getline(hs, tok, ',')) sizes.push_back(std::stoi(tok));
    check_layer_sizes(sizes);

    Network net;
    net.layer_sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        std::string line;
        if (!std::getline(is, line)) throw std::runtime_error("network: missing layer line");
        std::stringstream ls(line);
        Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
        Eigen::VectorXd b(sizes[l + 1]);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                if (!(ls >> w(i, j))) throw std::runtime_error("network: truncated weights");
            }
        }
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            if (!(ls >> b(i))) throw std::runtime_error("network: truncated biases");
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

} // namespace dlmf
