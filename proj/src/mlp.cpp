#include "termrec/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "termrec/rng.hpp"

namespace termrec {

size_t MlpNetwork::parameter_count() const {
    size_t n = 0;
    for (size_t l = 0; l < weights.size(); ++l)
        n += weights[l].rows() * weights[l].cols() + biases[l].size();
    return n;
}

MlpNetwork init_network(const std::vector<size_t>& layer_sizes, uint64_t seed) {
    if (layer_sizes.size() < 2) throw BadShape("init_network: need at least two layers");
    for (size_t s : layer_sizes)
        if (s == 0) throw BadShape("init_network: zero-width layer");
    MlpNetwork net;
    net.layer_sizes = layer_sizes;
    Rng rng(seed);
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        size_t fan_in = layer_sizes[l];
        size_t fan_out = layer_sizes[l + 1];
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data()) v = rng.uniform(-limit, limit);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

MlpNetwork make_autoencoder(size_t input_dim, const std::vector<size_t>& encoder_hidden,
                            uint64_t seed) {
    if (encoder_hidden.empty()) throw BadShape("make_autoencoder: no hidden layers");
    std::vector<size_t> sizes;
    sizes.push_back(input_dim);
    for (size_t s : encoder_hidden) sizes.push_back(s);
    for (size_t i = encoder_hidden.size() - 1; i-- > 0;) sizes.push_back(encoder_hidden[i]);
    sizes.push_back(input_dim);
    MlpNetwork net = init_network(sizes, seed);
    net.embedding_layer = encoder_hidden.size();
    return net;
}

std::vector<std::vector<double>> forward_activations(const MlpNetwork& net,
                                                     const std::vector<double>& x) {
    if (x.size() != net.input_dim()) throw DimensionMismatch("forward: input dimension mismatch");
    std::vector<std::vector<double>> acts;
    acts.reserve(net.layer_count() + 1);
    acts.push_back(x);
    for (size_t l = 0; l < net.layer_count(); ++l) {
        const Matrix& w = net.weights[l];
        const std::vector<double>& prev = acts.back();
        std::vector<double> out(w.rows());
        for (size_t r = 0; r < w.rows(); ++r) {
            double z = net.biases[l][r];
            const double* wr = w.row(r);
            for (size_t c = 0; c < w.cols(); ++c) z += wr[c] * prev[c];
            out[r] = z;
        }
        if (l + 1 < net.layer_count())  // hidden: ReLU; output: linear
            for (double& v : out) v = v > 0.0 ? v : 0.0;
        acts.push_back(std::move(out));
    }
    return acts;
}

AeForward ae_forward(const MlpNetwork& net, const std::vector<double>& x) {
    auto acts = forward_activations(net, x);
    AeForward out;
    out.embedding = acts[net.embedding_layer];
    out.reconstruction = acts.back();
    return out;
}

double ae_loss(const MlpNetwork& net, const Matrix& rows) {
    if (rows.rows() == 0) throw EmptyInput("ae_loss: no rows");
    double q = static_cast<double>(net.output_dim());
    double total = 0.0;
    std::vector<double> x(rows.cols());
    for (size_t r = 0; r < rows.rows(); ++r) {
        x.assign(rows.row(r), rows.row(r) + rows.cols());
        auto acts = forward_activations(net, x);
        const auto& xhat = acts.back();
        double s = 0.0;
        for (size_t c = 0; c < x.size(); ++c) {
            double d = x[c] - xhat[c];
            s += d * d;
        }
        total += s / q;
    }
    return total / static_cast<double>(rows.rows());
}

namespace {

struct Gradients {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;

    explicit Gradients(const MlpNetwork& net) {
        for (size_t l = 0; l < net.layer_count(); ++l) {
            dw.emplace_back(net.weights[l].rows(), net.weights[l].cols());
            db.emplace_back(net.biases[l].size(), 0.0);
        }
    }
    void reset() {
        for (auto& m : dw) std::fill(m.data().begin(), m.data().end(), 0.0);
        for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
    }
};

// Backprop for one sample given the loss gradient at the (linear) output.
void accumulate_backprop(const MlpNetwork& net, const std::vector<std::vector<double>>& acts,
                         std::vector<double> delta, Gradients& g) {
    for (size_t l = net.layer_count(); l-- > 0;) {
        const std::vector<double>& prev = acts[l];
        for (size_t r = 0; r < delta.size(); ++r) {
            g.db[l][r] += delta[r];
            double* gw = g.dw[l].row(r);
            for (size_t c = 0; c < prev.size(); ++c) gw[c] += delta[r] * prev[c];
        }
        if (l == 0) break;
        std::vector<double> prev_delta(prev.size(), 0.0);
        const Matrix& w = net.weights[l];
        for (size_t r = 0; r < delta.size(); ++r) {
            const double* wr = w.row(r);
            for (size_t c = 0; c < prev.size(); ++c) prev_delta[c] += wr[c] * delta[r];
        }
        // ReLU derivative via the stored post-activation.
        for (size_t c = 0; c < prev.size(); ++c)
            if (prev[c] <= 0.0) prev_delta[c] = 0.0;
        delta = std::move(prev_delta);
    }
}

void sgd_step(MlpNetwork& net, const Gradients& g, double lr, double inv_batch) {
    for (size_t l = 0; l < net.layer_count(); ++l) {
        auto& wd = net.weights[l].data();
        const auto& gd = g.dw[l].data();
        for (size_t i = 0; i < wd.size(); ++i) wd[i] -= lr * gd[i] * inv_batch;
        for (size_t i = 0; i < net.biases[l].size(); ++i)
            net.biases[l][i] -= lr * g.db[l][i] * inv_batch;
    }
}

}  // namespace

std::vector<double> ae_gradient(const MlpNetwork& net, const Matrix& rows) {
    Gradients g(net);
    double q = static_cast<double>(net.output_dim());
    double inv_n = 1.0 / static_cast<double>(rows.rows());
    std::vector<double> x(rows.cols());
    for (size_t r = 0; r < rows.rows(); ++r) {
        x.assign(rows.row(r), rows.row(r) + rows.cols());
        auto acts = forward_activations(net, x);
        std::vector<double> delta(net.output_dim());
        for (size_t c = 0; c < delta.size(); ++c)
            delta[c] = 2.0 / q * (acts.back()[c] - x[c]) * inv_n;
        accumulate_backprop(net, acts, std::move(delta), g);
    }
    std::vector<double> flat;
    for (size_t l = 0; l < net.layer_count(); ++l) {
        flat.insert(flat.end(), g.dw[l].data().begin(), g.dw[l].data().end());
        flat.insert(flat.end(), g.db[l].begin(), g.db[l].end());
    }
    return flat;
}

std::vector<double> flatten_parameters(const MlpNetwork& net) {
    std::vector<double> flat;
    flat.reserve(net.parameter_count());
    for (size_t l = 0; l < net.layer_count(); ++l) {
        flat.insert(flat.end(), net.weights[l].data().begin(), net.weights[l].data().end());
        flat.insert(flat.end(), net.biases[l].begin(), net.biases[l].end());
    }
    return flat;
}

void unflatten_parameters(MlpNetwork& net, const std::vector<double>& flat) {
    size_t pos = 0;
    for (size_t l = 0; l < net.layer_count(); ++l) {
        auto& wd = net.weights[l].data();
        std::copy(flat.begin() + static_cast<ptrdiff_t>(pos),
                  flat.begin() + static_cast<ptrdiff_t>(pos + wd.size()), wd.begin());
        pos += wd.size();
        std::copy(flat.begin() + static_cast<ptrdiff_t>(pos),
                  flat.begin() + static_cast<ptrdiff_t>(pos + net.biases[l].size()),
                  net.biases[l].begin());
        pos += net.biases[l].size();
    }
    if (pos != flat.size()) throw BadShape("unflatten_parameters: size mismatch");
}

namespace {

// Shared mini-batch SGD loop; output_delta produces the per-sample loss
// gradient at the output layer, epoch_loss evaluates the training loss.
template <typename DeltaFn, typename LossFn>
std::vector<double> sgd_train(MlpNetwork& net, size_t n_rows, const TrainConfig& cfg,
                              DeltaFn&& output_delta, LossFn&& epoch_loss) {
    if (n_rows == 0) throw EmptyInput("train: no rows");
    Rng rng(cfg.seed);
    std::vector<size_t> order(n_rows);
    std::iota(order.begin(), order.end(), 0);
    Gradients g(net);
    std::vector<double> curve;
    double best = std::numeric_limits<double>::infinity();
    size_t stalled = 0;
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < n_rows; start += cfg.batch_size) {
            size_t end = std::min(start + cfg.batch_size, n_rows);
            g.reset();
            for (size_t i = start; i < end; ++i) output_delta(order[i], g);
            sgd_step(net, g, cfg.learning_rate, 1.0 / static_cast<double>(end - start));
        }
        double loss = epoch_loss();
        if (!std::isfinite(loss))
            throw NonFinite("training loss diverged at epoch " + std::to_string(epoch));
        curve.push_back(loss);
        if (best - loss < cfg.tolerance) {
            if (++stalled >= cfg.early_stop_patience) break;
        } else {
            stalled = 0;
        }
        best = std::min(best, loss);
    }
    return curve;
}

}  // namespace

std::vector<double> train_autoencoder(MlpNetwork& net, const Matrix& rows,
                                      const TrainConfig& cfg) {
    if (rows.cols() != net.input_dim())
        throw DimensionMismatch("train_autoencoder: input dimension mismatch");
    double q = static_cast<double>(net.output_dim());
    auto delta_fn = [&](size_t row, auto& g) {
        std::vector<double> x(rows.row(row), rows.row(row) + rows.cols());
        auto acts = forward_activations(net, x);
        std::vector<double> delta(net.output_dim());
        for (size_t c = 0; c < delta.size(); ++c) delta[c] = 2.0 / q * (acts.back()[c] - x[c]);
        accumulate_backprop(net, acts, std::move(delta), g);
    };
    return sgd_train(net, rows.rows(), cfg, delta_fn, [&] { return ae_loss(net, rows); });
}

Matrix encode_rows(const MlpNetwork& net, const Matrix& rows) {
    if (net.embedding_layer == 0) throw BadShape("encode_rows: network has no bottleneck");
    Matrix out(rows.rows(), net.layer_sizes[net.embedding_layer]);
    std::vector<double> x(rows.cols());
    for (size_t r = 0; r < rows.rows(); ++r) {
        x.assign(rows.row(r), rows.row(r) + rows.cols());
        auto acts = forward_activations(net, x);
        const auto& emb = acts[net.embedding_layer];
        std::copy(emb.begin(), emb.end(), out.row(r));
    }
    return out;
}

namespace {

std::vector<double> softmax(const std::vector<double>& z) {
    double mx = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace

std::vector<double> train_softmax(MlpNetwork& net, const Matrix& rows,
                                  const std::vector<int>& labels, size_t n_classes,
                                  const TrainConfig& cfg) {
    if (rows.rows() != labels.size()) throw LengthMismatch("train_softmax: rows/labels mismatch");
    if (net.output_dim() != n_classes) throw DimensionMismatch("train_softmax: output dim");
    auto delta_fn = [&](size_t row, auto& g) {
        std::vector<double> x(rows.row(row), rows.row(row) + rows.cols());
        auto acts = forward_activations(net, x);
        std::vector<double> delta = softmax(acts.back());
        delta[static_cast<size_t>(labels[row])] -= 1.0;
        accumulate_backprop(net, acts, std::move(delta), g);
    };
    auto loss_fn = [&] {
        double total = 0.0;
        std::vector<double> x(rows.cols());
        for (size_t r = 0; r < rows.rows(); ++r) {
            x.assign(rows.row(r), rows.row(r) + rows.cols());
            auto acts = forward_activations(net, x);
            auto p = softmax(acts.back());
            total -= std::log(std::max(p[static_cast<size_t>(labels[r])], 1e-300));
        }
        return total / static_cast<double>(rows.rows());
    };
    return sgd_train(net, rows.rows(), cfg, delta_fn, loss_fn);
}

Matrix predict_softmax(const MlpNetwork& net, const Matrix& rows) {
    Matrix out(rows.rows(), net.output_dim());
    std::vector<double> x(rows.cols());
    for (size_t r = 0; r < rows.rows(); ++r) {
        x.assign(rows.row(r), rows.row(r) + rows.cols());
        auto acts = forward_activations(net, x);
        auto p = softmax(acts.back());
        std::copy(p.begin(), p.end(), out.row(r));
    }
    return out;
}

}  // namespace termrec
