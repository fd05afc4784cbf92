#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "capsep/errors.hpp"
#include "capsep/util.hpp"

namespace capsep::nn {

inline constexpr double kProbClampLo = 1e-7;
inline constexpr double kProbClampHi = 1.0 - 1e-7;

inline double clamp_prob(double p) {
    return p < kProbClampLo ? kProbClampLo : (p > kProbClampHi ? kProbClampHi : p);
}

/// Flat storage for every learnable tensor, addressed by (offset, shape).
/// Keeping one contiguous buffer makes optimizer steps and per-sample
/// gradient reduction simple and deterministic.
class ParamStore {
public:
    struct Entry {
        std::string name;
        std::vector<int> shape;
        int offset = 0;
        int size = 0;
    };

    int add(const std::string& name, std::vector<int> shape) {
        int sz = 1;
        for (int d : shape) sz *= d;
        Entry e{name, std::move(shape), static_cast<int>(data_.size()), sz};
        data_.resize(data_.size() + static_cast<std::size_t>(sz), 0.0);
        entries_.push_back(std::move(e));
        return static_cast<int>(entries_.size()) - 1;
    }

    int size() const { return static_cast<int>(data_.size()); }
    const std::vector<Entry>& entries() const { return entries_; }
    const Entry& entry(int id) const { return entries_[static_cast<std::size_t>(id)]; }

    double* raw() { return data_.data(); }
    const double* raw() const { return data_.data(); }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    std::span<double> values(int id) {
        const auto& e = entry(id);
        return {data_.data() + e.offset, static_cast<std::size_t>(e.size)};
    }
    std::span<const double> values(int id) const {
        const auto& e = entry(id);
        return {data_.data() + e.offset, static_cast<std::size_t>(e.size)};
    }

    /// Glorot-style uniform init over every tensor, in declaration order.
    void init_uniform(std::uint64_t seed) {
        std::mt19937_64 rng(splitmix64(seed));
        for (const auto& e : entries_) {
            int fan_in = e.shape.empty() ? 1 : e.shape.back();
            int fan_out = e.shape.empty() ? 1 : e.shape.front();
            if (e.shape.size() == 1) fan_in = 1; // bias
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (int i = 0; i < e.size; ++i) data_[e.offset + i] = u(rng);
        }
    }

private:
    std::vector<double> data_;
    std::vector<Entry> entries_;
};

enum class OutputAct { Identity, Sigmoid };

/// A dense multi-layer perceptron described by parameter-store entries.
/// dims = {in, hidden..., out}; rectifiers between layers.
struct Mlp {
    struct Layer {
        int w = -1, b = -1; // ParamStore entry ids; W is [out x in] row-major
        int in = 0, out = 0;
    };
    std::vector<Layer> layers;
    OutputAct out_act = OutputAct::Identity;

    int input_dim() const { return layers.front().in; }
    int output_dim() const { return layers.back().out; }
};

inline Mlp make_mlp(ParamStore& ps, const std::string& prefix, const std::vector<int>& dims,
                    OutputAct out_act) {
    Mlp mlp;
    mlp.out_act = out_act;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Mlp::Layer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.w = ps.add(prefix + ".w" + std::to_string(l), {layer.out, layer.in});
        layer.b = ps.add(prefix + ".b" + std::to_string(l), {layer.out});
        mlp.layers.push_back(layer);
    }
    return mlp;
}

/// Reverse-mode tape over vector-valued nodes. Values live in one arena so a
/// tape can be reset and reused without reallocating.
class Tape {
public:
    explicit Tape(const ParamStore& ps) : ps_(&ps) { pgrad_.assign(ps.size(), 0.0); }

    void reset() {
        nodes_.clear();
        lists_.clear();
        vals_.clear();
        bce_.clear();
        wsum_w_.clear();
    }

    void zero_param_grads() { std::fill(pgrad_.begin(), pgrad_.end(), 0.0); }
    const std::vector<double>& param_grads() const { return pgrad_; }

    int input(std::span<const double> x) {
        const int id = new_node(Op::Input, static_cast<int>(x.size()));
        std::copy(x.begin(), x.end(), val_ptr(id));
        return id;
    }

    int affine(const Mlp::Layer& layer, int x) {
        check_node(x);
        if (size_of(x) != layer.in)
            throw ShapeError("affine input of size " + std::to_string(size_of(x)) +
                             " does not match layer input " + std::to_string(layer.in));
        const int id = new_node(Op::Affine, layer.out);
        Node& n = nodes_.back();
        n.a = x;
        n.w_off = ps_->entry(layer.w).offset;
        n.b_off = ps_->entry(layer.b).offset;
        n.rows = layer.out;
        n.cols = layer.in;
        const double* w = ps_->raw() + n.w_off;
        const double* b = ps_->raw() + n.b_off;
        const double* xin = val_ptr(x);
        double* y = val_ptr(id);
        for (int r = 0; r < n.rows; ++r) {
            double s = b[r];
            const double* wr = w + static_cast<std::size_t>(r) * n.cols;
            for (int c = 0; c < n.cols; ++c) s += wr[c] * xin[c];
            y[r] = s;
        }
        return id;
    }

    int relu(int x) {
        check_node(x);
        const int id = new_node(Op::Relu, size_of(x));
        nodes_.back().a = x;
        const double* xin = val_ptr(x);
        double* y = val_ptr(id);
        for (int i = 0; i < size_of(id); ++i) y[i] = xin[i] > 0.0 ? xin[i] : 0.0;
        return id;
    }

    int sigmoid(int x) {
        check_node(x);
        const int id = new_node(Op::Sigmoid, size_of(x));
        nodes_.back().a = x;
        const double* xin = val_ptr(x);
        double* y = val_ptr(id);
        for (int i = 0; i < size_of(id); ++i) y[i] = 1.0 / (1.0 + std::exp(-xin[i]));
        return id;
    }

    int concat(std::span<const int> parts) {
        int total = 0;
        for (int p : parts) {
            check_node(p);
            total += size_of(p);
        }
        const int id = new_node(Op::Concat, total);
        nodes_.back().list_off = static_cast<int>(lists_.size());
        nodes_.back().list_len = static_cast<int>(parts.size());
        lists_.insert(lists_.end(), parts.begin(), parts.end());
        double* y = val_ptr(id);
        for (int p : parts) {
            const double* src = val_ptr(p);
            y = std::copy(src, src + size_of(p), y);
        }
        return id;
    }

    int concat(std::initializer_list<int> parts) {
        return concat(std::span<const int>(parts.begin(), parts.size()));
    }

    /// Permutation-invariant mean of equally sized nodes (pairwise sums).
    /// An empty list yields a zero vector of the given width.
    int mean(std::span<const int> parts, int width) {
        const int id = new_node(Op::Mean, width);
        nodes_.back().list_off = static_cast<int>(lists_.size());
        nodes_.back().list_len = static_cast<int>(parts.size());
        lists_.insert(lists_.end(), parts.begin(), parts.end());
        double* y = val_ptr(id);
        if (parts.empty()) {
            std::fill(y, y + width, 0.0);
            return id;
        }
        std::vector<double> buf(parts.size());
        for (int c = 0; c < width; ++c) {
            for (std::size_t k = 0; k < parts.size(); ++k) {
                if (size_of(parts[k]) != width) throw ShapeError("mean over mixed widths");
                buf[k] = val_ptr(parts[k])[c];
            }
            y[c] = pairwise_sum(buf) / static_cast<double>(parts.size());
        }
        return id;
    }

    /// Sum over scalar probability nodes of the positive-weighted BCE terms:
    ///   -(rho * y * log p + (1 - y) * log(1 - p)), p clamped away from {0,1}.
    int bce_sum(std::span<const int> p_nodes, std::span<const char> labels, double rho) {
        if (p_nodes.size() != labels.size())
            throw ShapeError("bce: " + std::to_string(p_nodes.size()) + " probabilities vs " +
                             std::to_string(labels.size()) + " labels");
        const int id = new_node(Op::BceSum, 1);
        nodes_.back().list_off = static_cast<int>(lists_.size());
        nodes_.back().list_len = static_cast<int>(p_nodes.size());
        nodes_.back().aux = static_cast<int>(bce_.size());
        nodes_.back().rho = rho;
        lists_.insert(lists_.end(), p_nodes.begin(), p_nodes.end());
        bce_.insert(bce_.end(), labels.begin(), labels.end());
        double s = 0.0;
        for (std::size_t k = 0; k < p_nodes.size(); ++k) {
            check_node(p_nodes[k]);
            if (size_of(p_nodes[k]) != 1) throw ShapeError("bce expects scalar probabilities");
            const double p = clamp_prob(*val_ptr(p_nodes[k]));
            s -= labels[k] ? rho * std::log(p) : std::log(1.0 - p);
        }
        *val_ptr(id) = s;
        return id;
    }

    /// Scalar combination sum_k w_k * x_k of scalar nodes.
    int weighted_sum(std::span<const int> xs, std::span<const double> ws) {
        if (xs.size() != ws.size()) throw ShapeError("weighted_sum length mismatch");
        const int id = new_node(Op::WeightedSum, 1);
        nodes_.back().list_off = static_cast<int>(lists_.size());
        nodes_.back().list_len = static_cast<int>(xs.size());
        nodes_.back().aux = static_cast<int>(wsum_w_.size());
        lists_.insert(lists_.end(), xs.begin(), xs.end());
        wsum_w_.insert(wsum_w_.end(), ws.begin(), ws.end());
        double s = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            check_node(xs[k]);
            if (size_of(xs[k]) != 1) throw ShapeError("weighted_sum expects scalars");
            s += ws[k] * *val_ptr(xs[k]);
        }
        *val_ptr(id) = s;
        return id;
    }

    std::span<const double> values(int id) const {
        check_node(id);
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        return {vals_.data() + n.off, static_cast<std::size_t>(n.size)};
    }

    double scalar(int id) const { return values(id)[0]; }

    /// Reverse sweep from a scalar node; parameter gradients accumulate into
    /// param_grads() (call zero_param_grads() between independent samples).
    void backward(int loss) {
        if (nodes_.empty()) throw StateError("backward called before any forward pass");
        check_node(loss);
        if (size_of(loss) != 1) throw StateError("backward target must be scalar");
        grads_.assign(vals_.size(), 0.0);
        grads_[nodes_[static_cast<std::size_t>(loss)].off] = 1.0;

        for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
            const Node& n = nodes_[static_cast<std::size_t>(id)];
            const double* g = grads_.data() + n.off;
            switch (n.op) {
                case Op::Input:
                    break;
                case Op::Affine: {
                    const double* w = ps_->raw() + n.w_off;
                    const double* xin = val_ptr(n.a);
                    double* gx = grads_.data() + nodes_[n.a].off;
                    double* gw = pgrad_.data() + n.w_off;
                    double* gb = pgrad_.data() + n.b_off;
                    for (int r = 0; r < n.rows; ++r) {
                        const double gr = g[r];
                        if (gr == 0.0) continue;
                        const double* wr = w + static_cast<std::size_t>(r) * n.cols;
                        double* gwr = gw + static_cast<std::size_t>(r) * n.cols;
                        for (int c = 0; c < n.cols; ++c) {
                            gx[c] += wr[c] * gr;
                            gwr[c] += xin[c] * gr;
                        }
                        gb[r] += gr;
                    }
                    break;
                }
                case Op::Relu: {
                    const double* xin = val_ptr(n.a);
                    double* gx = grads_.data() + nodes_[n.a].off;
                    for (int i = 0; i < n.size; ++i)
                        if (xin[i] > 0.0) gx[i] += g[i];
                    break;
                }
                case Op::Sigmoid: {
                    const double* y = vals_.data() + n.off;
                    double* gx = grads_.data() + nodes_[n.a].off;
                    for (int i = 0; i < n.size; ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
                    break;
                }
                case Op::Concat: {
                    int at = 0;
                    for (int k = 0; k < n.list_len; ++k) {
                        const int part = lists_[n.list_off + k];
                        double* gx = grads_.data() + nodes_[part].off;
                        for (int i = 0; i < nodes_[part].size; ++i) gx[i] += g[at + i];
                        at += nodes_[part].size;
                    }
                    break;
                }
                case Op::Mean: {
                    if (n.list_len == 0) break;
                    const double inv = 1.0 / n.list_len;
                    for (int k = 0; k < n.list_len; ++k) {
                        const int part = lists_[n.list_off + k];
                        double* gx = grads_.data() + nodes_[part].off;
                        for (int i = 0; i < n.size; ++i) gx[i] += g[i] * inv;
                    }
                    break;
                }
                case Op::BceSum: {
                    const double gl = g[0];
                    for (int k = 0; k < n.list_len; ++k) {
                        const int part = lists_[n.list_off + k];
                        const double p_raw = *val_ptr(part);
                        if (p_raw < kProbClampLo || p_raw > kProbClampHi) continue;
                        const double p = p_raw;
                        const char y = bce_[n.aux + k];
                        const double d = y ? -n.rho / p : 1.0 / (1.0 - p);
                        grads_[nodes_[part].off] += gl * d;
                    }
                    break;
                }
                case Op::WeightedSum: {
                    const double gl = g[0];
                    for (int k = 0; k < n.list_len; ++k) {
                        const int part = lists_[n.list_off + k];
                        grads_[nodes_[part].off] += gl * wsum_w_[n.aux + k];
                    }
                    break;
                }
            }
        }
    }

    /// Gradient of an input node after backward (for checks).
    std::span<const double> input_grad(int id) const {
        check_node(id);
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        return {grads_.data() + n.off, static_cast<std::size_t>(n.size)};
    }

private:
    enum class Op : char { Input, Affine, Relu, Sigmoid, Concat, Mean, BceSum, WeightedSum };

    struct Node {
        Op op;
        int off = 0, size = 0;
        int a = -1;
        int w_off = -1, b_off = -1, rows = 0, cols = 0;
        int list_off = 0, list_len = 0;
        int aux = 0;
        double rho = 1.0;
    };

    const ParamStore* ps_;
    std::vector<Node> nodes_;
    std::vector<int> lists_;
    std::vector<char> bce_;
    std::vector<double> wsum_w_;
    std::vector<double> vals_, grads_;
    std::vector<double> pgrad_;

    int new_node(Op op, int size) {
        Node n;
        n.op = op;
        n.off = static_cast<int>(vals_.size());
        n.size = size;
        vals_.resize(vals_.size() + static_cast<std::size_t>(size), 0.0);
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    double* val_ptr(int id) { return vals_.data() + nodes_[static_cast<std::size_t>(id)].off; }
    const double* val_ptr(int id) const {
        return vals_.data() + nodes_[static_cast<std::size_t>(id)].off;
    }
    int size_of(int id) const { return nodes_[static_cast<std::size_t>(id)].size; }
    void check_node(int id) const {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw StateError("tape node " + std::to_string(id) + " does not exist");
    }
};

/// Run an MLP on the tape: affine/rectifier chain plus the output activation.
inline int mlp_forward(Tape& tape, const Mlp& mlp, int x) {
    int h = x;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        h = tape.affine(mlp.layers[l], h);
        if (l + 1 < mlp.layers.size()) h = tape.relu(h);
    }
    if (mlp.out_act == OutputAct::Sigmoid) h = tape.sigmoid(h);
    return h;
}

/// Plain-value convenience used by tests and inference helpers.
inline std::vector<double> mlp_forward(const ParamStore& ps, const Mlp& mlp,
                                       std::span<const double> x) {
    Tape tape(ps);
    const int in = tape.input(x);
    const int out = mlp_forward(tape, mlp, in);
    auto v = tape.values(out);
    return {v.begin(), v.end()};
}

/// Mean-reduced positive-weight binary cross entropy on plain values.
inline double bce_pos_weight(std::span<const double> p, std::span<const char> y, double rho) {
    if (p.size() != y.size()) throw ShapeError("bce_pos_weight length mismatch");
    if (p.empty()) throw ValidationError("bce_pos_weight: empty input");
    if (rho <= 0.0) throw ValidationError("bce_pos_weight: rho must be positive");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = clamp_prob(p[i]);
        s -= y[i] ? rho * std::log(q) : std::log(1.0 - q);
    }
    return s / static_cast<double>(p.size());
}

/// Adam with a cosine-annealing warm-restart learning-rate schedule.
struct AdamState {
    double base_lr = 5e-4;
    int period = 32; // T_0 in optimizer steps
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;
    std::vector<double> m, v;

    explicit AdamState(int n_params = 0, double lr = 5e-4, int t0 = 32)
        : base_lr(lr), period(t0), m(n_params, 0.0), v(n_params, 0.0) {}

    double learning_rate(long at_step) const {
        const long t = at_step % period;
        return 0.5 * base_lr *
               (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) /
                               static_cast<double>(period)));
    }

    void apply(ParamStore& ps, std::span<const double> grads) {
        if (static_cast<int>(grads.size()) != ps.size() ||
            static_cast<int>(m.size()) != ps.size())
            throw ShapeError("adam state does not match parameter store");
        const double lr = learning_rate(step);
        ++step;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        double* p = ps.raw();
        for (int i = 0; i < ps.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            p[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
};

inline void adam_step(AdamState& state, ParamStore& ps, std::span<const double> grads) {
    state.apply(ps, grads);
}

/// Versioned JSON checkpoint of every named tensor. Loading validates each
/// tensor's shape and fails on any mismatch.
inline void save_checkpoint(const ParamStore& ps, std::ostream& out) {
    nlohmann::json j;
    j["format"] = "capsep-params";
    j["version"] = 1;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& e : ps.entries()) {
        nlohmann::json t;
        t["name"] = e.name;
        t["shape"] = e.shape;
        const double* d = ps.raw() + e.offset;
        t["data"] = std::vector<double>(d, d + e.size);
        tensors.push_back(std::move(t));
    }
    j["tensors"] = std::move(tensors);
    out << j.dump() << "\n";
}

inline void load_checkpoint(ParamStore& ps, std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint parse failure: ") + e.what());
    }
    if (j.value("format", "") != "capsep-params")
        throw FormatError("not a parameter checkpoint");
    if (j.value("version", 0) != 1) throw FormatError("unsupported checkpoint version");

    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
    for (const auto& e : ps.entries()) {
        auto it = by_name.find(e.name);
        if (it == by_name.end()) throw FormatError("checkpoint misses tensor " + e.name);
        const auto& t = *it->second;
        const auto shape = t.at("shape").get<std::vector<int>>();
        if (shape != e.shape)
            throw ShapeError("tensor " + e.name + " has mismatched checkpoint shape");
        const auto data = t.at("data").get<std::vector<double>>();
        if (static_cast<int>(data.size()) != e.size)
            throw ShapeError("tensor " + e.name + " has mismatched data length");
        std::copy(data.begin(), data.end(), ps.raw() + e.offset);
    }
}

inline void save_checkpoint_file(const ParamStore& ps, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write checkpoint " + path);
    save_checkpoint(ps, out);
}

inline void load_checkpoint_file(ParamStore& ps, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read checkpoint " + path);
    load_checkpoint(ps, in);
}

} // namespace capsep::nn
