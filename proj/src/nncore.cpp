#include "stress/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stress/error.hpp"

namespace stress::nn {

double elu(double x, double alpha) { return x < 0 ? alpha * (std::exp(x) - 1.0) : x; }

double elu_prime(double x, double alpha) { return x < 0 ? alpha * std::exp(x) : 1.0; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> glorot_init(int fan_out, int fan_in, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
    for (auto& v : w) v = dist(rng);
    return w;
}

void glorot_init(DenseLayer& layer, std::mt19937_64& rng) {
    layer.params.assign(layer.param_count(), 0.0);
    auto w = glorot_init(layer.out, layer.in, rng);
    std::copy(w.begin(), w.end(), layer.params.begin());
}

MtlNetwork make_mtl_network(const std::vector<std::string>& task_ids, std::uint64_t seed,
                            int input_dim, int shared_units, int task_units) {
    std::mt19937_64 rng(seed);
    MtlNetwork net;
    net.shared = DenseLayer{input_dim, shared_units, Activation::elu, {}};
    glorot_init(net.shared, rng);
    // Tasks are initialized in sorted order so the layout is a pure function
    // of (task id set, seed).
    std::vector<std::string> ids = task_ids;
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) {
        DenseLayer task{shared_units, task_units, Activation::elu, {}};
        glorot_init(task, rng);
        DenseLayer head{task_units, 1, Activation::sigmoid, {}};
        glorot_init(head, rng);
        net.task_layers.emplace(id, std::move(task));
        net.heads.emplace(id, std::move(head));
    }
    return net;
}

namespace {

// Affine part only; activation applied by the caller.
void affine(const DenseLayer& l, std::span<const double> x, std::vector<double>& z) {
    z.resize(static_cast<std::size_t>(l.out));
    for (int r = 0; r < l.out; ++r) {
        double s = l.b(r);
        const double* wrow = l.params.data() + static_cast<std::size_t>(r) * l.in;
        for (int c = 0; c < l.in; ++c) s += wrow[c] * x[static_cast<std::size_t>(c)];
        z[static_cast<std::size_t>(r)] = s;
    }
}

struct Trace {
    std::vector<double> z1, a1;  // shared
    std::vector<double> z2, a2;  // task layer
    double z3 = 0.0;
    double p = 0.5;
};

Trace run_forward(const MtlNetwork& net, std::span<const double> x, const DenseLayer& task,
                  const DenseLayer& head) {
    Trace tr;
    affine(net.shared, x, tr.z1);
    tr.a1.resize(tr.z1.size());
    for (std::size_t i = 0; i < tr.z1.size(); ++i) tr.a1[i] = elu(tr.z1[i], net.elu_alpha);
    affine(task, tr.a1, tr.z2);
    tr.a2.resize(tr.z2.size());
    for (std::size_t i = 0; i < tr.z2.size(); ++i) tr.a2[i] = elu(tr.z2[i], net.elu_alpha);
    std::vector<double> z3;
    affine(head, tr.a2, z3);
    tr.z3 = z3[0];
    tr.p = sigmoid(tr.z3);
    return tr;
}

const DenseLayer& task_layer_of(const MtlNetwork& net, const std::string& task_id) {
    auto it = net.task_layers.find(task_id);
    if (it == net.task_layers.end()) raise(Errc::unknown_task, task_id);
    return it->second;
}

double weight_sq_norm(const DenseLayer& l) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.weight_count(); ++i) s += l.params[i] * l.params[i];
    return s;
}

}  // namespace

double forward(const MtlNetwork& net, std::span<const double> x, const std::string& task_id) {
    const DenseLayer& task = task_layer_of(net, task_id);
    const DenseLayer& head = net.heads.at(task_id);
    if (static_cast<int>(x.size()) != net.shared.in)
        raise(Errc::shape_mismatch, "input dim " + std::to_string(x.size()) + " vs " +
                                        std::to_string(net.shared.in));
    return run_forward(net, x, task, head).p;
}

double bce_loss(double p, int y, const MtlNetwork& net, const std::string& task_id,
                double l2_lambda) {
    const DenseLayer& task = task_layer_of(net, task_id);
    const DenseLayer& head = net.heads.at(task_id);
    const double pc = std::clamp(p, kProbClip, 1.0 - kProbClip);
    double loss = -(y * std::log(pc) + (1 - y) * std::log(1.0 - pc));
    if (l2_lambda != 0.0)
        loss += l2_lambda * (weight_sq_norm(task) + weight_sq_norm(head));
    return loss;
}

TaskGradients backward(const MtlNetwork& net, std::span<const double> x, int y,
                       const std::string& task_id, double l2_lambda) {
    const DenseLayer& task = task_layer_of(net, task_id);
    const DenseLayer& head = net.heads.at(task_id);
    Trace tr = run_forward(net, x, task, head);

    TaskGradients g;
    g.shared.assign(net.shared.param_count(), 0.0);
    g.task.assign(task.param_count(), 0.0);
    g.head.assign(head.param_count(), 0.0);

    // d loss / d z3. Inside the clip band this is the usual p - y; outside
    // it the clipped loss is locally flat.
    double dz3 = 0.0;
    if (tr.p > kProbClip && tr.p < 1.0 - kProbClip) dz3 = tr.p - y;

    // Head: dW3 = dz3 * a2^T (+ L2), db3 = dz3.
    const int n_task = task.out;
    for (int c = 0; c < n_task; ++c)
        g.head[static_cast<std::size_t>(c)] = dz3 * tr.a2[static_cast<std::size_t>(c)];
    g.head[head.weight_count()] = dz3;

    // Back through the task layer.
    std::vector<double> dz2(static_cast<std::size_t>(n_task));
    for (int r = 0; r < n_task; ++r)
        dz2[static_cast<std::size_t>(r)] =
            dz3 * head.w(0, r) * elu_prime(tr.z2[static_cast<std::size_t>(r)], net.elu_alpha);
    const int n_shared = net.shared.out;
    for (int r = 0; r < n_task; ++r) {
        double* grow = g.task.data() + static_cast<std::size_t>(r) * n_shared;
        const double d = dz2[static_cast<std::size_t>(r)];
        for (int c = 0; c < n_shared; ++c) grow[c] = d * tr.a1[static_cast<std::size_t>(c)];
        g.task[task.weight_count() + static_cast<std::size_t>(r)] = d;
    }

    // Back through the shared layer.
    std::vector<double> dz1(static_cast<std::size_t>(n_shared), 0.0);
    for (int r = 0; r < n_task; ++r) {
        const double d = dz2[static_cast<std::size_t>(r)];
        const double* wrow = task.params.data() + static_cast<std::size_t>(r) * n_shared;
        for (int c = 0; c < n_shared; ++c) dz1[static_cast<std::size_t>(c)] += d * wrow[c];
    }
    for (int r = 0; r < n_shared; ++r)
        dz1[static_cast<std::size_t>(r)] *=
            elu_prime(tr.z1[static_cast<std::size_t>(r)], net.elu_alpha);
    const int n_in = net.shared.in;
    for (int r = 0; r < n_shared; ++r) {
        double* grow = g.shared.data() + static_cast<std::size_t>(r) * n_in;
        const double d = dz1[static_cast<std::size_t>(r)];
        for (int c = 0; c < n_in; ++c) grow[c] = d * x[static_cast<std::size_t>(c)];
        g.shared[net.shared.weight_count() + static_cast<std::size_t>(r)] = d;
    }

    // L2 penalty acts on task-specific weights only, never on biases or the
    // shared trunk.
    if (l2_lambda != 0.0) {
        for (std::size_t i = 0; i < task.weight_count(); ++i)
            g.task[i] += 2.0 * l2_lambda * task.params[i];
        for (std::size_t i = 0; i < head.weight_count(); ++i)
            g.head[i] += 2.0 * l2_lambda * head.params[i];
    }
    return g;
}

AdamState make_adam_state(std::size_t n_params, double lr, double beta1, double beta2,
                          double eps) {
    AdamState st;
    st.m.assign(n_params, 0.0);
    st.v.assign(n_params, 0.0);
    st.lr = lr;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.eps = eps;
    return st;
}

void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        raise(Errc::shape_mismatch, "adam_step: params " + std::to_string(params.size()) +
                                        ", grads " + std::to_string(grads.size()) +
                                        ", state " + std::to_string(state.m.size()));
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

namespace {

struct TaskTrainState {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    std::vector<std::size_t> order;  // shuffled view over train_idx
    std::size_t cursor = 0;
    AdamState adam_task;
    AdamState adam_head;
};

double validation_loss(const MtlNetwork& net, const MultiTaskData& data,
                       const std::map<std::string, TaskTrainState>& states) {
    double sum = 0.0;
    std::size_t n_tasks = 0;
    for (const auto& [id, st] : states) {
        const TaskData& td = data.at(id);
        double task_sum = 0.0;
        for (std::size_t idx : st.val_idx) {
            double p = forward(net, td.x[idx], id);
            task_sum += bce_loss(p, td.y[idx], net, id, 0.0);
        }
        sum += task_sum / static_cast<double>(st.val_idx.size());
        ++n_tasks;
    }
    return sum / static_cast<double>(n_tasks);
}

}  // namespace

TrainLog train_mtl(MtlNetwork& net, const MultiTaskData& data, const TrainConfig& cfg) {
    if (data.empty()) raise(Errc::task_too_small, "no tasks");
    for (const auto& [id, td] : data) {
        if (!net.has_task(id)) raise(Errc::unknown_task, id);
        if (td.x.size() < 5)
            raise(Errc::task_too_small,
                  id + " has " + std::to_string(td.x.size()) + " windows, need >= 5");
        if (td.x.size() != td.y.size()) raise(Errc::shape_mismatch, "x/y length for " + id);
    }

    std::mt19937_64 rng(cfg.seed);
    std::map<std::string, TaskTrainState> states;
    std::size_t total_train = 0;
    for (const auto& [id, td] : data) {
        TaskTrainState st;
        std::vector<std::size_t> idx(td.x.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_val = static_cast<std::size_t>(
            std::llround(cfg.val_fraction * static_cast<double>(idx.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, idx.size() - 1);
        st.val_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        st.train_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
        st.order = st.train_idx;
        std::shuffle(st.order.begin(), st.order.end(), rng);
        st.adam_task = make_adam_state(net.task_layers.at(id).param_count(), cfg.lr, cfg.beta1,
                                       cfg.beta2, cfg.eps);
        st.adam_head = make_adam_state(net.heads.at(id).param_count(), cfg.lr, cfg.beta1,
                                       cfg.beta2, cfg.eps);
        total_train += st.train_idx.size();
        states.emplace(id, std::move(st));
    }
    AdamState adam_shared =
        make_adam_state(net.shared.param_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

    std::vector<std::string> ids;
    for (const auto& [id, _] : states) ids.push_back(id);
    std::uniform_int_distribution<std::size_t> pick_task(0, ids.size() - 1);
    const std::size_t steps_per_epoch = std::max<std::size_t>(
        1, (total_train + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size));

    // Best-epoch snapshot for restoration at the end.
    auto snapshot = [&]() {
        std::vector<std::vector<double>> s;
        s.push_back(net.shared.params);
        for (const auto& [id, l] : net.task_layers) s.push_back(l.params);
        for (const auto& [id, l] : net.heads) s.push_back(l.params);
        return s;
    };
    auto restore = [&](const std::vector<std::vector<double>>& s) {
        std::size_t k = 0;
        net.shared.params = s[k++];
        for (auto& [id, l] : net.task_layers) l.params = s[k++];
        for (auto& [id, l] : net.heads) l.params = s[k++];
    };

    TrainLog log;
    std::vector<std::vector<double>> best_params = snapshot();
    double best_val = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;

    std::vector<double> g_shared(net.shared.param_count());
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            const std::string& id = ids[pick_task(rng)];
            TaskTrainState& st = states.at(id);
            const TaskData& td = data.at(id);
            DenseLayer& task = net.task_layers.at(id);
            DenseLayer& head = net.heads.at(id);

            const std::size_t batch =
                std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                      st.train_idx.size());
            std::fill(g_shared.begin(), g_shared.end(), 0.0);
            std::vector<double> g_task(task.param_count(), 0.0);
            std::vector<double> g_head(head.param_count(), 0.0);
            for (std::size_t b = 0; b < batch; ++b) {
                if (st.cursor >= st.order.size()) {
                    std::shuffle(st.order.begin(), st.order.end(), rng);
                    st.cursor = 0;
                }
                std::size_t idx = st.order[st.cursor++];
                TaskGradients g = backward(net, td.x[idx], td.y[idx], id, 0.0);
                for (std::size_t i = 0; i < g_shared.size(); ++i) g_shared[i] += g.shared[i];
                for (std::size_t i = 0; i < g_task.size(); ++i) g_task[i] += g.task[i];
                for (std::size_t i = 0; i < g_head.size(); ++i) g_head[i] += g.head[i];
            }
            const double inv = 1.0 / static_cast<double>(batch);
            for (auto& v : g_shared) v *= inv;
            for (auto& v : g_task) v *= inv;
            for (auto& v : g_head) v *= inv;
            // Mean of per-example losses keeps the full L2 term once.
            for (std::size_t i = 0; i < task.weight_count(); ++i)
                g_task[i] += 2.0 * cfg.l2_lambda * task.params[i];
            for (std::size_t i = 0; i < head.weight_count(); ++i)
                g_head[i] += 2.0 * cfg.l2_lambda * head.params[i];

            adam_step(adam_shared, net.shared.params, g_shared);
            adam_step(st.adam_task, task.params, g_task);
            adam_step(st.adam_head, head.params, g_head);
        }

        double val = validation_loss(net, data, states);
        if (!std::isfinite(val)) raise(Errc::non_finite_loss, "validation loss diverged");
        log.val_losses.push_back(val);
        log.epochs_run = epoch + 1;

        if (val < best_val) {
            best_val = val;
            log.best_epoch = epoch;
            best_params = snapshot();
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= cfg.patience) {
                log.stopped_early = true;
                break;
            }
        }
    }

    log.final_val_loss = log.val_losses.empty() ? best_val : log.val_losses.back();
    log.best_val_loss = best_val;
    restore(best_params);
    return log;
}

}  // namespace stress::nn
