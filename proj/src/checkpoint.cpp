#include "stress/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "stress/error.hpp"

namespace stress::model {

namespace {

using nlohmann::json;

std::uint64_t fnv1a_doubles(const std::vector<double>& values, std::uint64_t h) {
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

// Parameter checksum in a fixed traversal order.
std::string checksum(const Checkpoint& ckpt) {
    std::uint64_t h = 1469598103934665603ull;
    switch (ckpt.kind) {
        case Kind::lr:
            h = fnv1a_doubles(ckpt.logreg.weights, h);
            h = fnv1a_doubles({ckpt.logreg.bias}, h);
            break;
        case Kind::svm_linear:
        case Kind::svm_rbf:
            for (const auto& sv : ckpt.svm.support_vectors) h = fnv1a_doubles(sv, h);
            h = fnv1a_doubles(ckpt.svm.dual_coefs, h);
            h = fnv1a_doubles({ckpt.svm.bias}, h);
            break;
        case Kind::st_nn:
        case Kind::mt_nn:
            h = fnv1a_doubles(ckpt.net.shared.params, h);
            for (const auto& [id, l] : ckpt.net.task_layers) h = fnv1a_doubles(l.params, h);
            for (const auto& [id, l] : ckpt.net.heads) h = fnv1a_doubles(l.params, h);
            break;
    }
    return "fnv1a:" + hex64(h);
}

json train_cfg_to_json(const nn::TrainConfig& c) {
    return json{{"lr", c.lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"eps", c.eps},
                {"l2_lambda", c.l2_lambda},
                {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"val_fraction", c.val_fraction},
                {"seed", c.seed}};
}

nn::TrainConfig train_cfg_from_json(const json& j) {
    nn::TrainConfig c;
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.eps = j.at("eps").get<double>();
    c.l2_lambda = j.at("l2_lambda").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.patience = j.at("patience").get<int>();
    c.val_fraction = j.at("val_fraction").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json layer_to_json(const nn::DenseLayer& l) {
    return json{{"in", l.in}, {"out", l.out}, {"params", l.params}};
}

nn::DenseLayer layer_from_json(const json& j, nn::Activation act) {
    nn::DenseLayer l;
    l.in = j.at("in").get<int>();
    l.out = j.at("out").get<int>();
    l.act = act;
    l.params = j.at("params").get<std::vector<double>>();
    if (l.params.size() != l.param_count())
        raise(Errc::io_error, "layer parameter count mismatch in checkpoint");
    return l;
}

}  // namespace

std::string kind_name(Kind kind) {
    switch (kind) {
        case Kind::lr: return "lr";
        case Kind::svm_linear: return "svm-l";
        case Kind::svm_rbf: return "svm-rbf";
        case Kind::st_nn: return "st-nn";
        case Kind::mt_nn: return "mt-nn";
    }
    return "?";
}

Kind kind_from_name(const std::string& name) {
    if (name == "lr") return Kind::lr;
    if (name == "svm-l") return Kind::svm_linear;
    if (name == "svm-rbf") return Kind::svm_rbf;
    if (name == "st-nn") return Kind::st_nn;
    if (name == "mt-nn") return Kind::mt_nn;
    raise(Errc::bad_config, "unknown model kind '" + name + "'");
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json j;
    j["kind"] = kind_name(ckpt.kind);
    j["dataset"] = ckpt.dataset;
    j["seed"] = ckpt.seed;
    j["train_config"] = train_cfg_to_json(ckpt.train_cfg);
    j["hyper"] = {{"lambda", ckpt.hyper.lambda}, {"C", ckpt.hyper.C}, {"gamma", ckpt.hyper.gamma}};

    json m;
    switch (ckpt.kind) {
        case Kind::lr:
            m["weights"] = ckpt.logreg.weights;
            m["bias"] = ckpt.logreg.bias;
            m["l2_lambda"] = ckpt.logreg.l2_lambda;
            break;
        case Kind::svm_linear:
        case Kind::svm_rbf:
            m["kernel"] = ckpt.svm.kernel == ml::Kernel::linear ? "linear" : "rbf";
            m["gamma"] = ckpt.svm.gamma;
            m["C"] = ckpt.svm.C;
            m["bias"] = ckpt.svm.bias;
            m["support_vectors"] = ckpt.svm.support_vectors;
            m["dual_coefs"] = ckpt.svm.dual_coefs;
            break;
        case Kind::st_nn:
        case Kind::mt_nn: {
            m["elu_alpha"] = ckpt.net.elu_alpha;
            m["shared"] = layer_to_json(ckpt.net.shared);
            json tasks = json::object(), heads = json::object();
            for (const auto& [id, l] : ckpt.net.task_layers) tasks[id] = layer_to_json(l);
            for (const auto& [id, l] : ckpt.net.heads) heads[id] = layer_to_json(l);
            m["task_layers"] = tasks;
            m["heads"] = heads;
            m["tasks"] = ckpt.net.task_ids();
            break;
        }
    }
    j["model"] = m;
    j["checksum"] = checksum(ckpt);

    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(Errc::io_error, path + ": " + e.what());
    }

    Checkpoint ckpt;
    ckpt.kind = kind_from_name(j.at("kind").get<std::string>());
    ckpt.dataset = j.at("dataset").get<std::string>();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.train_cfg = train_cfg_from_json(j.at("train_config"));
    ckpt.hyper.lambda = j.at("hyper").at("lambda").get<double>();
    ckpt.hyper.C = j.at("hyper").at("C").get<double>();
    ckpt.hyper.gamma = j.at("hyper").at("gamma").get<double>();

    const json& m = j.at("model");
    switch (ckpt.kind) {
        case Kind::lr:
            ckpt.logreg.weights = m.at("weights").get<std::vector<double>>();
            ckpt.logreg.bias = m.at("bias").get<double>();
            ckpt.logreg.l2_lambda = m.at("l2_lambda").get<double>();
            ckpt.logreg.trained = true;
            break;
        case Kind::svm_linear:
        case Kind::svm_rbf:
            ckpt.svm.kernel =
                m.at("kernel").get<std::string>() == "linear" ? ml::Kernel::linear
                                                              : ml::Kernel::rbf;
            ckpt.svm.gamma = m.at("gamma").get<double>();
            ckpt.svm.C = m.at("C").get<double>();
            ckpt.svm.bias = m.at("bias").get<double>();
            ckpt.svm.support_vectors =
                m.at("support_vectors").get<std::vector<std::vector<double>>>();
            ckpt.svm.dual_coefs = m.at("dual_coefs").get<std::vector<double>>();
            ckpt.svm.trained = true;
            break;
        case Kind::st_nn:
        case Kind::mt_nn: {
            ckpt.net.elu_alpha = m.at("elu_alpha").get<double>();
            ckpt.net.shared = layer_from_json(m.at("shared"), nn::Activation::elu);
            for (auto it = m.at("task_layers").begin(); it != m.at("task_layers").end(); ++it)
                ckpt.net.task_layers.emplace(it.key(),
                                             layer_from_json(it.value(), nn::Activation::elu));
            for (auto it = m.at("heads").begin(); it != m.at("heads").end(); ++it)
                ckpt.net.heads.emplace(it.key(),
                                       layer_from_json(it.value(), nn::Activation::sigmoid));
            break;
        }
    }

    const std::string stored = j.at("checksum").get<std::string>();
    if (stored != checksum(ckpt))
        raise(Errc::io_error, path + ": checksum mismatch, checkpoint corrupted");
    return ckpt;
}

std::pair<int, double> predict_window(const Checkpoint& ckpt, const FeatureVector& fv) {
    std::vector<double> x(fv.values.begin(), fv.values.end());
    switch (ckpt.kind) {
        case Kind::lr:
            return ml::predict(ckpt.logreg, x);
        case Kind::svm_linear:
        case Kind::svm_rbf:
            return ml::predict(ckpt.svm, x);
        case Kind::st_nn: {
            double p = nn::forward(ckpt.net, x, kPooledTask);
            return {p >= 0.5 ? 1 : 0, p};
        }
        case Kind::mt_nn: {
            if (!ckpt.net.has_task(fv.subject_id))
                raise(Errc::task_missing_head,
                      "subject " + fv.subject_id + " absent at training time");
            double p = nn::forward(ckpt.net, x, fv.subject_id);
            return {p >= 0.5 ? 1 : 0, p};
        }
    }
    raise(Errc::bad_config, "unreachable model kind");
}

}  // namespace stress::model
