#include "infratl/nn/model.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace infratl::nn {

// ---- ModelConfig ----------------------------------------------------------

Shape ModelConfig::latent_shape() const {
    require(pools.size() == conv_channels.size(), ErrorKind::config,
            "one pool window per conv layer is required");
    Shape s{input_height, input_width, 1};
    for (std::size_t i = 0; i < conv_channels.size(); ++i) {
        const auto [ph, pw] = pools[i];
        require(ph >= 1 && pw >= 1, ErrorKind::config, "pool windows must be >= 1");
        require(s[0] % ph == 0 && s[1] % pw == 0, ErrorKind::shape,
                "pool " + std::to_string(i) + " (" + std::to_string(ph) + "," + std::to_string(pw) +
                    ") does not divide " + shape_string({s[0], s[1], conv_channels[i]}));
        s = {s[0] / ph, s[1] / pw, conv_channels[i]};
    }
    return s;
}

std::size_t ModelConfig::parameter_count() const {
    std::size_t total = 0, cin = 1;
    for (std::size_t c : conv_channels) {
        total += kernel * kernel * cin * c + c;
        cin = c;
    }
    std::size_t in = shape_size(latent_shape()) + 1;
    for (std::size_t w : fc_widths) {
        if (batchnorm) total += 2 * in;
        total += in * w + w;
        in = w;
    }
    return total;
}

void ModelConfig::validate() const {
    require(input_height >= 1 && input_width >= 1, ErrorKind::config, "input dims must be >= 1");
    require(!conv_channels.empty(), ErrorKind::config, "at least one conv layer is required");
    require(kernel % 2 == 1, ErrorKind::config, "kernel must be odd");
    require(!fc_widths.empty(), ErrorKind::config, "at least one dense layer is required");
    require(dropout.size() < fc_widths.size() + 1, ErrorKind::config, "too many dropout rates");
    for (double r : dropout) require(r >= 0.0 && r < 1.0, ErrorKind::config, "dropout rate must be in [0, 1)");
    require(bn_epsilon > 0.0 && bn_momentum >= 0.0 && bn_momentum < 1.0, ErrorKind::config,
            "batchnorm epsilon/momentum out of range");
    latent_shape();
}

void to_json(json& j, const ModelConfig& c) {
    json pools = json::array();
    for (auto [h, w] : c.pools) pools.push_back({h, w});
    j = json{{"input_height", c.input_height},
             {"input_width", c.input_width},
             {"conv_channels", c.conv_channels},
             {"kernel", c.kernel},
             {"conv_activation", to_string(c.conv_activation)},
             {"pools", pools},
             {"fc_widths", c.fc_widths},
             {"fc_activation", to_string(c.fc_activation)},
             {"output_activation", to_string(c.output_activation)},
             {"dropout", c.dropout},
             {"batchnorm", c.batchnorm},
             {"bn_epsilon", c.bn_epsilon},
             {"bn_momentum", c.bn_momentum}};
}

void from_json(const json& j, ModelConfig& c) {
    try {
        ModelConfig d;
        c.input_height = j.value("input_height", d.input_height);
        c.input_width = j.value("input_width", d.input_width);
        c.conv_channels = j.value("conv_channels", d.conv_channels);
        c.kernel = j.value("kernel", d.kernel);
        c.conv_activation = activation_from_string(j.value("conv_activation", std::string("tanh")));
        c.pools = d.pools;
        if (j.contains("pools")) {
            c.pools.clear();
            for (const auto& p : j.at("pools")) c.pools.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
        }
        c.fc_widths = j.value("fc_widths", d.fc_widths);
        c.fc_activation = activation_from_string(j.value("fc_activation", std::string("relu")));
        c.output_activation = activation_from_string(j.value("output_activation", std::string("linear")));
        c.dropout = j.value("dropout", d.dropout);
        c.batchnorm = j.value("batchnorm", d.batchnorm);
        c.bn_epsilon = j.value("bn_epsilon", d.bn_epsilon);
        c.bn_momentum = j.value("bn_momentum", d.bn_momentum);
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("model config: ") + e.what());
    }
    c.validate();
}

// ---- Model ----------------------------------------------------------------

template <typename T>
Model<T>::Model(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
    config_.validate();
    latent_ = config_.latent_shape();
    Rng rng = substream(init_seed, "init");
    const std::size_t k = config_.kernel;
    std::size_t cin = 1;
    for (std::size_t i = 0; i < config_.conv_channels.size(); ++i) {
        const std::size_t cout = config_.conv_channels[i];
        auto conv = std::make_unique<Conv2D<T>>("conv" + std::to_string(i), cin, cout, k);
        glorot_uniform(conv->kernel().value, k * k * cin, k * k * cout, rng);
        conv_.push_back(std::move(conv));
        conv_names_.push_back("conv" + std::to_string(i));
        conv_.push_back(std::make_unique<Activation<T>>(config_.conv_activation));
        conv_names_.push_back(to_string(config_.conv_activation));
        conv_.push_back(std::make_unique<MaxPool2D<T>>(config_.pools[i].first, config_.pools[i].second));
        conv_names_.push_back("pool" + std::to_string(i));
        cin = cout;
    }
    std::size_t in = shape_size(latent_) + 1;
    for (std::size_t i = 0; i < config_.fc_widths.size(); ++i) {
        const std::size_t out = config_.fc_widths[i];
        const bool last = i + 1 == config_.fc_widths.size();
        if (config_.batchnorm) {
            head_.push_back(std::make_unique<BatchNorm<T>>("bn" + std::to_string(i), in, config_.bn_epsilon,
                                                            config_.bn_momentum));
            head_names_.push_back("bn" + std::to_string(i));
        }
        auto fc = std::make_unique<Dense<T>>("fc" + std::to_string(i), in, out);
        glorot_uniform(fc->weight().value, in, out, rng);
        head_.push_back(std::move(fc));
        head_names_.push_back("fc" + std::to_string(i));
        const ActivationKind act = last ? config_.output_activation : config_.fc_activation;
        head_.push_back(std::make_unique<Activation<T>>(act));
        head_names_.push_back(to_string(act));
        if (i < config_.dropout.size()) {
            auto d = std::make_unique<Dropout<T>>(config_.dropout[i]);
            dropouts_.push_back(d.get());
            head_.push_back(std::move(d));
            head_names_.push_back("dropout" + std::to_string(i));
        }
        in = out;
    }
}

template <typename T>
Tensor<T> Model<T>::features(const Tensor<T>& images, Mode mode) {
    require(images.rank() == 4 && images.dim(1) == config_.input_height &&
                images.dim(2) == config_.input_width && images.dim(3) == 1,
            ErrorKind::shape,
            "model expects (B," + std::to_string(config_.input_height) + "," +
                std::to_string(config_.input_width) + ",1), got " + shape_string(images.shape));
    Tensor<T> x = images;
    for (auto& layer : conv_) x = layer->forward(x, mode);
    return x;
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& images, std::span<const T> freqs, Mode mode) {
    const std::size_t b = images.rank() == 4 ? images.dim(0) : 0;
    require(freqs.size() == b, ErrorKind::shape, "one frequency per image is required");
    const Tensor<T> x = features(images, mode);
    const std::size_t flat = shape_size(latent_);
    Tensor<T> h({b, flat + 1});
    for (std::size_t s = 0; s < b; ++s) {
        std::copy_n(x.ptr() + s * flat, flat, h.ptr() + s * (flat + 1));
        h.data[s * (flat + 1) + flat] = freqs[s];
    }
    for (auto& layer : head_) h = layer->forward(h, mode);
    return h;
}

template <typename T>
Tensor<T> Model<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> g = grad_out;
    for (auto it = head_.rbegin(); it != head_.rend(); ++it) g = (*it)->backward(g);
    const std::size_t b = g.dim(0), flat = shape_size(latent_);
    Tensor<T> x({b, latent_[0], latent_[1], latent_[2]});
    freq_grad_.assign(b, T(0));
    for (std::size_t s = 0; s < b; ++s) {
        std::copy_n(g.ptr() + s * (flat + 1), flat, x.ptr() + s * flat);
        freq_grad_[s] = g.data[s * (flat + 1) + flat];
    }
    for (auto it = conv_.rbegin(); it != conv_.rend(); ++it) x = (*it)->backward(x);
    return x;
}

template <typename T>
Tensor<T> Model<T>::predict(const Tensor<T>& images, std::span<const T> freqs, std::size_t batch_size) {
    require(images.rank() == 4, ErrorKind::shape, "predict expects a 4-axis image batch");
    require(batch_size >= 1, ErrorKind::domain, "batch size must be >= 1");
    const std::size_t n = images.dim(0), per = shape_size({images.dim(1), images.dim(2), images.dim(3)});
    const std::size_t out_size = config_.output_size();
    Tensor<T> out({n, out_size});
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t m = std::min(batch_size, n - start);
        Tensor<T> chunk({m, images.dim(1), images.dim(2), images.dim(3)});
        std::copy_n(images.ptr() + start * per, m * per, chunk.ptr());
        Tensor<T> y = forward(chunk, freqs.subspan(start, m), Mode::infer);
        std::copy_n(y.ptr(), m * out_size, out.ptr() + start * out_size);
    }
    return out;
}

template <typename T>
std::vector<Param<T>*> Model<T>::params() {
    std::vector<Param<T>*> all;
    for (auto* stack : {&conv_, &head_}) {
        for (auto& layer : *stack) {
            for (auto* p : layer->params()) all.push_back(p);
        }
    }
    return all;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> Model<T>::buffers() {
    std::vector<std::pair<std::string, Tensor<T>*>> all;
    for (auto& layer : head_) {
        for (auto& b : layer->buffers()) all.push_back(b);
    }
    return all;
}

template <typename T>
void Model<T>::zero_grad() {
    for (auto* p : params()) p->grad.fill(T(0));
}

template <typename T>
std::size_t Model<T>::parameter_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->value.size();
    return n;
}

template <typename T>
void Model<T>::seed_dropout(std::uint64_t master, std::uint64_t epoch) {
    for (std::size_t i = 0; i < dropouts_.size(); ++i) dropouts_[i]->set_rng(substream(master, "dropout", {i, epoch}));
}

template <typename T>
std::map<std::string, Tensor<T>> Model<T>::state() {
    std::map<std::string, Tensor<T>> s;
    for (auto* p : params()) s.emplace(p->name, p->value);
    for (auto& [name, t] : buffers()) s.emplace(name, *t);
    return s;
}

template <typename T>
void Model<T>::load_state(const std::map<std::string, Tensor<T>>& tensors) {
    auto assign = [&](const std::string& name, Tensor<T>& dst) {
        auto it = tensors.find(name);
        require(it != tensors.end(), ErrorKind::shape, "checkpoint is missing tensor '" + name + "'");
        require(it->second.shape == dst.shape, ErrorKind::shape,
                "tensor '" + name + "' has shape " + shape_string(it->second.shape) + ", expected " +
                    shape_string(dst.shape));
        dst.data = it->second.data;
    };
    for (auto* p : params()) assign(p->name, p->value);
    for (auto& [name, t] : buffers()) assign(name, *t);
}

template <typename T>
std::string Model<T>::describe() {
    std::ostringstream os;
    os << std::left << std::setw(12) << "layer" << std::setw(20) << "output" << std::right << std::setw(12)
       << "params" << '\n';
    auto row = [&](const std::string& name, const Shape& s, std::size_t n) {
        os << std::left << std::setw(12) << name << std::setw(20) << shape_string(s) << std::right
           << std::setw(12) << n << '\n';
    };
    auto count = [](Layer<T>& l) {
        std::size_t n = 0;
        for (auto* p : l.params()) n += p->value.size();
        return n;
    };
    Shape s{config_.input_height, config_.input_width, 1};
    row("input", s, 0);
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        s = conv_[i]->output_shape(s);
        row(conv_names_[i], s, count(*conv_[i]));
    }
    s = {shape_size(s)};
    row("flatten", s, 0);
    s = {s[0] + 1};
    row("concat_f", s, 0);
    for (std::size_t i = 0; i < head_.size(); ++i) {
        s = head_[i]->output_shape(s);
        row(head_names_[i], s, count(*head_[i]));
    }
    os << "trainable parameters: " << parameter_count() << '\n';
    return os.str();
}

// ---- Optimizer, schedule, early stopping ----------------------------------

void to_json(json& j, const AdamConfig& c) {
    j = json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

void from_json(const json& j, AdamConfig& c) {
    AdamConfig d;
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.beta1 = j.value("beta1", d.beta1);
    c.beta2 = j.value("beta2", d.beta2);
    c.epsilon = j.value("epsilon", d.epsilon);
}

template <typename T>
void Adam::step(const std::vector<Param<T>*>& params) {
    if (state_.m.size() != params.size()) {
        state_.m.assign(params.size(), {});
        state_.v.assign(params.size(), {});
    }
    ++state_.step;
    const double t = static_cast<double>(state_.step);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    const double lr = state_.learning_rate;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Param<T>& p = *params[k];
        require(p.grad.shape == p.value.shape, ErrorKind::shape, "adam: gradient shape differs for " + p.name);
        auto& m = state_.m[k];
        auto& v = state_.v[k];
        if (m.size() != p.value.size()) {
            m.assign(p.value.size(), 0.0);
            v.assign(p.value.size(), 0.0);
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double g = p.grad.data[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p.value.data[i] = static_cast<T>(p.value.data[i] - lr * mhat / (std::sqrt(vhat) + config_.epsilon));
        }
    }
}

template void Adam::step<float>(const std::vector<Param<float>*>&);
template void Adam::step<double>(const std::vector<Param<double>*>&);

double LrSchedule::at(int epoch) const {
    double lr = initial;
    for (int m : milestones) {
        if (epoch >= m) lr /= factor;
    }
    return std::max(lr, floor);
}

void to_json(json& j, const LrSchedule& s) {
    j = json{{"initial", s.initial}, {"factor", s.factor}, {"milestones", s.milestones}, {"floor", s.floor}};
}

void from_json(const json& j, LrSchedule& s) {
    LrSchedule d;
    s.initial = j.value("initial", d.initial);
    s.factor = j.value("factor", d.factor);
    s.milestones = j.value("milestones", d.milestones);
    s.floor = j.value("floor", d.floor);
    require(s.factor >= 1.0 && s.initial > 0.0 && s.floor >= 0.0, ErrorKind::config, "invalid lr schedule");
}

bool EarlyStopping::update(double val_loss) {
    ++epoch_;
    improved_ = best_epoch_ < 0 || val_loss < best_;
    if (improved_) {
        best_ = val_loss;
        best_epoch_ = epoch_;
    }
    return epoch_ - best_epoch_ >= patience_;
}

// ---- Training -------------------------------------------------------------

template <typename T>
ArraySet<T> ArraySet<T>::subset(std::span<const std::size_t> rows) const {
    ArraySet<T> s;
    const std::size_t per = shape_size({images.dim(1), images.dim(2), images.dim(3)});
    const std::size_t out = labels.dim(1);
    s.images = Tensor<T>({rows.size(), images.dim(1), images.dim(2), images.dim(3)});
    s.labels = Tensor<T>({rows.size(), out});
    s.freqs.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t r = rows[k];
        require(r < size(), ErrorKind::domain, "row index out of range");
        std::copy_n(images.ptr() + r * per, per, s.images.ptr() + k * per);
        std::copy_n(labels.ptr() + r * out, out, s.labels.ptr() + k * out);
        s.freqs[k] = freqs[r];
    }
    return s;
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"batch_size", c.batch_size}, {"max_epochs", c.max_epochs}, {"patience", c.patience},
             {"seed", c.seed},             {"adam", c.adam},             {"schedule", c.schedule}};
}

void from_json(const json& j, TrainConfig& c) {
    try {
        TrainConfig d;
        c.batch_size = j.value("batch_size", d.batch_size);
        c.max_epochs = j.value("max_epochs", d.max_epochs);
        c.patience = j.value("patience", d.patience);
        c.seed = j.value("seed", d.seed);
        c.adam = j.value("adam", d.adam);
        c.schedule = j.value("schedule", d.schedule);
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("train config: ") + e.what());
    }
    require(c.batch_size >= 2, ErrorKind::config, "batch_size must be >= 2");
    require(c.max_epochs >= 1 && c.patience >= 1, ErrorKind::config, "max_epochs and patience must be >= 1");
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    require(batch_size >= 1, ErrorKind::domain, "batch size must be >= 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
    }
    if (batches.size() > 1 && batches.back().size() == 1) {
        batches[batches.size() - 2].push_back(batches.back()[0]);
        batches.pop_back();
    }
    return batches;
}

template <typename T>
double evaluate_loss(Model<T>& model, const ArraySet<T>& set, std::size_t batch_size) {
    require(set.size() > 0, ErrorKind::precondition, "cannot evaluate an empty set");
    const Tensor<T> pred = model.predict(set.images, set.freqs, batch_size);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - static_cast<double>(set.labels.data[i]);
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

template <typename T>
TrainResult train(Model<T>& model, const ArraySet<T>& train_set, const ArraySet<T>& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    require(train_set.size() >= 2, ErrorKind::precondition, "training needs at least 2 samples");
    require(val_set.size() >= 1, ErrorKind::precondition, "validation set is empty");
    AdamConfig adam_config = config.adam;
    adam_config.learning_rate = config.schedule.initial;
    Adam adam(adam_config);
    EarlyStopping stopper(config.patience);
    TrainResult result;
    auto best = model.state();
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        adam.state().learning_rate = config.schedule.at(epoch);
        model.seed_dropout(config.seed, static_cast<std::uint64_t>(epoch));
        Rng rng = substream(config.seed, "shuffle", {static_cast<std::uint64_t>(epoch)});
        double loss_sum = 0.0;
        for (const auto& rows : make_batches(train_set.size(), config.batch_size, rng)) {
            const ArraySet<T> batch = train_set.subset(rows);
            model.zero_grad();
            const Tensor<T> pred = model.forward(batch.images, batch.freqs, Mode::train);
            const T loss = mse(batch.labels, pred);
            require(std::isfinite(static_cast<double>(loss)), ErrorKind::numerical,
                    "training loss is not finite at epoch " + std::to_string(epoch));
            loss_sum += static_cast<double>(loss) * static_cast<double>(rows.size());
            model.backward(mse_grad(batch.labels, pred));
            adam.step(model.params());
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train_set.size());
        rec.val_loss = evaluate_loss(model, val_set, config.batch_size);
        rec.learning_rate = adam.state().learning_rate;
        result.history.push_back(rec);
        const bool stop = stopper.update(rec.val_loss);
        if (stopper.improved()) best = model.state();
        if (on_epoch) on_epoch(rec);
        if (stop) break;
    }
    result.best_epoch = stopper.best_epoch();
    model.load_state(best);
    return result;
}

// ---- Checkpoints ----------------------------------------------------------

template <typename T>
Checkpoint make_checkpoint(Model<T>& model, const data::Normalizer& normalizer, const TrainResult& result,
                           json extra) {
    Checkpoint ck;
    ck.config = model.config();
    for (auto& [name, t] : model.state()) ck.tensors.emplace(name, t.template cast<float>());
    ck.normalizer = normalizer;
    ck.history = result.history;
    ck.best_epoch = result.best_epoch;
    ck.extra = std::move(extra);
    return ck;
}

template <typename T>
Model<T> model_from_checkpoint(const Checkpoint& ck) {
    Model<T> model(ck.config, 0);
    std::map<std::string, Tensor<T>> tensors;
    for (const auto& [name, t] : ck.tensors) tensors.emplace(name, t.template cast<T>());
    model.load_state(tensors);
    return model;
}

Container checkpoint_to_container(const Checkpoint& ck) {
    Container c;
    json history = json::array();
    for (const auto& r : ck.history) {
        history.push_back(
            {{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}, {"lr", r.learning_rate}});
    }
    c.meta = json{{"kind", "checkpoint"}, {"config", ck.config},      {"normalizer", ck.normalizer},
                  {"history", history},   {"best_epoch", ck.best_epoch}, {"extra", ck.extra}};
    for (const auto& [name, t] : ck.tensors) c.add(name, t.shape, t.data);
    return c;
}

Checkpoint checkpoint_from_container(const Container& c) {
    require(c.meta.value("kind", std::string()) == "checkpoint", ErrorKind::io, "container is not a checkpoint");
    Checkpoint ck;
    try {
        ck.config = c.meta.at("config").get<ModelConfig>();
        ck.normalizer = c.meta.at("normalizer").get<data::Normalizer>();
        for (const auto& r : c.meta.at("history")) {
            ck.history.push_back({r.at("epoch").get<int>(), r.at("train_loss").get<double>(),
                                  r.at("val_loss").get<double>(), r.at("lr").get<double>()});
        }
        ck.best_epoch = c.meta.at("best_epoch").get<int>();
        ck.extra = c.meta.value("extra", json::object());
    } catch (const json::exception& e) {
        fail(ErrorKind::io, std::string("checkpoint header: ") + e.what());
    }
    for (const auto& f : c.fields) ck.tensors.emplace(f.name, Tensor<float>(f.shape, f.data));
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    write_container(path, checkpoint_to_container(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_container(read_container(path));
}

#define INFRATL_MODEL_INSTANTIATE(T)                                                                        \
    template class Model<T>;                                                                                \
    template struct ArraySet<T>;                                                                            \
    template double evaluate_loss<T>(Model<T>&, const ArraySet<T>&, std::size_t);                           \
    template TrainResult train<T>(Model<T>&, const ArraySet<T>&, const ArraySet<T>&, const TrainConfig&,    \
                                  const EpochCallback&);                                                    \
    template Checkpoint make_checkpoint<T>(Model<T>&, const data::Normalizer&, const TrainResult&, json);   \
    template Model<T> model_from_checkpoint<T>(const Checkpoint&);

INFRATL_MODEL_INSTANTIATE(float)
INFRATL_MODEL_INSTANTIATE(double)

#undef INFRATL_MODEL_INSTANTIATE

}  // namespace infratl::nn
