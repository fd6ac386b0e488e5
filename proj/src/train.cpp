#include "dualcausal/train.hpp"

#include <cmath>

#include "dualcausal/errors.hpp"
#include "dualcausal/rng.hpp"

namespace dcl {

std::string to_string(Schedule s) {
    return s == Schedule::constant ? "constant" : "cosine";
}

Schedule schedule_from_string(const std::string& s) {
    if (s == "constant") return Schedule::constant;
    if (s == "cosine") return Schedule::cosine;
    throw ValidationError("schedule must be \"constant\" or \"cosine\", got \"" + s + "\"");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
    if (learning_rate < 0.0) throw ValidationError("train config: learning_rate must be nonnegative");
    if (!(tau_text > 0.0) || !(tau_vis > 0.0)) {
        throw ValidationError("train config: temperatures must be positive");
    }
    if (heads < 1) throw ValidationError("train config: heads must be >= 1");
}

ModelConfig TrainConfig::model_config() const {
    ModelConfig mc;
    mc.variant = variant;
    mc.mode = mode;
    mc.sta_layers = sta_layers;
    mc.heads = heads;
    mc.tau_text = tau_text;
    mc.tau_vis = tau_vis;
    return mc;
}

Adam::Adam(std::vector<Param*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Param* p : params_) {
        m_.push_back(Tensor::zeros(p->value.shape));
        v_.push_back(Tensor::zeros(p->value.shape));
    }
}

void Adam::step(double learning_rate) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        for (std::size_t k = 0; k < p.value.data.size(); ++k) {
            const double g = p.grad.data[k];
            m_[i].data[k] = beta1_ * m_[i].data[k] + (1.0 - beta1_) * g;
            v_[i].data[k] = beta2_ * v_[i].data[k] + (1.0 - beta2_) * g * g;
            const double mhat = m_[i].data[k] / bc1;
            const double vhat = v_[i].data[k] / bc2;
            p.value.data[k] -= learning_rate * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

TrainResult train(const World& world, const std::vector<Episode>& episodes,
                  const TrainConfig& config) {
    config.validate();
    if (episodes.empty()) throw InvalidArgumentError("train: empty episode set");

    TrainResult result;
    result.model = std::make_unique<Model>(world, config.model_config(), config.seed);
    Model& model = *result.model;

    Adam optimizer(model.trainable_params());
    Rng shuffle_rng(config.seed ^ 0xd1b54a32d192ed03ULL);

    std::vector<std::size_t> order(episodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const std::size_t batches_per_epoch = (episodes.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = config.epochs * batches_per_epoch;
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
        }
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const std::size_t begin = b * config.batch_size;
            const std::size_t end = std::min(begin + config.batch_size, episodes.size());

            Tape tape;
            std::vector<Var> losses;
            losses.reserve(end - begin);
            for (std::size_t k = begin; k < end; ++k) {
                const Episode& ep = episodes[order[k]];
                Var logits = model.forward(tape, ep);
                if (config.mode == LabelMode::single_label) {
                    losses.push_back(tape.cross_entropy_with_logits(logits, ep.y));
                } else {
                    Tensor targets = Tensor::zeros({ep.atomic_labels.size()});
                    for (std::size_t a = 0; a < ep.atomic_labels.size(); ++a) {
                        targets.data[a] = ep.atomic_labels[a];
                    }
                    losses.push_back(tape.binary_cross_entropy_with_logits(logits, targets));
                }
            }
            Var batch_loss = tape.mean_of(losses);
            const double loss_value = tape.value(batch_loss).data[0];
            if (!std::isfinite(loss_value)) {
                throw TrainingDivergedError("train: non-finite loss at step " + std::to_string(step));
            }
            for (Param* p : model.trainable_params()) p->reset_grad();
            tape.backward(batch_loss);

            double lr = config.learning_rate;
            if (config.schedule == Schedule::cosine && total_steps > 1) {
                lr *= 0.5 * (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(step) /
                                            static_cast<double>(total_steps)));
            }
            optimizer.step(lr);
            epoch_loss += loss_value * static_cast<double>(end - begin);
            ++step;
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(episodes.size()));
    }
    result.final_loss = result.loss_curve.empty() ? 0.0 : result.loss_curve.back();
    return result;
}

} // namespace dcl
