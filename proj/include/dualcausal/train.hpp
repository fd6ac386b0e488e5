#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dualcausal/model.hpp"
#include "dualcausal/world.hpp"

namespace dcl {

enum class Schedule { constant, cosine };
std::string to_string(Schedule s);
Schedule schedule_from_string(const std::string& s);

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    Schedule schedule = Schedule::cosine;
    std::uint64_t seed = 0;
    Variant variant = Variant::full;
    std::size_t sta_layers = 6;
    std::size_t heads = 4;
    double tau_text = 0.07;
    double tau_vis = 0.07;
    LabelMode mode = LabelMode::single_label;

    // epochs >= 1, batch_size >= 1, learning_rate >= 0 (zero permitted: a
    // frozen run must leave parameters bit-identical).
    void validate() const;
    ModelConfig model_config() const;
};

// Adaptive-moment optimizer over a fixed parameter set.
class Adam {
public:
    explicit Adam(std::vector<Param*> params, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void step(double learning_rate);

private:
    std::vector<Param*> params_;
    std::vector<Tensor> m_, v_;
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

struct TrainResult {
    std::unique_ptr<Model> model;
    std::vector<double> loss_curve; // mean loss per epoch
    double final_loss = 0.0;
};

// Deterministic given (world, episodes, config). Throws TrainingDivergedError
// naming the step if the loss leaves the finite range.
TrainResult train(const World& world, const std::vector<Episode>& episodes,
                  const TrainConfig& config);

} // namespace dcl
