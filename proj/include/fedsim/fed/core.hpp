#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "fedsim/data/dataset.hpp"
#include "fedsim/nn/mlp.hpp"

namespace fedsim::fed {

// Batch-size sentinel: the whole local set is one batch per epoch.
constexpr std::size_t kFullBatch = std::numeric_limits<std::size_t>::max();

struct FlConfig {
    double client_fraction = 0.1;            // C in [0,1]
    std::size_t num_clients = 1;             // K
    std::size_t batch_size = kFullBatch;     // B
    std::size_t local_epochs = 1;            // E
    double learning_rate = 0.01;             // local SGD step size
    std::size_t max_rounds = 100;
    double target_accuracy = 0.0;            // 0 disables the accuracy stop
    std::uint64_t seed = 0;

    void validate() const;
};

// max(floor(C*K), 1); the ids themselves come from the active scheduler.
std::size_t selection_count(double client_fraction, std::size_t num_clients);

struct ClientUpdateResult {
    std::size_t client_id = 0;
    nn::ParamVector new_params;
    double local_loss_before = 0.0;
    double local_loss_after = 0.0;
    // Simulated device seconds for this update, filled by the round loop
    // from the cost model (never measured wallclock).
    double sim_train_seconds = 0.0;
    std::size_t samples_used = 0;
};

// E epochs of minibatch SGD from the global parameters over the client's
// samples; each epoch reshuffles by (seed, epoch). The global parameters
// are not touched.
ClientUpdateResult client_update(const nn::MlpSpec& spec, const nn::ParamVector& global,
                                 const data::Dataset& dataset, const data::ClientDataset& client,
                                 std::size_t epochs, std::size_t batch_size, double learning_rate,
                                 std::uint64_t seed);

// Mean loss of `params` over the listed samples.
double local_loss(const nn::MlpSpec& spec, const nn::ParamVector& params,
                  const data::Dataset& dataset, const std::vector<std::size_t>& indices);

enum class AggregationKind { weighted_average, gradient_step };

struct AggregationRule {
    AggregationKind kind = AggregationKind::weighted_average;
    double alpha = 0.0;  // gradient_step only: the learning rate of the step
};

// weighted_average: sum_n (x_n / sum x) * theta_n.
// gradient_step: reconstructs g_n = (theta - theta_n)/alpha and applies
// theta - alpha * sum_n (x_n / sum x) * g_n. Summation runs in ascending
// client-id order so the result is independent of the input order.
nn::ParamVector aggregate(const AggregationRule& rule, const nn::ParamVector& global,
                          const std::vector<ClientUpdateResult>& results);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

// Argmax accuracy (ties to the lowest class id) and mean per-sample loss.
EvalResult evaluate(const nn::MlpSpec& spec, const nn::ParamVector& params,
                    const data::Dataset& dataset);

}  // namespace fedsim::fed
