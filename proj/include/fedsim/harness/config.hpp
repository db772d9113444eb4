#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/drl/ddpg.hpp"
#include "fedsim/fed/core.hpp"
#include "fedsim/nn/mlp.hpp"
#include "fedsim/wireless/channel.hpp"

namespace fedsim::harness {

enum class DatasetSource { synthetic, idx };
enum class SchedulerKind { random, cyclic, prop_fair, ddpg };

struct DatasetConfig {
    DatasetSource source = DatasetSource::synthetic;
    // synthetic
    std::size_t num_classes = 10;
    std::size_t samples_per_class = 600;
    std::size_t test_samples_per_class = 100;
    std::size_t feature_dim = 20;
    double class_separation = 3.0;
    std::string cache;  // optional on-disk cache path
    // idx
    std::string images, labels, test_images, test_labels;
};

struct PartitionConfig {
    data::PartitionScheme scheme = data::PartitionScheme::iid;
    std::size_t num_clients = 10;
    std::size_t shard_count = 0;
    std::size_t shard_size = 0;
    std::size_t shards_per_client = 0;
};

struct ModelConfig {
    std::vector<std::size_t> hidden{200, 200};
    nn::Activation activation = nn::Activation::relu;
    nn::OutputHead output_head = nn::OutputHead::softmax_xent;
};

struct CostConfig {
    double cycles_per_sample = 1e6;  // T_m
    double compute_min = 1e9;        // device compute drawn uniformly from this range
    double compute_max = 2e9;
    double bandwidth_hz = 1e6;       // per-subchannel bandwidth for the uplink rate
    double upload_bits = 0.0;        // 0 derives the model size (64 bits per parameter)
};

struct SchedulerConfig {
    SchedulerKind kind = SchedulerKind::random;
    std::size_t groups = 1;                    // cyclic
    std::optional<std::uint64_t> seed;         // overrides the derived stream
};

struct AgentConfig {
    drl::DdpgConfig ddpg;  // num_devices/seed filled at build time
    std::size_t episodes = 1;
    std::string checkpoint_in;   // optional prefix to resume from
    std::string checkpoint_out;  // optional prefix to save to
};

struct OutputConfig {
    std::string directory = "run";
    std::size_t checkpoint_every = 0;  // rounds; 0 = final checkpoint only
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    DatasetConfig dataset;
    PartitionConfig partition;
    ModelConfig model;
    fed::FlConfig fl;  // num_clients/seed resolved at build time
    fed::AggregationKind aggregation = fed::AggregationKind::weighted_average;
    wireless::ChannelConfig channel;
    std::vector<double> distances;                          // optional, per device
    std::map<std::size_t, std::vector<double>> interferers; // optional, per device
    CostConfig cost;
    SchedulerConfig scheduler;
    AgentConfig agent;
    OutputConfig output;
};

// Structural + invariant validation of the config text. Returns every
// violation found (empty means the config is usable); never applies a
// partial config.
std::vector<std::string> validate(const std::string& config_text);

// Parses and validates; throws ParseError listing all violations.
ExperimentConfig parse_config(const std::string& config_text);
ExperimentConfig load_config(const std::string& path);

// Raw file contents, for snapshotting into the run directory.
std::string read_text_file(const std::string& path);

}  // namespace fedsim::harness
