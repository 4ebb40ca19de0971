#pragma once

#include <cstdint>
#include <string>

#include "termrec/behavior.hpp"
#include "termrec/classifier.hpp"
#include "termrec/cluster.hpp"
#include "termrec/mlp.hpp"
#include "termrec/synthgen.hpp"

namespace termrec {

struct SegmentationConfig {
    double tau = 300.0;
    size_t count = 12;  // L
};

struct FilterConfig {
    double min_duration = 600.0;
};

struct SplitConfig {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
    uint64_t seed = 7;
};

struct AutoencoderConfig {
    std::vector<size_t> hidden = {24, 16, 8};
    TrainConfig train{200, 64, 0.01, 1, 20, 1e-5};
};

struct ClusteringConfig {
    ClusterKind kind = ClusterKind::KMeans;
    size_t clusters = 15;  // K
    size_t max_iterations = 300;
    double tolerance = 1e-4;
    size_t em_iterations = 50;
    uint64_t seed = 2;
};

struct ClassifierSection {
    ClassifierKind kind = ClassifierKind::Gbt;
    GbtConfig gbt;
    LogisticConfig logistic;
    ForestConfig forest;
    AdaBoostConfig adaboost;
    NeuralNetConfig neural_net{{64, 16}, TrainConfig{200, 32, 0.05, 3, 50, 1e-6}};
    uint64_t seed = 3;
};

// Every pipeline tunable, resolved against defaults. Unknown keys in the
// config file are errors.
struct PipelineConfig {
    uint64_t seed = 42;
    size_t threads = 1;
    bool flow_features_only = false;
    bool eq_literal_accuracy = false;
    SegmentationConfig segmentation;
    FilterConfig flow_filter;
    SplitConfig split;
    AutoencoderConfig autoencoder;
    ClusteringConfig clustering;
    ClassifierSection classifier;
    GeneratorConfig generator;
    std::string behavior_table_file;  // empty = shipped default table
    BehaviorCodeTable behavior_table = BehaviorCodeTable::default_table();

    static PipelineConfig from_json_text(const std::string& text);
    static PipelineConfig load(const std::string& path);
    std::string to_json_text() const;  // fully resolved, key-sorted

    uint64_t hash() const;          // FNV-1a of the resolved text
    std::string hash_hex() const;
    std::string header_comment() const;  // "# config_hash=<hex>\n"

    // CLI --seed: reseeds every stage deterministically from one value.
    void apply_master_seed(uint64_t master);
};

uint64_t fnv1a64(const std::string& text);

}  // namespace termrec
