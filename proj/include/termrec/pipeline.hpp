#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "termrec/classifier.hpp"
#include "termrec/cluster.hpp"
#include "termrec/config.hpp"
#include "termrec/features.hpp"
#include "termrec/flow.hpp"
#include "termrec/mlp.hpp"

namespace termrec {

// One flow after ingestion, assembly, filtering and feature extraction.
struct FlowRecord {
    std::string id;
    TerminalType label = TerminalType::Unlabeled;
    FlowFeatureVector ff{};
    std::vector<SegmentFeatures> segments;  // exactly L entries
};

struct DatasetSummary {
    IngestStats ingest;
    FilterStats filter;
    size_t clamped_packets = 0;
    size_t labeled_flows = 0;
    double capture_start = 0.0;
};

// pcap bytes -> long-connection FlowRecords with per-segment features.
std::vector<FlowRecord> extract_flow_records(
    std::span<const uint8_t> pcap_bytes, const PipelineConfig& cfg,
    const std::unordered_map<uint32_t, TerminalType>& label_map, DatasetSummary* summary = nullptr);

struct SplitIndices {
    std::vector<size_t> train, validation, test;
};

// Stratified split over labels, seeded shuffle per class.
SplitIndices stratified_split(const std::vector<int>& labels, const SplitConfig& cfg);

// Flow-level classifier inputs: x^SE concatenated with standardized x^FF,
// or x^FF alone in flow-features-only mode.
struct EncodedFlows {
    Matrix inputs;
    std::vector<int> labels;  // -1 = unlabeled
    std::vector<std::string> ids;
};

EncodedFlows encode_flows(const std::vector<FlowRecord>& records, const Standardizer& ff_std,
                          const Standardizer& tf_std, const Standardizer& bf_std,
                          const MlpNetwork* autoencoder, const ClusterModel* cluster,
                          bool flow_features_only, size_t k);

// Trains the configured classifier kind on already-encoded inputs.
ClassifierModel train_classifier_model(const ClassifierSection& cfg, const Matrix& x,
                                       const std::vector<int>& y, size_t n_classes);

struct TrainedPipeline {
    static constexpr int kFormatVersion = 1;

    PipelineConfig config;
    Standardizer ff_std, tf_std, bf_std;
    MlpNetwork autoencoder;
    ClusterModel cluster;
    ClassifierModel classifier;
    MetricsReport training_metrics;  // over every labeled long flow of the training capture

    void save(const std::string& path) const;
    static TrainedPipeline load(const std::string& path);
};

struct TrainResult {
    TrainedPipeline pipeline;
    std::string report_text;
    MetricsReport train_metrics, validation_metrics, test_metrics;
    std::vector<double> ae_loss_curve;
    EncodedFlows encoded;     // every labeled flow, training capture
    SplitIndices split;
    DatasetSummary summary;
};

TrainResult train_pipeline(const PipelineConfig& cfg, std::span<const uint8_t> pcap_bytes,
                           const std::unordered_map<uint32_t, TerminalType>& label_map);

struct PredictionRow {
    std::string flow_id;
    TerminalType truth = TerminalType::Unlabeled;
    TerminalType predicted = TerminalType::Unlabeled;
    std::vector<double> probabilities;
};

std::vector<PredictionRow> predict_pipeline(
    const TrainedPipeline& pipeline, std::span<const uint8_t> pcap_bytes,
    const std::unordered_map<uint32_t, TerminalType>& label_map = {});

std::string predictions_tsv(const std::vector<PredictionRow>& rows, const PipelineConfig& cfg);
std::vector<PredictionRow> parse_predictions_tsv(const std::string& text);

// Joins predictions against an ip -> type label map and evaluates.
MetricsReport evaluate_predictions(const std::vector<PredictionRow>& rows,
                                   const std::unordered_map<uint32_t, TerminalType>& label_map,
                                   bool eq_literal_accuracy = false);

std::vector<std::string> terminal_class_names();

}  // namespace termrec
