#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "termrec/pipeline.hpp"
#include "termrec/serialize.hpp"
#include "termrec/synthgen.hpp"

using namespace termrec;

namespace {

PipelineConfig small_config() {
    PipelineConfig cfg;
    cfg.generator.flows_per_class = 20;
    cfg.generator.seed = 5;
    cfg.autoencoder.train.epochs = 30;
    cfg.classifier.gbt.stages = 40;
    return cfg;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("serialize: base64 and crc32 known answers") {
    std::string abc = "abc";
    CHECK(base64_encode(reinterpret_cast<const uint8_t*>(abc.data()), 3) == "YWJj");
    CHECK(base64_encode(reinterpret_cast<const uint8_t*>(abc.data()), 2) == "YWI=");
    auto round = base64_decode("YWJj");
    CHECK(std::string(round.begin(), round.end()) == "abc");
    // Standard CRC-32 of "123456789".
    std::string digits = "123456789";
    CHECK(crc32(reinterpret_cast<const uint8_t*>(digits.data()), 9) == 0xcbf43926u);
}

TEST_CASE("serialize: block round-trip and corruption detection") {
    Matrix m(3, 4);
    for (size_t r = 0; r < 3; ++r)
        for (size_t c = 0; c < 4; ++c) m.at(r, c) = static_cast<double>(r) * 0.25 - static_cast<double>(c);
    std::ostringstream out;
    write_block(out, "demo", m);
    std::istringstream in(out.str());
    auto block = read_block(in);
    CHECK(block.name == "demo");
    CHECK(block.as_matrix() == m);

    std::string corrupted = out.str();
    size_t payload = corrupted.find('\n') + 3;
    corrupted[payload] = corrupted[payload] == 'A' ? 'B' : 'A';
    std::istringstream bad(corrupted);
    CHECK_THROWS_AS(read_block(bad), Error);
}

TEST_CASE("config: defaults round-trip, unknown keys rejected, hash stable") {
    PipelineConfig cfg;
    auto text = cfg.to_json_text();
    auto back = PipelineConfig::from_json_text(text);
    CHECK(back.to_json_text() == text);
    CHECK(back.hash_hex() == cfg.hash_hex());
    CHECK(cfg.header_comment().rfind("# config_hash=", 0) == 0);

    CHECK_THROWS_AS(PipelineConfig::from_json_text("{\"sgmentation\": {}}"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text("{\"segmentation\": {\"tau\": 1}}"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text("{\"segmentation\": {\"tau_seconds\": 0}}"),
                    ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text("not json"), ConfigError);

    PipelineConfig reseeded;
    reseeded.apply_master_seed(123);
    CHECK(reseeded.seed == 123);
    CHECK(reseeded.split.seed != cfg.split.seed);
    CHECK(reseeded.hash_hex() != cfg.hash_hex());
}

TEST_CASE("stratified split respects ratios and determinism") {
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 20; ++i) labels.push_back(c);
    labels.push_back(-1);  // unlabeled rows are excluded entirely
    SplitConfig cfg;
    auto a = stratified_split(labels, cfg);
    auto b = stratified_split(labels, cfg);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);
    CHECK(a.train.size() == 42);  // 14 per class
    CHECK(a.validation.size() == 9);
    CHECK(a.test.size() == 9);
    for (size_t i : a.train) CHECK(labels[i] >= 0);

    std::vector<size_t> seen;
    seen.insert(seen.end(), a.train.begin(), a.train.end());
    seen.insert(seen.end(), a.validation.begin(), a.validation.end());
    seen.insert(seen.end(), a.test.begin(), a.test.end());
    CHECK(seen.size() == 60);
}

TEST_CASE("extract_flow_records produces L segments per long flow") {
    PipelineConfig cfg = small_config();
    auto data = generate_dataset(cfg.generator, cfg.behavior_table);
    auto labels = parse_label_map(data.label_map_text);
    DatasetSummary summary;
    auto records = extract_flow_records(data.pcap_bytes, cfg, labels, &summary);
    CHECK(records.size() == 60);
    CHECK(summary.labeled_flows == 60);
    for (const auto& rec : records) {
        CHECK(rec.segments.size() == cfg.segmentation.count);
        CHECK(rec.label != TerminalType::Unlabeled);
    }
}

TEST_CASE("trained pipeline round-trips through the artifact byte-exactly") {
    PipelineConfig cfg = small_config();
    auto data = generate_dataset(cfg.generator, cfg.behavior_table);
    auto labels = parse_label_map(data.label_map_text);
    auto result = train_pipeline(cfg, data.pcap_bytes, labels);

    TempFile file("termrec_test_model.tpl");
    result.pipeline.save(file.path);
    auto loaded = TrainedPipeline::load(file.path);

    CHECK(loaded.config.to_json_text() == cfg.to_json_text());
    CHECK(loaded.ff_std.mu == result.pipeline.ff_std.mu);
    CHECK(loaded.bf_std.sigma == result.pipeline.bf_std.sigma);
    CHECK(flatten_parameters(loaded.autoencoder) == flatten_parameters(result.pipeline.autoencoder));
    CHECK(loaded.cluster.kmeans.centroids == result.pipeline.cluster.kmeans.centroids);
    CHECK(loaded.training_metrics.accuracy == result.pipeline.training_metrics.accuracy);

    auto before = predict_pipeline(result.pipeline, data.pcap_bytes, labels);
    auto after = predict_pipeline(loaded, data.pcap_bytes, labels);
    REQUIRE(before.size() == after.size());
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(before[i].predicted == after[i].predicted);
        CHECK(before[i].probabilities == after[i].probabilities);
    }
}

TEST_CASE("artifact version/corruption errors") {
    TempFile file("termrec_bad_model.tpl");
    write_file(file.path, std::string("TERMREC-PIPELINE v999\n"));
    CHECK_THROWS_AS(TrainedPipeline::load(file.path), VersionMismatch);
    write_file(file.path, std::string("garbage"));
    CHECK_THROWS_AS(TrainedPipeline::load(file.path), VersionMismatch);
}

TEST_CASE("predict on training data reproduces stored training accuracy") {
    PipelineConfig cfg = small_config();
    auto data = generate_dataset(cfg.generator, cfg.behavior_table);
    auto labels = parse_label_map(data.label_map_text);
    auto result = train_pipeline(cfg, data.pcap_bytes, labels);

    auto rows = predict_pipeline(result.pipeline, data.pcap_bytes, labels);
    auto metrics = evaluate_predictions(rows, labels);
    CHECK(metrics.accuracy == result.pipeline.training_metrics.accuracy);
    CHECK(metrics.f1_macro == result.pipeline.training_metrics.f1_macro);
}

TEST_CASE("predictions TSV round-trips") {
    PipelineConfig cfg;
    std::vector<PredictionRow> rows{
        {"10.0.0.1:2404-10.1.0.1:40000", TerminalType::LVRC, TerminalType::TTU, {0.25, 0.5, 0.25}},
        {"10.0.0.1:2404-10.1.0.2:40001", TerminalType::Unlabeled, TerminalType::LMT, {0.1, 0.2, 0.7}},
    };
    auto text = predictions_tsv(rows, cfg);
    CHECK(text.rfind("# config_hash=", 0) == 0);
    auto parsed = parse_predictions_tsv(text);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].truth == TerminalType::LVRC);
    CHECK(parsed[0].predicted == TerminalType::TTU);
    CHECK(parsed[1].truth == TerminalType::Unlabeled);
    CHECK(parsed[0].probabilities == rows[0].probabilities);
}

TEST_CASE("evaluate_predictions joins on flow_id and flags missing labels") {
    std::vector<PredictionRow> rows{
        {"10.0.0.1:2404-10.9.9.9:40000", TerminalType::Unlabeled, TerminalType::LVRC, {1, 0, 0}},
    };
    std::unordered_map<uint32_t, TerminalType> labels{
        {ip_from_string("10.9.9.9"), TerminalType::LVRC}};
    auto m = evaluate_predictions(rows, labels);
    CHECK(m.accuracy == 1.0);

    std::unordered_map<uint32_t, TerminalType> wrong{
        {ip_from_string("10.8.8.8"), TerminalType::LVRC}};
    CHECK_THROWS_AS(evaluate_predictions(rows, wrong), MissingLabel);
}

TEST_CASE("flow-features-only mode trains and persists without segment stages") {
    PipelineConfig cfg = small_config();
    cfg.flow_features_only = true;
    auto data = generate_dataset(cfg.generator, cfg.behavior_table);
    auto labels = parse_label_map(data.label_map_text);
    auto result = train_pipeline(cfg, data.pcap_bytes, labels);
    CHECK(result.encoded.inputs.cols() == kFlowFeatureDim);

    TempFile file("termrec_ffonly.tpl");
    result.pipeline.save(file.path);
    auto loaded = TrainedPipeline::load(file.path);
    auto rows = predict_pipeline(loaded, data.pcap_bytes, labels);
    auto metrics = evaluate_predictions(rows, labels);
    CHECK(metrics.accuracy == result.pipeline.training_metrics.accuracy);
}

TEST_CASE("empty capture predicts to an empty row set") {
    PipelineConfig cfg = small_config();
    auto data = generate_dataset(cfg.generator, cfg.behavior_table);
    auto labels = parse_label_map(data.label_map_text);
    auto result = train_pipeline(cfg, data.pcap_bytes, labels);

    PcapWriter writer;
    auto rows = predict_pipeline(result.pipeline, writer.bytes());
    CHECK(rows.empty());
}

TEST_CASE("hierarchical inputs have dimension K+1+16 and presence bits first") {
    PipelineConfig cfg = small_config();
    auto data = generate_dataset(cfg.generator, cfg.behavior_table);
    auto labels = parse_label_map(data.label_map_text);
    auto result = train_pipeline(cfg, data.pcap_bytes, labels);
    CHECK(result.encoded.inputs.cols() == cfg.clustering.clusters + 1 + kFlowFeatureDim);
    for (size_t r = 0; r < result.encoded.inputs.rows(); ++r)
        for (size_t c = 0; c <= cfg.clustering.clusters; ++c) {
            double v = result.encoded.inputs.at(r, c);
            CHECK((v == 0.0 || v == 1.0));
        }
}
